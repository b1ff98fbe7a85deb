#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "chebyshev.hpp"
#include "combinatorics.hpp"
#include "errors.hpp"
#include "quadrature.hpp"
#include "special_functions.hpp"

namespace shf {

inline double default_c0(int h, double mu) {
    const double bare = (1.0 + 2.0 * std::exp(mu) * h * h) / mu;
    double c0 = std::ceil(bare * 100.0) / 100.0;
    if (c0 * mu - 2.0 * std::exp(mu) * h * h <= 1.0) c0 += 0.01;
    return c0;
}

struct MultiplierConfig {
    double lambda = 3.0;
    double mu = 1.0;
    double c0 = default_c0(2, 1.0);
    DickmanParameter params{};

    static MultiplierConfig with_defaults(int h, double lambda, double theta = 0.0) {
        MultiplierConfig c;
        c.lambda = lambda;
        c.mu = 1.0;
        c.c0 = default_c0(h, 1.0);
        c.params.theta = theta;
        return c;
    }

    double D(int h) const { return c0 * mu - 2.0 * std::exp(mu) * h * h; }
    void require_laplace() const {
        params.validate();
        if (!(lambda > std::exp(params.shift()))) throw DomainError("lambda must exceed exp(theta - gamma)");
    }
    void require_kernel_lemma() const {
        require_laplace();
        if (!(lambda > std::max(std::exp(2.0 * params.shift()), 1.0)))
            throw DomainError("lambda must exceed max(exp(2(theta - gamma)), 1)");
    }
    void require_envelope() const {
        params.validate();
        if (!(lambda > std::exp(params.shift() + 0.5))) throw DomainError("lambda must exceed exp(theta - gamma + 1/2)");
    }
    void require_cutoff(int h) const {
        if (!(mu > 0.0) || !(c0 > 0.0)) throw ConfigError("mu and c0 must be positive");
        if (!(D(h) > 1.0)) throw ConfigError("C0 mu - 2 e^mu h^2 must exceed 1");
    }
};

namespace detail {

inline double multiplier_denominator(double sigma, const MultiplierConfig& c) {
    return std::log(c.lambda + 0.5 * sigma) - c.params.shift();
}

// int_0^inf k(sigma) dsigma for a kernel decaying like exp(-sigma w): linear on [0, 2 lambda],
// log-sigma beyond, truncated at max(50/w, 1e3) with the tail folded into the error.
template <class K>
QuadResult sigma_integral(K&& k, double w, const MultiplierConfig& c, const QuadratureConfig& q) {
    const double s0 = std::max(2.0 * c.lambda, 1.0);
    const double smax = std::max(50.0 / w, 1e3);
    QuadratureConfig qq = q;
    qq.abs_tol = 0.0;
    std::vector<double> lb{0.0};
    for (double m : {1.0, 5.0, 20.0})
        if (m / w < std::min(s0, smax)) lb.push_back(m / w);
    lb.push_back(std::min(s0, smax));
    QuadResult a = integrate_pieces(k, lb, qq);
    if (smax > s0) {
        auto g = [&](double z) {
            double s = std::exp(z);
            return k(s) * s;
        };
        std::vector<double> zb{std::log(s0)};
        for (double z = std::log(s0) + 8.0; z < std::log(smax); z += 8.0) zb.push_back(z);
        zb.push_back(std::log(smax));
        QuadResult b = integrate_pieces(g, zb, qq);
        a.value += b.value;
        a.error += b.error;
    }
    a.error += std::exp(-smax * w) / (w * multiplier_denominator(smax, c));
    return a;
}

}  // namespace detail

inline double big_F(double w, const MultiplierConfig& c, const QuadratureConfig& q = {}) {
    q.validate();
    c.require_laplace();
    if (!(w > 0.0)) throw DomainError("big_F: w must be positive");
    auto k = [&](double s) { return std::exp(-s * w) / detail::multiplier_denominator(s, c); };
    return detail::sigma_integral(k, w, c, q).value;
}

// f(w) = int_w^2 F = int (e^{-sigma w} - e^{-2 sigma}) / (sigma D(sigma)) dsigma.
inline double small_f(double w, const MultiplierConfig& c, const QuadratureConfig& q = {}) {
    q.validate();
    c.require_laplace();
    if (!(w > 0.0) || w > 2.0) throw DomainError("small_f: need 0 < w <= 2");
    if (w == 2.0) return 0.0;
    auto k = [&](double s) {
        if (s == 0.0) return (2.0 - w) / detail::multiplier_denominator(0.0, c);
        return -std::exp(-s * w) * std::expm1(-s * (2.0 - w)) / (s * detail::multiplier_denominator(s, c));
    };
    return detail::sigma_integral(k, w, c, q).value;
}

// Same quantity as the integral of big_F over [w, 2], in log v.
inline double small_f_by_integration(double w, const MultiplierConfig& c, const QuadratureConfig& q = {}) {
    q.validate();
    c.require_laplace();
    if (!(w > 0.0) || w > 2.0) throw DomainError("small_f: need 0 < w <= 2");
    QuadratureConfig inner = q.tightened(0.01);
    auto g = [&](double y) {
        double v = std::exp(y);
        return big_F(v, c, inner) * v;
    };
    std::vector<double> yb{std::log(w)};
    for (double y = std::log(w) + 4.0; y < std::log(2.0); y += 4.0) yb.push_back(y);
    yb.push_back(std::log(2.0));
    return integrate_pieces(g, yb, q).value;
}

// Tabulated F through v F(v) as a function of log v, with its antiderivative.
class KernelTable {
public:
    static constexpr double kLogMin = -690.0;
    static constexpr double kLogMax = 2.0794415416798357;  // log 8

    explicit KernelTable(const MultiplierConfig& c, double tol = 1e-12) : cfg_(c) {
        c.require_laplace();
        QuadratureConfig q;
        q.rel_tol = 1e-13;
        auto phi = [&](double z) { return big_F(std::exp(z), c, q) * std::exp(z); };
        t_ = PiecewiseCheb(phi, {kLogMin, -300.0, -100.0, -30.0, -10.0, -3.0, 0.0, kLogMax}, tol, 20);
    }

    const MultiplierConfig& config() const { return cfg_; }

    double F(double w) const {
        if (!(w > 0.0)) throw DomainError("KernelTable::F: w must be positive");
        double z = std::log(w);
        if (z < kLogMin || z > kLogMax) return big_F(w, cfg_);
        return t_(z) / w;
    }
    // int_a^b F(v) dv for 0 < a <= b <= 8.
    double integral(double a, double b) const {
        if (!(a > 0.0) || b < a) throw DomainError("KernelTable::integral: need 0 < a <= b");
        double za = std::max(std::log(a), kLogMin), zb = std::log(b);
        if (zb > kLogMax) throw DomainError("KernelTable::integral: upper limit beyond table");
        if (zb <= kLogMin) return 0.0;
        return t_.cumulative(zb) - t_.cumulative(za);
    }
    double f(double w) const { return integral(w, 2.0); }

private:
    MultiplierConfig cfg_;
    PiecewiseCheb t_;
};

inline const KernelTable& kernel_table(const MultiplierConfig& c) {
    static std::mutex mu;
    static std::map<std::pair<double, double>, std::unique_ptr<KernelTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{c.lambda, c.params.theta}];
    if (!slot) slot = std::make_unique<KernelTable>(c);
    return *slot;
}

struct InequalitySides {
    double lhs;
    double rhs;
};

// int_0^2 F(u + w) f(u)^j du against sum_{l=0}^{j+1} j!/(j+1-l)! (4/log lambda)^l f(2w)^{j+1-l}.
inline InequalitySides kernel_lemma_sides(double w, int j, const MultiplierConfig& c, const QuadratureConfig& q = {}) {
    c.require_kernel_lemma();
    if (!(w > 0.0) || !(w < 1.0)) throw DomainError("kernel_lemma_sides: need 0 < w < 1");
    if (j < 0) throw DomainError("kernel_lemma_sides: j must be nonnegative");
    QuadratureConfig inner = q.tightened(0.01), outer = q.nested();
    outer.abs_tol = 0.0;
    auto g = [&](double z) {
        double u = std::exp(z);
        return big_F(u + w, c, inner) * std::pow(small_f(u, c, inner), j) * u;
    };
    std::vector<double> zb{std::min(std::log(w), 0.0) - 40.0};
    for (double z = zb.front() + 4.0; z < std::log(2.0); z += 4.0) zb.push_back(z);
    zb.push_back(std::log(2.0));
    InequalitySides r{integrate_pieces(g, zb, outer).value, 0.0};
    const double a = 4.0 / std::log(c.lambda), f2w = small_f(2.0 * w, c, inner);
    for (int l = 0; l <= j + 1; ++l)
        r.rhs += std::exp(std::lgamma(j + 1.0) - std::lgamma(j + 2.0 - l)) * std::pow(a, l) * std::pow(f2w, j + 1 - l);
    return r;
}

// k-fold integral over sum u_r <= 2 of prod F(u_r + u_{r-1}/2) with u_0 = p, against
// sum_i c^k_i/(k-i)! (4/log lambda)^i f(p)^{k-i}; k in {1, 2}.
inline InequalitySides induction_bound_sides(int k, double p, const MultiplierConfig& c, const QuadratureConfig& q = {}) {
    c.require_kernel_lemma();
    if (k < 1 || k > 2) throw DomainError("induction_bound_sides: k must be 1 or 2");
    if (!(p > 0.0) || p > 2.0) throw DomainError("induction_bound_sides: need 0 < p <= 2");
    QuadratureConfig inner = q.tightened(0.01), outer = q.nested();
    outer.abs_tol = 0.0;
    // int_a^b F for 0 < a <= 2 <= b.
    auto span = [&](double a, double b) {
        auto F = [&](double v) { return big_F(v, c, inner); };
        return small_f(a, c, inner) + (b > 2.0 ? integrate(F, 2.0, b, inner).value : 0.0);
    };
    InequalitySides r{};
    if (k == 1) {
        r.lhs = span(0.5 * p, 2.0 + 0.5 * p);
    } else {
        auto g = [&](double z) {
            double u = std::exp(z);
            if (u >= 2.0) return 0.0;
            double rest = small_f(0.5 * u, c, inner) - small_f(2.0 - 0.5 * u, c, inner);
            return big_F(u + 0.5 * p, c, inner) * rest * u;
        };
        std::vector<double> zb{std::min(std::log(p), 0.0) - 40.0};
        for (double z = zb.front() + 4.0; z < std::log(2.0); z += 4.0) zb.push_back(z);
        zb.push_back(std::log(2.0));
        r.lhs = integrate_pieces(g, zb, outer).value;
    }
    const double a = 4.0 / std::log(c.lambda), fp = p < 2.0 ? small_f(p, c, inner) : 0.0;
    for (int i = 0; i <= k; ++i)
        r.rhs += static_cast<double>(c_coeff_closed(k, i)) / std::tgamma(k - i + 1.0) * std::pow(a, i) * std::pow(fp, k - i);
    return r;
}

inline double loglog(double x) { return std::log(std::log(x)); }

// Calibrated constant of the loglog envelope at a fixed theta, taken at the smallest
// admissible lambda, where f is largest.
class EnvelopeModel {
public:
    explicit EnvelopeModel(double theta, const QuadratureConfig& q = {}) : theta_(theta) {
        MultiplierConfig c;
        c.params.theta = theta;
        c.lambda = std::exp(c.params.shift() + 0.5);
        lambda_min_ = c.lambda;
        const double c_theta = std::exp(2.0 * (std::log(2.0) + c.params.shift()));
        double worst = 0.0;
        const int n = 240;
        for (int i = 0; i <= n; ++i) {
            double y = std::log(2.0) + (std::log(690.0) - std::log(2.0)) * i / n;
            double log_inv_u = std::exp(y);
            if (log_inv_u <= std::log(c_theta)) continue;
            double u = std::exp(-log_inv_u);
            double ll_u = y;
            double ll_eps = std::log(0.5 * log_inv_u);
            if (ll_eps <= 0.0) continue;
            double v = (small_f(u, c, q) / ll_u - 1.0) * ll_eps;
            worst = std::max(worst, v);
        }
        c_ = 1.02 * worst;
    }

    double theta() const { return theta_; }
    double constant() const { return c_; }
    double lambda_min() const { return lambda_min_; }
    double delta(double eps) const { return c_ / loglog(1.0 / eps); }

private:
    double theta_, c_ = 0.0, lambda_min_ = 0.0;
};

inline const EnvelopeModel& envelope_model(double theta) {
    static std::mutex mu;
    static std::map<double, std::unique_ptr<EnvelopeModel>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[theta];
    if (!slot) slot = std::make_unique<EnvelopeModel>(theta);
    return *slot;
}

struct EnvelopeResult {
    double bound;
    bool holds;
    double f_value;
};

inline EnvelopeResult loglog_envelope(double u, double eps, const MultiplierConfig& c, const QuadratureConfig& q = {}) {
    c.require_envelope();
    if (!(eps > 0.0) || !(eps < std::exp(-1.0))) throw DomainError("loglog_envelope: need 0 < eps < 1/e");
    if (!(u > 0.0) || u > eps * eps) throw DomainError("loglog_envelope: need 0 < u <= eps^2");
    const double c_theta = std::exp(2.0 * (std::log(2.0) + c.params.shift()));
    if (!(1.0 / u > c_theta)) throw DomainError("loglog_envelope: u above the smallness threshold");
    const EnvelopeModel& m = envelope_model(c.params.theta);
    double bound = (1.0 + m.delta(eps)) * loglog(1.0 / u);
    double f = small_f(u, c, q);
    return {bound, f <= bound, f};
}

struct CutoffSchedule {
    double epsilon;
    double k;
    double lambda_eps;
    double delta_eps;

    CutoffSchedule(double eps, double c0, double envelope_constant) : epsilon(eps) {
        if (!(eps > 0.0) || !(eps < 1.0)) throw DomainError("CutoffSchedule: eps must lie in (0, 1)");
        double ll = std::log(std::log(1.0 / eps));
        double lll = std::log(ll);
        if (!(lll > 0.0)) throw DomainError("CutoffSchedule: logloglog(1/eps) must be positive");
        k = c0 * ll;
        lambda_eps = ll / lll;
        delta_eps = envelope_constant / ll;
    }
};

}  // namespace shf
