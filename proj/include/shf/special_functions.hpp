#pragma once

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "chebyshev.hpp"
#include "errors.hpp"
#include "quadrature.hpp"

namespace shf {

inline constexpr double kEulerGamma = 0.57721566490153286061;

struct DickmanParameter {
    double theta = 0.0;
    double euler_gamma = kEulerGamma;

    void validate() const {
        if (!std::isfinite(theta)) throw DomainError("theta must be finite");
    }
    double shift() const { return theta - euler_gamma; }
};

inline double gamma_fn(double s) {
    if (!(s > 0.0)) throw DomainError("gamma_fn: s must be positive");
    return std::tgamma(s);
}

inline double heat_kernel(double t, double x1, double x2) {
    if (!(t > 0.0)) throw DomainError("heat_kernel: t must be positive");
    return std::exp(-(x1 * x1 + x2 * x2) / (2.0 * t)) / (2.0 * std::numbers::pi * t);
}
inline double heat_kernel(double t, const std::array<double, 2>& x) { return heat_kernel(t, x[0], x[1]); }

namespace detail {

// log of  int_0^inf exp(c s + log s + s log t - lgamma(s+1)) ds,  i.e. log(t G(t)).
struct LogMass {
    double value;
    double rel_error;
};

inline LogMass renewal_log_tG(double log_t, double c, const QuadratureConfig& q) {
    auto phi = [&](double s) { return c * s + std::log(s) + s * log_t - std::lgamma(s + 1.0); };
    auto dphi = [&](double s) { return c + 1.0 / s + log_t - boost::math::digamma(s + 1.0); };
    double lo = 1e-300, hi = 1.0;
    while (dphi(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
    }
    // Bisection in log s; the log-integrand is concave.
    for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-15; ++it) {
        double mid = std::sqrt(lo * hi);
        (dphi(mid) > 0.0 ? lo : hi) = mid;
    }
    const double s_star = std::sqrt(lo * hi);
    const double phi_star = phi(s_star);
    const double curv = 1.0 / (s_star * s_star) + boost::math::trigamma(s_star + 1.0);
    double width = 1.0 / std::sqrt(curv);
    double s_hi = s_star + width;
    while (phi(s_hi) - phi_star > -60.0) s_hi = s_star + 2.0 * (s_hi - s_star);

    double scale = 1.0;
    if (q.singularity_substitution && log_t < 0.0) scale = -log_t;
    auto g = [&](double u) {
        double s = u / scale;
        if (s <= 0.0) return 0.0;
        return std::exp(phi(s) - phi_star) / scale;
    };
    QuadratureConfig qq = q;
    qq.abs_tol = 0.0;
    QuadResult r = integrate_pieces(g, {0.0, s_star * scale, s_hi * scale}, qq);
    if (!(r.value > 0.0)) throw NumericError("renewal density quadrature returned a non-positive mass", r.error);
    return {phi_star + std::log(r.value), r.error / r.value};
}

}  // namespace detail

inline double renewal_density(double t, const DickmanParameter& p, const QuadratureConfig& q = {}) {
    p.validate();
    q.validate();
    if (!(t > 0.0)) throw DomainError("renewal_density: t must be positive");
    if (t > 2.0) throw DomainError("renewal_density: working range is 0 < t <= 2");
    const double lt = std::log(t);
    return std::exp(detail::renewal_log_tG(lt, p.shift(), q).value - lt);
}

inline double renewal_asymptotic(double t, const DickmanParameter& p) {
    p.validate();
    if (!(t > 0.0) || t >= 1.0) throw DomainError("renewal_asymptotic: need 0 < t < 1");
    const double L = -std::log(t);
    return (1.0 + 2.0 * p.theta / L) / (t * L * L);
}

inline double laplace_analytic(double lambda, const DickmanParameter& p) {
    if (!(lambda > std::exp(p.shift()))) throw DomainError("laplace transform diverges for lambda <= exp(theta - gamma)");
    return 1.0 / (std::log(lambda) - p.shift());
}

struct LaplaceResult {
    double value;
    double analytic;
    double error;
};

inline LaplaceResult laplace_transform_renewal(double lambda, const DickmanParameter& p, const QuadratureConfig& q = {}) {
    p.validate();
    q.validate();
    const double analytic = laplace_analytic(lambda, p);
    const double c = p.shift();
    QuadratureConfig inner = q.tightened(0.1);

    // t = exp(-1/x) on (0, 1/e]: G dt = exp(log(tG)) dx / x^2.
    auto small = [&](double x) {
        if (x <= 0.0) return 0.0;
        double lt = -1.0 / x;
        double lg = detail::renewal_log_tG(lt, c, inner).value;
        return std::exp(-lambda * std::exp(lt) + lg - 2.0 * std::log(x));
    };
    std::vector<double> xb{0.0};
    for (double k : {100.0, 10.0, 1.0, 0.1}) {
        double x = 1.0 / std::log(lambda * k);
        if (lambda * k > std::exp(1.0) && x < 1.0 && x > xb.back()) xb.push_back(x);
    }
    xb.push_back(1.0);
    QuadResult a = integrate_pieces(small, xb, q);

    auto large = [&](double t) {
        double lt = std::log(t);
        return std::exp(-lambda * t + detail::renewal_log_tG(lt, c, inner).value - lt);
    };
    const double rate = lambda - std::exp(c);
    const double t_end = 2.0 + 80.0 / rate;
    std::vector<double> tb{std::exp(-1.0)};
    for (double t = 1.0; t < t_end; t *= 2.0) tb.push_back(t);
    tb.push_back(t_end);
    QuadResult b = integrate_pieces(large, tb, q);
    return {a.value + b.value, analytic, a.error + b.error};
}

// Density of the Dickman subordinator at time s; the t >= 1 branch subtracts
// the overshoot integral over a in (0, t - 1).
inline double dickman_density(double s, double t, const DickmanParameter& p, const QuadratureConfig& q = {}) {
    p.validate();
    q.validate();
    if (!(s > 0.0) || !(t > 0.0)) throw DomainError("dickman_density: need s > 0 and t > 0");
    const double g = p.euler_gamma;
    const double head = std::exp(-g * s - std::lgamma(s + 1.0));
    if (t <= 1.0) return s * std::exp((s - 1.0) * std::log(t)) * head;

    // a in (0, min(t-1, 1)]: with w = a^s the a^(s-1) singularity disappears.
    const double c1 = std::min(t - 1.0, 1.0);
    auto near = [&](double w) {
        double a = std::pow(w, 1.0 / s);
        return head * std::exp(-s * std::log1p(a));
    };
    QuadResult r = integrate(near, 0.0, std::pow(c1, s), q);
    double overshoot = r.value, err = r.error;
    if (t - 1.0 > 1.0) {
        auto far = [&](double a) { return dickman_density(s, a, p, q.nested()) * std::exp(-s * std::log1p(a)); };
        QuadResult r2 = integrate(far, 1.0, t - 1.0, q.nested());
        overshoot += r2.value;
        err += r2.error;
    }
    double bracket = head - overshoot;
    if (bracket < 0.0) {
        if (-bracket > 10.0 * err + 1e-15) throw NumericError("dickman_density: negative density", err);
        bracket = 0.0;
    }
    return s * std::exp((s - 1.0) * std::log(t)) * bracket;
}

// Fast tables of G, of x -> G(t) t / x^2 with x = 1/log(1/t), and of R(t) = int_0^t G.
class RenewalTable {
public:
    static constexpr double kTMax = 2.5;

    explicit RenewalTable(double theta, double tol = 1e-13) : theta_(theta) {
        DickmanParameter p{theta};
        QuadratureConfig q;
        q.rel_tol = 1e-13;
        const double c = p.shift();
        auto htilde = [&](double x) {
            if (x <= 0.0) return 1.0;
            return std::exp(detail::renewal_log_tG(-1.0 / x, c, q).value - 2.0 * std::log(x));
        };
        h_ = PiecewiseCheb(htilde, {0.0, 0.0625, 0.125, 0.25, 0.5, 1.0}, tol, 20);
        auto g = [&](double t) {
            double lt = std::log(t);
            return std::exp(detail::renewal_log_tG(lt, c, q).value - lt);
        };
        g_ = PiecewiseCheb(g, {std::exp(-1.0), 0.75, 1.25, 2.0, kTMax}, tol, 20);
        r_split_ = h_.cumulative(1.0);
    }

    double theta() const { return theta_; }
    static constexpr double t_split() { return 0.36787944117144233; }

    double htilde(double x) const { return x >= 1.0 ? h_(1.0) : h_(x); }

    double G(double t) const {
        if (t <= t_split()) {
            double x = -1.0 / std::log(t);
            return h_(x) * x * x / t;
        }
        return g_(t);
    }
    // G(t) t expressed through log t, usable below the double range of t.
    double tG_log(double log_t) const {
        if (log_t <= -1.0) {
            double x = -1.0 / log_t;
            return h_(x) * x * x;
        }
        double t = std::exp(log_t);
        return g_(t) * t;
    }
    double R(double t) const {
        if (t <= 0.0) return 0.0;
        if (t <= t_split()) return h_.cumulative(-1.0 / std::log(t));
        return r_split_ + g_.cumulative(std::min(t, kTMax));
    }
    double R_x(double x) const { return x <= 0.0 ? 0.0 : h_.cumulative(std::min(x, 1.0)); }

private:
    double theta_;
    PiecewiseCheb h_, g_;
    double r_split_ = 0.0;
};

inline const RenewalTable& renewal_table(double theta) {
    static std::mutex mu;
    static std::map<double, std::unique_ptr<RenewalTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[theta];
    if (!slot) slot = std::make_unique<RenewalTable>(theta);
    return *slot;
}

}  // namespace shf
