#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "chebyshev.hpp"
#include "combinatorics.hpp"
#include "errors.hpp"
#include "multiplier_kernels.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "special_functions.hpp"

namespace shf {

struct DiagramSpec {
    int h = 2;
    int m = 0;
    double epsilon = 0.1;
    std::optional<PairSequence> seq;
    double theta = 0.0;

    void validate() const {
        if (h < 2) throw DomainError("DiagramSpec: h must be at least 2");
        if (m < 0) throw DomainError("DiagramSpec: m must be nonnegative");
        if (!(epsilon > 0.0) || !(epsilon < 1.0)) throw DomainError("DiagramSpec: epsilon must lie in (0, 1)");
        if (!std::isfinite(theta)) throw DomainError("DiagramSpec: theta must be finite");
        if (seq) {
            seq->validate();
            if (seq->h != h || static_cast<int>(seq->pairs.size()) != m)
                throw DomainError("DiagramSpec: sequence does not match (h, m)");
        }
    }
    double prefactor() const { return seq ? 1.0 : pair_sequence_count_real(h, m); }
    double horizon() const { return 1.0 + epsilon * epsilon; }
};

enum class DiagramMethod { nested_quadrature, monte_carlo };

struct DiagramResult {
    double value = 0.0;
    double error = 0.0;
    bool partial = false;
    std::uint64_t samples = 0;
    double table_error = 0.0;
};

struct MonteCarloOptions {
    std::uint64_t seed = 1;
    int threads = 1;
    double target_rel = 1e-3;
    std::uint64_t block_size = 1 << 14;
};

namespace detail {

inline double x_of(double v) { return -1.0 / std::log(v); }

// int_0^S G(v) fn(v) dv: x = 1/log(1/v) below 1/e, linear above. Extra v-breakpoints are honoured.
template <class Fn>
QuadResult integrate_against_G(Fn&& fn, double S, const RenewalTable& tab, const QuadratureConfig& q,
                               std::vector<double> vbreaks = {}) {
    QuadResult out;
    const double split = RenewalTable::t_split();
    const double top = std::min(S, split);
    std::vector<double> xb{0.0};
    std::sort(vbreaks.begin(), vbreaks.end());
    for (double b : vbreaks)
        if (b > 0.0 && b < top && x_of(b) > xb.back()) xb.push_back(x_of(b));
    xb.push_back(x_of(top));
    auto gx = [&](double x) {
        double v = x > 0.0 ? std::exp(-1.0 / x) : 0.0;
        return tab.htilde(x) * fn(v);
    };
    out = integrate_pieces(gx, xb, q);
    if (S > split) {
        std::vector<double> vb{split};
        for (double b : vbreaks)
            if (b > vb.back() && b < S) vb.push_back(b);
        vb.push_back(S);
        auto gv = [&](double v) { return tab.G(v) * fn(v); };
        QuadResult r = integrate_pieces(gv, vb, q);
        out.value += r.value;
        out.error += r.error;
    }
    return out;
}

// int_0^S g(w) dw for g bounded near 0 with structure at scale c: w = c e^{-y} on (0, c], log w above.
template <class Fn>
QuadResult integrate_scaled(Fn&& g, double c, double S, const QuadratureConfig& q) {
    const double base = std::min(c, S);
    auto low = [&](double y) {
        double w = base * std::exp(-y);
        return g(w) * w;
    };
    QuadResult out = integrate_pieces(low, {0.0, 2.0, 8.0, 40.0}, q);
    if (S > c) {
        auto high = [&](double z) {
            double w = std::exp(z);
            return g(w) * w;
        };
        std::vector<double> zb{std::log(c)};
        for (double z = std::log(c) + 3.0; z < std::log(S); z += 3.0) zb.push_back(z);
        zb.push_back(std::log(S));
        QuadResult r = integrate_pieces(high, zb, q);
        out.value += r.value;
        out.error += r.error;
    }
    return out;
}

// A_r(u, S) = int dv G(v) int dw A_{r+1}(w, S - v - w) / ((v + u)/2 + w),  A_m(u, S) = R(S).
template <class Next>
double nested_level(double u, double S, const Next& next, const RenewalTable& tab, const QuadratureConfig& qv,
                    const QuadratureConfig& qw) {
    if (S <= 0.0) return 0.0;
    auto over_v = [&](double v) {
        double rem = S - v;
        if (rem <= 0.0) return 0.0;
        double c = 0.5 * (v + u);
        auto g = [&](double w) {
            double r = rem - w;
            return r > 0.0 ? next(w, r) / (c + w) : 0.0;
        };
        return integrate_scaled(g, c, rem, qw).value;
    };
    return integrate_against_G(over_v, S, tab, qv, {u}).value;
}

// Tensor Chebyshev table in p = log(1 + log(T/u)), q = log(1 + log(T/S)).
class Cheb2D {
public:
    static constexpr int kMaxDeg = 64;

    template <class F>
    Cheb2D(F&& f, double p_max, double q_max, int deg, int threads = 1) : pm_(p_max), qm_(q_max), n_(deg) {
        if (deg < 2 || deg > kMaxDeg) throw DomainError("Cheb2D: degree out of range");
        const std::size_t w = n_ + 1;
        std::vector<double> vals(w * w);
        parallel_for(w * w, threads, [&](std::size_t k) { vals[k] = f(node(k / w, pm_), node(k % w, qm_)); });
        c_.assign((n_ + 1) * (n_ + 1), 0.0);
        // Separable DCT-I.
        std::vector<double> tmp((n_ + 1) * (n_ + 1), 0.0);
        for (int i = 0; i <= n_; ++i)
            for (int b = 0; b <= n_; ++b) {
                double acc = 0.0;
                for (int j = 0; j <= n_; ++j) acc += wt(j) * vals[i * (n_ + 1) + j] * std::cos(std::numbers::pi * b * j / n_);
                tmp[i * (n_ + 1) + b] = acc * 2.0 / n_ * (b == n_ ? 0.5 : 1.0);
            }
        for (int a = 0; a <= n_; ++a)
            for (int b = 0; b <= n_; ++b) {
                double acc = 0.0;
                for (int i = 0; i <= n_; ++i) acc += wt(i) * tmp[i * (n_ + 1) + b] * std::cos(std::numbers::pi * a * i / n_);
                c_[a * (n_ + 1) + b] = acc * 2.0 / n_ * (a == n_ ? 0.5 : 1.0);
            }
    }

    double operator()(double p, double q) const {
        double yp = 2.0 * std::clamp(p, 0.0, pm_) / pm_ - 1.0, yq = 2.0 * std::clamp(q, 0.0, qm_) / qm_ - 1.0;
        std::array<double, kMaxDeg + 1> row;
        for (int a = 0; a <= n_; ++a) row[a] = clenshaw(&c_[a * (n_ + 1)], yq);
        return clenshaw(row.data(), yp);
    }
    double tail() const {
        double t = 0.0;
        for (int a = 0; a <= n_; ++a)
            for (int b = 0; b <= n_; ++b)
                if (a >= n_ - 2 || b >= n_ - 2) t = std::max(t, std::abs(c_[a * (n_ + 1) + b]));
        return t;
    }

private:
    double node(int k, double hi) const { return 0.5 * hi * (std::cos(std::numbers::pi * k / n_) + 1.0); }
    double wt(int k) const { return (k == 0 || k == n_) ? 0.5 : 1.0; }
    double clenshaw(const double* c, double y) const {
        double b1 = 0.0, b2 = 0.0;
        for (int k = n_; k >= 1; --k) {
            double t = 2.0 * y * b1 - b2 + c[k];
            b2 = b1;
            b1 = t;
        }
        return y * b1 - b2 + 0.5 * c[0];
    }
    double pm_, qm_;
    int n_;
    std::vector<double> c_;
};

}  // namespace detail

struct NestedOptions {
    int threads = 1;
    int table_degree = 20;
};

// I_{m,h,eps} with the true time domain sum(u + v) <= 1 + eps^2, u_1 > eps^2.
inline DiagramResult diagram_integral_nested(const DiagramSpec& spec, const QuadratureConfig& q = {},
                                             const NestedOptions& opt = {}) {
    spec.validate();
    q.validate();
    if (spec.m > 3) throw DomainError("nested quadrature is limited to m <= 3");
    const double P = spec.prefactor();
    if (spec.m == 0) return {1.0, 0.0};
    if (P == 0.0) return {0.0, 0.0};
    const RenewalTable& tab = renewal_table(spec.theta);
    const double T = spec.horizon(), e2 = spec.epsilon * spec.epsilon;

    QuadratureConfig qo = q.nested(), qv = qo.tightened(0.1), qw = qo.tightened(0.01);
    qo.abs_tol = qv.abs_tol = qw.abs_tol = 0.0;
    auto last = [&](double, double S) { return tab.R(S); };

    DiagramResult res;
    std::function<double(double, double)> a1;
    std::optional<detail::Cheb2D> table;
    if (spec.m == 1) {
        a1 = [&](double, double S) { return tab.R(S); };
    } else if (spec.m == 2) {
        a1 = [&](double u, double S) { return detail::nested_level(u, S, last, tab, qv, qw); };
    } else {
        // A_2 tabulated; it vanishes like R(S) as S -> 0 and grows like loglog(1/u) as u -> 0.
        const double pmax = std::log(1.0 + std::log(T) + 700.0), qmax = pmax;
        auto a2 = [&](double p, double qq) {
            double u = T * std::exp(1.0 - std::exp(p)), S = T * std::exp(1.0 - std::exp(qq));
            return detail::nested_level(u, S, last, tab, qv, qw);
        };
        table.emplace(a2, pmax, qmax, opt.table_degree, opt.threads);
        res.table_error = table->tail();
        const detail::Cheb2D* tp = &*table;
        auto a2t = [tp, T](double u, double S) {
            double p = std::log1p(std::log(T / u)), qq = std::log1p(std::log(T / S));
            return (*tp)(p, qq);
        };
        a1 = [&, a2t](double u, double S) { return detail::nested_level(u, S, a2t, tab, qv, qw); };
    }
    auto outer = [&](double z) {
        double u = std::exp(z);
        return u < T ? a1(u, T - u) : 0.0;
    };
    std::vector<double> zb{std::log(e2)};
    for (double z = std::log(e2) + 2.0; z < std::log(T); z += 2.0) zb.push_back(z);
    zb.push_back(std::log(T));
    std::vector<QuadResult> parts(zb.size() - 1);
    parallel_for(parts.size(), opt.threads, [&](std::size_t i) { parts[i] = integrate(outer, zb[i], zb[i + 1], qo); });
    double v = 0.0, e = 0.0;
    for (const auto& r : parts) {
        v += r.value;
        e += r.error;
    }
    res.value = P * v;
    res.error = P * (e + 10.0 * qv.rel_tol * std::abs(v) + res.table_error * std::log(T / e2));
    return res;
}

// I_1 through Fubini: P int_0^1 G(v) log((1 + eps^2 - v)/eps^2) dv, with G from direct quadrature.
inline DiagramResult diagram_integral_m1_closed(const DiagramSpec& spec, const QuadratureConfig& q = {}) {
    spec.validate();
    if (spec.m != 1) throw DomainError("closed form applies to m = 1");
    const double T = spec.horizon(), e2 = spec.epsilon * spec.epsilon;
    const double c = DickmanParameter{spec.theta}.shift();
    QuadratureConfig inner = q.tightened(0.01);
    QuadratureConfig outer = q;
    outer.abs_tol = 0.0;
    auto small = [&](double x) {
        if (x <= 0.0) return 0.0;
        double lt = -1.0 / x;
        double tg = std::exp(detail::renewal_log_tG(lt, c, inner).value - 2.0 * std::log(x));
        return tg * std::log((T - std::exp(lt)) / e2);
    };
    auto large = [&](double v) {
        double lv = std::log(v);
        return std::exp(detail::renewal_log_tG(lv, c, inner).value - lv) * std::log((T - v) / e2);
    };
    QuadResult a = integrate_pieces(small, {0.0, 0.125, 0.25, 0.5, 1.0}, outer);
    QuadResult b = integrate_pieces(large, {std::exp(-1.0), 0.75, 1.0}, outer);
    const double P = spec.prefactor();
    return {P * (a.value + b.value), P * (a.error + b.error)};
}

// Importance-sampled I_{m,h,eps}; blocks use independent Philox streams and a fixed-order reduction.
inline DiagramResult diagram_integral_mc(const DiagramSpec& spec, std::uint64_t budget, const MonteCarloOptions& opt = {}) {
    spec.validate();
    if (budget < 10000) throw DomainError("monte_carlo needs a budget of at least 1e4 samples");
    const double P = spec.prefactor();
    if (spec.m == 0) return {1.0, 0.0};
    if (P == 0.0) return {0.0, 0.0};
    const RenewalTable& tab = renewal_table(spec.theta);
    const double T = spec.horizon(), e2 = spec.epsilon * spec.epsilon, lw = std::log(T / e2);
    const int m = spec.m;

    auto block = [&](std::uint64_t b) {
        PhiloxStream rng(opt.seed, b, 0x6469616772616dULL);
        double acc = 0.0;
        for (std::uint64_t s = 0; s < opt.block_size; ++s) {
            double u = e2 * std::exp(lw * rng.uniform());
            double rem = T - u, w = lw;
            for (int r = 1; r < m && w > 0.0; ++r) {
                double U = rng.uniform();
                double L = 1.0 / U - 1.0;  // v = exp(-L), density 1/(v (1+L)^2)
                double v = std::exp(-L);
                if (v >= rem) {
                    w = 0.0;
                    break;
                }
                double gv = L >= 1.0 ? tab.htilde(1.0 / L) / (L * L) : tab.G(v) * v;
                w *= gv * (1.0 + L) * (1.0 + L);
                rem -= v;
                double c = 0.5 * (u + v);
                double span = std::log1p(rem / c);
                u = c * std::expm1(span * rng.uniform());
                w *= span;
                rem -= u;
            }
            if (w > 0.0 && rem > 0.0) acc += w * tab.R(rem);
        }
        return acc / static_cast<double>(opt.block_size);
    };

    const std::uint64_t max_blocks = std::max<std::uint64_t>(1, budget / opt.block_size);
    const std::uint64_t batch = 16;
    std::vector<double> means;
    double mean = 0.0, se = INFINITY;
    while (means.size() < max_blocks) {
        std::size_t start = means.size();
        std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(batch, max_blocks - start));
        means.resize(start + n);
        parallel_for(n, opt.threads, [&](std::size_t i) { means[start + i] = block(start + i); });
        mean = pairwise_sum(means) / static_cast<double>(means.size());
        if (means.size() >= 2) {
            std::vector<double> sq(means.size());
            for (std::size_t i = 0; i < means.size(); ++i) sq[i] = (means[i] - mean) * (means[i] - mean);
            se = std::sqrt(pairwise_sum(sq) / static_cast<double>(means.size() - 1) / static_cast<double>(means.size()));
        }
        if (means.size() >= batch && se <= opt.target_rel * std::abs(mean)) break;
    }
    DiagramResult res;
    res.value = P * mean;
    res.error = P * se;
    res.samples = means.size() * opt.block_size;
    res.partial = !(se <= opt.target_rel * std::abs(mean));
    return res;
}

// Nested quadrature for m <= 3 (budget caps subdivisions per one-dimensional integral); Monte Carlo otherwise.
inline DiagramResult diagram_integral_direct(const DiagramSpec& spec, DiagramMethod method, std::uint64_t budget,
                                             const MonteCarloOptions& mc = {}, const QuadratureConfig& q = {}) {
    spec.validate();
    if (spec.m == 0) return {1.0, 0.0};
    if (spec.prefactor() == 0.0) return {0.0, 0.0};
    if (method == DiagramMethod::monte_carlo) return diagram_integral_mc(spec, budget, mc);
    if (spec.m > 3) throw DomainError("nested quadrature is limited to m <= 3");
    QuadratureConfig qq = q;
    if (budget > 0) qq.max_subdivisions = static_cast<int>(std::min<std::uint64_t>(budget, 1u << 30));
    if (spec.m == 1) return diagram_integral_m1_closed(spec, qq);
    return diagram_integral_nested(spec, qq, {mc.threads});
}

// I^{(lambda)}: P int_{u_1 > eps^2, sum u <= 2} (1/u_1) prod_{r>=2} F(u_r + u_{r-1}/2) du,
// reduced innermost-out; the innermost integral is closed form through the tabulated antiderivative of F.
inline double diagram_integral_multiplier(const DiagramSpec& spec, const MultiplierConfig& cfg, const QuadratureConfig& q = {}) {
    spec.validate();
    cfg.require_laplace();
    if (spec.m < 2) throw DomainError("diagram_integral_multiplier requires m >= 2");
    if (spec.m > 4) throw DomainError("diagram_integral_multiplier is limited to m <= 4");
    const double P = spec.prefactor();
    if (P == 0.0) return 0.0;
    MultiplierConfig c = cfg;
    c.params.theta = spec.theta;
    const KernelTable& K = kernel_table(c);
    const double e2 = spec.epsilon * spec.epsilon;
    QuadratureConfig qo = q.nested();
    qo.abs_tol = 0.0;

    // B(level, p, S); level == m is the closed form.
    std::function<double(int, double, double)> B = [&](int level, double p, double S) -> double {
        if (S <= 0.0) return 0.0;
        if (level == spec.m) return K.integral(0.5 * p, S + 0.5 * p);
        QuadratureConfig qi = qo.tightened(std::pow(0.1, level));
        auto g = [&](double w) { return w < S ? K.F(w + 0.5 * p) * B(level + 1, w, S - w) : 0.0; };
        return detail::integrate_scaled(g, 0.5 * p, S, qi).value;
    };
    auto outer = [&](double z) {
        double u = std::exp(z);
        return u < 2.0 ? B(2, u, 2.0 - u) : 0.0;
    };
    std::vector<double> zb{std::log(e2)};
    for (double z = std::log(e2) + 2.0; z < std::log(2.0); z += 2.0) zb.push_back(z);
    zb.push_back(std::log(2.0));
    return P * integrate_pieces(outer, zb, qo).value;
}

// Constant of the replica-integration chain: bounds the last v-integral by int_0^2 G.
inline double chain_constant(double theta) { return std::max(1.0, renewal_table(theta).R(2.0)); }

// 1 + int_{eps^2}^{1+eps^2} (1/a) R(1 + eps^2 - a) da: the exact h = 2 moment.
inline double second_moment_exact(double theta, double epsilon, const QuadratureConfig& q = {}) {
    q.validate();
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) throw DomainError("second_moment_exact: epsilon must lie in (0, 1)");
    const RenewalTable& tab = renewal_table(theta);
    const double e2 = epsilon * epsilon, T = 1.0 + e2;
    auto g = [&](double z) {
        double a = std::exp(z);
        return a < T ? tab.R(T - a) : 0.0;
    };
    std::vector<double> zb{std::log(e2)};
    for (double z = std::log(e2) + 2.0; z < std::log(T) - 1.0; z += 2.0) zb.push_back(z);
    if (zb.back() < std::log(0.5)) zb.push_back(std::log(0.5));
    zb.push_back(std::log(T));
    QuadratureConfig qq = q;
    qq.abs_tol = 0.0;
    return 1.0 + integrate_pieces(g, zb, qq).value;
}

struct BoundReport {
    double epsilon = 0.0;
    int h = 2;
    double lambda = 0.0;
    double f_value = 0.0;
    CutoffSchedule cutoff{0.01, 1.0, 1.0};
    double completion_ratio = 0.0;  // 8 e^mu h^2 / log lambda
    double log_head = 0.0, log_tail = 0.0, log_series = 0.0;
    double head_value = 0.0, tail_value = 0.0, series_value = 0.0;
    double fitted_exponent = 0.0;
};

namespace detail {

inline double log_add(double a, double b) {
    if (a == -INFINITY) return b;
    if (b == -INFINITY) return a;
    double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace detail

// Series bound with a given value of f_lambda(eps^2); lambda is the optimized lambda_eps.
inline BoundReport upper_bound_series_with_f(int h, double epsilon, const MultiplierConfig& cfg, double f_value) {
    if (h < 2) throw DomainError("upper_bound_series: h must be at least 2");
    cfg.require_cutoff(h);
    if (!(f_value >= 0.0)) throw DomainError("upper_bound_series: f must be nonnegative");
    const EnvelopeModel& env = envelope_model(cfg.params.theta);
    BoundReport r;
    r.epsilon = epsilon;
    r.h = h;
    r.cutoff = CutoffSchedule(epsilon, cfg.c0, env.constant());
    r.lambda = r.cutoff.lambda_eps;
    MultiplierConfig c = cfg;
    c.lambda = r.lambda;
    c.require_kernel_lemma();
    r.f_value = f_value;

    const double la = std::log(4.0 / std::log(r.lambda));
    const double lf = f_value > 0.0 ? std::log(f_value) : -INFINITY;
    const double lead = 2.0 * r.lambda + std::log(std::log(1.0 / epsilon));
    const int k_int = static_cast<int>(std::ceil(r.cutoff.k));

    double head = -INFINITY;
    for (int m = 0; m < k_int; ++m) {
        double P = pair_sequence_count_real(h, m);
        if (P == 0.0) break;
        double inner = -INFINITY;
        for (int i = 0; i <= m; ++i) {
            double fpow = (m - i == 0) ? 0.0 : (m - i) * lf;
            inner = detail::log_add(inner, c_coeff_log(m, i) - std::lgamma(m - i + 1.0) + i * la + fpow);
        }
        head = detail::log_add(head, std::log(P) + inner);
    }
    r.log_head = lead + head;

    // Tail m >= k: geometric completion in i, exponential completion in m - i.
    const double hh = static_cast<double>(h) * h;
    r.completion_ratio = 8.0 * std::exp(c.mu) * hh / std::log(r.lambda);
    if (pair_sequence_count_real(h, k_int) == 0.0) {
        r.log_tail = -INFINITY;
    } else if (r.completion_ratio >= 1.0) {
        r.log_tail = INFINITY;
    } else {
        r.log_tail = lead - std::log1p(-r.completion_ratio) - r.cutoff.k * c.mu + 2.0 * hh * std::exp(c.mu) * f_value;
    }
    r.log_series = detail::log_add(r.log_head, r.log_tail);
    r.head_value = std::exp(r.log_head);
    r.tail_value = std::exp(r.log_tail);
    r.series_value = std::exp(r.log_series);
    r.fitted_exponent = r.log_series / std::log(std::log(1.0 / epsilon));
    return r;
}

inline BoundReport upper_bound_series(int h, double epsilon, const MultiplierConfig& cfg, const QuadratureConfig& q = {}) {
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) throw DomainError("upper_bound_series: epsilon must lie in (0, 1)");
    CutoffSchedule s(epsilon, cfg.c0, 1.0);
    MultiplierConfig c = cfg;
    c.lambda = s.lambda_eps;
    c.require_kernel_lemma();
    return upper_bound_series_with_f(h, epsilon, cfg, small_f(epsilon * epsilon, c, q));
}

struct CovarianceQuery {
    double theta = 0.0;
    double t = 1.0;
    std::array<double, 2> x{}, xp{}, y{}, yp{};
};

// K_t(x, x'; y, y'). The time integral diverges when x = x' or y = y', so both separations must be nonzero.
inline double covariance_kernel(const CovarianceQuery& qy, const QuadratureConfig& q = {}) {
    q.validate();
    if (!(qy.t > 0.0)) throw DomainError("covariance_kernel: t must be positive");
    const double dx2 = std::pow(qy.xp[0] - qy.x[0], 2) + std::pow(qy.xp[1] - qy.x[1], 2);
    const double dy2 = std::pow(qy.yp[0] - qy.y[0], 2) + std::pow(qy.yp[1] - qy.y[1], 2);
    if (!(dx2 > 0.0) || !(dy2 > 0.0)) throw DomainError("covariance_kernel: diverges for x = x' or y = y'");
    const RenewalTable& tab = renewal_table(qy.theta);
    const double t = qy.t;
    if (t > RenewalTable::kTMax) throw DomainError("covariance_kernel: t beyond the renewal table");

    QuadratureConfig qo = q.nested(), qi = qo.tightened(0.01);
    qo.abs_tol = qi.abs_tol = 0.0;
    // J(s) = int_0^s g_a(dx) g_{s-a}(dy) da, each half in the log of its distance to the endpoint.
    auto J = [&](double s) {
        if (s <= 0.0) return 0.0;
        auto ga = [](double a, double d2) { return std::exp(-d2 / (2.0 * a)) / (2.0 * std::numbers::pi * a); };
        auto left = [&](double z) {
            double a = std::exp(z);
            return a * ga(a, dx2) * ga(s - a, dy2);
        };
        auto right = [&](double z) {
            double b = std::exp(z);
            return b * ga(s - b, dx2) * ga(b, dy2);
        };
        auto pieces = [&](double d2) {
            std::vector<double> zb;
            double lo = std::log(std::max(d2 / 400.0, 1e-300)), hi = std::log(0.5 * s);
            if (lo >= hi) return zb;
            zb.push_back(lo);
            for (double z = lo + 2.0; z < hi; z += 2.0) zb.push_back(z);
            zb.push_back(hi);
            return zb;
        };
        return integrate_pieces(left, pieces(dx2), qi).value + integrate_pieces(right, pieces(dy2), qi).value;
    };
    auto fn = [&](double d) { return J(t - d); };
    double inner = detail::integrate_against_G(fn, t, tab, qo).value;
    std::array<double, 2> mid{0.5 * (qy.y[0] + qy.yp[0] - qy.x[0] - qy.xp[0]), 0.5 * (qy.y[1] + qy.yp[1] - qy.x[1] - qy.xp[1])};
    return std::numbers::pi * heat_kernel(t / 4.0, mid) * inner;
}

inline double truncation_radius(double rho, int h) {
    if (!(rho > 0.0) || !(rho < 1.0)) throw DomainError("truncation_radius: rho must lie in (0, 1)");
    if (h < 2) throw DomainError("truncation_radius: h must be at least 2");
    return std::sqrt(2.0 * std::log(2.0 * (std::ldexp(1.0, h) - 1.0) / rho));
}

// g_{eps^2/2}(x) <= 2 e^{-R^2/2} g_{eps^2}(x) for |x| > R eps.
inline bool gaussian_tail_domination(double R, double epsilon, const std::array<double, 2>& x) {
    const double e2 = epsilon * epsilon;
    return heat_kernel(0.5 * e2, x) <= 2.0 * std::exp(-0.5 * R * R) * heat_kernel(e2, x) * (1.0 + 1e-12);
}

// (1/(pi eps^2)) 1_{B(0, eps)}(x) <= e g_{eps^2/2}(x).
inline bool uniform_upper_domination(double epsilon, const std::array<double, 2>& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1], e2 = epsilon * epsilon;
    double lhs = r2 < e2 ? 1.0 / (std::numbers::pi * e2) : 0.0;
    return lhs <= std::exp(1.0) * heat_kernel(0.5 * e2, x) * (1.0 + 1e-12);
}

// (1/(pi R^2 eps^2)) 1_{B(0, R eps)}(x) >= R^{-2} g_{eps^2/2}(x) 1_{B(0, R eps)}(x).
inline bool uniform_lower_domination(double R, double epsilon, const std::array<double, 2>& x) {
    if (!(R > 1.0)) throw DomainError("uniform_lower_domination: R must exceed 1");
    const double r2 = x[0] * x[0] + x[1] * x[1], e2 = epsilon * epsilon;
    if (!(r2 < R * R * e2)) return true;
    return 1.0 / (std::numbers::pi * R * R * e2) >= heat_kernel(0.5 * e2, x) / (R * R) * (1.0 - 1e-12);
}

// int_{max(a, 1+eps^2)}^{1+2eps^2} G(b - a) db.
inline double tail_factor(double a, double epsilon, double theta) {
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) throw DomainError("tail_factor: epsilon must lie in (0, 1)");
    const double e2 = epsilon * epsilon;
    if (!(a > e2) || !(a < 1.0 + 2.0 * e2)) throw DomainError("tail_factor: a must lie in (eps^2, 1 + 2 eps^2)");
    const RenewalTable& tab = renewal_table(theta);
    const double lo = std::max(a, 1.0 + e2) - a, hi = 1.0 + 2.0 * e2 - a;
    return tab.R(hi) - tab.R(lo);
}
}  // namespace shf
