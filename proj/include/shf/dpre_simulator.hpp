#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace shf {

enum class DisorderLaw { gaussian, bernoulli_pm1 };

inline std::string to_string(DisorderLaw l) { return l == DisorderLaw::gaussian ? "gaussian" : "bernoulli_pm1"; }
inline DisorderLaw parse_law(const std::string& s) {
    if (s == "gaussian") return DisorderLaw::gaussian;
    if (s == "bernoulli_pm1" || s == "bernoulli") return DisorderLaw::bernoulli_pm1;
    throw ConfigError("unknown disorder law: " + s);
}

// log E[e^{beta omega}].
inline double log_mgf(double beta, DisorderLaw law) {
    if (law == DisorderLaw::gaussian) return 0.5 * beta * beta;
    const double a = std::abs(beta);
    return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

struct CriticalCoupling {
    double sigma2;
    double beta;
};

inline CriticalCoupling critical_beta(int n_horizon, double theta, DisorderLaw law) {
    if (n_horizon < 16) throw DomainError("critical_beta: N must be at least 16");
    const double L = std::log(static_cast<double>(n_horizon));
    const double s2 = (std::numbers::pi / L) * (1.0 + theta / L);
    if (!(s2 > 0.0)) throw DomainError("critical_beta: sigma^2 must be positive");
    if (law == DisorderLaw::gaussian) return {s2, std::sqrt(std::log1p(s2))};
    auto resid = [&](double b) { return std::expm1(log_mgf(2.0 * b, law) - 2.0 * log_mgf(b, law)) - s2; };
    double lo = 0.0, hi = 10.0;
    if (!(resid(hi) > 0.0)) throw SolverError("critical_beta: no beta in (0, 10) for sigma^2 = " + std::to_string(s2));
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        double mid = 0.5 * (lo + hi);
        (resid(mid) > 0.0 ? hi : lo) = mid;
    }
    return {s2, 0.5 * (lo + hi)};
}

struct PolymerConfig {
    int n_horizon = 4096;
    double theta = 0.0;
    DisorderLaw disorder_law = DisorderLaw::bernoulli_pm1;
    double sigma2 = 0.0;
    double beta = 0.0;
    int window_radius = 0;
    int replicas = 1;
    std::uint64_t seed = 1;

    static int min_radius(int n, double c_w = 3.0) {
        int r = static_cast<int>(std::ceil(c_w * std::sqrt(n * std::log(static_cast<double>(n)))));
        return r + (r & 1);
    }
    static PolymerConfig critical(int n, double theta, DisorderLaw law, int replicas, std::uint64_t seed, double c_w = 3.0) {
        if (!(c_w >= 3.0)) throw ConfigError("window constant c_w must be at least 3");
        PolymerConfig c;
        c.n_horizon = n;
        c.theta = theta;
        c.disorder_law = law;
        auto cb = critical_beta(n, theta, law);
        c.sigma2 = cb.sigma2;
        c.beta = cb.beta;
        c.window_radius = min_radius(n, c_w);
        c.replicas = replicas;
        c.seed = seed;
        c.validate();
        return c;
    }
    void validate() const {
        if (n_horizon < 16 || n_horizon % 2 != 0) throw ConfigError("n_horizon must be even and at least 16");
        if (window_radius < min_radius(n_horizon) || window_radius % 2 != 0)
            throw ConfigError("window_radius must be even and at least ceil(3 sqrt(N log N))");
        if (replicas < 1) throw ConfigError("replicas must be positive");
        if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be finite and nonnegative");
    }
    double weight_plus() const { return std::exp(beta - log_mgf(beta, disorder_law)); }
    double weight_minus() const { return std::exp(-beta - log_mgf(beta, disorder_law)); }
};

// Disorder weights e^{beta omega(n, x) - lambda(beta)} addressed by time and compressed
// rotated coordinates (P, Q) = (floor(u/2), floor(v/2)), u = x1 + x2, v = x1 - x2.
class DisorderSource {
public:
    DisorderSource(const PolymerConfig& c, std::uint64_t replica)
        : key_{c.seed, replica}, law_(c.disorder_law), beta_(c.beta), lam_(log_mgf(c.beta, c.disorder_law)),
          wp_(c.weight_plus()), wm_(c.weight_minus()) {}

    // Weights for Q in [q0, q0 + n) at (time, P); indices are offset to be nonnegative by the caller.
    void row(std::uint64_t time, std::uint64_t P, std::uint64_t q0, std::size_t n, double* out) const {
        if (law_ == DisorderLaw::bernoulli_pm1) {
            const double dw = wp_ - wm_;
            std::size_t k = 0;
            std::uint64_t blk = ~std::uint64_t(0);
            Philox4x64::Counter bits{};
            while (k < n) {
                const std::uint64_t q = q0 + k;
                if ((q >> 8) != blk) {
                    blk = q >> 8;
                    bits = Philox4x64::block({time, P, blk, kTagBits}, key_);
                }
                const unsigned bo = static_cast<unsigned>(q & 63);
                const std::size_t cnt = std::min<std::size_t>(n - k, 64 - bo);
                const std::uint64_t word = bits[(q >> 6) & 3] >> bo;
                double* o = out + k;
                for (std::size_t t = 0; t < cnt; ++t) o[t] = wm_ + dw * static_cast<double>((word >> t) & 1);
                k += cnt;
            }
        } else {
            std::uint64_t blk = ~std::uint64_t(0);
            std::array<double, 4> z{};
            for (std::size_t k = 0; k < n; ++k) {
                std::uint64_t q = q0 + k;
                if ((q >> 2) != blk) {
                    blk = q >> 2;
                    auto r = Philox4x64::block({time, P, blk, kTagGauss}, key_);
                    for (int p = 0; p < 2; ++p) {
                        double u1 = to_open_unit(r[2 * p]), u2 = to_open_unit(r[2 * p + 1]);
                        double rad = std::sqrt(-2.0 * std::log(u1));
                        z[2 * p] = rad * std::cos(2.0 * std::numbers::pi * u2);
                        z[2 * p + 1] = rad * std::sin(2.0 * std::numbers::pi * u2);
                    }
                }
                out[k] = std::exp(beta_ * z[q & 3] - lam_);
            }
        }
    }

private:
    static constexpr std::uint64_t kTagBits = 0x62697473ULL, kTagGauss = 0x67617573ULL;
    Philox4x64::Key key_;
    DisorderLaw law_;
    double beta_, lam_, wp_, wm_;
};

// P(U_n = u) for a +-1 walk, all n-step reachable u, by Pascal convolution; optional absorption at |u| > R.
inline std::vector<double> walk_marginal(int n, int R = -1) {
    const int W = n;
    std::vector<double> p(2 * W + 3, 0.0), q(2 * W + 3, 0.0);
    auto at = [&](std::vector<double>& a, int u) -> double& { return a[u + W + 1]; };
    at(p, 0) = 1.0;
    for (int s = 0; s < n; ++s) {
        std::fill(q.begin(), q.end(), 0.0);
        for (int u = -s - 1; u <= s + 1; ++u) {
            if (R >= 0 && std::abs(u) > R) continue;
            at(q, u) = 0.5 * (at(p, u - 1) + at(p, u + 1));
        }
        std::swap(p, q);
    }
    return p;  // index u + n + 1
}

inline double walk_stay_probability(int n, int R) {
    auto p = walk_marginal(n, R);
    double s = 0.0;
    for (double v : p) s += v;
    return s;
}

// Point-to-point field Z_{M,N}(x, .) or Z_{M,N}(., y) on the window |u|, |v| <= R.
struct PartitionField {
    int n_horizon = 0;
    int radius = 0;
    int parity = 0;                // parity of u (and v) for the stored layer
    std::vector<double> values;    // (R+1) x (R+1), index (P + R/2, Q + R/2)
    double mass_loss = 0.0;

    int side() const { return radius + 1; }
    double& cell(int P, int Q) { return values[(P + radius / 2) * side() + (Q + radius / 2)]; }
    double cell(int P, int Q) const { return values[(P + radius / 2) * side() + (Q + radius / 2)]; }
    // Value at lattice point (x1, x2); zero off the window or on the wrong parity.
    double at(int x1, int x2) const {
        int u = x1 + x2, v = x1 - x2;
        if (((u % 2) + 2) % 2 != parity) return 0.0;
        if (std::abs(u) > radius || std::abs(v) > radius) return 0.0;
        int P = (u - parity) / 2, Q = (v - parity) / 2;
        if (parity == 1 && (P >= radius / 2 || Q >= radius / 2)) return 0.0;
        return cell(P, Q);
    }
    double total() const { return pairwise_sum(values); }
};

namespace detail {

// Padded square grid: side S cells plus one zero border on each side.
struct Grid {
    int S = 0;
    std::vector<double> a;
    void reset(int s) {
        S = s;
        a.assign(static_cast<std::size_t>(S + 2) * (S + 2), 0.0);
    }
    double* row(int i) { return &a[static_cast<std::size_t>(i + 1) * (S + 2) + 1]; }
    const double* row(int i) const { return &a[static_cast<std::size_t>(i + 1) * (S + 2) + 1]; }
};

// One walk step on the window. Odd target: (i, j) <- i, i+1 x j, j+1. Even target: i-1, i x j-1, j.
inline void window_step(const Grid& cur, Grid& nxt, int target_parity, int i_lo, int i_hi) {
    const int S = cur.S;
    const int top = target_parity ? S - 2 : S - 1;  // odd layers leave the last index empty
    // Rows outside [i_lo, i_hi] already hold zeros from the previous layer of the same parity.
    i_lo = std::max(i_lo, 0);
    i_hi = std::min(i_hi, top);
    for (int i = i_lo; i <= i_hi; ++i) {
        const double* a = cur.row(target_parity ? i : i - 1);
        const double* b = cur.row(target_parity ? i + 1 : i);
        double* o = nxt.row(i);
        const int d = target_parity ? 1 : -1;
        for (int j = 0; j <= top; ++j) o[j] = 0.25 * ((a[j] + b[j]) + (a[j + d] + b[j + d]));
    }
}

}  // namespace detail

// Forward field Z_{0,N}(0, .) with absorbing window; beta = 0 gives the absorbed walk kernel.
// Disorder enters at times 1..N-1 (`stop` < N gives Z_{0,stop}(0, .) without the weight at `stop`).
inline PartitionField forward_point_field(const PolymerConfig& cfg, std::uint64_t replica, int stop = -1) {
    cfg.validate();
    const int N = cfg.n_horizon, R = cfg.window_radius, S = R + 1, off = R / 2;
    if (stop < 0) stop = N;
    DisorderSource dis(cfg, replica);
    detail::Grid cur, nxt;
    cur.reset(S);
    nxt.reset(S);
    cur.row(off)[off] = 1.0;
    std::vector<double> w(S);
    const std::uint64_t base = std::uint64_t(1) << 30;
    for (int n = 1; n <= stop; ++n) {
        const int par = n & 1;
        const int reach = n / 2 + 1;
        detail::window_step(cur, nxt, par, off - reach, off + reach);
        if (n < N && n < stop && cfg.beta != 0.0) {
            for (int i = std::max(0, off - reach); i <= std::min(S - 1, off + reach); ++i) {
                dis.row(n, base + i - off, base - off, S, w.data());
                double* o = nxt.row(i);
                for (int j = 0; j < S; ++j) o[j] *= w[j];
            }
        }
        std::swap(cur, nxt);
    }
    PartitionField f;
    f.n_horizon = N;
    f.radius = R;
    f.parity = stop & 1;
    f.values.resize(static_cast<std::size_t>(S) * S);
    for (int i = 0; i < S; ++i) std::copy(cur.row(i), cur.row(i) + S, f.values.begin() + static_cast<std::size_t>(i) * S);
    const double stay = walk_stay_probability(stop, R);
    f.mass_loss = std::max(0.0, 1.0 - stay * stay);
    return f;
}

inline PartitionField sample_partition_field(const PolymerConfig& cfg, std::uint64_t replica) {
    PartitionField f = forward_point_field(cfg, replica);
    if (f.mass_loss > 1e-6) throw ConfigError("window too small: beta = 0 mass loss " + std::to_string(f.mass_loss));
    return f;
}

// Backward field z -> Z_{M,N}(z, y) at time M (no weight at M or N), same disorder as the forward field.
inline PartitionField backward_point_field(const PolymerConfig& cfg, std::uint64_t replica, int M, std::array<int, 2> y) {
    cfg.validate();
    const int N = cfg.n_horizon, R = cfg.window_radius, S = R + 1, off = R / 2;
    if (M < 0 || M >= N) throw DomainError("backward_point_field: need 0 <= M < N");
    int u = y[0] + y[1], v = y[0] - y[1];
    if (((u % 2) + 2) % 2 != N % 2 || std::abs(u) > R || std::abs(v) > R) throw DomainError("backward_point_field: endpoint off the lattice window");
    DisorderSource dis(cfg, replica);
    detail::Grid cur, nxt;
    cur.reset(S);
    nxt.reset(S);
    const int par_n = N & 1;
    cur.row((u - par_n) / 2 + off)[(v - par_n) / 2 + off] = 1.0;
    std::vector<double> w(S);
    const std::uint64_t base = std::uint64_t(1) << 30;
    for (int n = N - 1; n >= M; --n) {
        const int par = n & 1;
        detail::window_step(cur, nxt, par, 0, S - 1);
        if (n > M && cfg.beta != 0.0) {
            for (int i = 0; i < S; ++i) {
                dis.row(n, base + i - off, base - off, S, w.data());
                double* o = nxt.row(i);
                for (int j = 0; j < S; ++j) o[j] *= w[j];
            }
        }
        std::swap(cur, nxt);
    }
    PartitionField f;
    f.n_horizon = N;
    f.radius = R;
    f.parity = M & 1;
    f.values.resize(static_cast<std::size_t>(S) * S);
    for (int i = 0; i < S; ++i) std::copy(cur.row(i), cur.row(i) + S, f.values.begin() + static_cast<std::size_t>(i) * S);
    return f;
}

// Weight field W(n, .) on the window layer of parity n.
inline PartitionField weight_layer(const PolymerConfig& cfg, std::uint64_t replica, int n) {
    const int R = cfg.window_radius, S = R + 1, off = R / 2;
    DisorderSource dis(cfg, replica);
    PartitionField f;
    f.n_horizon = cfg.n_horizon;
    f.radius = R;
    f.parity = n & 1;
    f.values.resize(static_cast<std::size_t>(S) * S);
    const std::uint64_t base = std::uint64_t(1) << 30;
    for (int i = 0; i < S; ++i) dis.row(n, base + i - off, base - off, S, f.values.data() + static_cast<std::size_t>(i) * S);
    return f;
}

// Exact free walk kernel P(S_N = x) on the window cells of the field layout.
inline PartitionField exact_walk_kernel(int n, int R) {
    auto p = walk_marginal(n);
    PartitionField f;
    f.n_horizon = n;
    f.radius = R;
    f.parity = n & 1;
    const int S = R + 1, off = R / 2;
    f.values.assign(static_cast<std::size_t>(S) * S, 0.0);
    auto pu = [&](int u) { return std::abs(u) > n ? 0.0 : p[u + n + 1]; };
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j) {
            int u = 2 * (i - off) + f.parity, v = 2 * (j - off) + f.parity;
            if (std::abs(u) > R || std::abs(v) > R) continue;
            f.values[static_cast<std::size_t>(i) * S + j] = pu(u) * pu(v);
        }
    return f;
}

// Line-to-point field y -> sum_x Z_{0,N}(x, y) on a torus of half-period R in u and v.
struct LineField {
    int n_horizon = 0;
    int period = 0;              // compressed side R
    std::vector<double> values;  // R x R, even sublattice at time N
    double mass_loss = 0.0;      // probability that a walk wraps half a period

    double cell(int P, int Q) const {
        P = ((P % period) + period) % period;
        Q = ((Q % period) + period) % period;
        return values[static_cast<std::size_t>(P) * period + Q];
    }
};

inline LineField sample_line_field(const PolymerConfig& cfg, std::uint64_t replica) {
    cfg.validate();
    const int N = cfg.n_horizon, R = cfg.window_radius;
    DisorderSource dis(cfg, replica);
    // In place: odd layers read rows i, i+1 (ascending sweep), even layers rows i-1, i (descending sweep).
    std::vector<double> cur(static_cast<std::size_t>(R) * R, 1.0), w(R, 1.0), s(R + 2), wrap(R);
    auto row = [&](int i) { return &cur[static_cast<std::size_t>(i) * R]; };
    for (int n = 1; n <= N; ++n) {
        const bool odd = n & 1;
        const bool tilt = n < N && cfg.beta != 0.0;
        if (!tilt) std::fill(w.begin(), w.end(), 1.0);
        std::copy_n(row(odd ? 0 : R - 1), R, wrap.begin());
        for (int k = 0; k < R; ++k) {
            const int i = odd ? k : R - 1 - k;
            double* a = row(i);
            const double* b = odd ? (i + 1 == R ? wrap.data() : row(i + 1)) : (i == 0 ? wrap.data() : row(i - 1));
            for (int j = 0; j < R; ++j) s[j + 1] = a[j] + b[j];
            if (tilt) dis.row(n, static_cast<std::uint64_t>(i), 0, R, w.data());
            if (odd) {
                s[R + 1] = s[1];
                for (int j = 0; j < R; ++j) a[j] = 0.25 * (s[j + 1] + s[j + 2]) * w[j];
            } else {
                s[0] = s[R];
                for (int j = 0; j < R; ++j) a[j] = 0.25 * (s[j] + s[j + 1]) * w[j];
            }
        }
    }
    LineField f;
    f.n_horizon = N;
    f.period = R;
    f.values = std::move(cur);
    const double stay = walk_stay_probability(N, R - 1);
    f.mass_loss = std::max(0.0, 1.0 - stay * stay);
    return f;
}

// Half the lattice average over even points y with |y - c| < eps sqrt(N), c the even point with compressed
// coordinates (P0, Q0). Its mean is exactly 1/2.
inline double ball_mass(const LineField& f, double epsilon, int P0 = 0, int Q0 = 0) {
    const double r = epsilon * std::sqrt(static_cast<double>(f.n_horizon));
    if (!(r >= 2.0)) throw DomainError("ball_mass: eps sqrt(N) must be at least 2");
    if (2.0 * r >= f.period) throw DomainError("ball_mass: ball wider than the torus");
    const double r2 = r * r;
    const int span = static_cast<int>(std::ceil(r / std::sqrt(2.0)));
    double acc = 0.0;
    long count = 0;
    for (int dp = -span; dp <= span; ++dp) {
        double rowsum = 0.0;
        for (int dq = -span; dq <= span; ++dq) {
            if (2.0 * (dp * dp + dq * dq) >= r2) continue;
            rowsum += f.cell(P0 + dp, Q0 + dq);
            ++count;
        }
        acc += rowsum;
    }
    if (count == 0) throw DomainError("ball_mass: empty ball");
    return 0.5 * acc / static_cast<double>(count);
}

// Point-to-point version: (1/(2 pi eps^2)) sum over even y in the ball of Z_{0,N}(0, y).
inline double ball_mass(const PartitionField& f, double epsilon) {
    const double r = epsilon * std::sqrt(static_cast<double>(f.n_horizon));
    if (!(r >= 2.0)) throw DomainError("ball_mass: eps sqrt(N) must be at least 2");
    const int span = static_cast<int>(std::ceil(r)) + 1;
    double acc = 0.0;
    long count = 0;
    for (int x1 = -span; x1 <= span; ++x1)
        for (int x2 = -span; x2 <= span; ++x2) {
            if (((x1 + x2) & 1) != 0 || x1 * x1 + x2 * x2 >= r * r) continue;
            acc += f.at(x1, x2);
            ++count;
        }
    if (count == 0) throw DomainError("ball_mass: empty ball");
    return acc / (2.0 * std::numbers::pi * epsilon * epsilon);
}

struct BallSample {
    std::vector<double> epsilons;
    std::vector<std::vector<double>> masses;  // [eps][replica * balls + ball]
    int balls_per_replica = 0;
    double max_mass_loss = 0.0;
};

// Torus fields for every replica, ball masses on a g x g grid of centres per field.
inline BallSample simulate_ball_masses(const PolymerConfig& cfg, const std::vector<double>& epsilons, int balls_per_side,
                                       int threads) {
    cfg.validate();
    if (balls_per_side < 1) throw ConfigError("balls_per_side must be positive");
    const int g = balls_per_side, R = cfg.window_radius, nb = g * g;
    for (double e : epsilons) {
        double r = e * std::sqrt(static_cast<double>(cfg.n_horizon));
        if (g > 1 && 2.0 * r / std::sqrt(2.0) >= static_cast<double>(R) / g)
            throw ConfigError("balls overlap: reduce balls_per_side or epsilon");
    }
    BallSample out;
    out.epsilons = epsilons;
    out.balls_per_replica = nb;
    out.masses.assign(epsilons.size(), std::vector<double>(static_cast<std::size_t>(cfg.replicas) * nb));
    std::vector<double> loss(cfg.replicas, 0.0);
    parallel_for(static_cast<std::size_t>(cfg.replicas), threads, [&](std::size_t rep) {
        LineField f = sample_line_field(cfg, rep);
        loss[rep] = f.mass_loss;
        for (std::size_t e = 0; e < epsilons.size(); ++e)
            for (int a = 0; a < g; ++a)
                for (int b = 0; b < g; ++b)
                    out.masses[e][rep * nb + a * g + b] = ball_mass(f, epsilons[e], a * R / g, b * R / g);
    });
    for (double l : loss) out.max_mass_loss = std::max(out.max_mass_loss, l);
    return out;
}

struct MomentEstimate {
    int h = 1;
    double epsilon = 0.0;
    double estimate = 0.0;
    double stderr_proxy = 0.0;
    int replicas_used = 0;
    int blocks = 0;
};

// Median of means over contiguous blocks of the h-th powers.
inline MomentEstimate moment_estimate(const std::vector<double>& masses, int h, int blocks = 8, double epsilon = 0.0) {
    if (h < 1) throw DomainError("moment_estimate: h must be positive");
    if (blocks < 8) throw DomainError("moment_estimate: at least 8 blocks");
    const std::size_t n = masses.size();
    if (n < static_cast<std::size_t>(8 * h * h) || n < static_cast<std::size_t>(blocks))
        throw DomainError("moment_estimate: need at least 8 h^2 samples");
    std::vector<double> means(blocks);
    for (int b = 0; b < blocks; ++b) {
        std::size_t lo = n * b / blocks, hi = n * (b + 1) / blocks;
        std::vector<double> pw(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            if (!(masses[i] >= 0.0)) throw DomainError("moment_estimate: masses must be nonnegative");
            pw[i - lo] = std::pow(masses[i], h);
        }
        means[b] = pairwise_sum(pw) / static_cast<double>(pw.size());
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        std::size_t k = v.size();
        return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
    };
    MomentEstimate m;
    m.h = h;
    m.epsilon = epsilon;
    m.estimate = median(means);
    std::vector<double> dev(blocks);
    for (int b = 0; b < blocks; ++b) dev[b] = std::abs(means[b] - m.estimate);
    // MAD -> sd of one block mean, then the asymptotic median efficiency factor.
    m.stderr_proxy = 1.4826 * median(dev) * 1.2533 / std::sqrt(static_cast<double>(blocks));
    m.replicas_used = static_cast<int>(n);
    m.blocks = blocks;
    return m;
}

struct LinearFit {
    double slope = 0.0, intercept = 0.0, r2 = 0.0, slope_stderr = 0.0;
};

inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw FitError("least_squares: need matching samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 1e-300)) throw FitError("least_squares: degenerate design");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) sse += std::pow(y[i] - f.intercept - f.slope * x[i], 2);
    f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    f.slope_stderr = n > 2 ? std::sqrt(sse / (n - 2) / sxx) : 0.0;
    return f;
}

struct GrowthFit {
    LinearFit loglog;  // log estimate vs loglog(1/eps)
    LinearFit linear;  // estimate vs log(1/eps)
};

inline GrowthFit growth_fit(const std::vector<std::pair<double, MomentEstimate>>& pts, double min_span = 8.0) {
    if (pts.size() < 4) throw FitError("growth_fit: need at least 4 epsilon points");
    double lo = INFINITY, hi = 0.0;
    std::vector<double> ll, lg, le, e;
    for (const auto& [eps, m] : pts) {
        if (!(eps > 0.0) || !(eps < 1.0)) throw FitError("growth_fit: epsilon must lie in (0, 1)");
        if (!(m.estimate > 0.0)) throw FitError("growth_fit: estimates must be positive");
        lo = std::min(lo, eps);
        hi = std::max(hi, eps);
        double L = std::log(1.0 / eps);
        le.push_back(L);
        e.push_back(m.estimate);
        lg.push_back(std::log(m.estimate));
        ll.push_back(std::log(L));
    }
    if (hi / lo < min_span) throw FitError("growth_fit: epsilon points span too narrow a range");
    GrowthFit g;
    g.loglog = least_squares(ll, lg);
    g.linear = least_squares(le, e);
    return g;
}

}  // namespace shf
