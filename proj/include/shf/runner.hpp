#pragma once

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "combinatorics.hpp"
#include "diagram_evaluator.hpp"
#include "dpre_simulator.hpp"
#include "multiplier_kernels.hpp"
#include "special_functions.hpp"

namespace shf::runner {

inline constexpr const char* kVersion = "shflab 1.0.0";

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kNumeric = 3 };

inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
inline std::string fmt(long long x) { return std::to_string(x); }
inline std::string fmt(int x) { return std::to_string(x); }
inline std::string fmt(std::uint64_t x) { return std::to_string(x); }
inline std::string fmt(bool b) { return b ? "1" : "0"; }

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    nlohmann::json summary = nlohmann::json::object();

    template <class... T>
    void add(const T&... v) {
        rows.push_back({fmt(v)...});
    }
};

inline std::string to_csv(const Table& t) {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) {
        if (r.size() != t.header.size()) throw std::logic_error("csv row does not match its header");
        line(r);
    }
    return os.str();
}

// "a..b" expands to the decades from a to b inclusive; anything else is a comma list.
inline std::vector<double> parse_ladder(const std::string& s) {
    std::vector<double> out;
    auto dots = s.find("..");
    auto num = [&](const std::string& x) {
        std::size_t used = 0;
        double v = std::stod(x, &used);
        if (used != x.size()) throw ConfigError("bad number '" + x + "'");
        return v;
    };
    try {
        if (dots != std::string::npos) {
            double a = num(s.substr(0, dots)), b = num(s.substr(dots + 2));
            if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("ladder ends must be positive");
            int ea = static_cast<int>(std::lround(std::log10(a))), eb = static_cast<int>(std::lround(std::log10(b)));
            if (std::abs(std::pow(10.0, ea) / a - 1.0) > 1e-12 || std::abs(std::pow(10.0, eb) / b - 1.0) > 1e-12)
                throw ConfigError("ladder ends must be powers of ten");
            int step = ea <= eb ? 1 : -1;
            for (int e = ea;; e += step) {
                out.push_back(std::stod("1e" + std::to_string(e)));
                if (e == eb) break;
            }
        } else {
            std::stringstream ss(s);
            std::string item;
            while (std::getline(ss, item, ','))
                if (!item.empty()) out.push_back(num(item));
        }
    } catch (const std::logic_error&) {
        throw ConfigError("cannot parse ladder '" + s + "'");
    }
    if (out.empty()) throw ConfigError("empty ladder '" + s + "'");
    return out;
}

struct DickmanArgs {
    double theta = 0.0;
    std::vector<double> s{0.5, 1.0, 2.0};
    std::vector<double> t{0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
};

inline Table run_dickman(const DickmanArgs& a) {
    Table tab;
    tab.header = {"theta", "s", "t", "density"};
    DickmanParameter p{a.theta};
    for (double s : a.s)
        for (double t : a.t) tab.add(a.theta, s, t, dickman_density(s, t, p));
    return tab;
}

struct SecondMomentArgs {
    double theta = 0.0;
    std::vector<double> eps{1e-2, 1e-4, 1e-6, 1e-8};
};

inline Table run_second_moment(const SecondMomentArgs& a) {
    Table tab;
    tab.header = {"epsilon", "value", "value_over_log"};
    for (double e : a.eps) {
        double v = second_moment_exact(a.theta, e);
        tab.add(e, v, v / std::log(1.0 / e));
    }
    return tab;
}

struct UpperBoundArgs {
    int h = 3;
    double theta = 0.0;
    std::string eps_ladder = "1e-4..1e-16";
};

inline Table run_upper_bound(const UpperBoundArgs& a) {
    Table tab;
    tab.header = {"epsilon", "h", "lambda", "f_value", "k", "completion_ratio", "log_head", "log_tail", "log_series",
                  "fitted_exponent"};
    MultiplierConfig cfg = MultiplierConfig::with_defaults(a.h, 3.0, a.theta);
    for (double e : parse_ladder(a.eps_ladder)) {
        BoundReport r = upper_bound_series(a.h, e, cfg);
        tab.add(e, a.h, r.lambda, r.f_value, r.cutoff.k, r.completion_ratio, r.log_head, r.log_tail, r.log_series,
                r.fitted_exponent);
    }
    return tab;
}

struct DiagramsArgs {
    int h = 3;
    std::vector<int> m{1, 2, 3};
    std::vector<double> eps{1e-2, 1e-3};
    double theta = 0.0;
    std::string method = "nested_quadrature";
    std::uint64_t budget = 1000000;
    std::uint64_t seed = 1;
};

inline DiagramMethod parse_method(const std::string& s) {
    if (s == "nested_quadrature" || s == "nested") return DiagramMethod::nested_quadrature;
    if (s == "monte_carlo" || s == "mc") return DiagramMethod::monte_carlo;
    throw ConfigError("unknown method '" + s + "'");
}

inline Table run_diagrams(const DiagramsArgs& a, int threads) {
    Table tab;
    tab.header = {"h", "m", "epsilon", "method", "value", "error", "samples", "partial"};
    const DiagramMethod method = parse_method(a.method);
    for (double e : a.eps)
        for (int m : a.m) {
            DiagramSpec spec{a.h, m, e, std::nullopt, a.theta};
            MonteCarloOptions mc;
            mc.seed = a.seed;
            mc.threads = threads;
            DiagramResult r = diagram_integral_direct(spec, method, a.budget, mc);
            tab.rows.push_back({fmt(a.h), fmt(m), fmt(e), method == DiagramMethod::monte_carlo ? "monte_carlo" : "nested_quadrature",
                                fmt(r.value), fmt(r.error), fmt(r.samples), fmt(r.partial)});
        }
    return tab;
}

struct SimulateArgs {
    std::vector<int> h{2, 3};
    int n_horizon = 4096;
    int replicas = 4096;  // ball samples in total: fields * balls_per_side^2
    int balls_per_side = 8;
    std::uint64_t seed = 1;
    double theta = 0.0;
    std::string law = "bernoulli_pm1";
    std::vector<double> eps_sqrt_n{8, 16, 32, 64};
    double window_constant = 3.0;
    int blocks = 8;
};

struct SimulateOutput {
    Table moments;
    Table masses;
};

inline SimulateOutput run_simulate(const SimulateArgs& a, int threads) {
    const int nb = a.balls_per_side * a.balls_per_side;
    if (a.balls_per_side < 1 || a.replicas < 1 || a.replicas % nb != 0)
        throw ConfigError("replicas must be a positive multiple of balls_per_side^2");
    PolymerConfig cfg = PolymerConfig::critical(a.n_horizon, a.theta, parse_law(a.law), a.replicas / nb, a.seed,
                                                a.window_constant);
    std::vector<double> eps;
    for (double k : a.eps_sqrt_n) eps.push_back(k / std::sqrt(static_cast<double>(a.n_horizon)));
    BallSample bs = simulate_ball_masses(cfg, eps, a.balls_per_side, threads);

    SimulateOutput out;
    out.masses.header = {"field", "ball", "epsilon", "mass"};
    for (std::size_t e = 0; e < eps.size(); ++e)
        for (std::size_t i = 0; i < bs.masses[e].size(); ++i)
            out.masses.add(static_cast<int>(i / nb), static_cast<int>(i % nb), eps[e], bs.masses[e][i]);

    Table& t = out.moments;
    t.header = {"h", "epsilon", "eps_sqrt_n", "estimate", "stderr_proxy", "samples", "blocks"};
    std::map<int, std::vector<std::pair<double, MomentEstimate>>> by_h;
    for (int h : a.h)
        for (std::size_t e = 0; e < eps.size(); ++e) {
            MomentEstimate m = moment_estimate(bs.masses[e], h, a.blocks, eps[e]);
            by_h[h].push_back({eps[e], m});
            t.add(h, eps[e], a.eps_sqrt_n[e], m.estimate, m.stderr_proxy, m.replicas_used, m.blocks);
        }
    t.summary["beta"] = cfg.beta;
    t.summary["window_radius"] = cfg.window_radius;
    t.summary["fields"] = cfg.replicas;
    t.summary["max_mass_loss"] = bs.max_mass_loss;
    for (auto& [h, pts] : by_h) {
        if (pts.size() < 4) continue;
        try {
            GrowthFit g = growth_fit(pts);
            t.summary["fit_h" + std::to_string(h)] = {{"linear_slope", g.linear.slope},
                                                     {"linear_r2", g.linear.r2},
                                                     {"loglog_slope", g.loglog.slope},
                                                     {"loglog_r2", g.loglog.r2}};
        } catch (const FitError& e) {
            t.summary["fit_h" + std::to_string(h)] = e.what();
        }
    }
    if (by_h.count(2) && by_h.count(3)) {
        // (2Z) moments: E[(2Z)^3] >= E[(2Z)^2]^3.
        bool ok = true;
        for (std::size_t e = 0; e < eps.size(); ++e)
            ok = ok && 8.0 * by_h[3][e].second.estimate >= std::pow(4.0 * by_h[2][e].second.estimate, 3);
        t.summary["moment_ordering_holds"] = ok;
    }
    return out;
}

// Quick numerical health checks over the analytic modules.
inline Table run_report() {
    Table tab;
    tab.header = {"check", "value", "threshold", "pass"};
    auto row = [&](const std::string& name, double v, double thr, bool pass) {
        tab.rows.push_back({name, fmt(v), fmt(thr), fmt(pass)});
    };
    double worst = 0.0;
    for (double th : {-1.0, 0.0, 1.0}) {
        DickmanParameter p{th};
        for (double lam : {2.0, 5.0, 20.0, 100.0}) {
            double l = std::max(lam, 2.0 * std::exp(p.shift()));
            LaplaceResult r = laplace_transform_renewal(l, p);
            worst = std::max(worst, std::abs(r.value / laplace_analytic(l, p) - 1.0));
        }
    }
    row("laplace_identity_max_rel_error", worst, 1e-6, worst <= 1e-6);

    double asym = 0.0;
    for (double th : {-1.0, 0.0, 1.0})
        for (double t : {1e-10, 1e-8, 1e-6, 1e-4}) {
            double L = std::log(1.0 / t);
            double ratio = renewal_density(t, {th}) / renewal_asymptotic(t, {th});
            asym = std::max(asym, std::abs(ratio - 1.0) * L * L);
        }
    row("asymptotic_ratio_scaled_deviation", asym, 5.0, asym <= 5.0);

    bool comb = true;
    for (int m = 0; m <= 30; ++m)
        for (int i = 0; i <= m; ++i) comb = comb && c_coeff_recursive(m, i) == c_coeff_closed(m, i);
    row("coefficient_recursion_matches_closed_form", comb ? 1.0 : 0.0, 1.0, comb);

    double a = second_moment_exact(0.0, 1e-6) / std::log(1e6), b = second_moment_exact(0.0, 1e-10) / std::log(1e10);
    double var = std::abs(a - b) / std::min(a, b);
    row("second_moment_over_log_variation", var, 0.05, var < 0.05);
    return tab;
}

inline std::string utc_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// CSV first, then its sidecar.
inline void emit(const std::filesystem::path& csv, const Table& t, const std::string& command,
                 const nlohmann::json& config, const nlohmann::json& seed, double wall_seconds, const std::string& started) {
    std::filesystem::create_directories(csv.parent_path().empty() ? "." : csv.parent_path());
    {
        std::ofstream f(csv, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + csv.string());
        f << to_csv(t);
        if (!f) throw std::runtime_error("failed writing " + csv.string());
    }
    nlohmann::json meta;
    meta["command"] = command;
    meta["version"] = kVersion;
    meta["seed"] = seed;
    meta["config"] = config;
    meta["columns"] = t.header;
    meta["rows"] = t.rows.size();
    meta["started_utc"] = started;
    meta["wall_clock_seconds"] = wall_seconds;
    if (!t.summary.empty()) meta["summary"] = t.summary;
    std::filesystem::path side = csv;
    side.replace_extension(".json");
    std::ofstream f(side, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + side.string());
    f << meta.dump(2) << '\n';
}

}  // namespace shf::runner
