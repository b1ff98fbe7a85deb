#include <CLI11.hpp>

#include <shf/runner.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

using namespace shf;
using namespace shf::runner;

struct ConfigFile {
    std::vector<std::pair<std::string, std::string>> entries;
    std::string command;
};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r"), e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

ConfigFile read_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    ConfigFile c;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        std::replace(key.begin(), key.end(), '_', '-');
        if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        if (key == "command")
            c.command = value;
        else
            c.entries.emplace_back(key, value);
    }
    return c;
}

// Fills options the command line left unset; unknown keys are usage errors.
void apply_config(CLI::App& app, CLI::App& sub, const ConfigFile& c) {
    for (const auto& [key, value] : c.entries) {
        CLI::Option* opt = nullptr;
        for (CLI::App* a : {&sub, &app}) {
            try {
                opt = a->get_option("--" + key);
                break;
            } catch (const CLI::OptionNotFound&) {
            }
        }
        if (!opt || key == "config") throw ConfigError("unknown config key '" + key + "'");
        if (opt->count() > 0) continue;
        opt->add_result(value);
        opt->run_callback();
    }
}

nlohmann::json resolved(const CLI::App& app, const CLI::App& sub) {
    nlohmann::json j = nlohmann::json::object();
    for (const CLI::App* a : {&app, &sub})
        for (const CLI::Option* o : a->get_options()) {
            std::string name = o->get_single_name();
            if (name.empty() || name == "help" || name == "version" || name == "config") continue;
            std::string v;
            if (o->count() > 0) {
                for (const auto& r : o->results()) v += (v.empty() ? "" : ",") + r;
            } else {
                v = o->get_default_str();
            }
            j[name] = v;
        }
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical experiments for the critical 2d stochastic heat flow", "shflab"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.set_version_flag("--version", kVersion);
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1, 1);
    app.fallthrough();

    int threads = default_threads();
    const char* env_out = std::getenv("SHFLAB_OUT_DIR");
    std::string out_dir = env_out && *env_out ? env_out : ".";
    std::string config_path;
    app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", out_dir, "Output directory (default: $SHFLAB_OUT_DIR or .)");
    app.add_option("--config", config_path, "Flat key = value config file; flags override it");

    DickmanArgs dk;
    auto* c_dk = app.add_subcommand("dickman", "Dickman subordinator density on an (s, t) grid");
    c_dk->add_option("--theta", dk.theta);
    c_dk->add_option("--s", dk.s)->delimiter(',');
    c_dk->add_option("--t", dk.t)->delimiter(',');

    SecondMomentArgs sm;
    auto* c_sm = app.add_subcommand("second-moment", "Exact second moment over an epsilon list");
    c_sm->add_option("--theta", sm.theta);
    c_sm->add_option("--eps", sm.eps)->delimiter(',');

    UpperBoundArgs ub;
    auto* c_ub = app.add_subcommand("upper-bound", "Series upper bound and its fitted exponent");
    c_ub->add_option("--h", ub.h)->check(CLI::Range(2, 64));
    c_ub->add_option("--theta", ub.theta);
    c_ub->add_option("--eps-ladder", ub.eps_ladder, "Decade ladder a..b or a comma list");

    DiagramsArgs dg;
    auto* c_dg = app.add_subcommand("diagrams", "Diagram integrals by nested quadrature or Monte Carlo");
    c_dg->add_option("--h", dg.h)->check(CLI::Range(2, 64));
    c_dg->add_option("--m", dg.m)->delimiter(',');
    c_dg->add_option("--eps", dg.eps)->delimiter(',');
    c_dg->add_option("--theta", dg.theta);
    c_dg->add_option("--method", dg.method)->check(CLI::IsMember({"nested_quadrature", "nested", "monte_carlo", "mc"}));
    c_dg->add_option("--budget", dg.budget);
    c_dg->add_option("--seed", dg.seed);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Critical polymer fields and ball-mass moments");
    c_sim->add_option("--h", sim.h)->delimiter(',');
    c_sim->add_option("--N", sim.n_horizon, "Time horizon");
    c_sim->add_option("--replicas", sim.replicas, "Ball samples in total (fields x balls-per-side^2)");
    c_sim->add_option("--balls-per-side", sim.balls_per_side);
    c_sim->add_option("--seed", sim.seed);
    c_sim->add_option("--theta", sim.theta);
    c_sim->add_option("--law", sim.law)->check(CLI::IsMember({"bernoulli_pm1", "gaussian"}));
    c_sim->add_option("--eps-sqrt-n", sim.eps_sqrt_n, "Ball radii in lattice units")->delimiter(',');
    c_sim->add_option("--window-constant", sim.window_constant);
    c_sim->add_option("--blocks", sim.blocks, "Median-of-means blocks");

    auto* c_rep = app.add_subcommand("report", "Summary of the analytic checks");

    std::string command;
    try {
        // A config file may name the command; insert it when the command line does not.
        std::vector<std::string> args(argv + 1, argv + argc);
        ConfigFile cfile;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--config" && i + 1 < args.size()) cfile = read_config(args[i + 1]);
            if (args[i].rfind("--config=", 0) == 0) cfile = read_config(args[i].substr(9));
        }
        bool has_sub = false;
        for (const auto& a : args)
            for (auto* s : app.get_subcommands({})) has_sub = has_sub || a == s->get_name();
        if (!has_sub && !cfile.command.empty()) args.insert(args.begin(), cfile.command);
        std::reverse(args.begin(), args.end());
        app.parse(args);

        CLI::App* sub = app.get_subcommands().front();
        command = sub->get_name();
        if (!cfile.command.empty() && cfile.command != command)
            throw ConfigError("config file is for '" + cfile.command + "', not '" + command + "'");
        apply_config(app, *sub, cfile);
        nlohmann::json config = resolved(app, *sub);

        const std::string started = utc_now();
        const auto t0 = std::chrono::steady_clock::now();
        auto wall = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
        const std::filesystem::path dir(out_dir);
        auto emit_one = [&](const Table& t, const std::string& stem, const nlohmann::json& seed) {
            emit(dir / (stem + ".csv"), t, command, config, seed, wall(), started);
            std::cout << (dir / (stem + ".csv")).string() << '\n';
        };

        if (sub == c_dk) {
            emit_one(run_dickman(dk), "dickman", nullptr);
        } else if (sub == c_sm) {
            emit_one(run_second_moment(sm), "second_moment", nullptr);
        } else if (sub == c_ub) {
            emit_one(run_upper_bound(ub), "upper_bound", nullptr);
        } else if (sub == c_dg) {
            emit_one(run_diagrams(dg, threads), "diagrams", dg.seed);
        } else if (sub == c_sim) {
            SimulateOutput o = run_simulate(sim, threads);
            emit_one(o.masses, "simulate_masses", sim.seed);
            emit_one(o.moments, "simulate", sim.seed);
        } else if (sub == c_rep) {
            Table t = run_report();
            emit_one(t, "report", nullptr);
            for (const auto& r : t.rows)
                if (r.back() != "1") {
                    std::cerr << "shflab report: check " << r.front() << " failed\n";
                    return kFailure;
                }
        }
        return kOk;
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    } catch (const ConfigError& e) {
        std::cerr << "shflab: usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const DomainError& e) {
        std::cerr << "shflab: usage error in " << (command.empty() ? "arguments" : command) << ": " << e.what() << '\n';
        return kUsage;
    } catch (const NumericError& e) {
        std::cerr << "shflab: numeric error in " << command << ": " << e.what() << '\n';
        return kNumeric;
    } catch (const FitError& e) {
        std::cerr << "shflab: numeric error in " << command << " (fit): " << e.what() << '\n';
        return kNumeric;
    } catch (const SolverError& e) {
        std::cerr << "shflab: numeric error in " << command << " (solver): " << e.what() << '\n';
        return kNumeric;
    } catch (const std::exception& e) {
        std::cerr << "shflab: error in " << (command.empty() ? "startup" : command) << ": " << e.what() << '\n';
        return kFailure;
    }
}
