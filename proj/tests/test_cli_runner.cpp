#include <catch_amalgamated.hpp>

#include <shf/runner.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace shf;
using namespace shf::runner;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("shflab_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int shflab(const std::string& args, const fs::path& out, const std::string& env = "") {
    std::string cmd = env + " " + SHFLAB_EXE + std::string(" --out-dir '") + out.string() + "' " + args + " > '" +
                      (out / "stdout.txt").string() + "' 2> '" + (out / "stderr.txt").string() + "'";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream f(p);
    std::string line;
    while (std::getline(f, line)) {
        std::vector<std::string> r;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) r.push_back(cell);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TEST_CASE("number formatting round-trips") {
    for (double x : {0.1, 1.0 / 3.0, 2.5e-300, 6.02214076e23, -7.0}) CHECK(std::stod(fmt(x)) == x);
    CHECK(fmt(INFINITY) == "inf");
    CHECK(fmt(3) == "3");
}

TEST_CASE("ladder parsing") {
    auto a = parse_ladder("1e-4..1e-8");
    REQUIRE(a.size() == 5);
    CHECK(a.front() == 1e-4);
    CHECK(a.back() == 1e-8);
    CHECK(parse_ladder("1e-2,0.5") == std::vector<double>{1e-2, 0.5});
    CHECK_THROWS_AS(parse_ladder("3e-4..1e-8"), ConfigError);
    CHECK_THROWS_AS(parse_ladder("abc"), ConfigError);
    CHECK_THROWS_AS(parse_ladder(""), ConfigError);
}

TEST_CASE("csv rows must match the header") {
    Table t;
    t.header = {"a", "b"};
    t.add(1.5, 2);
    CHECK(to_csv(t) == "a,b\n1.5,2\n");
    t.rows.push_back({"x"});
    CHECK_THROWS(to_csv(t));
}

TEST_CASE("second-moment command writes a monotone table and its sidecar") {
    fs::path out = scratch("sm");
    REQUIRE(shflab("second-moment --theta 0 --eps 1e-2,1e-4,1e-6,1e-8", out) == 0);
    auto rows = read_csv(out / "second_moment.csv");
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"epsilon", "value", "value_over_log"});
    for (int i = 2; i < 5; ++i) CHECK(std::stod(rows[i][1]) > std::stod(rows[i - 1][1]));
    CHECK_THAT(std::stod(rows[1][1]), Catch::Matchers::WithinRel(second_moment_exact(0.0, 1e-2), 1e-15));

    auto meta = nlohmann::json::parse(slurp(out / "second_moment.json"));
    CHECK(meta["version"] == kVersion);
    CHECK(meta["command"] == "second-moment");
    CHECK(meta["config"]["theta"] == "0");
    CHECK(meta["config"].contains("threads"));
    CHECK(meta["columns"].size() == 3);
    CHECK(meta["wall_clock_seconds"].get<double>() >= 0.0);
}

TEST_CASE("upper-bound command writes report rows") {
    fs::path out = scratch("ub");
    REQUIRE(shflab("upper-bound --h 3 --eps-ladder 1e-4..1e-12", out) == 0);
    auto rows = read_csv(out / "upper_bound.csv");
    REQUIRE(rows.size() == 10);
    CHECK(rows[0].back() == "fitted_exponent");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        BoundReport r = upper_bound_series(3, std::stod(rows[i][0]), MultiplierConfig::with_defaults(3, 3.0));
        CHECK(rows[i].back() == fmt(r.fitted_exponent));
    }
}

TEST_CASE("config file, flag precedence and the output directory variable") {
    fs::path out = scratch("cfg");
    {
        std::ofstream f(out / "run.cfg");
        f << "# diagrams by Monte Carlo\ncommand = diagrams\nm = 1\neps = 0.05\nmethod = monte_carlo\nbudget = 100000\nseed = 4\n";
    }
    REQUIRE(shflab("--config '" + (out / "run.cfg").string() + "' --seed 9", out) == 0);
    auto meta = nlohmann::json::parse(slurp(out / "diagrams.json"));
    CHECK(meta["config"]["seed"] == "9");
    CHECK(meta["config"]["budget"] == "100000");
    CHECK(meta["config"]["h"] == "3");
    CHECK(meta["seed"] == 9);
    auto rows = read_csv(out / "diagrams.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][3] == "monte_carlo");

    fs::path env_dir = scratch("env");
    std::string cmd = "SHFLAB_OUT_DIR='" + env_dir.string() + "' " + SHFLAB_EXE + " dickman --s 1 --t 0.5 > /dev/null";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(env_dir / "dickman.csv"));
    CHECK(fs::exists(env_dir / "dickman.json"));
}

TEST_CASE("exit codes") {
    fs::path out = scratch("codes");
    CHECK(shflab("dickman --bogus 1", out) == kUsage);
    CHECK(shflab("", out) == kUsage);
    {
        std::ofstream f(out / "bad.cfg");
        f << "unknown_key = 3\n";
    }
    CHECK(shflab("second-moment --config '" + (out / "bad.cfg").string() + "'", out) == kUsage);
    {
        std::ofstream f(out / "malformed.cfg");
        f << "theta 0\n";
    }
    CHECK(shflab("second-moment --config '" + (out / "malformed.cfg").string() + "'", out) == kUsage);
    CHECK(shflab("second-moment --eps 2", out) == kUsage);
    // No +-1 coupling exists at N = 16.
    CHECK(shflab("simulate --N 16 --replicas 64 --balls-per-side 1 --eps-sqrt-n 2,3", out) == kNumeric);
    CHECK(slurp(out / "stderr.txt").find("simulate") != std::string::npos);
    CHECK(shflab("report", out) == kOk);
    CHECK(shflab("--version", out) == kOk);
}

TEST_CASE("simulate is byte-identical across runs and thread counts") {
    fs::path a = scratch("sim_a"), b = scratch("sim_b");
    const std::string args = "simulate --h 2,3 --N 256 --replicas 256 --balls-per-side 2 --eps-sqrt-n 2,3,4,6 --seed 7";
    REQUIRE(shflab("--threads 1 " + args, a) == 0);
    REQUIRE(shflab("--threads 3 " + args, b) == 0);
    CHECK(slurp(a / "simulate.csv") == slurp(b / "simulate.csv"));
    CHECK(slurp(a / "simulate_masses.csv") == slurp(b / "simulate_masses.csv"));
    auto rows = read_csv(a / "simulate.csv");
    REQUIRE(rows.size() == 9);
    CHECK(rows[0] == std::vector<std::string>{"h", "epsilon", "eps_sqrt_n", "estimate", "stderr_proxy", "samples", "blocks"});
    CHECK(read_csv(a / "simulate_masses.csv").size() == 1 + 4 * 256);
    auto meta = nlohmann::json::parse(slurp(a / "simulate.json"));
    CHECK(meta["summary"]["fields"] == 64);
    CHECK(meta["summary"].contains("fit_h2"));
}
