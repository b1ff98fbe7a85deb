#include <catch_amalgamated.hpp>

#include <shf/diagram_evaluator.hpp>

#include <algorithm>
#include <random>

using namespace shf;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

namespace {

DiagramSpec spec(int h, int m, double eps, double theta = 0.0) { return DiagramSpec{h, m, eps, std::nullopt, theta}; }

// (h choose 2) int_{eps^2}^{1+eps^2} (1/a) int_0^{1+eps^2-a} G, with G from direct quadrature.
double first_diagram_oracle(int h, double eps, double theta) {
    const double e2 = eps * eps, T = 1.0 + e2;
    QuadratureConfig q;
    q.rel_tol = 1e-10;
    auto R = [&](double t) {
        if (t <= 0.0) return 0.0;
        auto g = [&](double z) { return renewal_density(std::exp(z), {theta}, q) * std::exp(z); };
        std::vector<double> zb{-400.0, -100.0, -20.0, -5.0};
        while (zb.back() >= std::log(t)) zb.pop_back();
        zb.push_back(std::log(t));
        // int_0^{e^-400} G = 1/400 + O(1/400^2) corrections, taken from the asymptotic form.
        return integrate_pieces(g, zb, q).value + 1.0 / 400.0 + (2.0 * theta) / (2.0 * 400.0 * 400.0);
    };
    auto outer = [&](double z) {
        double a = std::exp(z);
        return a < T ? R(T - a) : 0.0;
    };
    std::vector<double> zb{std::log(e2)};
    for (double z = std::log(e2) + 2.0; z < std::log(0.5); z += 2.0) zb.push_back(z);
    zb.push_back(std::log(0.5));
    zb.push_back(std::log(T));
    QuadratureConfig qo;
    qo.rel_tol = 1e-8;
    return 0.5 * h * (h - 1) * integrate_pieces(outer, zb, qo).value;
}

}  // namespace

TEST_CASE("zero and one collision diagrams") {
    CHECK(diagram_integral_direct(spec(3, 0, 0.1), DiagramMethod::nested_quadrature, 0).value == 1.0);
    CHECK(diagram_integral_direct(spec(3, 0, 0.1), DiagramMethod::monte_carlo, 100000).value == 1.0);

    const double eps = 1e-3;
    DiagramResult r = diagram_integral_direct(spec(2, 1, eps), DiagramMethod::nested_quadrature, 0);
    CHECK_THAT(r.value, WithinRel(first_diagram_oracle(2, eps, 0.0), 1e-6));
    // 1 + I_1 grows linearly in log(1/eps) with slope near 2.5 for theta = 0.
    CHECK_THAT((1.0 + r.value) / std::log(1.0 / eps), WithinRel(2.5, 0.05));
    CHECK_THAT(diagram_integral_direct(spec(4, 1, 0.01, 1.0), DiagramMethod::nested_quadrature, 0).value,
               WithinRel(first_diagram_oracle(4, 0.01, 1.0), 1e-6));
}

TEST_CASE("h = 2 diagrams vanish beyond one collision") {
    for (int m = 2; m <= 6; ++m) {
        CHECK(spec(2, m, 0.1).prefactor() == 0.0);
        CHECK(diagram_integral_direct(spec(2, m, 0.1), DiagramMethod::nested_quadrature, 0).value == 0.0);
        CHECK(diagram_integral_direct(spec(2, m, 0.1), DiagramMethod::monte_carlo, 100000).value == 0.0);
    }
    CHECK(diagram_integral_multiplier(spec(2, 2, 0.05), MultiplierConfig::with_defaults(2, 3.0)) == 0.0);
}

TEST_CASE("nested quadrature and Monte Carlo agree") {
    DiagramSpec s = spec(3, 2, 0.05);
    DiagramResult nq = diagram_integral_direct(s, DiagramMethod::nested_quadrature, 0);
    MonteCarloOptions mc;
    mc.seed = 3;
    mc.target_rel = 1e-5;
    DiagramResult m = diagram_integral_direct(s, DiagramMethod::monte_carlo, 10000000, mc);
    INFO("nested " << nq.value << " +- " << nq.error << ", mc " << m.value << " +- " << m.error);
    CHECK(std::abs(nq.value - m.value) <= 3.0 * (nq.error + m.error));
    CHECK(m.samples >= 10000000 - mc.block_size);
}

TEST_CASE("Monte Carlo is reproducible and independent of the thread count") {
    DiagramSpec s = spec(3, 3, 0.05);
    MonteCarloOptions a, b;
    a.threads = 1;
    b.threads = 3;
    DiagramResult ra = diagram_integral_mc(s, 200000, a), rb = diagram_integral_mc(s, 200000, b);
    CHECK(ra.value == rb.value);
    CHECK(ra.error == rb.error);
    b.seed = 2;
    CHECK(diagram_integral_mc(s, 200000, b).value != ra.value);
    CHECK_THROWS_AS(diagram_integral_mc(s, 100, a), DomainError);
}

TEST_CASE("multiplier integral against a direct two-dimensional quadrature") {
    const double eps = 0.05, lam = std::exp(2.0), e2 = eps * eps;
    MultiplierConfig c = MultiplierConfig::with_defaults(3, lam);
    double fast = diagram_integral_multiplier(spec(3, 2, eps), c);

    QuadratureConfig qi, qo;
    qi.rel_tol = 1e-10;
    qo.rel_tol = 1e-8;
    auto outer = [&](double z) {
        double u1 = std::exp(z);
        if (u1 >= 2.0) return 0.0;
        auto inner = [&](double y) {
            double u2 = std::exp(y);
            return big_F(u2 + 0.5 * u1, c, qi) * u2;
        };
        std::vector<double> yb{std::log(2.0 - u1) - 60.0};
        for (double y = yb[0] + 6.0; y < std::log(2.0 - u1); y += 6.0) yb.push_back(y);
        yb.push_back(std::log(2.0 - u1));
        // (1/u1) du1 = dz.
        return integrate_pieces(inner, yb, qi).value;
    };
    std::vector<double> zb{std::log(e2)};
    for (double z = std::log(e2) + 1.0; z < std::log(2.0); z += 1.0) zb.push_back(z);
    zb.push_back(std::log(2.0));
    double direct = pair_sequence_count_real(3, 2) * integrate_pieces(outer, zb, qo).value;
    CHECK_THAT(fast, WithinRel(direct, 1e-4));
}

TEST_CASE("diagram chain is dominated by the multiplier chain") {
    for (double eps : {0.1, 0.05}) {
        const double lam = 3.0;
        MultiplierConfig c = MultiplierConfig::with_defaults(3, lam);
        double direct = 0.0, mult = 0.0;
        for (int m = 0; m <= 3; ++m) {
            DiagramSpec s = spec(3, m, eps);
            direct += diagram_integral_direct(s, DiagramMethod::nested_quadrature, 0).value;
            if (m == 0)
                mult += 1.0;
            else if (m == 1)
                mult += s.prefactor() * std::log(2.0 / (eps * eps));
            else
                mult += diagram_integral_multiplier(s, c);
        }
        INFO("eps = " << eps << ": direct " << direct << ", multiplier " << mult);
        CHECK(direct <= chain_constant(0.0) * std::exp(2.0 * lam) * mult);
        CHECK(direct <= std::exp(2.0 * lam) * mult);
    }
}

TEST_CASE("exact second moment") {
    double a = second_moment_exact(0.0, 1e-6) / std::log(1e6);
    double b = second_moment_exact(0.0, 1e-8) / std::log(1e8);
    CHECK(std::abs(a - b) / std::min(a, b) < 0.05);
    CHECK(second_moment_exact(0.0, 0.9) > 1.0);
    CHECK(second_moment_exact(0.0, 0.9) < second_moment_exact(0.0, 0.5));
    for (double eps : {1e-2, 1e-4, 1e-6}) {
        DiagramResult d = diagram_integral_direct(spec(2, 1, eps), DiagramMethod::nested_quadrature, 0);
        INFO("eps = " << eps);
        CHECK_THAT(second_moment_exact(0.0, eps), WithinRel(1.0 + d.value, 1e-7));
    }
    CHECK_THROWS_AS(second_moment_exact(0.0, 1.5), DomainError);
}

TEST_CASE("covariance kernel: symmetry and positivity") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0), ut(0.05, 2.0);
    for (int k = 0; k < 100; ++k) {
        CovarianceQuery q;
        q.theta = u(rng);
        q.t = ut(rng);
        q.x = {u(rng), u(rng)};
        q.xp = {u(rng), u(rng)};
        q.y = {u(rng), u(rng)};
        q.yp = {u(rng), u(rng)};
        CovarianceQuery s = q;
        std::swap(s.x, s.xp);
        std::swap(s.y, s.yp);
        double a = covariance_kernel(q), b = covariance_kernel(s);
        REQUIRE(a > 0.0);
        REQUIRE_THAT(a, WithinRel(b, 1e-12));
    }
    CovarianceQuery diag;
    diag.xp = diag.x;
    CHECK_THROWS_AS(covariance_kernel(diag), DomainError);
}

TEST_CASE("covariance kernel near the diagonal against a Monte Carlo oracle") {
    CovarianceQuery q;
    q.t = 0.3;
    q.x = {0.0, 0.0};
    q.xp = {0.2, 0.0};
    q.y = {0.1, 0.1};
    q.yp = {0.1, 0.3};
    const double quad = covariance_kernel(q);

    // Gap d = b - a through x = 1/log(1/d), where G dd = htilde(x) dx; each half of the
    // remaining time integral in the log of the distance to its endpoint.
    const RenewalTable& tab = renewal_table(0.0);
    const double dx2 = 0.04, dy2 = 0.04, xmax = -1.0 / std::log(q.t);
    auto ga = [](double a, double d2) { return std::exp(-d2 / (2.0 * a)) / (2.0 * std::numbers::pi * a); };
    PhiloxStream rng(99, 0, 1);
    const long n = 40000000;
    double sum = 0.0, sum2 = 0.0;
    for (long i = 0; i < n; ++i) {
        double x = xmax * rng.uniform();
        double d = std::exp(-1.0 / x), s = q.t - d;
        double w = xmax * tab.htilde(x);
        bool left = rng.uniform() < 0.5;
        double d2 = left ? dx2 : dy2;
        double lo = std::log(d2 / 400.0), hi = std::log(0.5 * s), j = 0.0;
        if (lo < hi) {
            double c = std::exp(lo + (hi - lo) * rng.uniform());
            j = 2.0 * (hi - lo) * c * (left ? ga(c, dx2) * ga(s - c, dy2) : ga(s - c, dx2) * ga(c, dy2));
        }
        double v = w * j;
        sum += v;
        sum2 += v * v;
    }
    double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
    std::array<double, 2> mid{0.5 * (q.y[0] + q.yp[0] - q.x[0] - q.xp[0]), 0.5 * (q.y[1] + q.yp[1] - q.x[1] - q.xp[1])};
    const double pref = std::numbers::pi * heat_kernel(q.t / 4.0, mid);
    INFO("quadrature " << quad << ", mc " << pref * mean << " +- " << pref * se);
    CHECK(se / mean < 3e-4);
    CHECK_THAT(quad, WithinRel(pref * mean, 1e-3));
}

TEST_CASE("truncation radius and Gaussian domination") {
    CHECK_THAT(truncation_radius(0.5, 2), WithinRel(std::sqrt(2.0 * std::log(12.0)), 1e-14));
    CHECK_THAT(truncation_radius(0.5, 2), WithinAbs(2.229, 1e-3));
    CHECK_THAT(truncation_radius(1.0 - 1e-12, 2), WithinAbs(std::sqrt(2.0 * std::log(6.0)), 1e-9));
    CHECK_THAT(std::sqrt(2.0 * std::log(6.0)), WithinAbs(1.893, 1e-3));
    double prev = INFINITY;
    for (double rho = 0.05; rho < 1.0; rho += 0.05) {
        CHECK(truncation_radius(rho, 3) < prev);
        prev = truncation_radius(rho, 3);
    }
    CHECK_THROWS_AS(truncation_radius(1.0, 2), DomainError);
    CHECK_THROWS_AS(truncation_radius(0.0, 2), DomainError);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        double eps = std::pow(10.0, -3.0 * u(rng));
        double R = truncation_radius(0.01 + 0.98 * u(rng), 2 + k % 4) * (1.0 + u(rng));
        double r = R * eps * (1.0 + 5.0 * u(rng)), phi = 2.0 * std::numbers::pi * u(rng);
        std::array<double, 2> x{r * std::cos(phi), r * std::sin(phi)};
        REQUIRE(gaussian_tail_domination(R, eps, x));
    }
}

TEST_CASE("uniform versus Gaussian kernel comparisons") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 2000; ++k) {
        double eps = std::pow(10.0, -3.0 * u(rng));
        double R = 1.0 + 10.0 * u(rng);
        double r = 1.5 * R * eps * u(rng), phi = 2.0 * std::numbers::pi * u(rng);
        std::array<double, 2> x{r * std::cos(phi), r * std::sin(phi)};
        REQUIRE(uniform_upper_domination(eps, x));
        REQUIRE(uniform_lower_domination(R, eps, x));
    }
    CHECK_THROWS_AS(uniform_lower_domination(1.0, 0.1, {0.0, 0.0}), DomainError);
}

TEST_CASE("tail factor is of order 1/log(1/eps)") {
    for (double th : {-1.0, 0.0, 1.0})
        for (double eps : {1e-2, 1e-4, 1e-8}) {
            const double e2 = eps * eps;
            double worst = 0.0;
            // Bulk of (eps^2, 1 + 2 eps^2) and the window just below 1 + 2 eps^2 where the factor peaks.
            for (int i = 1; i < 200; ++i) {
                double a = e2 + (1.0 + e2) * i / 200.0;
                worst = std::max(worst, tail_factor(a, eps, th));
            }
            for (int i = 0; i < 200; ++i) {
                double a = 1.0 + 2.0 * e2 - 3.0 * e2 * std::pow(10.0, -6.0 * i / 199.0);
                if (!(a < 1.0 + 2.0 * e2)) continue;
                worst = std::max(worst, tail_factor(a, eps, th));
            }
            INFO("theta = " << th << ", eps = " << eps);
            CHECK(worst > 0.0);
            CHECK(worst * std::log(1.0 / eps) <= 1.0);
        }
}

TEST_CASE("series bound for h = 2 has exponent decreasing toward one") {
    MultiplierConfig c = MultiplierConfig::with_defaults(2, 3.0);
    double prev = INFINITY;
    for (int k = 4; k <= 12; ++k) {
        BoundReport r = upper_bound_series(2, std::pow(10.0, -k), c);
        INFO("eps = 1e-" << k);
        CHECK(r.tail_value == 0.0);
        CHECK(r.fitted_exponent > 1.0);
        CHECK(r.fitted_exponent <= prev);
        prev = r.fitted_exponent;
    }
    BoundReport far = upper_bound_series(2, 1e-100, c);
    CHECK(far.fitted_exponent < prev);
}

TEST_CASE("series with f = 0 collapses to the diagonal") {
    for (int h : {2, 3, 4}) {
        MultiplierConfig c = MultiplierConfig::with_defaults(h, 3.0);
        const double eps = 1e-8;
        BoundReport r = upper_bound_series_with_f(h, eps, c, 0.0);
        const double a = 4.0 / std::log(r.lambda);
        std::vector<double> terms;
        for (int m = 0; m < static_cast<int>(std::ceil(r.cutoff.k)); ++m) {
            double n = pair_sequence_count_real(h, m);
            if (n > 0.0) terms.push_back(std::log(n) + c_coeff_log(m, m) + m * std::log(a));
        }
        const double top = *std::max_element(terms.begin(), terms.end());
        double sum = 0.0;
        for (double t : terms) sum += std::exp(t - top);
        double lead = 2.0 * r.lambda + std::log(std::log(1.0 / eps));
        INFO("h = " << h);
        CHECK_THAT(r.log_head, WithinRel(lead + top + std::log(sum), 1e-12));
    }
}

TEST_CASE("series bound rejects cutoff constants with D <= 1") {
    MultiplierConfig c = MultiplierConfig::with_defaults(2, 3.0);
    CHECK_THROWS_AS(upper_bound_series(3, 1e-6, c), ConfigError);
    c.c0 = 0.5;
    CHECK_THROWS_AS(upper_bound_series(2, 1e-6, c), ConfigError);
}
