#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "scir/asymptotics.hpp"
#include "scir/errors.hpp"
#include "scir/likelihood.hpp"

using namespace scir;

namespace {
ModelSpec spec_15() {
    ModelSpec s;
    s.a1 = 1.0;
    s.a2 = 0.5;
    s.a3 = 0.3;
    s.q = 1.5;
    s.alpha = 1.5;
    s.eps = 0.05;
    s.x0 = 1.0;
    return s;
}

ParamPoint truth(const ModelSpec& s) { return {s.a1, s.a2, s.a3}; }
} // namespace

TEST_CASE("residual construction: zeroing, injection, and a3 scaling") {
    const ModelSpec s = spec_15();
    const std::size_t n = 128;
    const ObservedPath noiseless = oracles::noiseless_path(s, n);

    const Residuals r0 = residuals(noiseless, truth(s), s.eps, s.alpha, s.q);
    REQUIRE(r0.y_vec.size() == n);
    for (double y : r0.y_vec) CHECK(y == doctest::Approx(0.0).epsilon(1e-10));

    // Injecting a constant increment of c local scales makes every
    // residual equal c.
    const std::vector<double> z(n, 0.75);
    const ObservedPath injected = oracles::constructed_path(s, n, z);
    const Residuals rc = residuals(injected, truth(s), s.eps, s.alpha, s.q);
    for (double y : rc.y_vec) CHECK(y == doctest::Approx(0.75).epsilon(1e-9));

    // Doubling a3 halves every residual.
    ParamPoint doubled = truth(s);
    doubled.a3 *= 2.0;
    const Residuals rh = residuals(injected, doubled, s.eps, s.alpha, s.q);
    for (std::size_t k = 0; k < n; ++k)
        CHECK(rh.y_vec[k] ==
              doctest::Approx(rc.y_vec[k] / 2.0).epsilon(1e-13));

    // Affinity in a1: shifting a1 by delta moves every residual by
    // -delta / (n a3 eps n^{-1/alpha} y^{1/q}).
    ParamPoint shifted = truth(s);
    shifted.a1 += 0.2;
    const Residuals rs = residuals(injected, shifted, s.eps, s.alpha, s.q);
    const double base = s.eps * std::pow(static_cast<double>(n), -1.0 / s.alpha);
    for (std::size_t k = 0; k < n; ++k) {
        const double scale = s.a3 * base * rc.ypow[k];
        CHECK(rs.y_vec[k] - rc.y_vec[k] ==
              doctest::Approx(-0.2 / (scale * static_cast<double>(n)))
                  .epsilon(1e-10));
    }
}

TEST_CASE("residuals refuse nonpositive observations") {
    const ModelSpec s = spec_15();
    ObservedPath bad = oracles::noiseless_path(s, 16);
    bad.values[7] = 0.0;
    CHECK_THROWS_AS(residuals(bad, truth(s), s.eps, s.alpha, s.q),
                    DegeneratePathError);
}

TEST_CASE("objective value: single term and a3 scaling identity") {
    const ModelSpec s = spec_15();
    const StableLaw& law = oracles::shared_law(1.5);

    // n = 1 with the residual forced to r.
    const double r = 1.3;
    const ObservedPath one = oracles::constructed_path(s, 1, {r});
    const double u1 = objective_u(one, truth(s), s.eps, s.alpha, s.q, law);
    CHECK(u1 == doctest::Approx(law.log_p(r) - std::log(s.a3)).epsilon(1e-12));

    // U(a1, a2, c a3) = sum log p(Y_k / c) - n log(c a3).
    const std::size_t n = 64;
    std::vector<double> z(n);
    Rng zr(5);
    for (auto& v : z) v = sample_z(1.5, zr);
    const ObservedPath path = oracles::constructed_path(s, n, z);
    const double c = 1.7;
    ParamPoint scaled = truth(s);
    scaled.a3 *= c;
    const double lhs = objective_u(path, scaled, s.eps, s.alpha, s.q, law);
    const Residuals rr = residuals(path, truth(s), s.eps, s.alpha, s.q);
    double rhs = -static_cast<double>(n) * std::log(c * s.a3);
    for (double y : rr.y_vec) rhs += law.log_p(y / c);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("per-observation objective approaches the limit criterion") {
    ModelSpec s = spec_15();
    const std::size_t n = 2000;
    s.eps = 0.02;
    const StableLaw& law = oracles::shared_law(1.5);
    Rng rng(99);
    const ObservedPath path = simulate_path(s, n, 8, rng);
    const double u =
        objective_u(path, truth(s), s.eps, s.alpha, s.q, law) /
        static_cast<double>(n);
    const double m0 = rate_m(n, s.eps, s.alpha);
    const double u_inf = limit_criterion(truth(s), s, law, m0);
    CHECK(u == doctest::Approx(u_inf).epsilon(0.05));
}

TEST_CASE("analytic gradient matches finite differences") {
    const ModelSpec s = spec_15();
    const StableLaw& law = oracles::shared_law(1.5);
    Rng rng(17);
    const ObservedPath path = simulate_path(s, 500, 8, rng);
    const ObjectiveContext ctx(path, s.eps, s.alpha, s.q, law);

    std::mt19937_64 pick(31);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const ParamPoint theta{0.5 + u01(pick), -0.5 + u01(pick),
                               0.2 + 0.3 * u01(pick)};
        const Vec3 g = ctx.gradient(theta);
        const Vec3 fd = oracles::fd_gradient(
            [&](const ParamPoint& p) { return ctx.value(p); }, theta, 1e-6);
        for (int i = 0; i < 3; ++i) {
            const auto k = static_cast<std::size_t>(i);
            CHECK(g[k] == doctest::Approx(fd[k]).epsilon(1e-4));
        }
    }
}

TEST_CASE("gradient at a residual-free configuration") {
    const ModelSpec s = spec_15();
    const StableLaw& law = oracles::shared_law(1.5);
    const std::size_t n = 100;
    const ObservedPath path = oracles::noiseless_path(s, n);
    const ObjectiveContext ctx(path, s.eps, s.alpha, s.q, law);

    const Vec3 g = ctx.gradient(truth(s));
    // All residuals are 0, so the a3 partial collapses to -n/a3 and the
    // drift partials carry a common factor H0(0).
    CHECK(g[2] ==
          doctest::Approx(-static_cast<double>(n) / s.a3).epsilon(1e-9));
    const double h0 = law.dlog_p(0.0);
    const Residuals r = residuals(path, truth(s), s.eps, s.alpha, s.q);
    const double base = s.eps * std::pow(static_cast<double>(n), -1.0 / s.alpha);
    double g1 = 0, g2 = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double cfac =
            1.0 / (static_cast<double>(n) * s.a3 * base * r.ypow[k]);
        g1 -= h0 * cfac;
        g2 += h0 * cfac * r.yprev[k];
    }
    CHECK(g[0] == doctest::Approx(g1).epsilon(1e-10));
    CHECK(g[1] == doctest::Approx(g2).epsilon(1e-10));
}

TEST_CASE("scaled second derivatives: symmetry and finite differences") {
    const ModelSpec s = spec_15();
    const StableLaw& law = oracles::shared_law(1.5);
    Rng rng(23);
    const std::size_t n = 500;
    const ObservedPath path = simulate_path(s, n, 8, rng);
    const ObjectiveContext ctx(path, s.eps, s.alpha, s.q, law);

    const ParamPoint theta{1.1, 0.4, 0.33};
    const Mat3 v = ctx.scaled_hessian(theta);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(v[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ==
                  v[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);

    const Mat3 fd = oracles::fd_hessian(
        [&](const ParamPoint& p) { return ctx.value(p); }, theta, 5e-4);
    const double vr = rate_v(n, s.eps, s.alpha);
    const double sn = std::sqrt(static_cast<double>(n));
    const Mat3 scale{{{vr * vr, vr * vr, vr * sn},
                      {vr * vr, vr * vr, vr * sn},
                      {vr * sn, vr * sn, static_cast<double>(n)}}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const auto a = static_cast<std::size_t>(i);
            const auto b = static_cast<std::size_t>(j);
            CHECK(v[a][b] ==
                  doctest::Approx(fd[a][b] / scale[a][b]).epsilon(1e-3));
        }
}

TEST_CASE("scaled hessian near the truth approaches the limit matrix") {
    ModelSpec s = spec_15();
    const std::size_t n = 2000;
    s.eps = 0.01;
    const StableLaw& law = oracles::shared_law(1.5);
    Rng rng(3);
    const ObservedPath path = simulate_path(s, n, 8, rng);
    const Mat3 v = scaled_hessian(path, truth(s), s.eps, s.alpha, s.q, law);
    const double m0 = rate_m(n, s.eps, s.alpha);
    const Mat3 target = limit_hessian(truth(s), s, law, m0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const auto a = static_cast<std::size_t>(i);
            const auto b = static_cast<std::size_t>(j);
            CHECK(v[a][b] == doctest::Approx(target[a][b]).epsilon(0.10));
        }
}
