#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "scir/cir_model.hpp"
#include "scir/errors.hpp"
#include "scir/rng.hpp"

using namespace scir;

namespace {
ModelSpec base_spec() {
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
} // namespace

TEST_CASE("deterministic limit path closed form") {
    ModelSpec s = base_spec();

    s.a1 = 1.0;
    s.a2 = 1.0;
    s.x0 = 1.0; // fixed point
    CHECK(y0_limit(s, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(y0_limit(s, 0.37) == doctest::Approx(1.0).epsilon(1e-14));

    s.a1 = 2.0;
    s.a2 = 0.0; // linear growth
    CHECK(y0_limit(s, 0.5) == doctest::Approx(2.0).epsilon(1e-14));

    s = base_spec();
    const double expected = std::exp(-0.5) + 2.0 * (1.0 - std::exp(-0.5));
    CHECK(y0_limit(s, 1.0) == doctest::Approx(expected).epsilon(1e-13));
    for (double t : {0.1, 0.33, 0.85})
        CHECK(y0_limit(s, t) ==
              doctest::Approx(oracles::rk4_drift(s, t)).epsilon(1e-10));
}

TEST_CASE("model validation") {
    ModelSpec s = base_spec();
    CHECK_NOTHROW(s.validate());

    s.q = 5.0; // 1/5 + 1/1.5 < 1: no positive strong solution
    CHECK_THROWS_AS(s.validate(), DomainError);

    s = base_spec();
    s.alpha = 2.2;
    CHECK_THROWS_AS(s.validate(), DomainError);

    s = base_spec();
    CHECK(s.condition_c11());
    s.x0 = s.a1 / s.a2; // stationary start degenerates the limit path
    CHECK_FALSE(s.condition_c11());
    s = base_spec();
    s.a1 = 0;
    s.a2 = 0;
    CHECK_FALSE(s.condition_c11());
    s = base_spec();
    s.x0 = 0;
    s.a1 = 0;
    CHECK_FALSE(s.condition_c11());
}

TEST_CASE("noise-free simulation reproduces the drift recursion") {
    ModelSpec s = base_spec();
    s.eps = 0.0;
    Rng rng(7);
    const ObservedPath path = simulate_path(s, 64, 4, rng);
    REQUIRE(path.values.size() == 65);
    CHECK(path.values[0] == s.x0);
    CHECK(path.clamp_count == 0);

    // Reference: Euler recursion on the same fine grid, subsampled.
    double y = s.x0;
    const double h = 1.0 / (64.0 * 4.0);
    std::size_t idx = 1;
    for (std::size_t step = 1; step <= 64 * 4; ++step) {
        y += (s.a1 - s.a2 * y) * h;
        if (step % 4 == 0) {
            CHECK(path.values[idx] == doctest::Approx(y).epsilon(1e-15));
            ++idx;
        }
    }

    s.a2 = 0.0; // exactly linear: y(t_k) = x0 + a1 k h on every grid
    Rng rng2(7);
    const ObservedPath lin = simulate_path(s, 50, 8, rng2);
    for (std::size_t k = 0; k <= 50; ++k)
        CHECK(lin.values[k] ==
              doctest::Approx(1.0 + 1.0 * static_cast<double>(k) / 50.0)
                  .epsilon(1e-12));
}

TEST_CASE("simulation is deterministic and nonnegative") {
    const ModelSpec s = base_spec();
    Rng r1(42), r2(42), r3(43);
    const ObservedPath a = simulate_path(s, 200, 8, r1);
    const ObservedPath b = simulate_path(s, 200, 8, r2);
    const ObservedPath c = simulate_path(s, 200, 8, r3);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    for (double v : a.values) CHECK(v >= 0.0);
}

TEST_CASE("small-noise paths track the deterministic limit") {
    const ModelSpec s = base_spec();
    double sup_y0 = 0;
    for (int i = 0; i <= 100; ++i)
        sup_y0 = std::max(sup_y0, y0_limit(s, i / 100.0));
    const double bound = 5.0 * s.eps * sup_y0;

    int ok_8 = 0, ok_16 = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        for (std::size_t sub : {8u, 16u}) {
            Rng rng(seed * 1000 + sub);
            const ObservedPath path = simulate_path(s, 500, sub, rng);
            double sup = 0;
            for (std::size_t k = 0; k <= 500; ++k)
                sup = std::max(sup, std::fabs(path.values[k] -
                                              y0_limit(s, k / 500.0)));
            if (sup < bound) ++(sub == 8 ? ok_8 : ok_16);
        }
    }
    CHECK(ok_8 >= 190);
    CHECK(ok_16 >= 190);
}

TEST_CASE("paths stay away from zero as the noise shrinks") {
    ModelSpec s = base_spec();
    double inf_y0 = 1e300;
    for (int i = 0; i <= 100; ++i)
        inf_y0 = std::min(inf_y0, y0_limit(s, i / 100.0));
    const double zeta = 0.5 * inf_y0;

    auto fraction_above = [&](double eps) {
        s.eps = eps;
        int good = 0;
        for (std::uint64_t seed = 1; seed <= 100; ++seed) {
            Rng rng(seed);
            const ObservedPath path = simulate_path(s, 300, 4, rng);
            const double lo =
                *std::min_element(path.values.begin(), path.values.end());
            if (lo >= zeta) ++good;
        }
        return good / 100.0;
    };

    const double f_big = fraction_above(0.1);
    const double f_mid = fraction_above(0.05);
    const double f_small = fraction_above(0.01);
    CHECK(f_small >= f_big);
    CHECK(f_small >= f_mid - 0.02);
    CHECK(f_small >= 0.97);
}
