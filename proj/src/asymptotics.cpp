#include "scir/asymptotics.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "scir/errors.hpp"

namespace scir {

namespace {

// 64-point Gauss-Legendre nodes/weights mapped to [0,1].
struct TGrid {
    std::array<double, 64> t;
    std::array<double, 64> w;
};

const TGrid& t_grid() {
    static const TGrid grid = [] {
        TGrid g{};
        using rule = boost::math::quadrature::gauss<double, 64>;
        const auto& xs = rule::abscissa(); // positive half
        const auto& ws = rule::weights();
        for (std::size_t i = 0; i < 32; ++i) {
            g.t[2 * i] = 0.5 * (1.0 - xs[i]);
            g.t[2 * i + 1] = 0.5 * (1.0 + xs[i]);
            g.w[2 * i] = 0.5 * ws[i];
            g.w[2 * i + 1] = 0.5 * ws[i];
        }
        return g;
    }();
    return grid;
}

// Drift mismatch Y(a,t); Y0(a,t,x) = m0 Y(a,t) + (a3_bar/a3) x.
double drift_mismatch(const ParamPoint& a, const ModelSpec& tp, double y0,
                      double q) {
    return ((tp.a1 - a.a1) * std::pow(y0, -1.0 / q) +
            (a.a2 - tp.a2) * std::pow(y0, 1.0 - 1.0 / q)) /
           a.a3;
}

} // namespace

double moments_m(const ModelSpec& true_params, int i, int j) {
    if (i < 0 || j < 0) throw DomainError("moment indices must be nonnegative");
    const double e = static_cast<double>(i) -
                     static_cast<double>(j) / true_params.q;
    if (!true_params.condition_c11() && e < 0.0)
        throw ConditionError(
            "nondegeneracy condition fails and the moment exponent is "
            "negative");
    auto f = [&](double t) { return std::pow(y0_limit(true_params, t), e); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, 0.0, 1.0, 12, 1e-12);
}

VIntegrals v_integrals(const StableLaw& law) {
    const double x_lo = law.grid_lo();
    const double x_hi = law.grid_hi();

    auto weighted = [&](int pow_x) {
        auto f = [&](double x) {
            const double h0 = law.dlog_p(x);
            double w = 1.0;
            for (int i = 0; i < pow_x; ++i) w *= x;
            return w * h0 * h0;
        };
        const double total = law.expectation(f);

        // Tail contributions for the truncation-error gate; beyond the
        // switch points pdf/dlog_p already follow the analytic forms.
        boost::math::quadrature::tanh_sinh<double> ts;
        const double right = ts.integrate(
            [&](double t) {
                const double x = x_hi / t;
                const double p = law.pdf(x);
                if (!(p > 0)) return 0.0;
                return f(x) * p * x_hi / (t * t);
            },
            0.0, 1.0, 1e-9);
        boost::math::quadrature::exp_sinh<double> es;
        const double left = es.integrate(
            [&](double v) {
                const double x = x_lo - v;
                const double lp = law.log_p(x);
                return lp < -700.0 ? 0.0 : f(x) * std::exp(lp);
            },
            1e-9);

        const double err = law.right_tail_rel_error(x_hi) * std::fabs(right) +
                           1e-2 * std::fabs(left);
        if (err > 1e-4 * std::fabs(total))
            throw AccuracyError(
                "tail truncation error too large for the v-integrals; "
                "enlarge the density window");
        return total;
    };

    VIntegrals v;
    v.v1 = weighted(0);
    v.v2 = weighted(1);
    v.v3 = weighted(2) - 1.0;
    return v;
}

SigmaReport sigma_matrix(const ModelSpec& true_params, const StableLaw& law) {
    SigmaReport rep;
    rep.condition_ok = true_params.condition_c11();
    rep.v = v_integrals(law);
    if (!rep.condition_ok) return rep;

    for (auto [i, j] : {std::pair{0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}})
        rep.m[{i, j}] = moments_m(true_params, i, j);

    const double v1 = rep.v.v1, v2 = rep.v.v2, v3 = rep.v.v3;
    const double m01 = rep.m[{0, 1}], m02 = rep.m[{0, 2}];
    const double m11 = rep.m[{1, 1}], m12 = rep.m[{1, 2}];
    const double m22 = rep.m[{2, 2}];
    rep.sigma = {{{v1 * m02, -v1 * m12, v2 * m01},
                  {-v1 * m12, v1 * m22, -v2 * m11},
                  {v2 * m01, -v2 * m11, v3}}};

    Eigen::Matrix3d S;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            S(i, j) = rep.sigma[static_cast<std::size_t>(i)]
                                [static_cast<std::size_t>(j)];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(S);
    rep.min_eigenvalue = eig.eigenvalues().minCoeff();
    Eigen::LLT<Eigen::Matrix3d> llt(S);
    if (llt.info() != Eigen::Success)
        throw AccuracyError(
            "Sigma failed Cholesky although the nondegeneracy condition "
            "holds");
    const Eigen::Matrix3d inv =
        llt.solve(Eigen::Matrix3d::Identity()) * true_params.a3 *
        true_params.a3;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            rep.limit_cov[static_cast<std::size_t>(i)]
                         [static_cast<std::size_t>(j)] = inv(i, j);
    return rep;
}

double limit_criterion(const ParamPoint& a, const ModelSpec& true_params,
                       const StableLaw& law, double m0) {
    if (!true_params.condition_c11())
        throw ConditionError("nondegeneracy condition fails");
    if (!(a.a3 > 0)) throw DomainError("a3 must be positive");
    const TGrid& g = t_grid();
    const double ratio = true_params.a3 / a.a3;
    double acc = 0;
    for (std::size_t i = 0; i < 64; ++i) {
        const double y0 = y0_limit(true_params, g.t[i]);
        const double shift = m0 * drift_mismatch(a, true_params, y0,
                                                 true_params.q);
        acc += g.w[i] * law.expectation([&](double x) {
            return law.log_p(shift + ratio * x);
        });
    }
    return acc - std::log(a.a3);
}

Mat3 limit_hessian(const ParamPoint& a, const ModelSpec& true_params,
                   const StableLaw& law, double m0) {
    if (!true_params.condition_c11())
        throw ConditionError("nondegeneracy condition fails");
    if (!(a.a3 > 0)) throw DomainError("a3 must be positive");
    const TGrid& g = t_grid();
    const double q = true_params.q;
    const double ratio = true_params.a3 / a.a3;
    const double inv_a32 = 1.0 / (a.a3 * a.a3);

    Mat3 out{};
    for (std::size_t i = 0; i < 64; ++i) {
        const double y0 = y0_limit(true_params, g.t[i]);
        const double shift =
            m0 * drift_mismatch(a, true_params, y0, q);
        const double b1 = law.expectation(
            [&](double x) { return law.scores(shift + ratio * x).h1; });
        const double b2 = law.expectation(
            [&](double x) { return law.scores(shift + ratio * x).h2; });
        const double b3 = law.expectation(
            [&](double x) { return law.scores(shift + ratio * x).h3; });
        const double w = g.w[i];
        // 2x2 drift block: (-1)^{i+j} y0^{i+j-2-2/q} <H1>
        out[0][0] += w * std::pow(y0, -2.0 / q) * b1;
        out[0][1] -= w * std::pow(y0, 1.0 - 2.0 / q) * b1;
        out[1][1] += w * std::pow(y0, 2.0 - 2.0 / q) * b1;
        // cross terms: (-1)^{i+3} y0^{i-1-1/q} <H2>
        out[0][2] += w * std::pow(y0, -1.0 / q) * b2;
        out[1][2] -= w * std::pow(y0, 1.0 - 1.0 / q) * b2;
        out[2][2] += w * b3;
    }
    for (auto& row : out)
        for (auto& e : row) e *= inv_a32;
    out[1][0] = out[0][1];
    out[2][0] = out[0][2];
    out[2][1] = out[1][2];
    return out;
}

} // namespace scir
