#include "scir/stable_law.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include <fftw3.h>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "scir/errors.hpp"

namespace scir {

namespace {

constexpr double kPi = std::numbers::pi;

// Levy-measure constant: psi(lambda) = c_alpha * lambda^alpha.
double c_alpha(double alpha) {
    return std::tgamma(2.0 - alpha) / (alpha * (alpha - 1.0));
}

void check_alpha(double alpha) {
    if (!(alpha > 1.0 && alpha < 2.0))
        throw DomainError("alpha must lie in (1,2)");
}

// The law with exponent psi(lambda) = c_alpha lambda^alpha is the unit-
// exponent law stretched by c_alpha^{1/alpha}; the left-tail rate
// xi = (alpha-1)(s/alpha)^{alpha/(alpha-1)} applies after that rescaling.
double left_arg_scale(double alpha) {
    return std::pow(c_alpha(alpha), 1.0 / alpha);
}

double xi_of(double alpha, double s) {
    return (alpha - 1.0) * std::pow(s / (alpha * left_arg_scale(alpha)),
                                    alpha / (alpha - 1.0));
}

// Cubic Hermite on [x_i, x_i + h] with values f and derivatives d.
inline double hermite(double t, double h, double f0, double f1, double d0,
                      double d1) {
    const double t2 = t * t, t3 = t2 * t;
    return f0 * (2 * t3 - 3 * t2 + 1) + f1 * (3 * t2 - 2 * t3) +
           h * (d0 * (t3 - 2 * t2 + t) + d1 * (t3 - t2));
}

// Cubic Lagrange through four consecutive nodes; s in [1,2] lands
// between the middle two.
inline double lagrange4(double s, double f0, double f1, double f2, double f3) {
    return f0 * (s - 1) * (s - 2) * (s - 3) / (-6.0) +
           f1 * s * (s - 2) * (s - 3) / 2.0 +
           f2 * s * (s - 1) * (s - 3) / (-2.0) +
           f3 * s * (s - 1) * (s - 2) / 6.0;
}

struct Fit3 {
    double b0, b1, b2;
};

// Least squares of r ~ b0 + b1*u + b2*u^2.
Fit3 fit_quadratic(const std::vector<double>& u, const std::vector<double>& r) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, t0 = 0, t1 = 0, t2 = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double x = u[i], x2 = x * x;
        s0 += 1;
        s1 += x;
        s2 += x2;
        s3 += x2 * x;
        s4 += x2 * x2;
        t0 += r[i];
        t1 += r[i] * x;
        t2 += r[i] * x2;
    }
    double m[3][4] = {{s0, s1, s2, t0}, {s1, s2, s3, t1}, {s2, s3, s4, t2}};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int row = col + 1; row < 3; ++row)
            if (std::fabs(m[row][col]) > std::fabs(m[piv][col])) piv = row;
        std::swap(m[piv], m[col]);
        if (std::fabs(m[col][col]) < 1e-300)
            throw AccuracyError("degenerate tail fit system");
        for (int row = 0; row < 3; ++row) {
            if (row == col) continue;
            const double f = m[row][col] / m[col][col];
            for (int k = col; k < 4; ++k) m[row][k] -= f * m[col][k];
        }
    }
    return {m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]};
}

} // namespace

double laplace_exponent(double alpha, double lambda) {
    check_alpha(alpha);
    if (!(lambda >= 0.0)) throw DomainError("lambda must be nonnegative");
    if (lambda == 0.0) return 0.0;
    return std::pow(lambda, alpha) * c_alpha(alpha);
}

double stable_scale(double alpha) {
    check_alpha(alpha);
    return std::pow(c_alpha(alpha) * std::fabs(std::cos(kPi * alpha / 2.0)),
                    1.0 / alpha);
}

double sample_z(double alpha, Rng& rng) {
    check_alpha(alpha);
    const double ta = std::tan(kPi * alpha / 2.0);
    const double b = std::atan(ta) / alpha;
    const double s = std::pow(1.0 + ta * ta, 1.0 / (2.0 * alpha));
    const double v = kPi * (rng.uniform() - 0.5);
    const double w = rng.exponential();
    const double x = s * std::sin(alpha * (v + b)) /
                     std::pow(std::cos(v), 1.0 / alpha) *
                     std::pow(std::cos(v - alpha * (v + b)) / w,
                              (1.0 - alpha) / alpha);
    return stable_scale(alpha) * x;
}

double stable_pdf_direct(double alpha, double x) {
    check_alpha(alpha);
    const double c = c_alpha(alpha);
    const double a = c * std::cos(kPi * alpha / 2.0); // < 0
    const double b = c * std::sin(kPi * alpha / 2.0);
    const double u_max = std::pow(45.0 / std::fabs(a), 1.0 / alpha);
    auto f = [&](double u) {
        const double ua = std::pow(u, alpha);
        return std::exp(a * ua) * std::cos(b * ua + u * x);
    };
    const double val = boost::math::quadrature::gauss_kronrod<double, 61>::
        integrate(f, 0.0, u_max, 14, 1e-12);
    return val / kPi;
}

double stable_dpdf_direct(double alpha, double x) {
    check_alpha(alpha);
    const double c = c_alpha(alpha);
    const double a = c * std::cos(kPi * alpha / 2.0);
    const double b = c * std::sin(kPi * alpha / 2.0);
    const double u_max = std::pow(45.0 / std::fabs(a), 1.0 / alpha);
    auto f = [&](double u) {
        const double ua = std::pow(u, alpha);
        return -u * std::exp(a * ua) * std::sin(b * ua + u * x);
    };
    const double val = boost::math::quadrature::gauss_kronrod<double, 61>::
        integrate(f, 0.0, u_max, 14, 1e-12);
    return val / kPi;
}

std::pair<double, double> default_window(double alpha) {
    // Left edge where xi ~ 650 (log-density about -650), capped at -45.
    double s = alpha * left_arg_scale(alpha) *
               std::pow(650.0 / (alpha - 1.0), (alpha - 1.0) / alpha);
    s = std::min(s, 45.0);
    s = std::max(s, 2.5);
    return {-s, 400.0};
}

StableLaw build_density(double alpha, double x_lo, double x_hi,
                        std::size_t n_nodes) {
    return StableLaw::build(alpha, x_lo, x_hi, n_nodes);
}

StableLaw StableLaw::build(double alpha, double x_lo, double x_hi,
                           std::size_t n_nodes) {
    check_alpha(alpha);
    if (!(x_lo < 0.0 && x_hi > 0.0 && x_hi > x_lo))
        throw DomainError("window must straddle 0");
    if (n_nodes < (1u << 12)) throw DomainError("need at least 2^12 nodes");

    StableLaw law;
    law.alpha_ = alpha;
    law.scale_ = stable_scale(alpha);
    law.x_lo_ = x_lo;
    law.x_hi_ = x_hi;
    law.dx_ = (x_hi - x_lo) / static_cast<double>(n_nodes - 1);

    const double c = c_alpha(alpha);
    const double amp = c * std::cos(kPi * alpha / 2.0); // negative
    const double osc = c * std::sin(kPi * alpha / 2.0);

    // Periodic cell long enough that the wrapped right tail stays below
    // the normalization budget: width * L^-(alpha+1) < 2e-7.
    const double width = x_hi - x_lo;
    const double l_req =
        std::max(4.0 * width, std::pow(width / 2e-7, 1.0 / (1.0 + alpha)));
    std::size_t n_fft = 1;
    while (n_fft < 2 * n_nodes ||
           static_cast<double>(n_fft) * law.dx_ < l_req)
        n_fft <<= 1;
    n_fft = std::min<std::size_t>(n_fft, 1u << 23);
    const double cell = static_cast<double>(n_fft) * law.dx_;
    const double du = 2.0 * kPi / cell;

    std::vector<std::complex<double>> in(n_fft), out(n_fft);
    fftw_plan plan = fftw_plan_dft_1d(
        static_cast<int>(n_fft), reinterpret_cast<fftw_complex*>(in.data()),
        reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
        FFTW_ESTIMATE);

    for (std::size_t j = 0; j < n_fft; ++j) {
        const double u = (j <= n_fft / 2
                              ? static_cast<double>(j)
                              : static_cast<double>(j) -
                                    static_cast<double>(n_fft)) *
                         du;
        const double ua = std::pow(std::fabs(u), alpha);
        const double sgn = (u >= 0 ? 1.0 : -1.0);
        // phi(u) * exp(-i u x_lo)
        const std::complex<double> val =
            std::exp(std::complex<double>(amp * ua,
                                          -sgn * osc * ua - u * x_lo));
        in[j] = val;
    }

    auto run_and_take = [&](std::vector<double>& dst) {
        fftw_execute(plan);
        dst.resize(n_nodes);
        for (std::size_t k = 0; k < n_nodes; ++k)
            dst[k] = out[k].real() / cell;
    };

    run_and_take(law.p_);
    for (std::size_t j = 0; j < n_fft; ++j) {
        const double u = (j <= n_fft / 2
                              ? static_cast<double>(j)
                              : static_cast<double>(j) -
                                    static_cast<double>(n_fft)) *
                         du;
        in[j] *= std::complex<double>(0.0, -u);
    }
    run_and_take(law.dp_);
    for (std::size_t j = 0; j < n_fft; ++j) {
        const double u = (j <= n_fft / 2
                              ? static_cast<double>(j)
                              : static_cast<double>(j) -
                                    static_cast<double>(n_fft)) *
                         du;
        in[j] *= std::complex<double>(0.0, -u);
    }
    run_and_take(law.ddp_);
    fftw_destroy_plan(plan);
    in.clear();
    in.shrink_to_fit();
    out.clear();
    out.shrink_to_fit();

    // Right tail: exact asymptotic series p(x) = sum_k coef_k x^{-alpha k-1}
    // derived by rotating the inversion contour (leading constant is 1
    // in this normalization).
    law.right_coefs_.resize(8);
    double kfact = 1.0;
    for (int k = 1; k <= 8; ++k) {
        kfact *= k;
        // When alpha*k hits an integer the sine factor is exactly zero, but
        // round-off leaves a residue ~1e-13 that would otherwise poison the
        // term-decrease truncation check; snap it to zero.
        double s = std::sin(kPi * alpha * k);
        if (std::fabs(s) < 1e-9) s = 0.0;
        law.right_coefs_[static_cast<std::size_t>(k - 1)] =
            -s * std::pow(c, k) * std::tgamma(alpha * k + 1.0) /
            (kPi * kfact);
    }

    // Handoff point: first node from which the grid and the series agree
    // to 1e-4 relative and keep agreeing.
    std::ptrdiff_t i_right = -1;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(n_nodes);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double x = law.node_x(static_cast<std::size_t>(i));
        if (x < 2.0) continue;
        if (i >= n - 20) break;
        const double ps = law.series_pdf(x);
        if (!(ps > 0) || std::fabs(law.p_[static_cast<std::size_t>(i)] / ps -
                                   1.0) >= 1e-4)
            continue;
        // The truncated series must also be accurate enough that the mass
        // it mislays beyond the handoff stays below 1e-7.
        if (law.right_tail_rel_error(x) * x * ps >= 1e-7) continue;
        bool ok = true;
        for (std::ptrdiff_t j = i + 1; j <= i + 16 && j < n; ++j) {
            const double xx = law.node_x(static_cast<std::size_t>(j));
            const double pj = law.p_[static_cast<std::size_t>(j)];
            if (pj < 1e-9) break;
            if (std::fabs(pj / law.series_pdf(xx) - 1.0) >= 3e-4) {
                ok = false;
                break;
            }
        }
        if (ok) {
            i_right = i;
            break;
        }
    }
    if (i_right < 1 || i_right >= n - 2)
        throw AccuracyError("no right-tail handoff point inside window");
    law.switch_right_ = law.node_x(static_cast<std::size_t>(i_right));

    // Left tail: fit log p(-s) = log c' + kappa log xi - xi
    //            + log1p(c1/xi + c2/xi^2) on the band p in [1e-6, 1e-3].
    const double kappa = (2.0 - alpha) / (2.0 * alpha);
    auto collect = [&](double plo, double phi_, std::vector<double>& us,
                       std::vector<double>& rs, std::ptrdiff_t& deepest) {
        us.clear();
        rs.clear();
        deepest = -1;
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const double x = law.node_x(static_cast<std::size_t>(i));
            if (x >= -0.5) break;
            const double pv = law.p_[static_cast<std::size_t>(i)];
            if (pv < plo || pv > phi_) continue;
            const double xi = xi_of(alpha, -x);
            us.push_back(1.0 / xi);
            rs.push_back(std::log(pv) - kappa * std::log(xi) + xi);
            if (deepest < 0) deepest = i;
        }
    };
    std::vector<double> us, rs;
    std::ptrdiff_t i_left = -1;
    collect(1e-6, 1e-3, us, rs, i_left);
    if (us.size() < 8) collect(1e-8, 1e-2, us, rs, i_left);
    if (us.size() < 4 || i_left < 1)
        throw AccuracyError("no left-tail handoff band inside window");
    const Fit3 fit = fit_quadratic(us, rs);
    law.tails_.left_log_c = fit.b0;
    law.tails_.left_corr1 = fit.b1;
    law.tails_.left_corr2 = fit.b2 + 0.5 * fit.b1 * fit.b1;
    for (std::size_t i = 0; i < us.size(); ++i) {
        const double model = fit.b0 + fit.b1 * us[i] + fit.b2 * us[i] * us[i];
        if (std::fabs(rs[i] - model) > 1e-2)
            throw AccuracyError("left-tail asymptotic form mismatch");
    }
    // Hand off below the fit band, where the raw inversion values (absolute
    // error ~1e-10) stop being reliable in relative terms; the fitted form
    // extrapolates from the band into the deep tail.
    std::ptrdiff_t i_switch = i_left;
    while (i_switch > 1 &&
           law.p_[static_cast<std::size_t>(i_switch - 1)] >= 3e-8 &&
           std::fabs(law.left_logp(law.node_x(
               static_cast<std::size_t>(i_switch - 1))) -
                     std::log(law.p_[static_cast<std::size_t>(i_switch - 1)]))
               < 5e-2)
        --i_switch;
    i_left = i_switch;
    law.switch_left_ = law.node_x(static_cast<std::size_t>(i_left));

    // Replace the raw inversion values beyond the handoff points with the
    // analytic forms: smooth, strictly positive, free of leakage noise.
    law.logp_.resize(n_nodes);
    law.h0_.resize(n_nodes);
    law.h1_.resize(n_nodes);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double x = law.node_x(ui);
        if (i < i_left) {
            const double lp = law.left_logp(x);
            const double h0 = law.left_h0(x);
            const double h1 = law.left_h1(x);
            law.logp_[ui] = lp;
            law.p_[ui] = std::max(std::exp(lp), 1e-300);
            law.dp_[ui] = law.p_[ui] * h0;
            law.ddp_[ui] = law.p_[ui] * (h1 + h0 * h0);
            law.h0_[ui] = h0;
            law.h1_[ui] = h1;
        } else if (i > i_right) {
            law.p_[ui] = law.series_pdf(x);
            law.dp_[ui] = law.series_dpdf(x);
            law.ddp_[ui] = law.series_d2pdf(x);
            law.logp_[ui] = std::log(law.p_[ui]);
            law.h0_[ui] = law.dp_[ui] / law.p_[ui];
            law.h1_[ui] = (law.ddp_[ui] * law.p_[ui] - law.dp_[ui] * law.dp_[ui]) /
                          (law.p_[ui] * law.p_[ui]);
        } else {
            if (!(law.p_[ui] > 0))
                throw AccuracyError("nonpositive density inside core window");
            law.logp_[ui] = std::log(law.p_[ui]);
            law.h0_[ui] = law.dp_[ui] / law.p_[ui];
            law.h1_[ui] = (law.ddp_[ui] * law.p_[ui] - law.dp_[ui] * law.dp_[ui]) /
                          (law.p_[ui] * law.p_[ui]);
        }
    }

    // Effective right-tail constant for reporting and quick tail checks.
    {
        double acc = 0;
        int cnt = 0;
        for (std::ptrdiff_t i = i_right; i < n; ++i) {
            const double x = law.node_x(static_cast<std::size_t>(i));
            if (x > 2.0 * law.switch_right_) break;
            acc += law.p_[static_cast<std::size_t>(i)] *
                   std::pow(x, alpha + 1.0);
            ++cnt;
        }
        law.tails_.c0 = acc / std::max(cnt, 1);
    }

    law.cum_.resize(n_nodes);
    law.cum_[0] = 0.0;
    for (std::size_t i = 1; i < n_nodes; ++i)
        law.cum_[i] =
            law.cum_[i - 1] + 0.5 * (law.p_[i - 1] + law.p_[i]) * law.dx_;

    law.left_mass_total_ = law.left_tail_mass(x_lo);
    law.total_mass_ =
        law.left_mass_total_ + law.cum_.back() + law.right_tail_mass(x_hi);
    if (std::fabs(law.total_mass_ - 1.0) > 1e-6)
        throw AccuracyError("window normalization failed: mass = " +
                            std::to_string(law.total_mass_));

    // Off-grid probes against the slow one-point inversion.
    for (double base : {-1.1, 0.33, 1.7, 4.2}) {
        const double x = base + 0.37 * law.dx_;
        if (x <= law.switch_left_ + 1.0 || x >= law.switch_right_ - 1.0)
            continue;
        const double direct = stable_pdf_direct(alpha, x);
        if (std::fabs(law.pdf(x) - direct) > 1e-6)
            throw AccuracyError("probe-point inversion disagreement");
    }

    return law;
}

void StableLaw::series_sums(double x, double& s0, double& s1,
                            double& s2) const {
    const double r = std::pow(x, -alpha_);
    s0 = s1 = s2 = 0;
    double rk = 1.0; // r^{k-1}
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= right_coefs_.size(); ++k, rk *= r) {
        const double coef = right_coefs_[k - 1];
        if (std::fabs(coef) < 1e-14) continue;
        const double t = coef * rk;
        if (std::fabs(t) >= prev) break;
        const double e = alpha_ * static_cast<double>(k) + 1.0;
        s0 += t;
        s1 -= t * e;
        s2 += t * e * (e + 1.0);
        prev = std::fabs(t);
    }
}

double StableLaw::series_pdf(double x) const {
    double s0, s1, s2;
    series_sums(x, s0, s1, s2);
    return s0 * std::pow(x, -alpha_ - 1.0);
}

double StableLaw::series_dpdf(double x) const {
    double s0, s1, s2;
    series_sums(x, s0, s1, s2);
    return s1 * std::pow(x, -alpha_ - 2.0);
}

double StableLaw::series_d2pdf(double x) const {
    double s0, s1, s2;
    series_sums(x, s0, s1, s2);
    return s2 * std::pow(x, -alpha_ - 3.0);
}

double StableLaw::left_depth_cap() const {
    const double sl = left_arg_scale(alpha_);
    return alpha_ * sl *
           std::pow(1e280 / (alpha_ - 1.0), (alpha_ - 1.0) / alpha_);
}

double StableLaw::right_tail_mass(double x) const {
    double sum = 0, prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= right_coefs_.size(); ++k) {
        const double coef = right_coefs_[k - 1];
        if (std::fabs(coef) < 1e-14) continue;
        const double e = alpha_ * static_cast<double>(k);
        const double t = coef * std::pow(x, -e) / e;
        if (std::fabs(t) >= prev) break;
        sum += t;
        prev = std::fabs(t);
    }
    return sum;
}

double StableLaw::right_tail_rel_error(double x) const {
    double sum = 0, last = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= right_coefs_.size(); ++k) {
        const double coef = right_coefs_[k - 1];
        if (std::fabs(coef) < 1e-14) continue;
        const double t =
            coef * std::pow(x, -alpha_ * static_cast<double>(k) - 1.0);
        if (std::fabs(t) >= last) break;
        sum += t;
        last = std::fabs(t);
    }
    return sum > 0 ? last / sum : 1.0;
}

double StableLaw::left_logp(double x) const {
    const double s = std::min(-x, left_depth_cap());
    const double kappa = (2.0 - alpha_) / (2.0 * alpha_);
    const double xi = xi_of(alpha_, s);
    const double w = tails_.left_corr1 / xi + tails_.left_corr2 / (xi * xi);
    const double corr = (1.0 + w > 0.1) ? std::log1p(w) : 0.0;
    return tails_.left_log_c + kappa * std::log(xi) - xi + corr;
}

double StableLaw::left_h0(double x) const {
    const double s = std::min(-x, left_depth_cap());
    const double sl = left_arg_scale(alpha_);
    const double kappa = (2.0 - alpha_) / (2.0 * alpha_);
    const double xi = xi_of(alpha_, s);
    const double xip =
        std::pow(s / (alpha_ * sl), 1.0 / (alpha_ - 1.0)) / sl;
    const double w = tails_.left_corr1 / xi + tails_.left_corr2 / (xi * xi);
    double gp = kappa / xi - 1.0;
    if (1.0 + w > 0.1) {
        const double wp =
            -tails_.left_corr1 / (xi * xi) - 2.0 * tails_.left_corr2 / (xi * xi * xi);
        gp += wp / (1.0 + w);
    }
    return -gp * xip;
}

double StableLaw::left_h1(double x) const {
    const double s = std::min(-x, left_depth_cap());
    const double sl = left_arg_scale(alpha_);
    const double kappa = (2.0 - alpha_) / (2.0 * alpha_);
    const double xi = xi_of(alpha_, s);
    const double xip =
        std::pow(s / (alpha_ * sl), 1.0 / (alpha_ - 1.0)) / sl;
    const double xipp =
        std::pow(s / (alpha_ * sl), (2.0 - alpha_) / (alpha_ - 1.0)) /
        (alpha_ * (alpha_ - 1.0) * sl * sl);
    const double w = tails_.left_corr1 / xi + tails_.left_corr2 / (xi * xi);
    double gp = kappa / xi - 1.0;
    double gpp = -kappa / (xi * xi);
    if (1.0 + w > 0.1) {
        const double wp =
            -tails_.left_corr1 / (xi * xi) - 2.0 * tails_.left_corr2 / (xi * xi * xi);
        const double wpp = 2.0 * tails_.left_corr1 / (xi * xi * xi) +
                           6.0 * tails_.left_corr2 / (xi * xi * xi * xi);
        gp += wp / (1.0 + w);
        gpp += (wpp * (1.0 + w) - wp * wp) / ((1.0 + w) * (1.0 + w));
    }
    return gpp * xip * xip + gp * xipp;
}

double StableLaw::left_tail_mass(double x) const {
    const double s = -x;
    if (!(s > 0)) throw DomainError("left_tail_mass wants x < 0");
    const double xi0 = xi_of(alpha_, s);
    if (xi0 > 690.0) return 0.0;
    const double sl = left_arg_scale(alpha_);
    const double kappa = (2.0 - alpha_) / (2.0 * alpha_);
    boost::math::quadrature::exp_sinh<double> integrator;
    auto f = [&](double v) {
        const double xi = xi0 + v;
        const double w =
            tails_.left_corr1 / xi + tails_.left_corr2 / (xi * xi);
        const double corr = (1.0 + w > 0.1) ? std::log1p(w) : 0.0;
        const double lp = tails_.left_log_c + kappa * std::log(xi) - xi + corr;
        return std::exp(lp) * sl *
               std::pow((alpha_ - 1.0) / xi, 1.0 / alpha_);
    };
    return integrator.integrate(f, 1e-9);
}

double StableLaw::log_p(double x) const {
    if (!std::isfinite(x)) throw DomainError("log_p wants finite x");
    if (x <= switch_left_) return left_logp(x);
    if (x >= switch_right_) {
        double s0, s1, s2;
        series_sums(x, s0, s1, s2);
        return std::log(s0) - (alpha_ + 1.0) * std::log(x);
    }
    const double pos = (x - x_lo_) / dx_;
    auto i = static_cast<std::size_t>(pos);
    i = std::min(i, logp_.size() - 2);
    const double t = pos - static_cast<double>(i);
    return hermite(t, dx_, logp_[i], logp_[i + 1], h0_[i], h0_[i + 1]);
}

double StableLaw::dlog_p(double x) const {
    if (!std::isfinite(x)) throw DomainError("dlog_p wants finite x");
    if (x <= switch_left_) return left_h0(x);
    if (x >= switch_right_) {
        double s0, s1, s2;
        series_sums(x, s0, s1, s2);
        return s1 / (s0 * x);
    }
    const double pos = (x - x_lo_) / dx_;
    auto i = static_cast<std::size_t>(pos);
    i = std::min(i, h0_.size() - 2);
    const double t = pos - static_cast<double>(i);
    return hermite(t, dx_, h0_[i], h0_[i + 1], h1_[i], h1_[i + 1]);
}

ScoreValues StableLaw::scores(double x) const {
    double h0, h1;
    if (x <= switch_left_) {
        h0 = left_h0(x);
        h1 = left_h1(x);
    } else if (x >= switch_right_) {
        double s0, s1, s2;
        series_sums(x, s0, s1, s2);
        h0 = s1 / (s0 * x);
        h1 = (s2 * s0 - s1 * s1) / (x * x * s0 * s0);
    } else {
        const double pos = (x - x_lo_) / dx_;
        auto i = static_cast<std::size_t>(pos);
        i = std::min(i, h0_.size() - 2);
        const double t = pos - static_cast<double>(i);
        h0 = hermite(t, dx_, h0_[i], h0_[i + 1], h1_[i], h1_[i + 1]);
        const std::size_t j = (i == 0) ? 1 : std::min(i, h1_.size() - 3);
        h1 = lagrange4(t + static_cast<double>(i - (j - 1)), h1_[j - 1],
                       h1_[j], h1_[j + 1], h1_[j + 2]);
    }
    return {h0, h1, x * h1 + h0, x * x * h1 + 2.0 * x * h0 + 1.0};
}

double StableLaw::pdf(double x) const {
    if (x <= switch_left_) return std::exp(left_logp(x));
    if (x >= switch_right_) return series_pdf(x);
    const double pos = (x - x_lo_) / dx_;
    auto i = static_cast<std::size_t>(pos);
    i = std::min(i, p_.size() - 2);
    const double t = pos - static_cast<double>(i);
    return hermite(t, dx_, p_[i], p_[i + 1], dp_[i], dp_[i + 1]);
}

double StableLaw::dpdf(double x) const {
    if (x <= switch_left_) return std::exp(left_logp(x)) * left_h0(x);
    if (x >= switch_right_) return series_dpdf(x);
    const double pos = (x - x_lo_) / dx_;
    auto i = static_cast<std::size_t>(pos);
    i = std::min(i, dp_.size() - 2);
    const double t = pos - static_cast<double>(i);
    return hermite(t, dx_, dp_[i], dp_[i + 1], ddp_[i], ddp_[i + 1]);
}

double StableLaw::d2pdf(double x) const {
    if (x <= switch_left_) {
        const double p = std::exp(left_logp(x));
        const double h0 = left_h0(x);
        return p * (left_h1(x) + h0 * h0);
    }
    if (x >= switch_right_) return series_d2pdf(x);
    const double pos = (x - x_lo_) / dx_;
    auto i = static_cast<std::size_t>(pos);
    i = std::min(i, ddp_.size() - 2);
    const double t = pos - static_cast<double>(i);
    const std::size_t j = (i == 0) ? 1 : std::min(i, ddp_.size() - 3);
    return lagrange4(t + static_cast<double>(i - (j - 1)), ddp_[j - 1],
                     ddp_[j], ddp_[j + 1], ddp_[j + 2]);
}

double StableLaw::cdf(double x) const {
    if (x <= x_lo_) {
        const double xi0 = xi_of(alpha_, -x);
        return xi0 > 690.0 ? 0.0 : left_tail_mass(x);
    }
    if (x >= x_hi_) return 1.0 - right_tail_mass(x);
    const double pos = (x - x_lo_) / dx_;
    auto i = static_cast<std::size_t>(pos);
    i = std::min(i, cum_.size() - 2);
    const double xi = node_x(i);
    return left_mass_total_ + cum_[i] +
           0.5 * (p_[i] + pdf(x)) * (x - xi);
}

double StableLaw::expectation(const std::function<double(double)>& f) const {
    double core = 0;
    for (std::size_t i = 0; i < p_.size(); ++i) {
        const double w =
            (i == 0 || i + 1 == p_.size()) ? 0.5 : 1.0;
        core += w * f(node_x(i)) * p_[i];
    }
    core *= dx_;

    boost::math::quadrature::tanh_sinh<double> ts;
    const double xh = x_hi_;
    const double right = ts.integrate(
        [&](double t) {
            const double x = xh / t;
            const double p = series_pdf(x);
            if (!(p > 0)) return 0.0; // underflowed far tail
            return f(x) * p * xh / (t * t);
        },
        0.0, 1.0, 1e-9);

    double left = 0;
    const double xi0 = xi_of(alpha_, -x_lo_);
    if (xi0 <= 690.0) {
        const double sl = left_arg_scale(alpha_);
        const double kappa = (2.0 - alpha_) / (2.0 * alpha_);
        boost::math::quadrature::exp_sinh<double> es;
        left = es.integrate(
            [&](double v) {
                const double xi = xi0 + v;
                const double s = alpha_ * sl *
                                 std::pow(xi / (alpha_ - 1.0),
                                          (alpha_ - 1.0) / alpha_);
                const double w = tails_.left_corr1 / xi +
                                 tails_.left_corr2 / (xi * xi);
                const double corr = (1.0 + w > 0.1) ? std::log1p(w) : 0.0;
                const double lp =
                    tails_.left_log_c + kappa * std::log(xi) - xi + corr;
                const double p = std::exp(lp);
                if (!(p > 0)) return 0.0; // underflowed deep tail
                return f(-s) * p * sl *
                       std::pow((alpha_ - 1.0) / xi, 1.0 / alpha_);
            },
            1e-9);
    }
    return core + right + left;
}

void StableLaw::shift_log_density(double c) {
    const double e = std::exp(c);
    for (auto& v : logp_) v += c;
    for (auto& v : p_) v *= e;
    for (auto& v : dp_) v *= e;
    for (auto& v : ddp_) v *= e;
    for (auto& v : cum_) v *= e;
    for (auto& v : right_coefs_) v *= e;
    tails_.left_log_c += c;
    tails_.c0 *= e;
    left_mass_total_ *= e;
    total_mass_ *= e;
}

namespace {
constexpr char kMagic[8] = {'S', 'C', 'I', 'R', 'L', 'A', 'W', '1'};

template <typename T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void get(std::ifstream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
}
void put_vec(std::ofstream& os, const std::vector<double>& v) {
    const std::uint64_t n = v.size();
    put(os, n);
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(n * sizeof(double)));
}
void get_vec(std::ifstream& is, std::vector<double>& v) {
    std::uint64_t n = 0;
    get(is, n);
    v.resize(n);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
}
} // namespace

void StableLaw::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open cache file for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    put(os, alpha_);
    put(os, scale_);
    put(os, x_lo_);
    put(os, x_hi_);
    put(os, dx_);
    put(os, switch_left_);
    put(os, switch_right_);
    put(os, tails_.c0);
    put(os, tails_.left_log_c);
    put(os, tails_.left_corr1);
    put(os, tails_.left_corr2);
    put(os, left_mass_total_);
    put(os, total_mass_);
    put_vec(os, p_);
    put_vec(os, dp_);
    put_vec(os, ddp_);
    put_vec(os, logp_);
    put_vec(os, h0_);
    put_vec(os, h1_);
    put_vec(os, cum_);
    put_vec(os, right_coefs_);
}

StableLaw StableLaw::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open cache file: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error("cache format mismatch: " + path);
    StableLaw law;
    get(is, law.alpha_);
    get(is, law.scale_);
    get(is, law.x_lo_);
    get(is, law.x_hi_);
    get(is, law.dx_);
    get(is, law.switch_left_);
    get(is, law.switch_right_);
    get(is, law.tails_.c0);
    get(is, law.tails_.left_log_c);
    get(is, law.tails_.left_corr1);
    get(is, law.tails_.left_corr2);
    get(is, law.left_mass_total_);
    get(is, law.total_mass_);
    get_vec(is, law.p_);
    get_vec(is, law.dp_);
    get_vec(is, law.ddp_);
    get_vec(is, law.logp_);
    get_vec(is, law.h0_);
    get_vec(is, law.h1_);
    get_vec(is, law.cum_);
    get_vec(is, law.right_coefs_);
    if (!is) throw Error("truncated cache file: " + path);
    return law;
}

} // namespace scir
