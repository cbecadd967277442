#ifndef SCIR_STABLE_LAW_HPP
#define SCIR_STABLE_LAW_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scir/rng.hpp"

namespace scir {

// Exponent psi(lambda) with E[exp(-lambda z)] = exp(psi(lambda)) for the
// compensated spectrally positive stable law with Levy density
// z^{-1-alpha} on (0,inf).  psi(lambda) = lambda^alpha Gamma(2-alpha) /
// (alpha (alpha-1)).
double laplace_exponent(double alpha, double lambda);

// Scale sigma(alpha) mapping a standard maximally skewed stable variate
// (unit scale, beta = 1, zero location) onto the law above.
double stable_scale(double alpha);

// One exact draw of z0(1) via the Chambers-Mallows-Stuck transformation.
double sample_z(double alpha, Rng& rng);

// Slow single-point density by direct inversion of the characteristic
// function (adaptive quadrature, no grid).  Used for build-time probes.
double stable_pdf_direct(double alpha, double x);
double stable_dpdf_direct(double alpha, double x);

struct ScoreValues {
    double h0; // p'/p
    double h1; // (p'' p - p'^2) / p^2
    double h2; // x h1 + h0
    double h3; // x^2 h1 + 2 x h0 + 1
};

struct TailConstants {
    double c0;          // effective right-tail constant, p(x) ~ c0 x^{-alpha-1}
    double left_log_c;  // log c0' in  log p(-s) = log c0' + kappa log xi - xi + ...
    double left_corr1;  // fitted 1/xi correction inside log1p
    double left_corr2;  // fitted 1/xi^2 correction inside log1p
};

// Tabulated density of z0(1): characteristic-function inversion on a
// uniform grid with analytic tail handoff on both sides.  Immutable
// after build and safe to share across threads.
class StableLaw {
public:
    static StableLaw build(double alpha, double x_lo, double x_hi,
                           std::size_t n_nodes);

    double alpha() const { return alpha_; }
    double scale() const { return scale_; }
    double grid_lo() const { return x_lo_; }
    double grid_hi() const { return x_hi_; }
    double grid_dx() const { return dx_; }
    std::size_t size() const { return p_.size(); }
    double node_x(std::size_t i) const { return x_lo_ + dx_ * static_cast<double>(i); }
    double node_p(std::size_t i) const { return p_[i]; }
    double node_dp(std::size_t i) const { return dp_[i]; }
    double node_logp(std::size_t i) const { return logp_[i]; }
    double switch_left() const { return switch_left_; }
    double switch_right() const { return switch_right_; }
    const TailConstants& tail_constants() const { return tails_; }
    double total_mass() const { return total_mass_; }

    // Total on the reals: finite for every finite x.
    double log_p(double x) const;
    double dlog_p(double x) const;
    ScoreValues scores(double x) const;

    double pdf(double x) const;
    double dpdf(double x) const;
    double d2pdf(double x) const;
    double cdf(double x) const;

    // integral f(x) p(x) dx over the whole line (grid trapezoid plus
    // analytic tails).
    double expectation(const std::function<double(double)>& f) const;

    double right_tail_mass(double x) const;           // P(z > x), x >= switch_right
    double left_tail_mass(double x) const;            // P(z < x), x <= switch_left
    double right_tail_rel_error(double x) const;      // truncation bound of the tail series

    // Binary grid cache keyed by (alpha, window, n_nodes, format version).
    void save(const std::string& path) const;
    static StableLaw load(const std::string& path);

    // Test support: add a constant to every stored log-density value
    // (the maximizer of the likelihood must not move).
    void shift_log_density(double c);

private:
    StableLaw() = default;

    double left_logp(double x) const;   // x <= switch_left
    double left_h0(double x) const;
    double left_h1(double x) const;
    double series_pdf(double x) const;  // x >= switch_right
    double series_dpdf(double x) const;
    double series_d2pdf(double x) const;
    // Tail series with the common power x^{-alpha-1-k'} factored out, so
    // score ratios stay finite even where p itself underflows:
    // p = x^{-alpha-1} s0, p' = x^{-alpha-2} s1, p'' = x^{-alpha-3} s2.
    void series_sums(double x, double& s0, double& s1, double& s2) const;
    double left_depth_cap() const;      // clamp keeping xi finite

    double alpha_ = 0, scale_ = 0;
    double x_lo_ = 0, x_hi_ = 0, dx_ = 0;
    std::vector<double> p_, dp_, ddp_, logp_, h0_, h1_, cum_;
    double switch_left_ = 0, switch_right_ = 0;
    TailConstants tails_{};
    std::vector<double> right_coefs_; // p(x) ~ sum coef_k x^{-alpha k - 1}
    double left_mass_total_ = 0;      // P(z < x_lo)
    double total_mass_ = 0;
};

// Free-function spelling of the builder.
StableLaw build_density(double alpha, double x_lo, double x_hi,
                        std::size_t n_nodes);

// Window heuristics: the left edge tracks the superexponential tail
// (xi at the edge ~ 650), the right edge is fixed at 400 where the
// power series is already far past its handoff point.
std::pair<double, double> default_window(double alpha);
inline constexpr std::size_t kDefaultNodes = 1u << 16;

} // namespace scir

#endif
