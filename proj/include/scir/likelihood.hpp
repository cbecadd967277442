#ifndef SCIR_LIKELIHOOD_HPP
#define SCIR_LIKELIHOOD_HPP

#include <array>
#include <vector>

#include "scir/cir_model.hpp"
#include "scir/stable_law.hpp"

namespace scir {

struct ParamPoint {
    double a1 = 0;
    double a2 = 0;
    double a3 = 0; // strictly positive
};

struct Residuals {
    std::vector<double> y_vec; // Y_k, k = 1..n
    std::vector<double> yprev; // y(t_{k-1})
    std::vector<double> ypow;  // y(t_{k-1})^{1/q}
};

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

// Rate normalizers: m = eps^{-1} n^{1/alpha - 1}, v = m sqrt(n).
double rate_m(std::size_t n, double eps, double alpha);
double rate_v(std::size_t n, double eps, double alpha);

// Precomputes everything theta-independent about one observed path so
// repeated objective evaluations during optimization stay cheap.
class ObjectiveContext {
public:
    ObjectiveContext(const ObservedPath& path, double eps, double alpha,
                     double q, const StableLaw& law);

    std::size_t n() const { return dy_.size(); }
    double eps() const { return eps_; }
    double alpha() const { return alpha_; }
    double q() const { return q_; }
    const StableLaw& law() const { return law_; }
    double v_rate() const { return v_; }

    Residuals residuals(const ParamPoint& theta) const;
    double value(const ParamPoint& theta) const;          // U(theta)
    Vec3 gradient(const ParamPoint& theta) const;         // unscaled dU/da
    Mat3 hessian_unscaled(const ParamPoint& theta) const; // d2U/da_i da_j
    Mat3 scaled_hessian(const ParamPoint& theta) const;   // blockwise /v^2, /v sqrt n, /n

private:
    const StableLaw& law_;
    double eps_, alpha_, q_;
    double base_; // eps * n^{-1/alpha}
    double v_;
    std::vector<double> dy_, yprev_, ypow_;
};

// Free-function spellings used by the CLI and tests.
Residuals residuals(const ObservedPath& path, const ParamPoint& theta,
                    double eps, double alpha, double q);
double objective_u(const ObservedPath& path, const ParamPoint& theta,
                   double eps, double alpha, double q, const StableLaw& law);
Vec3 gradient_u(const ObservedPath& path, const ParamPoint& theta, double eps,
                double alpha, double q, const StableLaw& law);
Mat3 scaled_hessian(const ObservedPath& path, const ParamPoint& theta,
                    double eps, double alpha, double q, const StableLaw& law);

} // namespace scir

#endif
