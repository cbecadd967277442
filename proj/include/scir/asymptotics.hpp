#ifndef SCIR_ASYMPTOTICS_HPP
#define SCIR_ASYMPTOTICS_HPP

#include <map>
#include <utility>

#include "scir/cir_model.hpp"
#include "scir/likelihood.hpp"
#include "scir/stable_law.hpp"

namespace scir {

struct VIntegrals {
    double v1 = 0; // int |p'|^2 / p
    double v2 = 0; // int x |p'|^2 / p
    double v3 = 0; // int x^2 |p'|^2 / p - 1
};

struct SigmaReport {
    VIntegrals v;
    std::map<std::pair<int, int>, double> m; // (i,j) -> int y0^{i-j/q}
    Mat3 sigma{};
    Mat3 limit_cov{}; // a3_bar^2 Sigma^{-1}
    double min_eigenvalue = 0;
    bool condition_ok = false;
};

// int_0^1 y0(t)^{i - j/q} dt by adaptive quadrature.
double moments_m(const ModelSpec& true_params, int i, int j);

// The three density integrals; tails handled via the analytic forms.
VIntegrals v_integrals(const StableLaw& law);

// Sigma, its minimum eigenvalue, and a3_bar^2 Sigma^{-1}.
SigmaReport sigma_matrix(const ModelSpec& true_params, const StableLaw& law);

// Limit criterion U(a) and limit Hessian V(a); m0 is the limit of
// eps^{-1} n^{1/alpha - 1}.
double limit_criterion(const ParamPoint& a, const ModelSpec& true_params,
                       const StableLaw& law, double m0);
Mat3 limit_hessian(const ParamPoint& a, const ModelSpec& true_params,
                   const StableLaw& law, double m0);

} // namespace scir

#endif
