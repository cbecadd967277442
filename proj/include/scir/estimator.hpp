#ifndef SCIR_ESTIMATOR_HPP
#define SCIR_ESTIMATOR_HPP

#include <array>
#include <optional>
#include <vector>

#include "scir/likelihood.hpp"

namespace scir {

// Compact convex search box for (a1, a2, a3); a3 bounded away from 0.
struct ParamBox {
    Vec3 lo{0, 0, 0};
    Vec3 hi{0, 0, 0};

    void validate() const; // throws DomainError
    ParamPoint center() const;
    ParamPoint clamp(const ParamPoint& p) const;
    bool contains(const ParamPoint& p) const;
};

ParamBox default_box();

struct MaximizeOptions {
    std::size_t extra_starts = 8; // low-discrepancy starts beyond the center
    std::size_t max_iter = 2000;
    double simplex_tol = 1e-9; // relative simplex diameter
    double grad_tol = 1e-7;    // scaled-gradient norm for the polish phase
    std::optional<ParamPoint> user_start;
};

struct StartResult {
    ParamPoint theta;
    double u = 0;
    std::size_t iterations = 0;
    bool converged = false;
};

struct EstimateReport {
    ParamPoint theta_hat;
    double u_value = 0;
    std::size_t n_starts = 0;
    bool converged = false;
    std::size_t iterations = 0;
    std::array<bool, 3> boundary_hit{false, false, false};
    std::optional<Vec3> standardized_error;
    std::vector<StartResult> start_results; // all local maxima found
};

// Multi-start simplex search over the box with a Newton polish using the
// analytic gradient and Hessian; deterministic for fixed inputs.
EstimateReport maximize(const ObjectiveContext& ctx, const ParamBox& box,
                        const MaximizeOptions& opts = {});

EstimateReport maximize(const ObservedPath& path, const ParamBox& box,
                        double eps, double alpha, double q,
                        const StableLaw& law,
                        const MaximizeOptions& opts = {});

// S = (v (a1^ - a1), v (a2^ - a2), sqrt(n) (a3^ - a3)).
Vec3 standardize(const ParamPoint& theta_hat, const ParamPoint& theta_true,
                 std::size_t n, double eps, double alpha);

} // namespace scir

#endif
