#include "scir/cir_model.hpp"

#include <cmath>

#include "scir/errors.hpp"
#include "scir/stable_law.hpp"

namespace scir {

void ModelSpec::validate() const {
    if (!(alpha > 1.0 && alpha < 2.0))
        throw DomainError("alpha must lie in (1,2)");
    if (!(q > 0.0)) throw DomainError("q must be positive");
    if (1.0 / q + 1.0 / alpha < 1.0 - 1e-12)
        throw DomainError("existence requires 1/q + 1/alpha >= 1");
    if (a1 < 0.0) throw DomainError("a1 must be nonnegative");
    if (a3 < 0.0) throw DomainError("a3 must be nonnegative");
    if (eps < 0.0) throw DomainError("eps must be nonnegative");
    if (x0 < 0.0) throw DomainError("x0 must be nonnegative");
}

bool ModelSpec::condition_c11() const {
    if (a2 != 0.0 && x0 == a1 / a2) return false;
    if (a1 == 0.0 && a2 == 0.0) return false;
    if (x0 == 0.0 && a1 == 0.0) return false;
    return true;
}

double y0_limit(const ModelSpec& spec, double t) {
    if (spec.a2 == 0.0) return spec.x0 + spec.a1 * t;
    const double e = std::exp(-spec.a2 * t);
    return spec.x0 * e + (spec.a1 / spec.a2) * (1.0 - e);
}

ObservedPath simulate_path(const ModelSpec& spec, std::size_t n,
                           std::size_t substeps, Rng& rng) {
    spec.validate();
    if (n == 0) throw DomainError("n must be positive");
    if (substeps == 0) throw DomainError("substeps must be positive");

    ObservedPath path;
    path.n = n;
    path.substeps = substeps;
    path.values.reserve(n + 1);
    path.values.push_back(spec.x0);

    const double h = 1.0 / (static_cast<double>(n) * static_cast<double>(substeps));
    const double noise_h = std::pow(h, 1.0 / spec.alpha) * spec.a3 * spec.eps;
    const double inv_q = 1.0 / spec.q;

    double y = spec.x0;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t s = 0; s < substeps; ++s) {
            double incr = (spec.a1 - spec.a2 * y) * h;
            if (noise_h > 0.0)
                incr += noise_h * std::pow(y, inv_q) * sample_z(spec.alpha, rng);
            y += incr;
            if (y < 0.0) {
                y = 0.0;
                ++path.clamp_count;
            }
        }
        path.values.push_back(y);
    }
    return path;
}

} // namespace scir
