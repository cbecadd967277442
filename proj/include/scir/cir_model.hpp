#ifndef SCIR_CIR_MODEL_HPP
#define SCIR_CIR_MODEL_HPP

#include <cstdint>
#include <vector>

#include "scir/rng.hpp"

namespace scir {

// Full generative model dy = (a1 - a2 y)dt + a3 eps y^{1/q} dz on [0,1].
struct ModelSpec {
    double a1 = 0;
    double a2 = 0;
    double a3 = 0; // nonnegative; > 0 for estimation
    double q = 0;  // positive; 1/q + 1/alpha >= 1
    double alpha = 0;
    double eps = 0;
    double x0 = 0;

    void validate() const;        // throws DomainError
    bool condition_c11() const;   // nondegeneracy of (x0, a1, a2)
};

struct ObservedPath {
    std::size_t n = 0;
    std::vector<double> values; // y(t_0..t_n), length n+1
    std::uint64_t seed = 0;
    std::size_t substeps = 1;
    std::size_t clamp_count = 0;
};

// Deterministic eps = 0 path at time t.
double y0_limit(const ModelSpec& spec, double t);

// Euler scheme on the refined grid h = 1/(n*substeps) with exact stable
// increments h^{1/alpha} z; negative excursions clamp to 0 and are counted.
ObservedPath simulate_path(const ModelSpec& spec, std::size_t n,
                           std::size_t substeps, Rng& rng);

} // namespace scir

#endif
