#ifndef SCIR_RNG_HPP
#define SCIR_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace scir {

// Random stream with portable uniform/exponential draws on top of
// mt19937_64.  Distribution mapping is done by hand so the produced
// sequence does not depend on the standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32)};
        eng_.seed(seq);
    }

    // Disjoint stream for one replica of one experiment block.
    static Rng for_stream(std::uint64_t master, std::uint64_t block,
                          std::uint64_t index) {
        Rng r(0);
        std::seed_seq seq{static_cast<std::uint32_t>(master),
                          static_cast<std::uint32_t>(master >> 32),
                          static_cast<std::uint32_t>(block),
                          static_cast<std::uint32_t>(block >> 32),
                          static_cast<std::uint32_t>(index),
                          static_cast<std::uint32_t>(index >> 32)};
        r.eng_.seed(seq);
        return r;
    }

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on the open interval (0,1).
    double uniform() {
        return (static_cast<double>(eng_() >> 11) + 0.5) *
               (1.0 / 9007199254740992.0);
    }

    double exponential() { return -std::log(uniform()); }

private:
    std::mt19937_64 eng_;
};

} // namespace scir

#endif
