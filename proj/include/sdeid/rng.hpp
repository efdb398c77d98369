#ifndef SDEID_RNG_HPP
#define SDEID_RNG_HPP

#include "sdeid/types.hpp"

#include <array>
#include <cstdint>
#include <span>

namespace sdeid {

/**
 * @brief Counter-based random numbers (Philox4x32-10).
 *
 * Every draw is a pure function of (seed, domain, a, b, c), so results never
 * depend on which thread computes them or in what order.
 *
 * Uniforms take the top 53 bits of a 64-bit word and are shifted into the open
 * interval (0, 1). Normals come in pairs from the Box-Muller transform applied
 * to the two uniforms of one Philox block.
 */
namespace rng {

using Block = std::array<std::uint32_t, 4>;

Block philox4x32(Block counter, std::array<std::uint32_t, 2> key);

/// Separates the independent uses of one seed.
enum class Domain : std::uint32_t {
    Initial = 1,
    Increment = 2,
    Shuffle = 3,
    Metropolis = 4,
    Permutation = 5,
    Resample = 6,
    Derive = 7,
};

/// Uniform in (0, 1).
double to_unit(std::uint64_t bits);

/// Standard normal keyed by (seed, domain, path, step, coordinate).
double normal_at(Seed seed, Domain domain, std::uint64_t path, std::uint64_t step, std::uint64_t coord);

/// Fills `out` with standard normals for one (path, step), coordinates 0..size-1.
void normals_at(Seed seed, Domain domain, std::uint64_t path, std::uint64_t step, std::span<double> out);

/// Child seed for replicate `index`, stable across runs.
Seed derive_seed(Seed seed, std::uint64_t index);

/**
 * @brief Sequential view of one counter stream.
 *
 * Satisfies UniformRandomBitGenerator, but library code only uses the
 * explicit helpers below so results do not depend on the standard library's
 * distribution implementations.
 */
class Stream {
public:
    using result_type = std::uint64_t;

    Stream(Seed seed, Domain domain, std::uint64_t stream_id);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()();

    double uniform();
    double normal();
    /// Uniform integer in [0, n) by Lemire's multiply-and-reject.
    std::uint64_t below(std::uint64_t n);

private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t domain_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    Block buffer_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Uniformly random permutation of 0..n-1 (Fisher-Yates).
std::vector<std::size_t> permutation(std::size_t n, Stream& stream);

} // namespace rng
} // namespace sdeid

#endif
