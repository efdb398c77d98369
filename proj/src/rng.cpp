#include "sdeid/rng.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace sdeid::rng {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

std::array<std::uint32_t, 2> split(Seed seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

std::pair<double, double> box_muller(const Block& b) {
    const std::uint64_t w0 = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
    const std::uint64_t w1 = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
    const double u1 = to_unit(w0);
    const double u2 = to_unit(w1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
}

} // namespace

Block philox4x32(Block ctr, std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

double to_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double normal_at(Seed seed, Domain domain, std::uint64_t path, std::uint64_t step, std::uint64_t coord) {
    const Block ctr{static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(step),
                    static_cast<std::uint32_t>(coord / 2),
                    static_cast<std::uint32_t>(domain) | static_cast<std::uint32_t>((path >> 32) << 8)};
    const auto [z0, z1] = box_muller(philox4x32(ctr, split(seed)));
    return coord % 2 == 0 ? z0 : z1;
}

void normals_at(Seed seed, Domain domain, std::uint64_t path, std::uint64_t step, std::span<double> out) {
    for (std::size_t c = 0; c < out.size(); c += 2) {
        const Block ctr{static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(step),
                        static_cast<std::uint32_t>(c / 2),
                        static_cast<std::uint32_t>(domain) | static_cast<std::uint32_t>((path >> 32) << 8)};
        const auto [z0, z1] = box_muller(philox4x32(ctr, split(seed)));
        out[c] = z0;
        if (c + 1 < out.size()) {
            out[c + 1] = z1;
        }
    }
}

Seed derive_seed(Seed seed, std::uint64_t index) {
    const Block b = philox4x32({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0u,
                                static_cast<std::uint32_t>(Domain::Derive)},
                               split(seed));
    return (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
}

Stream::Stream(Seed seed, Domain domain, std::uint64_t stream_id)
    : key_(split(seed)), domain_(static_cast<std::uint32_t>(domain)), stream_(stream_id) {}

Stream::result_type Stream::operator()() {
    if (used_ >= 3) {
        buffer_ = philox4x32({static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
                              static_cast<std::uint32_t>(counter_),
                              domain_ | static_cast<std::uint32_t>((counter_ >> 32) << 8)},
                             key_);
        ++counter_;
        used_ = 0;
    }
    const std::uint64_t w = (static_cast<std::uint64_t>(buffer_[used_]) << 32) | buffer_[used_ + 1];
    used_ += 2;
    return w;
}

double Stream::uniform() { return to_unit((*this)()); }

double Stream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::uint64_t Stream::below(std::uint64_t n) {
    if (n <= 1) {
        return 0;
    }
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            m = static_cast<unsigned __int128>((*this)()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

std::vector<std::size_t> permutation(std::size_t n, Stream& stream) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = i;
    }
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(stream.below(i));
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

} // namespace sdeid::rng
