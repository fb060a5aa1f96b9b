#pragma once

#include <cstdint>
#include <random>

namespace icsdet {

using Rng = std::mt19937_64;

// Derives an independent stream seed from a master seed and a stream id
// (splitmix64 finalizer over the xor-combined words).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_a, std::uint64_t stream_b);

// 64-bit FNV-1a, used for dataset fingerprints and config hashes.
class Fnv1a {
public:
    void update(const void* bytes, std::size_t n);
    void update_u64(std::uint64_t v);
    void update_f64(double v);
    std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = 14695981039346656037ULL;
};

}  // namespace icsdet
