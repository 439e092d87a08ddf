#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace loadpatch {

// FNV-1a, used for content digests and seed derivation.
std::uint64_t fnv1a64(std::string_view bytes);

std::string hex64(std::uint64_t value);

// Derives a named sub-seed from the single global seed so that adding a new
// consumer never perturbs the streams of existing ones.
// derivation: splitmix64(global_seed ^ fnv1a64(name))
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view name);

// Deterministic generator with a fixed algorithm (splitmix64stream) so that
// identical seeds give identical draws on every platform and stdlib.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();

    // Uniform in [0, n). Rejection sampling, exactly uniform.
    std::uint64_t next_below(std::uint64_t n);

    double next_unit(); // uniform in [0, 1)

    // Fisher-Yates over indices 0..n-1.
    std::vector<std::size_t> shuffled_indices(std::size_t n);

private:
    std::uint64_t state_;
};

} // namespace loadpatch
