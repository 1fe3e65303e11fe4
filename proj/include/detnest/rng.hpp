#pragma once

#include <cstdint>

namespace detnest {

/// splitmix64 (Steele/Lea/Vigna). Splittable, trivially seedable, and the
/// whole generator fits in one register; recorded in record headers as
/// "splitmix64" so streams can be reproduced elsewhere.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  private:
    std::uint64_t state_;
};

inline constexpr const char* kRngName = "splitmix64";

/// Derived seed for shard or trial `index` of a base seed. Distinct
/// indices give independent streams; the derivation is part of the
/// reproducibility contract.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) {
    SplitMix64 s(base_seed ^ (0xA0761D6478BD642FULL * (index + 1)));
    return s.next();
}

}  // namespace detnest
