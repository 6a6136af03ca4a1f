#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace w2sg {

/// Base exception for every recoverable failure in the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Floor applied to probabilities before any logarithm.
inline constexpr double kProbFloor = 1e-7;

inline double clamp_prob(double p) {
    return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

inline double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Probability of class 1 for a binary distribution. Always within [0, 1].
class SoftLabel {
public:
    constexpr SoftLabel() = default;
    explicit SoftLabel(double p1) : p1_(p1) {
        if (!(p1 >= 0.0 && p1 <= 1.0)) {
            throw Error("soft label out of [0,1]: " + std::to_string(p1));
        }
    }
    static SoftLabel hard(int label) { return SoftLabel(label != 0 ? 1.0 : 0.0); }

    double p1() const noexcept { return p1_; }
    double p0() const noexcept { return 1.0 - p1_; }

    friend bool operator==(const SoftLabel&, const SoftLabel&) = default;

private:
    double p1_ = 0.5;
};

// splitmix64 finalizer; used to derive independent seed streams.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::string_view tag) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (const char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return mix_seed(a, h);
}

using Rng = std::mt19937_64;

}  // namespace w2sg
