#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace atmp {

// Splittable deterministic RNG.
//
// Every stream carries a 64-bit key; child streams are derived by hashing the
// key with caller-supplied words and never consume from the parent. All
// distributions are generated manually from raw engine words so results are
// bit-identical across platforms and independent of evaluation order: two
// components holding children with the same key always see the same sequence.
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key), engine_(mix(key)) {}

    std::uint64_t key() const { return key_; }

    // Derived stream for a (purpose, index...) path. Leaves this stream untouched.
    Rng child(std::initializer_list<std::uint64_t> words) const {
        std::uint64_t k = key_;
        for (std::uint64_t w : words) k = mix(k ^ (w + 0x9e3779b97f4a7c15ULL));
        return Rng(k);
    }
    Rng child(std::uint64_t a) const { return child({a}); }
    Rng child(std::uint64_t a, std::uint64_t b) const { return child({a, b}); }
    Rng child(std::uint64_t a, std::uint64_t b, std::uint64_t c) const { return child({a, b, c}); }

    std::uint64_t raw() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform in {0, ..., n-1} without modulo bias. n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = n == 0 ? 0 : UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    // Standard normal via Box-Muller; no cached spare, so consumption is predictable.
    double normal() {
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Exp(1).
    double exponential() { return -std::log1p(-uniform01()); }

    // Laplace(0, 1): sign flip of Exp(1).
    double laplace() {
        double e = exponential();
        return (engine_() & 1u) ? e : -e;
    }

private:
    // splitmix64 finalizer; bijective, avalanching.
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::uint64_t key_;
    std::mt19937_64 engine_;
};

// Stream purpose tags. Fixed arbitrary values; changing one changes every
// derived random sequence, so treat them as frozen.
namespace stream {
inline constexpr std::uint64_t kRestart = 101;
inline constexpr std::uint64_t kRestartSpec = 102;
inline constexpr std::uint64_t kSpecAttack = 103;
inline constexpr std::uint64_t kExample = 104;
inline constexpr std::uint64_t kShuffle = 201;
inline constexpr std::uint64_t kStep = 202;
inline constexpr std::uint64_t kSat = 203;
inline constexpr std::uint64_t kLabelNoise = 204;
inline constexpr std::uint64_t kInit = 205;
inline constexpr std::uint64_t kEval = 301;
inline constexpr std::uint64_t kEvalSwa = 302;
inline constexpr std::uint64_t kProbe = 303;
inline constexpr std::uint64_t kData = 401;
inline constexpr std::uint64_t kAnalysis = 501;
inline constexpr std::uint64_t kStabilityPick = 502;
inline constexpr std::uint64_t kStabilityRun = 503;
}  // namespace stream

}  // namespace atmp
