#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace d3 {

// FNV-1a 64-bit over the bytes of s, passed through a splitmix64 finalizer so
// that near-identical strings land far apart.
inline uint64_t stable_hash(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    h += 0x9e3779b97f4a7c15ULL;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
}

// Stable per-stage seed derivation: hash of (master seed, stage name, key).
// Independent of execution order, platform and thread count.
inline uint64_t derive_seed(uint64_t master, std::string_view stage, std::string_view key = {}) {
    std::string buf;
    buf.reserve(16 + stage.size() + key.size());
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((master >> (8 * i)) & 0xff));
    buf.push_back('|');
    buf.append(stage);
    buf.push_back('|');
    buf.append(key);
    return stable_hash(buf);
}

// mt19937_64 with hand-rolled distributions. The standard pins the engine's
// output stream but not the library distributions, so we implement the few
// draws we need ourselves to keep seeded results stable everywhere.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Unbiased draw in [0, n); n must be positive.
    size_t uniform_index(size_t n) {
        const uint64_t span = static_cast<uint64_t>(n);
        const uint64_t limit =
            std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % span;
        uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return static_cast<size_t>(x % span);
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform_real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // k distinct indices from [0, n), in draw order (partial Fisher-Yates).
    std::vector<size_t> sample_without_replacement(size_t n, size_t k) {
        std::vector<size_t> pool(n);
        for (size_t i = 0; i < n; ++i) pool[i] = i;
        for (size_t i = 0; i < k; ++i) {
            const size_t j = i + uniform_index(n - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // Standard normal via Box-Muller on our own uniforms.
    double normal() {
        double u1 = uniform_real();
        while (u1 <= 0.0) u1 = uniform_real();
        const double u2 = uniform_real();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace d3
