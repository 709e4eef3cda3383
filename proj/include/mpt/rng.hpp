#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace mpt {

// Deterministic 64-bit generator (splitmix64). Standard-library distributions
// are implementation-defined, so every seeded draw in the pipeline goes
// through this type to keep manifests reproducible across toolchains.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Unbiased-enough bounded draw; n must be > 0.
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    double unit() {
        return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

  private:
    std::uint64_t state_;
};

// FNV-1a, used for token ids, seed derivation, and manifest digests.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
    a ^= b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2);
    return a;
}

// Stable sub-seed for a named stream, e.g. derive_seed(seed, "subset", j, i).
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = fnv1a64(stream);
    h = hash_mix(h, root);
    h = hash_mix(h, a + 1);
    h = hash_mix(h, b + 1);
    return h;
}

}  // namespace mpt
