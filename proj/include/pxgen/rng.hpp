#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pxgen {

// SplitMix64 output function applied to a 64-bit key.
std::uint64_t splitmix64(std::uint64_t x);

// Counter-based generator: the k-th draw is splitmix64(seed + k·golden), so the
// stream is fully determined by (seed, counter) on every platform. Normals come
// from Box-Muller over pairs of uniforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64();
    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    // Uniform in (0, 1]; safe under log().
    double uniform_open0();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    std::vector<double> normals(std::size_t n);

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Derives an independent stream seed from a parent seed and a label.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace pxgen
