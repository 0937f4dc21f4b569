#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace disagree {

// splitmix64. Every seeded operation in the library (epoch shuffles, dataset
// splits, simulation sampling) draws from this generator rather than
// std::shuffle / std::uniform_int_distribution, whose outputs are
// implementation defined; this keeps results byte-identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound). bound must be nonzero.
    std::uint64_t below(std::uint64_t bound) {
        // Lemire multiply-shift with rejection for exact uniformity.
        while (true) {
            const std::uint64_t x = next();
            const __uint128_t m = static_cast<__uint128_t>(x) * bound;
            const std::uint64_t lo = static_cast<std::uint64_t>(m);
            if (lo >= bound || lo >= (0ULL - bound) % bound) {
                return static_cast<std::uint64_t>(m >> 64);
            }
        }
    }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

template <typename T>
void fisher_yates(std::span<T> items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace disagree
