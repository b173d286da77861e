#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace tracecast {

// splitmix64 step; used to derive independent sub-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// mt19937_64 engine with hand-rolled variate transforms. The engine's raw
// output is pinned by the standard; the transforms below avoid the
// implementation-defined std::*_distribution classes so that a fixed seed
// yields the same stream on every build.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed, 0)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1]; safe as a log argument.
    double uniform_pos() { return 1.0 - uniform01(); }

    // Uniform integer in [0, n).
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    double exponential(double mean) { return -mean * std::log(uniform_pos()); }

    // Sum of `shape` exponentials, i.e. Erlang(shape, mean/shape).
    double erlang(int shape, double mean) {
        double total = 0.0;
        for (int i = 0; i < shape; ++i) total += exponential(mean / shape);
        return total;
    }

    // Box-Muller; one fresh pair of uniforms per variate.
    double normal() {
        const double u1 = uniform_pos();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double lognormal(double mean_log, double sigma_log) {
        return std::exp(mean_log + sigma_log * normal());
    }

    // Index into a probability vector (assumed to sum to ~1).
    std::size_t pick(const std::vector<double>& probs) {
        double u = uniform01();
        for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
            if (u < probs[i]) return i;
            u -= probs[i];
        }
        return probs.empty() ? 0 : probs.size() - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[bounded(i)]);
        }
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace tracecast
