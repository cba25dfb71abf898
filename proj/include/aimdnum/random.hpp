#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace aimdnum {

using Vec = std::vector<double>;

// All randomness in the library goes through this wrapper so that traces are
// bit-reproducible for a given seed, independent of the standard library's
// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0,1) with 53 bits of precision.
    double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1]; never returns 0.
    double uniform_pos() { return 1.0 - uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t next_u64() { return engine_(); }

    // Index in [0, n).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    // Uniform point on the standard simplex (Dirichlet(1,...,1) via
    // exponential spacings); interior almost surely.
    Vec simplex_point(std::size_t n) {
        Vec x(n);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = -std::log(uniform_pos());
            sum += x[i];
        }
        for (auto& v : x) v /= sum;
        return x;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace aimdnum
