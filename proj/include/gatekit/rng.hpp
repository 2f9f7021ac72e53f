// Copyright 2026 The Gatekit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GATEKIT_RNG_HPP_
#define GATEKIT_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gatekit/common.hpp"

namespace gatekit {

// Deterministic RNG wrapper.  std::mt19937_64 has a portable, standardized
// output sequence; the distribution mappings below are pinned here (rather
// than relying on <random> distributions) so that the same seed gives the
// same draws on any platform, which downstream file formats depend on.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    // uniform in [0, 1) with 53 random bits
    double uniform01() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n), rejection sampled so every value is equally
    // likely for any n
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be > 0");
        const std::uint64_t rem = std::uint64_t(-n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t x = eng_();
            if (x >= rem) return x % n;
        }
    }

    // standard normal, Box-Muller (one draw per call; no cached spare, so the
    // stream position is a simple function of call count)
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    // binomial via inverse-CDF walk; uses a single uniform draw
    std::uint64_t binomial(std::uint64_t n, double p) {
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("Rng::binomial: p must be in [0, 1]");
        if (n == 0 || p == 0.0) return 0;
        if (p == 1.0) return n;
        // symmetry keeps p <= 1/2 so (1-p)^chunk stays representable
        if (p > 0.5) return n - binomial(n, 1.0 - p);
        // a sum of independent binomials with equal p is binomial, so large
        // draws split into chunks small enough for the inverse-CDF walk
        constexpr std::uint64_t kChunk = 512;
        std::uint64_t total = 0;
        while (n > kChunk) {
            total += binomial_walk(kChunk, p);
            n -= kChunk;
        }
        return total + binomial_walk(n, p);
    }

    // multinomial by sequential binomial splitting
    std::vector<std::uint64_t> multinomial(std::uint64_t n,
                                           const std::vector<double>& probs) {
        std::vector<std::uint64_t> counts(probs.size(), 0);
        double rest = 1.0;
        std::uint64_t left = n;
        for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
            if (left == 0) break;
            const double pi = rest > 0.0 ? probs[i] / rest : 0.0;
            const std::uint64_t c = binomial(left, pi < 0.0 ? 0.0 : (pi > 1.0 ? 1.0 : pi));
            counts[i] = c;
            left -= c;
            rest -= probs[i];
        }
        if (!probs.empty()) counts.back() = left;
        return counts;
    }

  private:
    // inverse-CDF walk over the pmf; requires p <= 1/2 and n small enough
    // that (1-p)^n does not underflow
    std::uint64_t binomial_walk(std::uint64_t n, double p) {
        if (n == 0) return 0;
        const double u = uniform01();
        double pk = std::pow(1.0 - p, static_cast<double>(n));
        double cdf = pk;
        std::uint64_t k = 0;
        const double r = p / (1.0 - p);
        while (u > cdf && k < n) {
            ++k;
            pk *= r * static_cast<double>(n - k + 1) / static_cast<double>(k);
            cdf += pk;
        }
        return k;
    }

    std::mt19937_64 eng_;
};

// ------------------------------ seed derivation ------------------------------

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Per-record seed: a stable function of the root seed, a label (canonical
// circuit text), and the record index.  Records are therefore independent of
// generation order.
inline std::uint64_t derive_seed(std::uint64_t root, const std::string& label,
                                 std::uint64_t index) {
    std::uint64_t h = mix64(root);
    h = mix64(h ^ fnv1a64(label));
    h = mix64(h ^ index);
    return h;
}

}  // namespace gatekit

#endif  // GATEKIT_RNG_HPP_
