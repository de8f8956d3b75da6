// Copyright 2026 The gatdec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef GATDEC_RANDOM_HPP
#define GATDEC_RANDOM_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace gatdec {

// Distribution helpers with a fixed algorithm, so seeded runs are identical
// across standard library implementations.

inline double uniform01(std::mt19937_64 &rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64 &rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n) by rejection sampling.
inline uint64_t bounded(std::mt19937_64 &rng, uint64_t n) {
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

template <typename T>
void shuffle_in_place(std::vector<T> &v, std::mt19937_64 &rng) {
    for (size_t i = v.size(); i > 1; i--) {
        size_t j = size_t(bounded(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Stateless uniform in [0, 1) keyed by (seed, a, b).
inline double counter_uniform(uint64_t seed, uint64_t a, uint64_t b) {
    uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ (b * 0xD1B54A32D192ED03ull));
    return double(h >> 11) * 0x1.0p-53;
}

}  // namespace gatdec

#endif
