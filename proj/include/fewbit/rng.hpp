// SPDX-License-Identifier: Apache-2.0
//
// fewbit: compressive channel estimation under few-bit ADC quantization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace fewbit {

/// Stateless 64-bit mixing function used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic random stream with explicit sampling routines.
///
/// All transforms (uniform, bounded integer, Gaussian) are implemented here
/// rather than through std:: distributions, whose output is
/// implementation-defined. Identical seeds therefore reproduce identical
/// draws on every build, which the simulation harness relies on. Every unit
/// of work (trial, pilot draw, channel draw) owns its own stream derived
/// from a master seed and a stream id.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Stream for an independent unit of work: hash-combines the master
    /// seed with a stream id so streams never overlap.
    static Rng stream(std::uint64_t master_seed, std::uint64_t stream_id) {
        return Rng(splitmix64(master_seed ^ splitmix64(stream_id + 0x1234abcd5678ef01ULL)));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Unbiased uniform integer in [0, bound). Rejection sampling.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0)
            throw std::invalid_argument("Rng::next_below: bound must be positive.");
        const std::uint64_t limit = (UINT64_MAX / bound) * bound;
        std::uint64_t r = next_u64();
        while (r >= limit)
            r = next_u64();
        return r % bound;
    }

    int next_int(int bound) { return static_cast<int>(next_below(static_cast<std::uint64_t>(bound))); }

    /// Fair coin sign, +1 or -1.
    double next_sign() { return (next_u64() >> 63) ? 1.0 : -1.0; }

    /// Standard normal via Box-Muller; second sample of each pair is cached.
    double next_normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = next_double();
        if (u1 <= 0.0)
            u1 = 0x1.0p-53;
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    /// Standard complex normal CN(0,1): real/imag parts N(0, 1/2).
    std::complex<double> next_cnormal() {
        const double a = next_normal();
        const double b = next_normal();
        return {a * std::numbers::sqrt2 / 2.0, b * std::numbers::sqrt2 / 2.0};
    }

    /// k distinct indices from [0, n), returned sorted ascending.
    std::vector<int> sample_without_replacement(int n, int k) {
        if (k < 0 || k > n)
            throw std::invalid_argument("Rng::sample_without_replacement: need 0 <= k <= n.");
        std::vector<int> pool(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            pool[static_cast<std::size_t>(i)] = i;
        for (int i = 0; i < k; ++i)
            std::swap(pool[static_cast<std::size_t>(i)],
                      pool[static_cast<std::size_t>(i) + next_below(static_cast<std::uint64_t>(n - i))]);
        pool.resize(static_cast<std::size_t>(k));
        std::sort(pool.begin(), pool.end());
        return pool;
    }

  private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace fewbit
