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

#include <cmath>
#include <complex>
#include <set>

#include "doctest.h"

#include "fewbit/channel.hpp"

using namespace fewbit;

namespace {

ChannelSpec siso_spec(int n, int k) {
    ChannelSpec spec;
    spec.taps = n;
    spec.sparsity = k;
    return spec;
}

} // namespace

TEST_CASE("generate_channel: uniform SISO support size and peak normalization") {
    ChannelSpec spec = siso_spec(200, 5);
    for (std::uint64_t seed : {1ull, 7ull, 12345ull}) {
        const SparseChannel ch = generate_channel(spec, seed);
        CHECK(ch.support.size() == 5);
        CHECK(ch.entries.size() == 200);
        double peak = 0.0;
        int nonzeros = 0;
        for (int i = 0; i < 200; ++i) {
            const double mag = std::abs(ch.entries[i]);
            if (mag > 0.0)
                ++nonzeros;
            peak = std::max(peak, mag);
        }
        CHECK(nonzeros == 5);
        CHECK(peak == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("generate_channel: K = N forces the full support") {
    const SparseChannel ch = generate_channel(siso_spec(4, 4), 99);
    CHECK(ch.support == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("generate_channel: clustered supports form few disjoint groups") {
    ChannelSpec spec = siso_spec(16, 8);
    spec.support_model = SupportModel::clustered;
    spec.num_clusters = 4;
    spec.cluster_width = 2;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const SparseChannel ch = generate_channel(spec, seed);
        CHECK(ch.support.size() == 8);
        // Runs separated by gaps > 1 can only merge, never split, so the
        // group count is at most the cluster count.
        int groups = 1;
        for (std::size_t i = 1; i < ch.support.size(); ++i)
            if (ch.support[i] - ch.support[i - 1] > 1)
                ++groups;
        CHECK(groups <= 4);
    }
}

TEST_CASE("generate_channel: clustered MIMO shares supports across pairs by default") {
    ChannelSpec spec = siso_spec(32, 6);
    spec.num_tx = 2;
    spec.num_rx = 2;
    spec.support_model = SupportModel::clustered;
    spec.num_clusters = 3;
    spec.cluster_width = 4;
    const SparseChannel ch = generate_channel(spec, 5);
    REQUIRE(ch.support.size() == 4 * 6);
    std::set<int> first;
    for (int idx : ch.support)
        if (idx < 32)
            first.insert(idx);
    for (int idx : ch.support)
        CHECK(first.count(idx % 32) == 1);

    spec.shared_cluster_supports = false;
    const SparseChannel indep = generate_channel(spec, 5);
    CHECK(indep.support.size() == 4 * 6);
}

TEST_CASE("generate_channel: per-pair counts in MIMO") {
    ChannelSpec spec = siso_spec(50, 3);
    spec.num_tx = 3;
    spec.num_rx = 2;
    const SparseChannel ch = generate_channel(spec, 11);
    REQUIRE(ch.support.size() == 6 * 3);
    for (int p = 0; p < 6; ++p) {
        int count = 0;
        for (int idx : ch.support)
            if (idx / 50 == p)
                ++count;
        CHECK(count == 3);
        double peak = 0.0;
        for (int t = 0; t < 50; ++t)
            peak = std::max(peak, std::abs(ch.entries[p * 50 + t]));
        CHECK(peak == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("generate_channel: determinism and seed sensitivity") {
    ChannelSpec spec = siso_spec(64, 4);
    spec.num_tx = 2;
    const SparseChannel a = generate_channel(spec, 42);
    const SparseChannel b = generate_channel(spec, 42);
    REQUIRE(a.entries.size() == b.entries.size());
    for (Eigen::Index i = 0; i < a.entries.size(); ++i)
        CHECK(a.entries[i] == b.entries[i]); // bit-for-bit
    CHECK(a.support == b.support);

    const SparseChannel c = generate_channel(spec, 43);
    CHECK(a.support != c.support);
}

TEST_CASE("generate_channel: invalid specs are rejected") {
    CHECK_THROWS_AS(generate_channel(siso_spec(4, 5), 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_channel(siso_spec(0, 0), 1), std::invalid_argument);
    ChannelSpec spec = siso_spec(10, 6);
    spec.support_model = SupportModel::clustered;
    spec.num_clusters = 8; // more clusters than K
    spec.cluster_width = 1;
    CHECK_THROWS_AS(generate_channel(spec, 1), std::invalid_argument);
    spec.num_clusters = 4;
    spec.cluster_width = 5; // centers cannot fit
    CHECK_THROWS_AS(generate_channel(spec, 1), std::invalid_argument);
}

TEST_CASE("generate_channel: raw nonzero statistics match CN(0,1)") {
    ChannelSpec spec = siso_spec(8, 4);
    spec.normalize_peak = false;
    double sum_re = 0.0, sum_im = 0.0, sum_mag2 = 0.0;
    int n = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        const SparseChannel ch = generate_channel(spec, seed);
        for (int idx : ch.support) {
            sum_re += ch.entries[idx].real();
            sum_im += ch.entries[idx].imag();
            sum_mag2 += std::norm(ch.entries[idx]);
            ++n;
        }
    }
    REQUIRE(n == 40000);
    // Component variance is 1/2, so the mean has std 1/sqrt(2n); |h|^2 has
    // unit variance, so the mean magnitude-square has std 1/sqrt(n).
    const double mean_tol = 3.0 / std::sqrt(2.0 * n);
    CHECK(std::abs(sum_re / n) < mean_tol);
    CHECK(std::abs(sum_im / n) < mean_tol);
    CHECK(std::abs(sum_mag2 / n - 1.0) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("rsnr: arithmetic, sentinel and error cases") {
    Eigen::VectorXcd h(3), est(3);
    h << 1.0, 0.0, 0.0;
    est << 0.9, 0.0, 0.0;
    Rsnr r = rsnr(h, est);
    CHECK(r.linear == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(r.db == doctest::Approx(20.0).epsilon(1e-12));
    CHECK_FALSE(r.exact);

    r = rsnr(h, h);
    CHECK(r.exact);
    CHECK(std::isinf(r.linear));
    CHECK(std::isinf(r.db));

    Eigen::VectorXcd h2(2), zero(2);
    h2 << 1.0, 0.0;
    zero.setZero();
    r = rsnr(h2, zero);
    CHECK(r.linear == doctest::Approx(1.0));
    CHECK(r.db == doctest::Approx(0.0));

    CHECK_THROWS_AS(rsnr(zero, h2), std::domain_error);
    Eigen::VectorXcd longer(3);
    CHECK_THROWS_AS(rsnr(h2, longer), std::invalid_argument);
}

TEST_CASE("rsnr: scaled estimate identity 1/|1-alpha|^2") {
    const SparseChannel ch = generate_channel(siso_spec(40, 6), 3);
    for (const std::complex<double> alpha :
         {std::complex<double>(0.5, 0.0), std::complex<double>(2.0, 0.0),
          std::complex<double>(1.0, 1.0), std::complex<double>(-0.3, 0.7)}) {
        const Rsnr r = rsnr(ch.entries, alpha * ch.entries);
        CHECK(r.linear == doctest::Approx(1.0 / std::norm(1.0 - alpha)).epsilon(1e-12));
    }
}

TEST_CASE("support_metrics: set comparisons") {
    SupportMetrics m = support_metrics({1, 5}, {1, 5});
    CHECK(m.exact);
    CHECK(m.hits == 2);
    CHECK(m.misses == 0);
    CHECK(m.false_alarms == 0);

    m = support_metrics({1, 5}, {1, 7});
    CHECK_FALSE(m.exact);
    CHECK(m.hits == 1);
    CHECK(m.misses == 1);
    CHECK(m.false_alarms == 1);

    m = support_metrics({1, 5}, {1, 5, 9});
    CHECK_FALSE(m.exact);
    CHECK(m.hits == 2);
    CHECK(m.misses == 0);
    CHECK(m.false_alarms == 1);
}
