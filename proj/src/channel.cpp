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

#include "fewbit/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

#include "fewbit/rng.hpp"

namespace fewbit {

void ChannelSpec::validate() const {
    if (taps < 1 || sparsity < 1 || num_tx < 1 || num_rx < 1)
        throw std::invalid_argument("ChannelSpec: N, K, Nt, Nr must all be positive.");
    if (sparsity > taps)
        throw std::invalid_argument("ChannelSpec: sparsity K=" + std::to_string(sparsity) +
                                    " exceeds taps N=" + std::to_string(taps) + ".");
    if (support_model == SupportModel::clustered) {
        if (num_clusters < 1 || cluster_width < 1)
            throw std::invalid_argument("ChannelSpec: clustered model needs positive "
                                        "num_clusters and cluster_width.");
        if (num_clusters > sparsity)
            throw std::invalid_argument("ChannelSpec: num_clusters exceeds K.");
        // Centers are spaced at least cluster_width apart inside [0, N).
        if (taps - (num_clusters - 1) * cluster_width < 1)
            throw std::invalid_argument("ChannelSpec: " + std::to_string(num_clusters) +
                                        " cluster centers with minimum separation " +
                                        std::to_string(cluster_width) + " do not fit in [0, " +
                                        std::to_string(taps) + ").");
    }
}

namespace {

// Cluster centers uniform in [0, N) with minimum pairwise separation w:
// draw sorted offsets in the reduced range and re-expand.
std::vector<int> draw_cluster_centers(int n, int nc, int w, Rng& rng) {
    const int range = n - (nc - 1) * w;
    std::vector<int> centers(static_cast<std::size_t>(nc));
    for (int k = 0; k < nc; ++k)
        centers[static_cast<std::size_t>(k)] = rng.next_int(range);
    std::sort(centers.begin(), centers.end());
    for (int k = 0; k < nc; ++k)
        centers[static_cast<std::size_t>(k)] += k * w;
    return centers;
}

// Round-robin tap placement around each center: offsets 0, +1, -1, +2, ...
// until k taps are placed; positions already taken or out of range are
// skipped. Terminates because k <= n.
std::vector<int> clustered_support(int n, int k, int nc, int w, Rng& rng) {
    const std::vector<int> centers = draw_cluster_centers(n, nc, w, rng);
    std::set<int> taken;
    int offset_rank = 0;
    while (static_cast<int>(taken.size()) < k) {
        const int off = (offset_rank % 2 == 0) ? offset_rank / 2 : -(offset_rank / 2 + 1);
        for (int c = 0; c < nc && static_cast<int>(taken.size()) < k; ++c) {
            const int pos = centers[static_cast<std::size_t>(c)] + off;
            if (pos >= 0 && pos < n)
                taken.insert(pos);
        }
        ++offset_rank;
    }
    return {taken.begin(), taken.end()};
}

} // namespace

SparseChannel generate_channel(const ChannelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);

    const int n = spec.taps;
    const int k = spec.sparsity;
    const int pairs = spec.num_pairs();

    SparseChannel out;
    out.spec = spec;
    out.entries = Eigen::VectorXcd::Zero(spec.dim());
    out.support.reserve(static_cast<std::size_t>(pairs * k));

    std::vector<int> shared;
    if (spec.support_model == SupportModel::clustered && spec.shared_cluster_supports)
        shared = clustered_support(n, k, spec.num_clusters, spec.cluster_width, rng);

    for (int p = 0; p < pairs; ++p) {
        std::vector<int> supp;
        if (spec.support_model == SupportModel::uniform)
            supp = rng.sample_without_replacement(n, k);
        else
            supp = spec.shared_cluster_supports
                       ? shared
                       : clustered_support(n, k, spec.num_clusters, spec.cluster_width, rng);

        double peak = 0.0;
        for (int idx : supp) {
            const std::complex<double> v = rng.next_cnormal();
            out.entries[p * n + idx] = v;
            peak = std::max(peak, std::abs(v));
        }
        if (spec.normalize_peak && !spec.normalize_global && peak > 0.0)
            out.entries.segment(p * n, n) /= peak;
        for (int idx : supp)
            out.support.push_back(p * n + idx);
    }

    if (spec.normalize_global) {
        const double peak = out.entries.cwiseAbs().maxCoeff();
        if (peak > 0.0)
            out.entries /= peak;
    }

    std::sort(out.support.begin(), out.support.end());
    return out;
}

Rsnr rsnr(const Eigen::VectorXcd& true_channel, const Eigen::VectorXcd& estimate) {
    if (true_channel.size() != estimate.size())
        throw std::invalid_argument("rsnr: vectors must have equal length.");
    const double signal = true_channel.squaredNorm();
    if (signal == 0.0)
        throw std::domain_error("rsnr: true channel is all-zero.");
    const double err = (true_channel - estimate).squaredNorm();
    Rsnr r;
    if (err == 0.0) {
        r.linear = std::numeric_limits<double>::infinity();
        r.db = std::numeric_limits<double>::infinity();
        r.exact = true;
        return r;
    }
    r.linear = signal / err;
    r.db = 10.0 * std::log10(r.linear);
    return r;
}

SupportMetrics support_metrics(const std::vector<int>& true_support,
                               const std::vector<int>& estimated_support) {
    std::set<int> truth(true_support.begin(), true_support.end());
    std::set<int> est(estimated_support.begin(), estimated_support.end());
    SupportMetrics m;
    for (int idx : est)
        truth.count(idx) ? ++m.hits : ++m.false_alarms;
    m.misses = static_cast<int>(truth.size()) - m.hits;
    m.exact = (m.misses == 0 && m.false_alarms == 0);
    return m;
}

} // namespace fewbit
