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

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace fewbit {

enum class SupportModel { uniform, clustered };

/// Geometry and statistics of a sparse multipath channel. One length-N
/// sub-vector per transmit-receive antenna pair, each with exactly K
/// nonzero taps.
struct ChannelSpec {
    int taps = 0;     ///< N, taps per antenna pair
    int sparsity = 0; ///< K, nonzero taps per antenna pair
    int num_tx = 1;   ///< Nt
    int num_rx = 1;   ///< Nr

    SupportModel support_model = SupportModel::uniform;
    int num_clusters = 0;  ///< clustered model only
    int cluster_width = 0; ///< minimum separation between cluster centers

    /// Scale each sub-vector so its largest entry has magnitude 1.
    bool normalize_peak = true;
    /// Scale the whole stacked vector by its global peak instead.
    bool normalize_global = false;
    /// Clustered model: reuse one support across all antenna pairs
    /// (tap values stay independent). When false each pair draws its own.
    bool shared_cluster_supports = true;

    int num_pairs() const { return num_tx * num_rx; }
    int dim() const { return num_tx * num_rx * taps; }

    /// Throws std::invalid_argument when the spec is inconsistent
    /// (K > N, cluster overflow, non-positive dimensions).
    void validate() const;
};

/// A realized channel: stacked complex taps, pair-major layout
/// [h_11, ..., h_Nt1, ..., h_1Nr, ..., h_NtNr], plus its exact support.
struct SparseChannel {
    Eigen::VectorXcd entries; ///< length Nt*Nr*N, zero off the support
    std::vector<int> support; ///< sorted global indices of the nonzeros
    ChannelSpec spec;
};

/// Draws a sparse channel. Supports are uniform without replacement or
/// clustered; nonzero values are i.i.d. CN(0,1) before normalization.
/// Deterministic in (spec, seed).
SparseChannel generate_channel(const ChannelSpec& spec, std::uint64_t seed);

/// Reconstruction signal-to-noise ratio: |h|^2 / |h - est|^2.
struct Rsnr {
    double linear = 0.0;
    double db = 0.0;
    bool exact = false; ///< estimate matched exactly; linear/db are +infinity
};

/// Throws std::domain_error when the true channel is all-zero. An exact
/// match returns the +infinity sentinel rather than failing, so Monte
/// Carlo aggregation can clamp it.
Rsnr rsnr(const Eigen::VectorXcd& true_channel, const Eigen::VectorXcd& estimate);

struct SupportMetrics {
    bool exact = false;
    int hits = 0;
    int misses = 0;
    int false_alarms = 0;
};

SupportMetrics support_metrics(const std::vector<int>& true_support,
                               const std::vector<int>& estimated_support);

} // namespace fewbit
