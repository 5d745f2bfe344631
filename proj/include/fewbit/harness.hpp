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
#include <iosfwd>
#include <string>
#include <vector>

#include "fewbit/adc.hpp"
#include "fewbit/channel.hpp"
#include "fewbit/estimator.hpp"
#include "fewbit/pilot.hpp"

namespace fewbit {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exact reconstructions carry an infinite RSNR sentinel; aggregation
/// clamps them here so means stay finite.
inline constexpr double kRsnrClampDb = 300.0;

/// Full description of one Monte Carlo experiment. The pair (config,
/// master_seed) determines every output byte; `threads` only schedules the
/// work and is excluded from the config hash.
struct ExperimentConfig {
    // Geometry.
    int num_tx = 1;
    int num_rx = 1;
    int taps = 200;             ///< N per antenna pair
    int sparsity = 5;           ///< true K per pair
    int sparsity_estimate = 5;  ///< K-hat handed to the support stage
    PilotMode pilot_mode = PilotMode::iid_random;
    SupportModel support_model = SupportModel::uniform;
    int num_clusters = 0;
    int cluster_width = 0;
    bool normalize_peak = true;
    bool shared_cluster_supports = true;

    // ADC budget. Each receiver is trained in its own slot; the slot
    // duration scales with the transmitter count so the per-slot unknowns
    // stay proportionally covered (total duration = Nr * Nt * duration_s).
    double power_budget_w = 0.02;
    double walden_c_j = 494e-15;
    double duration_s = 100e-9; ///< single-transmitter slot duration
    std::vector<int> bit_depth_grid = {2, 3, 4, 5, 6, 7, 8};
    std::vector<int> m_override;  ///< optional, aligned with bit_depth_grid

    // Sweep.
    std::vector<double> snr_grid_db = {-10.0, -5.0, 0.0, 5.0, 15.0};
    int trials = 200;
    std::uint64_t master_seed = 1;

    // Estimator.
    double biht_step = 1e-5;
    bool biht_auto_step = false;
    int biht_max_iters = 100;
    int biht_stall_window = 10;
    bool separate_real_imag = false;

    // Optional stages.
    bool with_biht = true;
    bool with_least_squares = true;
    bool with_bound = true;
    int rip_samples = 300;

    int threads = 0; ///< 0 = hardware concurrency

    void validate() const;
    ChannelSpec channel_spec() const;
    double slot_duration_s() const { return duration_s * num_tx; }
};

/// Non-fatal configuration advice (e.g. K-hat below the true sparsity).
std::vector<std::string> config_warnings(const ExperimentConfig& config);

std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

/// FNV-1a over the canonical config serialization (threads excluded).
std::string config_hash(const ExperimentConfig& config);

/// Per-cell derived quantities shared by every trial of that cell.
struct CellPlan {
    int bit_depth = 0;
    double snr_db = 0.0;
    int bit_index = 0;
    int snr_index = 0;
    AdcConfig adc;
    bool feasible = true;
    double signal_var = 0.0;       ///< per complex measurement sample
    double noise_var = 0.0;        ///< complex noise variance sigma_c^2
    double measurement_std = 0.0;  ///< per real component, quantizer scale
    double effective_noise_var = 0.0; ///< real-component noise + quantizer MSE
    QuantizerModel quantizer;
    double delta_hat = 0.0; ///< probed at order Nt*Nr*K, structured sampling
    bool delta_valid = false;
};

std::vector<CellPlan> plan_cells(const ExperimentConfig& config);

struct TrialRecord {
    std::string hash;
    int bit_depth = 0;
    double snr_db = 0.0;
    int trial = 0;
    Method method = Method::biht_linear;
    double rsnr_db = 0.0; ///< clamped at kRsnrClampDb when exact
    bool rsnr_exact = false;
    SupportMetrics support;
    int iterations = 0;
    bool converged = true;
    double bound_db = 0.0; ///< NaN unless computed (oracle rows)
    double wall_time_us = 0.0;
};

struct AggregateRow {
    std::string hash;
    int bit_depth = 0;
    double snr_db = 0.0;
    Method method = Method::biht_linear;
    int trials = 0;
    double mean_rsnr_db = 0.0;
    double ci95_db = 0.0;
    double exact_support_rate = 0.0;
    double mean_iterations = 0.0;
    double bound_db = 0.0; ///< mean over realized supports; NaN when absent
    bool feasible = true;
    int sample_count = 0;
    double sampling_rate_hz = 0.0;
    double noise_std = 0.0;
    double quantizer_mse = 0.0;
};

struct OptimalBitRow {
    double snr_db = 0.0;
    int bit_depth = 0;
    double mean_rsnr_db = 0.0;
};

struct SweepResult {
    ExperimentConfig config;
    std::string hash;
    std::vector<CellPlan> cells;
    std::vector<TrialRecord> records;
    std::vector<AggregateRow> aggregate;
    std::vector<OptimalBitRow> optimal_bits; ///< argmax-B per SNR for BIHT
    bool any_infeasible = false;
};

/// Runs the full (bit depth x SNR x trial) grid. Infeasible cells are
/// carried through as flagged aggregate rows, never dropped.
SweepResult run_sweep(const ExperimentConfig& config);

/// Order-independent reduction: records are re-sorted into a canonical
/// order before accumulation, and every record must carry the same config
/// hash (std::invalid_argument otherwise).
std::vector<AggregateRow> aggregate_records(const std::vector<CellPlan>& cells,
                                            const std::vector<TrialRecord>& records,
                                            const std::string& hash);

// ---------------------------------------------------------------------------
// ADC budget table

struct Table2Row {
    int bit_depth = 0;
    double sampling_rate_hz = 0.0;
    int m_formula = 0;        ///< floor(T * f_s)
    int m_paper = -1;         ///< reference sample count, -1 when unknown
    int m_effective = 0;      ///< the one downstream stages use
    bool discrepancy = false; ///< formula and reference differ beyond rounding
    bool feasible = true;
};

/// Reference sample counts commonly quoted for the canonical 20 mW budget
/// at B = 2..8; the formula row disagrees for B >= 6.
extern const std::vector<int> kReferenceSampleCounts;

/// Budget table for the given bit depths. verbatim selects the reference
/// sample counts (paper_m, or the canonical reference when it applies) as
/// the effective M; otherwise the formula value is used. A discrepancy is
/// flagged when formula and reference differ by more than 5 percent.
std::vector<Table2Row> make_table2(double power_budget_w, double walden_c_j, double duration_s,
                                   const std::vector<int>& bit_depths, bool verbatim,
                                   const std::vector<int>& paper_m = {});

// ---------------------------------------------------------------------------
// K-hat robustness (paired seeds across the K-hat grid)

struct KhatRecord {
    int khat = 0;
    TrialRecord record;
};

struct KhatAggregateRow {
    std::string hash;
    int khat = 0;
    int bit_depth = 0;
    double snr_db = 0.0;
    int trials = 0;
    double mean_rsnr_db = 0.0;
    double ci95_db = 0.0;
    double exact_support_rate = 0.0;
};

struct KhatResult {
    ExperimentConfig config;
    std::string hash;
    std::vector<KhatRecord> records;
    std::vector<KhatAggregateRow> aggregate;
};

/// Reruns the BIHT estimator over the K-hat grid at one (bit depth, SNR)
/// cell with identical per-trial randomness, so differences isolate the
/// sparsity target.
KhatResult run_khat(const ExperimentConfig& config, const std::vector<int>& khat_grid,
                    int bit_depth, double snr_db);

// ---------------------------------------------------------------------------
// Bound overlay and RIP probing

struct BoundOverlayRow {
    int bit_depth = 0;
    double snr_db = 0.0;
    double bound_db = 0.0;
    double oracle_mean_rsnr_db = 0.0;
};

/// Oracle-only sweep reduced to (snr, bit depth, bound, empirical mean).
std::vector<BoundOverlayRow> run_bound_overlay(const ExperimentConfig& config,
                                               SweepResult* full = nullptr);

/// Probes the block-structured system built from this config at the given
/// bit depth (sample count from the budget or override).
RipEstimate probe_config_rip(const ExperimentConfig& config, int bit_depth,
                             int sparsity_order, int num_samples);

// ---------------------------------------------------------------------------
// Serialization

void write_records_csv(std::ostream& os, const SweepResult& result, bool with_timing = false);
void write_aggregate_csv(std::ostream& os, const SweepResult& result);
void write_optimal_bits_csv(std::ostream& os, const SweepResult& result);
void write_table2_csv(std::ostream& os, const std::vector<Table2Row>& rows);
void write_bound_overlay_csv(std::ostream& os, const std::string& hash,
                             const std::vector<BoundOverlayRow>& rows);
void write_khat_records_csv(std::ostream& os, const KhatResult& result);
void write_khat_aggregate_csv(std::ostream& os, const KhatResult& result);
void write_rip_csv(std::ostream& os, const std::string& hash, const RipEstimate& estimate);

/// Run manifest: tool version, config echo, hash, output list. Contains no
/// timestamps so reruns stay byte-identical.
std::string manifest_json(const ExperimentConfig& config, const std::string& hash,
                          const std::vector<std::string>& outputs);

} // namespace fewbit
