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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fewbit/harness.hpp"
#include "fewbit/rng.hpp"

namespace {

using fewbit::ExperimentConfig;

struct CommonOptions {
    std::string config_path;
    std::string out_dir = "out";
    bool strict = false;
    bool timing = false;
    bool records = false;
};

// Flags mirror the config fields; values given on the command line override
// the config file.
void add_config_flags(CLI::App* cmd, ExperimentConfig& cfg, CommonOptions& common) {
    cmd->add_option("--config", common.config_path, "JSON config file");
    cmd->add_option("--out", common.out_dir, "output directory");
    cmd->add_flag("--strict", common.strict, "exit nonzero when any cell is infeasible");
    cmd->add_flag("--records", common.records, "also write per-trial records.csv");
    cmd->add_flag("--timing", common.timing,
                  "include wall-clock columns (breaks byte reproducibility)");

    cmd->add_option("--nt", cfg.num_tx, "transmit antennas");
    cmd->add_option("--nr", cfg.num_rx, "receive antennas");
    cmd->add_option("--taps", cfg.taps, "channel taps per antenna pair (N)");
    cmd->add_option("--sparsity", cfg.sparsity, "true nonzeros per pair (K)");
    cmd->add_option("--khat", cfg.sparsity_estimate, "sparsity handed to BIHT (K-hat)");
    cmd->add_option("--budget-mw", [&cfg](const std::vector<std::string>& v) {
        cfg.power_budget_w = std::stod(v.front()) * 1e-3;
        return true;
    }, "ADC power budget in mW");
    cmd->add_option("--walden-fj", [&cfg](const std::vector<std::string>& v) {
        cfg.walden_c_j = std::stod(v.front()) * 1e-15;
        return true;
    }, "Walden constant in fJ per conversion step");
    cmd->add_option("--duration-ns", [&cfg](const std::vector<std::string>& v) {
        cfg.duration_s = std::stod(v.front()) * 1e-9;
        return true;
    }, "single-transmitter slot duration in ns");
    cmd->add_option("--bits", cfg.bit_depth_grid, "bit-depth grid");
    cmd->add_option("--m-override", cfg.m_override,
                    "explicit sample counts aligned with the bit grid");
    cmd->add_option("--snr", cfg.snr_grid_db, "input SNR grid in dB");
    cmd->add_option("--trials", cfg.trials, "Monte Carlo trials per cell");
    cmd->add_option("--seed", cfg.master_seed, "master seed");
    cmd->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
    cmd->add_option("--rip-samples", cfg.rip_samples, "index sets per RIP probe");
    cmd->add_flag("--exact-orthogonal",
                  [&cfg](std::int64_t) { cfg.pilot_mode = fewbit::PilotMode::exact_orthogonal; },
                  "use the orthogonal pilot design instead of i.i.d. signs");
    cmd->add_flag("--clustered", [&cfg](std::int64_t) {
        cfg.support_model = fewbit::SupportModel::clustered;
    }, "clustered channel supports");
    cmd->add_option("--clusters", cfg.num_clusters, "number of clusters");
    cmd->add_option("--cluster-width", cfg.cluster_width, "minimum cluster separation");
    cmd->add_flag("--no-peak-norm", [&cfg](std::int64_t) { cfg.normalize_peak = false; },
                  "skip per-pair peak normalization");
    cmd->add_flag("--no-ls", [&cfg](std::int64_t) { cfg.with_least_squares = false; },
                  "skip the least-squares baseline");
    cmd->add_flag("--no-bound", [&cfg](std::int64_t) { cfg.with_bound = false; },
                  "skip the oracle bound computation");
    cmd->add_flag("--separate-real-imag",
                  [&cfg](std::int64_t) { cfg.separate_real_imag = true; },
                  "run BIHT separately on the real and imaginary systems");
}

ExperimentConfig resolve_config(const CLI::App* cmd, const ExperimentConfig& overrides,
                                const CommonOptions& common) {
    if (common.config_path.empty())
        return overrides;
    ExperimentConfig cfg = fewbit::load_config_file(common.config_path);
    // Re-apply every flag the user actually passed on top of the file.
    ExperimentConfig merged = cfg;
    const auto passed = [cmd](const std::string& name) {
        const CLI::Option* opt = cmd->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    if (passed("--nt")) merged.num_tx = overrides.num_tx;
    if (passed("--nr")) merged.num_rx = overrides.num_rx;
    if (passed("--taps")) merged.taps = overrides.taps;
    if (passed("--sparsity")) merged.sparsity = overrides.sparsity;
    if (passed("--khat")) merged.sparsity_estimate = overrides.sparsity_estimate;
    if (passed("--budget-mw")) merged.power_budget_w = overrides.power_budget_w;
    if (passed("--walden-fj")) merged.walden_c_j = overrides.walden_c_j;
    if (passed("--duration-ns")) merged.duration_s = overrides.duration_s;
    if (passed("--bits")) merged.bit_depth_grid = overrides.bit_depth_grid;
    if (passed("--m-override")) merged.m_override = overrides.m_override;
    if (passed("--snr")) merged.snr_grid_db = overrides.snr_grid_db;
    if (passed("--trials")) merged.trials = overrides.trials;
    if (passed("--seed")) merged.master_seed = overrides.master_seed;
    if (passed("--threads")) merged.threads = overrides.threads;
    if (passed("--rip-samples")) merged.rip_samples = overrides.rip_samples;
    if (passed("--exact-orthogonal")) merged.pilot_mode = overrides.pilot_mode;
    if (passed("--clustered")) merged.support_model = overrides.support_model;
    if (passed("--clusters")) merged.num_clusters = overrides.num_clusters;
    if (passed("--cluster-width")) merged.cluster_width = overrides.cluster_width;
    if (passed("--no-peak-norm")) merged.normalize_peak = overrides.normalize_peak;
    if (passed("--no-ls")) merged.with_least_squares = overrides.with_least_squares;
    if (passed("--no-bound")) merged.with_bound = overrides.with_bound;
    if (passed("--separate-real-imag"))
        merged.separate_real_imag = overrides.separate_real_imag;
    return merged;
}

void ensure_dir(const std::string& dir) { std::filesystem::create_directories(dir); }

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

template <typename Writer>
void write_csv(const std::string& path, Writer&& writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path + "'");
    writer(out);
}

void print_warnings(const ExperimentConfig& cfg) {
    for (const std::string& w : fewbit::config_warnings(cfg))
        std::cerr << "warning: " << w << "\n";
}

int finish_run(const ExperimentConfig& cfg, const std::string& hash,
               const std::vector<std::string>& outputs, const CommonOptions& common,
               bool any_infeasible) {
    write_file(common.out_dir + "/manifest.json", fewbit::manifest_json(cfg, hash, outputs));
    std::cout << "config " << hash << " -> " << common.out_dir << "\n";
    if (any_infeasible) {
        std::cerr << (common.strict ? "error" : "warning")
                  << ": some (bit depth, budget) cells are infeasible (M = 0)\n";
        if (common.strict)
            return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fewbit: sparse channel estimation under few-bit ADC budgets"};
    app.require_subcommand(1);

    ExperimentConfig cfg;
    CommonOptions common;

    // sweep -------------------------------------------------------------
    CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over (bit depth, SNR)");
    add_config_flags(sweep, cfg, common);

    // table2 ------------------------------------------------------------
    CLI::App* table2 = app.add_subcommand("table2", "ADC budget table (f_s and M per bit depth)");
    double t2_budget_mw = 20.0, t2_walden_fj = 494.0, t2_duration_ns = 100.0;
    std::vector<int> t2_bits = {2, 3, 4, 5, 6, 7, 8};
    std::vector<int> t2_paper_m;
    bool t2_verbatim = false;
    std::string t2_out = "out";
    table2->add_option("--budget-mw", t2_budget_mw, "power budget in mW");
    table2->add_option("--walden-fj", t2_walden_fj, "Walden constant in fJ");
    table2->add_option("--duration-ns", t2_duration_ns, "sampling duration in ns");
    table2->add_option("--bits", t2_bits, "bit depths");
    table2->add_option("--paper-m", t2_paper_m, "reference sample counts (aligned with --bits)");
    table2->add_flag("--verbatim", t2_verbatim, "use the reference sample counts as effective M");
    table2->add_option("--out", t2_out, "output directory");

    // bound ---------------------------------------------------------------
    CLI::App* bound = app.add_subcommand("bound", "oracle RSNR bound overlay per (bit, SNR)");
    add_config_flags(bound, cfg, common);

    // khat ----------------------------------------------------------------
    CLI::App* khat = app.add_subcommand("khat", "RSNR vs K-hat at one (bit depth, SNR) cell");
    std::vector<int> khat_grid;
    int khat_bit = 3;
    double khat_snr = 5.0;
    add_config_flags(khat, cfg, common);
    khat->add_option("--khat-grid", khat_grid, "K-hat values to compare")->required();
    khat->add_option("--bit", khat_bit, "bit depth for the cell");
    khat->add_option("--cell-snr", khat_snr, "input SNR in dB for the cell");

    // rip-probe -------------------------------------------------------------
    CLI::App* rip = app.add_subcommand("rip-probe", "sampled RIP constant of the pilot system");
    int rip_bit = 3, rip_order = 0, rip_samples_cli = 0;
    bool rip_export_matrix = false;
    add_config_flags(rip, cfg, common);
    rip->add_option("--bit", rip_bit, "bit depth fixing the sample count");
    rip->add_option("--order", rip_order, "sparsity order (default Nt*Nr*K)");
    rip->add_option("--samples", rip_samples_cli, "sampled index sets (default rip_samples)");
    rip->add_flag("--export-matrix", rip_export_matrix,
                  "also write the dense measurement matrix as CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (table2->parsed()) {
            ensure_dir(t2_out);
            const auto rows = fewbit::make_table2(t2_budget_mw * 1e-3, t2_walden_fj * 1e-15,
                                                  t2_duration_ns * 1e-9, t2_bits, t2_verbatim,
                                                  t2_paper_m);
            write_csv(t2_out + "/table2.csv",
                      [&rows](std::ostream& os) { fewbit::write_table2_csv(os, rows); });
            fewbit::write_table2_csv(std::cout, rows);
            bool any_infeasible = false;
            for (const auto& row : rows)
                any_infeasible |= !row.feasible;
            return any_infeasible && common.strict ? 2 : 0;
        }

        if (sweep->parsed()) {
            const ExperimentConfig run_cfg = resolve_config(sweep, cfg, common);
            print_warnings(run_cfg);
            ensure_dir(common.out_dir);
            const fewbit::SweepResult result = fewbit::run_sweep(run_cfg);
            std::vector<std::string> outputs = {"aggregate.csv", "optimal_bits.csv"};
            write_csv(common.out_dir + "/aggregate.csv",
                      [&](std::ostream& os) { fewbit::write_aggregate_csv(os, result); });
            write_csv(common.out_dir + "/optimal_bits.csv",
                      [&](std::ostream& os) { fewbit::write_optimal_bits_csv(os, result); });
            if (common.records) {
                outputs.push_back("records.csv");
                write_csv(common.out_dir + "/records.csv", [&](std::ostream& os) {
                    fewbit::write_records_csv(os, result, common.timing);
                });
            }
            return finish_run(run_cfg, result.hash, outputs, common, result.any_infeasible);
        }

        if (bound->parsed()) {
            const ExperimentConfig run_cfg = resolve_config(bound, cfg, common);
            print_warnings(run_cfg);
            ensure_dir(common.out_dir);
            fewbit::SweepResult full;
            const auto rows = fewbit::run_bound_overlay(run_cfg, &full);
            write_csv(common.out_dir + "/bound_overlay.csv", [&](std::ostream& os) {
                fewbit::write_bound_overlay_csv(os, full.hash, rows);
            });
            return finish_run(run_cfg, full.hash, {"bound_overlay.csv"}, common,
                              full.any_infeasible);
        }

        if (khat->parsed()) {
            const ExperimentConfig run_cfg = resolve_config(khat, cfg, common);
            print_warnings(run_cfg);
            ensure_dir(common.out_dir);
            const fewbit::KhatResult result =
                fewbit::run_khat(run_cfg, khat_grid, khat_bit, khat_snr);
            write_csv(common.out_dir + "/khat_records.csv",
                      [&](std::ostream& os) { fewbit::write_khat_records_csv(os, result); });
            write_csv(common.out_dir + "/khat_aggregate.csv",
                      [&](std::ostream& os) { fewbit::write_khat_aggregate_csv(os, result); });
            return finish_run(result.config, result.hash,
                              {"khat_records.csv", "khat_aggregate.csv"}, common, false);
        }

        if (rip->parsed()) {
            const ExperimentConfig run_cfg = resolve_config(rip, cfg, common);
            ensure_dir(common.out_dir);
            const int order = rip_order > 0
                                  ? rip_order
                                  : run_cfg.num_tx * run_cfg.num_rx * run_cfg.sparsity;
            const int samples = rip_samples_cli > 0 ? rip_samples_cli : run_cfg.rip_samples;
            const fewbit::RipEstimate est =
                fewbit::probe_config_rip(run_cfg, rip_bit, order, samples);
            const std::string hash = fewbit::config_hash(run_cfg);
            write_csv(common.out_dir + "/rip.csv",
                      [&](std::ostream& os) { fewbit::write_rip_csv(os, hash, est); });
            fewbit::write_rip_csv(std::cout, hash, est);
            if (rip_export_matrix) {
                // Dense export for offline inspection; intended for small
                // geometries.
                const std::uint64_t seed = fewbit::splitmix64(
                    run_cfg.master_seed ^ 0x5249502d50524231ULL ^
                    static_cast<std::uint64_t>(rip_bit));
                // Rebuild the probed model so the export matches the report.
                const auto bits = run_cfg.bit_depth_grid;
                double fs = run_cfg.power_budget_w /
                            (run_cfg.walden_c_j * std::ldexp(1.0, rip_bit));
                int m = static_cast<int>(std::floor(run_cfg.slot_duration_s() * fs));
                if (!run_cfg.m_override.empty()) {
                    const auto it = std::find(bits.begin(), bits.end(), rip_bit);
                    if (it != bits.end())
                        m = run_cfg.m_override[static_cast<std::size_t>(it - bits.begin())];
                }
                const fewbit::PilotSet pilots = fewbit::generate_pilots(
                    run_cfg.num_tx, m, run_cfg.taps, run_cfg.pilot_mode, seed);
                const fewbit::MeasurementModel model =
                    fewbit::build_measurement_model(pilots, run_cfg.num_rx);
                const Eigen::MatrixXcd dense = model.mimo_matrix();
                std::ofstream os(common.out_dir + "/measurement_matrix.csv", std::ios::binary);
                for (Eigen::Index r = 0; r < dense.rows(); ++r) {
                    for (Eigen::Index c = 0; c < dense.cols(); ++c)
                        os << (c ? "," : "") << dense(r, c).real();
                    os << "\n";
                }
            }
            return 0;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
