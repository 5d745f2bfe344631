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

#include "fewbit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "json.hpp"

#include "fewbit/bounds.hpp"
#include "fewbit/rng.hpp"

namespace fewbit {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v, int precision = 10) {
    if (std::isnan(v))
        return "";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

void run_parallel(int total, int threads, const std::function<void(int)>& body) {
    if (threads <= 0)
        threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, total));
    if (threads == 1) {
        for (int i = 0; i < total; ++i)
            body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= total)
                return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

// Mean squared magnitude of a peak-normalized tap group. The exact value
// has no convenient closed form, so it is estimated once per group size
// from the model itself with a fixed internal seed and cached.
double normalized_tap_variance(int group_size) {
    static std::map<int, double> cache;
    static std::mutex cache_mutex;
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        const auto it = cache.find(group_size);
        if (it != cache.end())
            return it->second;
    }
    Rng rng(0xC0FFEE0000ULL + static_cast<std::uint64_t>(group_size));
    const int draws = 20000;
    double acc = 0.0;
    std::vector<double> mag2(static_cast<std::size_t>(group_size));
    for (int d = 0; d < draws; ++d) {
        double peak2 = 0.0;
        double total = 0.0;
        for (int k = 0; k < group_size; ++k) {
            const std::complex<double> v = rng.next_cnormal();
            mag2[static_cast<std::size_t>(k)] = std::norm(v);
            peak2 = std::max(peak2, mag2[static_cast<std::size_t>(k)]);
            total += mag2[static_cast<std::size_t>(k)];
        }
        acc += total / peak2;
    }
    const double v = acc / (draws * group_size);
    std::lock_guard<std::mutex> lock(cache_mutex);
    cache.emplace(group_size, v);
    return v;
}

std::uint64_t trial_stream_id(int bit_index, int snr_index, int trial) {
    return (static_cast<std::uint64_t>(bit_index) << 42) |
           (static_cast<std::uint64_t>(snr_index) << 21) | static_cast<std::uint64_t>(trial);
}

constexpr std::uint64_t kRipSeedTag = 0x5249502d50524231ULL;

} // namespace

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
    channel_spec().validate();
    if (sparsity_estimate < 1)
        throw std::invalid_argument("ExperimentConfig: sparsity_estimate must be >= 1.");
    if (power_budget_w <= 0.0 || walden_c_j <= 0.0 || duration_s <= 0.0)
        throw std::invalid_argument("ExperimentConfig: budget, Walden constant and duration "
                                    "must be positive.");
    if (bit_depth_grid.empty() || snr_grid_db.empty())
        throw std::invalid_argument("ExperimentConfig: bit depth and SNR grids must be "
                                    "nonempty.");
    for (int b : bit_depth_grid)
        if (b < 1)
            throw std::invalid_argument("ExperimentConfig: bit depths must be >= 1.");
    if (!m_override.empty() && m_override.size() != bit_depth_grid.size())
        throw std::invalid_argument("ExperimentConfig: m_override must align with "
                                    "bit_depth_grid.");
    if (trials < 1)
        throw std::invalid_argument("ExperimentConfig: trials must be >= 1.");
    if (biht_max_iters < 1 || biht_stall_window < 1)
        throw std::invalid_argument("ExperimentConfig: BIHT iteration limits must be >= 1.");
    if (!(biht_step > 0.0))
        throw std::invalid_argument("ExperimentConfig: BIHT step size must be positive.");
    if (rip_samples < 1)
        throw std::invalid_argument("ExperimentConfig: rip_samples must be >= 1.");
}

ChannelSpec ExperimentConfig::channel_spec() const {
    ChannelSpec spec;
    spec.taps = taps;
    spec.sparsity = sparsity;
    spec.num_tx = num_tx;
    spec.num_rx = num_rx;
    spec.support_model = support_model;
    spec.num_clusters = num_clusters;
    spec.cluster_width = cluster_width;
    spec.normalize_peak = normalize_peak;
    spec.shared_cluster_supports = shared_cluster_supports;
    return spec;
}

std::vector<std::string> config_warnings(const ExperimentConfig& config) {
    std::vector<std::string> warnings;
    if (config.sparsity_estimate < config.sparsity)
        warnings.push_back("sparsity_estimate (" + std::to_string(config.sparsity_estimate) +
                           ") is below the true sparsity (" + std::to_string(config.sparsity) +
                           "); the support stage will under-select.");
    return warnings;
}

namespace {

nlohmann::json config_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["num_tx"] = c.num_tx;
    j["num_rx"] = c.num_rx;
    j["taps"] = c.taps;
    j["sparsity"] = c.sparsity;
    j["sparsity_estimate"] = c.sparsity_estimate;
    j["pilot_mode"] = c.pilot_mode == PilotMode::iid_random ? "iid_random" : "exact_orthogonal";
    j["support_model"] = c.support_model == SupportModel::uniform ? "uniform" : "clustered";
    j["num_clusters"] = c.num_clusters;
    j["cluster_width"] = c.cluster_width;
    j["normalize_peak"] = c.normalize_peak;
    j["shared_cluster_supports"] = c.shared_cluster_supports;
    j["power_budget_mw"] = c.power_budget_w * 1e3;
    j["walden_c_fj"] = c.walden_c_j * 1e15;
    j["duration_ns"] = c.duration_s * 1e9;
    j["bit_depth_grid"] = c.bit_depth_grid;
    j["m_override"] = c.m_override;
    j["snr_grid_db"] = c.snr_grid_db;
    j["trials"] = c.trials;
    j["master_seed"] = c.master_seed;
    j["biht_step"] = c.biht_step;
    j["biht_auto_step"] = c.biht_auto_step;
    j["biht_max_iters"] = c.biht_max_iters;
    j["biht_stall_window"] = c.biht_stall_window;
    j["separate_real_imag"] = c.separate_real_imag;
    j["with_biht"] = c.with_biht;
    j["with_least_squares"] = c.with_least_squares;
    j["with_bound"] = c.with_bound;
    j["rip_samples"] = c.rip_samples;
    j["threads"] = c.threads;
    return j;
}

} // namespace

std::string config_to_json(const ExperimentConfig& config) { return config_json(config).dump(2); }

ExperimentConfig config_from_json_text(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    ExperimentConfig c;
    const auto get = [&j](const char* key, auto fallback) {
        using T = decltype(fallback);
        return j.contains(key) ? j.at(key).get<T>() : fallback;
    };
    c.num_tx = get("num_tx", c.num_tx);
    c.num_rx = get("num_rx", c.num_rx);
    c.taps = get("taps", c.taps);
    c.sparsity = get("sparsity", c.sparsity);
    c.sparsity_estimate = get("sparsity_estimate", c.sparsity_estimate);
    const std::string pilot = get("pilot_mode", std::string("iid_random"));
    if (pilot == "iid_random")
        c.pilot_mode = PilotMode::iid_random;
    else if (pilot == "exact_orthogonal")
        c.pilot_mode = PilotMode::exact_orthogonal;
    else
        throw std::invalid_argument("config: unknown pilot_mode '" + pilot + "'.");
    const std::string support = get("support_model", std::string("uniform"));
    if (support == "uniform")
        c.support_model = SupportModel::uniform;
    else if (support == "clustered")
        c.support_model = SupportModel::clustered;
    else
        throw std::invalid_argument("config: unknown support_model '" + support + "'.");
    c.num_clusters = get("num_clusters", c.num_clusters);
    c.cluster_width = get("cluster_width", c.cluster_width);
    c.normalize_peak = get("normalize_peak", c.normalize_peak);
    c.shared_cluster_supports = get("shared_cluster_supports", c.shared_cluster_supports);
    c.power_budget_w = get("power_budget_mw", c.power_budget_w * 1e3) * 1e-3;
    c.walden_c_j = get("walden_c_fj", c.walden_c_j * 1e15) * 1e-15;
    c.duration_s = get("duration_ns", c.duration_s * 1e9) * 1e-9;
    c.bit_depth_grid = get("bit_depth_grid", c.bit_depth_grid);
    c.m_override = get("m_override", c.m_override);
    c.snr_grid_db = get("snr_grid_db", c.snr_grid_db);
    c.trials = get("trials", c.trials);
    c.master_seed = get("master_seed", c.master_seed);
    c.biht_step = get("biht_step", c.biht_step);
    c.biht_auto_step = get("biht_auto_step", c.biht_auto_step);
    c.biht_max_iters = get("biht_max_iters", c.biht_max_iters);
    c.biht_stall_window = get("biht_stall_window", c.biht_stall_window);
    c.separate_real_imag = get("separate_real_imag", c.separate_real_imag);
    c.with_biht = get("with_biht", c.with_biht);
    c.with_least_squares = get("with_least_squares", c.with_least_squares);
    c.with_bound = get("with_bound", c.with_bound);
    c.rip_samples = get("rip_samples", c.rip_samples);
    c.threads = get("threads", c.threads);
    return c;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("load_config_file: cannot open '" + path + "'.");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return config_from_json_text(buffer.str());
}

std::string config_hash(const ExperimentConfig& config) {
    nlohmann::json j = config_json(config);
    j.erase("threads"); // scheduling detail, not part of the experiment identity
    const std::string canonical = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char byte : canonical) {
        h ^= byte;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Cell planning

RipEstimate probe_config_rip(const ExperimentConfig& config, int bit_depth, int sparsity_order,
                             int num_samples) {
    const auto it =
        std::find(config.bit_depth_grid.begin(), config.bit_depth_grid.end(), bit_depth);
    int m = 0;
    if (!config.m_override.empty() && it != config.bit_depth_grid.end()) {
        m = config.m_override[static_cast<std::size_t>(it - config.bit_depth_grid.begin())];
    } else {
        const double fs =
            config.power_budget_w / (config.walden_c_j * std::ldexp(1.0, bit_depth));
        m = static_cast<int>(std::floor(config.slot_duration_s() * fs));
    }
    if (m < 1)
        throw std::invalid_argument("probe_config_rip: bit depth " + std::to_string(bit_depth) +
                                    " yields no samples under this budget.");
    const std::uint64_t seed =
        splitmix64(config.master_seed ^ kRipSeedTag ^ static_cast<std::uint64_t>(bit_depth));
    const PilotSet pilots =
        generate_pilots(config.num_tx, m, config.taps, config.pilot_mode, seed);
    const MeasurementModel model = build_measurement_model(pilots, config.num_rx);
    return probe_rip(mimo_column_source(model), sparsity_order, num_samples, seed ^ 0x9e37ULL);
}

std::vector<CellPlan> plan_cells(const ExperimentConfig& config) {
    config.validate();
    const double tap_var =
        config.normalize_peak ? normalized_tap_variance(config.sparsity) : 1.0;

    std::vector<CellPlan> cells;
    cells.reserve(config.bit_depth_grid.size() * config.snr_grid_db.size());
    for (std::size_t bi = 0; bi < config.bit_depth_grid.size(); ++bi) {
        const int b = config.bit_depth_grid[bi];
        AdcConfig adc;
        adc.bit_depth = b;
        adc.walden_c_j = config.walden_c_j;
        adc.duration_s = config.slot_duration_s();
        adc.sampling_rate_hz = config.power_budget_w / (config.walden_c_j * std::ldexp(1.0, b));
        adc.sample_count = config.m_override.empty()
                               ? static_cast<int>(std::floor(adc.duration_s * adc.sampling_rate_hz))
                               : config.m_override[bi];
        const bool feasible = adc.sample_count >= 1;

        double delta_hat = kNan;
        bool delta_valid = false;
        if (feasible && config.with_bound) {
            const RipEstimate rip =
                probe_config_rip(config, b, config.num_tx * config.num_rx * config.sparsity,
                                 config.rip_samples);
            delta_hat = rip.delta_hat;
            delta_valid = rip.delta_hat < 1.0;
        }

        for (std::size_t si = 0; si < config.snr_grid_db.size(); ++si) {
            CellPlan cell;
            cell.bit_depth = b;
            cell.bit_index = static_cast<int>(bi);
            cell.snr_db = config.snr_grid_db[si];
            cell.snr_index = static_cast<int>(si);
            cell.adc = adc;
            cell.feasible = feasible;
            cell.delta_hat = delta_hat;
            cell.delta_valid = delta_valid;
            if (feasible) {
                cell.signal_var = config.num_tx * config.sparsity * tap_var /
                                  static_cast<double>(adc.sample_count);
                cell.noise_var = cell.signal_var / std::pow(10.0, cell.snr_db / 10.0);
                cell.measurement_std = std::sqrt((cell.signal_var + cell.noise_var) / 2.0);
                cell.quantizer = design_quantizer(b, cell.measurement_std);
                cell.effective_noise_var = cell.noise_var / 2.0 + cell.quantizer.mse;
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

// ---------------------------------------------------------------------------
// Trial execution

namespace {

TrialRecord make_record(const std::string& hash, const CellPlan& cell, int trial, Method method,
                        const SparseChannel& channel, const EstimationResult& est,
                        double wall_us) {
    TrialRecord rec;
    rec.hash = hash;
    rec.bit_depth = cell.bit_depth;
    rec.snr_db = cell.snr_db;
    rec.trial = trial;
    rec.method = method;
    const Rsnr r = rsnr(channel.entries, est.estimate);
    rec.rsnr_exact = r.exact;
    rec.rsnr_db = r.exact ? kRsnrClampDb : std::min(r.db, kRsnrClampDb);
    rec.support = support_metrics(channel.support, est.support);
    rec.iterations = est.iterations_used;
    rec.converged = est.converged;
    rec.bound_db = kNan;
    rec.wall_time_us = wall_us;
    return rec;
}

std::vector<TrialRecord> run_one_trial(const ExperimentConfig& config, const CellPlan& cell,
                                       const std::string& hash, int trial) {
    using clock = std::chrono::steady_clock;
    Rng rng = Rng::stream(config.master_seed,
                          trial_stream_id(cell.bit_index, cell.snr_index, trial));
    const std::uint64_t pilot_seed = rng.next_u64();
    const std::uint64_t channel_seed = rng.next_u64();

    const PilotSet pilots = generate_pilots(config.num_tx, cell.adc.sample_count, config.taps,
                                            config.pilot_mode, pilot_seed);
    const MeasurementModel model = build_measurement_model(pilots, config.num_rx);
    const SparseChannel channel = generate_channel(config.channel_spec(), channel_seed);

    Eigen::VectorXcd analog = model.apply(channel.entries);
    const double noise_scale = std::sqrt(cell.noise_var);
    for (Eigen::Index i = 0; i < analog.size(); ++i)
        analog[i] += noise_scale * rng.next_cnormal();

    Eigen::VectorXd stacked(2 * model.rows());
    stacked.head(model.rows()) = analog.real();
    stacked.tail(model.rows()) = analog.imag();
    const Eigen::VectorXd one_bit = sign_quantize(stacked);

    Eigen::VectorXcd quantized(model.rows());
    quantized.real() = quantize(cell.quantizer, analog.real());
    quantized.imag() = quantize(cell.quantizer, analog.imag());

    std::vector<TrialRecord> records;
    records.reserve(3);

    if (config.with_biht) {
        BihtEstimatorConfig biht;
        biht.sparsity_per_pair = config.sparsity_estimate;
        biht.step_size = config.biht_step;
        biht.auto_step = config.biht_auto_step;
        biht.max_iters = config.biht_max_iters;
        biht.stall_window = config.biht_stall_window;
        biht.separate_real_imag = config.separate_real_imag;
        const auto t0 = clock::now();
        const EstimationResult est = estimate_biht_linear(quantized, one_bit, model, biht);
        const double us = std::chrono::duration<double, std::micro>(clock::now() - t0).count();
        records.push_back(
            make_record(hash, cell, trial, Method::biht_linear, channel, est, us));
    }

    if (config.with_least_squares) {
        const auto t0 = clock::now();
        const EstimationResult est = estimate_least_squares(quantized, model);
        const double us = std::chrono::duration<double, std::micro>(clock::now() - t0).count();
        records.push_back(
            make_record(hash, cell, trial, Method::least_squares, channel, est, us));
    }

    {
        const auto t0 = clock::now();
        const EstimationResult est = estimate_oracle(quantized, model, channel.support);
        const double us = std::chrono::duration<double, std::micro>(clock::now() - t0).count();
        TrialRecord rec = make_record(hash, cell, trial, Method::oracle_linear, channel, est, us);
        if (config.with_bound && cell.delta_valid) {
            std::vector<int> stacked_support = channel.support;
            stacked_support.reserve(2 * channel.support.size());
            for (int idx : channel.support)
                stacked_support.push_back(idx + static_cast<int>(model.cols()));
            const Eigen::MatrixXd restricted = model.joint_restricted_columns(stacked_support);
            BoundInput input;
            input.channel_energy = channel.entries.squaredNorm();
            input.sparsity_order = static_cast<int>(stacked_support.size());
            input.delta = cell.delta_hat;
            input.sigma = sigma_matrix(restricted, cell.effective_noise_var);
            rec.bound_db = oracle_rsnr_bound_db(input);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace

// ---------------------------------------------------------------------------
// Sweep

std::vector<AggregateRow> aggregate_records(const std::vector<CellPlan>& cells,
                                            const std::vector<TrialRecord>& records,
                                            const std::string& hash) {
    for (const auto& rec : records)
        if (rec.hash != hash)
            throw std::invalid_argument("aggregate_records: mixed config hashes ('" + rec.hash +
                                        "' vs '" + hash + "').");

    // Canonical order makes the reduction independent of completion order.
    std::vector<const TrialRecord*> sorted;
    sorted.reserve(records.size());
    for (const auto& rec : records)
        sorted.push_back(&rec);
    std::sort(sorted.begin(), sorted.end(), [](const TrialRecord* a, const TrialRecord* b) {
        if (a->bit_depth != b->bit_depth)
            return a->bit_depth < b->bit_depth;
        if (a->snr_db != b->snr_db)
            return a->snr_db < b->snr_db;
        if (a->method != b->method)
            return static_cast<int>(a->method) < static_cast<int>(b->method);
        return a->trial < b->trial;
    });

    struct Accum {
        int n = 0;
        double sum = 0.0, sum2 = 0.0;
        int exact = 0;
        double iters = 0.0;
        int bound_n = 0;
        double bound_sum = 0.0;
    };
    std::map<std::tuple<int, double, int>, Accum> acc;
    for (const TrialRecord* rec : sorted) {
        Accum& a = acc[{rec->bit_depth, rec->snr_db, static_cast<int>(rec->method)}];
        ++a.n;
        a.sum += rec->rsnr_db;
        a.sum2 += rec->rsnr_db * rec->rsnr_db;
        a.exact += rec->support.exact ? 1 : 0;
        a.iters += rec->iterations;
        if (!std::isnan(rec->bound_db)) {
            ++a.bound_n;
            a.bound_sum += rec->bound_db;
        }
    }

    std::vector<AggregateRow> rows;
    for (const auto& cell : cells) {
        if (!cell.feasible) {
            AggregateRow row;
            row.hash = hash;
            row.bit_depth = cell.bit_depth;
            row.snr_db = cell.snr_db;
            row.trials = 0;
            row.mean_rsnr_db = kNan;
            row.ci95_db = kNan;
            row.exact_support_rate = kNan;
            row.mean_iterations = kNan;
            row.bound_db = kNan;
            row.feasible = false;
            row.sample_count = cell.adc.sample_count;
            row.sampling_rate_hz = cell.adc.sampling_rate_hz;
            row.noise_std = kNan;
            row.quantizer_mse = kNan;
            rows.push_back(std::move(row));
            continue;
        }
        for (const Method method :
             {Method::biht_linear, Method::least_squares, Method::oracle_linear}) {
            const auto it = acc.find({cell.bit_depth, cell.snr_db, static_cast<int>(method)});
            if (it == acc.end())
                continue;
            const Accum& a = it->second;
            AggregateRow row;
            row.hash = hash;
            row.bit_depth = cell.bit_depth;
            row.snr_db = cell.snr_db;
            row.method = method;
            row.trials = a.n;
            row.mean_rsnr_db = a.sum / a.n;
            const double var =
                a.n > 1 ? std::max(0.0, (a.sum2 - a.sum * a.sum / a.n) / (a.n - 1)) : 0.0;
            row.ci95_db = 1.96 * std::sqrt(var / a.n);
            row.exact_support_rate = static_cast<double>(a.exact) / a.n;
            row.mean_iterations = a.iters / a.n;
            row.bound_db = a.bound_n > 0 ? a.bound_sum / a.bound_n : kNan;
            row.feasible = true;
            row.sample_count = cell.adc.sample_count;
            row.sampling_rate_hz = cell.adc.sampling_rate_hz;
            row.noise_std = std::sqrt(cell.noise_var);
            row.quantizer_mse = cell.quantizer.mse;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

SweepResult run_sweep(const ExperimentConfig& config) {
    SweepResult result;
    result.config = config;
    result.hash = config_hash(config);
    result.cells = plan_cells(config);

    std::vector<std::pair<int, int>> tasks; // (cell index, trial)
    for (std::size_t c = 0; c < result.cells.size(); ++c) {
        if (!result.cells[c].feasible) {
            result.any_infeasible = true;
            continue;
        }
        for (int t = 0; t < config.trials; ++t)
            tasks.emplace_back(static_cast<int>(c), t);
    }

    std::vector<std::vector<TrialRecord>> outputs(tasks.size());
    run_parallel(static_cast<int>(tasks.size()), config.threads, [&](int i) {
        const auto [cell_idx, trial] = tasks[static_cast<std::size_t>(i)];
        outputs[static_cast<std::size_t>(i)] = run_one_trial(
            config, result.cells[static_cast<std::size_t>(cell_idx)], result.hash, trial);
    });
    for (auto& out : outputs)
        for (auto& rec : out)
            result.records.push_back(std::move(rec));

    result.aggregate = aggregate_records(result.cells, result.records, result.hash);

    // Argmax bit depth per SNR for the two-stage estimator (falls back to
    // the oracle when BIHT is disabled).
    const Method pick = config.with_biht ? Method::biht_linear : Method::oracle_linear;
    for (double snr : config.snr_grid_db) {
        OptimalBitRow best;
        best.snr_db = snr;
        best.bit_depth = -1;
        best.mean_rsnr_db = -std::numeric_limits<double>::infinity();
        for (const auto& row : result.aggregate) {
            if (row.method != pick || !row.feasible || row.trials == 0 || row.snr_db != snr)
                continue;
            if (row.mean_rsnr_db > best.mean_rsnr_db) {
                best.mean_rsnr_db = row.mean_rsnr_db;
                best.bit_depth = row.bit_depth;
            }
        }
        if (best.bit_depth > 0)
            result.optimal_bits.push_back(best);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Budget table

const std::vector<int> kReferenceSampleCounts = {1000, 500, 250, 125, 75, 38, 19};

std::vector<Table2Row> make_table2(double power_budget_w, double walden_c_j, double duration_s,
                                   const std::vector<int>& bit_depths, bool verbatim,
                                   const std::vector<int>& paper_m) {
    if (!paper_m.empty() && paper_m.size() != bit_depths.size())
        throw std::invalid_argument("make_table2: paper_m must align with bit_depths.");
    const std::vector<BudgetEntry> entries =
        solve_budget(power_budget_w, walden_c_j, duration_s, bit_depths);

    std::vector<int> bits = bit_depths;
    std::sort(bits.begin(), bits.end());

    std::vector<Table2Row> rows;
    rows.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const BudgetEntry& e = entries[i];
        Table2Row row;
        row.bit_depth = e.config.bit_depth;
        row.sampling_rate_hz = e.config.sampling_rate_hz;
        row.m_formula = e.config.sample_count;
        if (!paper_m.empty()) {
            // paper_m entries follow the caller's bit order.
            const auto it = std::find(bit_depths.begin(), bit_depths.end(), row.bit_depth);
            row.m_paper = paper_m[static_cast<std::size_t>(it - bit_depths.begin())];
        } else if (row.bit_depth >= 2 && row.bit_depth <= 8) {
            row.m_paper = kReferenceSampleCounts[static_cast<std::size_t>(row.bit_depth - 2)];
        }
        if (row.m_paper > 0)
            row.discrepancy =
                std::abs(row.m_formula - row.m_paper) > 0.05 * static_cast<double>(row.m_paper);
        row.m_effective = (verbatim && row.m_paper > 0) ? row.m_paper : row.m_formula;
        row.feasible = row.m_effective >= 1;
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// K-hat robustness

KhatResult run_khat(const ExperimentConfig& config, const std::vector<int>& khat_grid,
                    int bit_depth, double snr_db) {
    if (khat_grid.empty())
        throw std::invalid_argument("run_khat: empty K-hat grid.");
    for (int k : khat_grid)
        if (k < 1 || k > config.taps)
            throw std::invalid_argument("run_khat: K-hat values must lie in [1, N].");

    ExperimentConfig base = config;
    base.bit_depth_grid = {bit_depth};
    base.snr_grid_db = {snr_db};
    base.with_biht = true;
    base.with_least_squares = false;
    base.with_bound = false;
    base.validate();

    KhatResult result;
    result.config = base;
    result.hash = config_hash(base);
    const std::vector<CellPlan> cells = plan_cells(base);
    if (!cells.front().feasible)
        throw std::invalid_argument("run_khat: requested bit depth is infeasible under the "
                                    "budget.");
    const CellPlan& cell = cells.front();

    std::vector<std::pair<int, int>> tasks; // (khat index, trial)
    for (std::size_t k = 0; k < khat_grid.size(); ++k)
        for (int t = 0; t < base.trials; ++t)
            tasks.emplace_back(static_cast<int>(k), t);

    std::vector<std::vector<KhatRecord>> outputs(tasks.size());
    run_parallel(static_cast<int>(tasks.size()), base.threads, [&](int i) {
        const auto [ki, trial] = tasks[static_cast<std::size_t>(i)];
        ExperimentConfig cfg = base;
        cfg.sparsity_estimate = khat_grid[static_cast<std::size_t>(ki)];
        // The trial stream ignores K-hat, so runs stay paired per trial.
        const std::vector<TrialRecord> recs = run_one_trial(cfg, cell, result.hash, trial);
        for (const auto& rec : recs)
            if (rec.method == Method::biht_linear)
                outputs[static_cast<std::size_t>(i)].push_back(
                    {khat_grid[static_cast<std::size_t>(ki)], rec});
    });
    for (auto& out : outputs)
        for (auto& rec : out)
            result.records.push_back(std::move(rec));

    for (int khat : khat_grid) {
        KhatAggregateRow row;
        row.hash = result.hash;
        row.khat = khat;
        row.bit_depth = bit_depth;
        row.snr_db = snr_db;
        double sum = 0.0, sum2 = 0.0;
        int n = 0, exact = 0;
        for (const auto& rec : result.records) {
            if (rec.khat != khat)
                continue;
            ++n;
            sum += rec.record.rsnr_db;
            sum2 += rec.record.rsnr_db * rec.record.rsnr_db;
            exact += rec.record.support.exact ? 1 : 0;
        }
        row.trials = n;
        row.mean_rsnr_db = n > 0 ? sum / n : kNan;
        const double var = n > 1 ? std::max(0.0, (sum2 - sum * sum / n) / (n - 1)) : 0.0;
        row.ci95_db = n > 0 ? 1.96 * std::sqrt(var / n) : kNan;
        row.exact_support_rate = n > 0 ? static_cast<double>(exact) / n : kNan;
        result.aggregate.push_back(row);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Bound overlay

std::vector<BoundOverlayRow> run_bound_overlay(const ExperimentConfig& config,
                                               SweepResult* full) {
    ExperimentConfig cfg = config;
    cfg.with_biht = false;
    cfg.with_least_squares = false;
    cfg.with_bound = true;
    const SweepResult sweep = run_sweep(cfg);

    std::vector<BoundOverlayRow> rows;
    for (const auto& agg : sweep.aggregate) {
        if (agg.method != Method::oracle_linear || !agg.feasible)
            continue;
        BoundOverlayRow row;
        row.bit_depth = agg.bit_depth;
        row.snr_db = agg.snr_db;
        row.bound_db = agg.bound_db;
        row.oracle_mean_rsnr_db = agg.mean_rsnr_db;
        rows.push_back(row);
    }
    if (full)
        *full = sweep;
    return rows;
}

// ---------------------------------------------------------------------------
// CSV output

void write_records_csv(std::ostream& os, const SweepResult& result, bool with_timing) {
    os << "config_hash,bit_depth,snr_db,trial,method,rsnr_db,rsnr_exact,support_exact,"
          "hits,misses,false_alarms,iterations,converged,bound_db";
    if (with_timing)
        os << ",wall_time_us";
    os << "\n";
    for (const auto& r : result.records) {
        os << r.hash << ',' << r.bit_depth << ',' << fmt(r.snr_db) << ',' << r.trial << ','
           << method_name(r.method) << ',' << fmt(r.rsnr_db) << ',' << (r.rsnr_exact ? 1 : 0)
           << ',' << (r.support.exact ? 1 : 0) << ',' << r.support.hits << ','
           << r.support.misses << ',' << r.support.false_alarms << ',' << r.iterations << ','
           << (r.converged ? 1 : 0) << ',' << fmt(r.bound_db);
        if (with_timing)
            os << ',' << fmt(r.wall_time_us);
        os << "\n";
    }
}

void write_aggregate_csv(std::ostream& os, const SweepResult& result) {
    os << "config_hash,bit_depth,snr_db,method,trials,mean_rsnr_db,ci95_db,"
          "exact_support_rate,mean_iterations,bound_db,feasible,sample_count,"
          "sampling_rate_ghz,noise_std,quantizer_mse\n";
    for (const auto& row : result.aggregate) {
        os << row.hash << ',' << row.bit_depth << ',' << fmt(row.snr_db) << ','
           << (row.feasible ? method_name(row.method) : std::string("-")) << ',' << row.trials
           << ',' << fmt(row.mean_rsnr_db) << ',' << fmt(row.ci95_db) << ','
           << fmt(row.exact_support_rate) << ',' << fmt(row.mean_iterations) << ','
           << fmt(row.bound_db) << ',' << (row.feasible ? 1 : 0) << ',' << row.sample_count
           << ',' << fmt(row.sampling_rate_hz * 1e-9) << ',' << fmt(row.noise_std) << ','
           << fmt(row.quantizer_mse) << "\n";
    }
}

void write_optimal_bits_csv(std::ostream& os, const SweepResult& result) {
    os << "config_hash,snr_db,optimal_bit_depth,mean_rsnr_db\n";
    for (const auto& row : result.optimal_bits)
        os << result.hash << ',' << fmt(row.snr_db) << ',' << row.bit_depth << ','
           << fmt(row.mean_rsnr_db) << "\n";
}

void write_table2_csv(std::ostream& os, const std::vector<Table2Row>& rows) {
    os << "bit_depth,sampling_rate_ghz,m_formula,m_paper,m_effective,discrepancy,feasible\n";
    for (const auto& row : rows) {
        os << row.bit_depth << ',' << fmt(row.sampling_rate_hz * 1e-9) << ',' << row.m_formula
           << ',';
        if (row.m_paper > 0)
            os << row.m_paper;
        os << ',' << row.m_effective << ',' << (row.discrepancy ? 1 : 0) << ','
           << (row.feasible ? 1 : 0) << "\n";
    }
}

void write_bound_overlay_csv(std::ostream& os, const std::string& hash,
                             const std::vector<BoundOverlayRow>& rows) {
    os << "config_hash,bit_depth,snr_db,bound_db,oracle_mean_rsnr_db\n";
    for (const auto& row : rows)
        os << hash << ',' << row.bit_depth << ',' << fmt(row.snr_db) << ',' << fmt(row.bound_db)
           << ',' << fmt(row.oracle_mean_rsnr_db) << "\n";
}

void write_khat_records_csv(std::ostream& os, const KhatResult& result) {
    os << "config_hash,khat,bit_depth,snr_db,trial,rsnr_db,support_exact,hits,misses,"
          "false_alarms,iterations,converged\n";
    for (const auto& kr : result.records) {
        const TrialRecord& r = kr.record;
        os << r.hash << ',' << kr.khat << ',' << r.bit_depth << ',' << fmt(r.snr_db) << ','
           << r.trial << ',' << fmt(r.rsnr_db) << ',' << (r.support.exact ? 1 : 0) << ','
           << r.support.hits << ',' << r.support.misses << ',' << r.support.false_alarms << ','
           << r.iterations << ',' << (r.converged ? 1 : 0) << "\n";
    }
}

void write_khat_aggregate_csv(std::ostream& os, const KhatResult& result) {
    os << "config_hash,khat,bit_depth,snr_db,trials,mean_rsnr_db,ci95_db,exact_support_rate\n";
    for (const auto& row : result.aggregate)
        os << row.hash << ',' << row.khat << ',' << row.bit_depth << ',' << fmt(row.snr_db)
           << ',' << row.trials << ',' << fmt(row.mean_rsnr_db) << ',' << fmt(row.ci95_db) << ','
           << fmt(row.exact_support_rate) << "\n";
}

void write_rip_csv(std::ostream& os, const std::string& hash, const RipEstimate& estimate) {
    os << "config_hash,sparsity_order,delta_hat,num_samples,min_eig_seen,max_eig_seen\n";
    os << hash << ',' << estimate.sparsity_order << ',' << fmt(estimate.delta_hat) << ','
       << estimate.num_samples << ',' << fmt(estimate.min_eig_seen) << ','
       << fmt(estimate.max_eig_seen) << "\n";
}

std::string manifest_json(const ExperimentConfig& config, const std::string& hash,
                          const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["tool_version"] = kToolVersion;
    j["config_hash"] = hash;
    j["config"] = config_json(config);
    j["outputs"] = outputs;
    j["notes"]["snr_definition"] =
        "input SNR = E||Xh||^2 / E||e||^2 per receive slot; the noise variance is derived "
        "from the pilot scaling and channel statistics";
    j["notes"]["rsnr_clamp_db"] = kRsnrClampDb;
    j["notes"]["bound"] =
        "oracle RSNR upper bound; Sigma is the covariance of the projected noise and delta "
        "is a sampled lower bound probed at order Nt*Nr*K";
    j["notes"]["quantizer_scale"] =
        "quantizers are designed at the analytic measurement scale of the cell, not per "
        "realization";
    return j.dump(2);
}

} // namespace fewbit
