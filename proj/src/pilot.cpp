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

#include "fewbit/pilot.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include "fewbit/rng.hpp"

namespace fewbit {

int orthogonal_design_period(int num_tx) {
    if (num_tx <= 1)
        return 1;
    return static_cast<int>(std::bit_ceil(static_cast<unsigned>(num_tx)));
}

namespace {

// Walsh pattern of the Sylvester design: parity of the AND between the row
// index and the time index.
inline double walsh_sign(unsigned row, unsigned t) {
    return (std::popcount(row & t) & 1u) ? -1.0 : 1.0;
}

} // namespace

PilotSet generate_pilots(int num_tx, int samples_per_slot, int taps, PilotMode mode,
                         std::uint64_t seed) {
    if (num_tx < 1 || samples_per_slot < 1 || taps < 1)
        throw std::invalid_argument("generate_pilots: Nt, M, N must be positive.");

    const int p = samples_per_slot + taps - 1;
    const double scale = 1.0 / std::sqrt(static_cast<double>(samples_per_slot));

    if (mode == PilotMode::exact_orthogonal) {
        const int period = orthogonal_design_period(num_tx);
        if (samples_per_slot % period != 0) {
            const int m_next = ((samples_per_slot / period) + 1) * period;
            throw std::invalid_argument(
                "generate_pilots: exact_orthogonal with Nt=" + std::to_string(num_tx) +
                " needs M to be a multiple of " + std::to_string(period) +
                "; smallest feasible is M=" + std::to_string(m_next) +
                " (P=" + std::to_string(m_next + taps - 1) + ").");
        }
    }

    Rng rng(seed);
    PilotSet set;
    set.samples_per_slot = samples_per_slot;
    set.taps = taps;
    set.mode = mode;
    set.sequences.resize(static_cast<std::size_t>(num_tx));

    if (mode == PilotMode::iid_random) {
        for (auto& seq : set.sequences) {
            seq.resize(p);
            for (int t = 0; t < p; ++t)
                seq[t] = rng.next_sign() * scale;
        }
        return set;
    }

    // Shared random signs modulated by distinct Walsh rows. Row 0 is the
    // bare random sequence; rows i xor j stay below the design period, so
    // every M-long window of the cross product sums to zero.
    Eigen::VectorXd shared(p);
    for (int t = 0; t < p; ++t)
        shared[t] = rng.next_sign();
    for (int i = 0; i < num_tx; ++i) {
        auto& seq = set.sequences[static_cast<std::size_t>(i)];
        seq.resize(p);
        for (int t = 0; t < p; ++t)
            seq[t] = walsh_sign(static_cast<unsigned>(i), static_cast<unsigned>(t)) * shared[t] *
                     scale;
    }
    return set;
}

// ---------------------------------------------------------------------------
// MeasurementModel

MeasurementModel build_measurement_model(const PilotSet& pilots, int num_rx) {
    if (num_rx < 1)
        throw std::invalid_argument("build_measurement_model: Nr must be positive.");
    if (pilots.num_tx() < 1)
        throw std::invalid_argument("build_measurement_model: empty pilot set.");
    const int p = pilots.samples_per_slot + pilots.taps - 1;
    for (const auto& seq : pilots.sequences)
        if (static_cast<int>(seq.size()) != p)
            throw std::invalid_argument("build_measurement_model: pilot length " +
                                        std::to_string(seq.size()) + " does not match M+N-1=" +
                                        std::to_string(p) + ".");

    MeasurementModel m;
    m.num_tx_ = pilots.num_tx();
    m.num_rx_ = num_rx;
    m.taps_ = pilots.taps;
    m.samples_per_slot_ = pilots.samples_per_slot;
    m.is_real_ = true;
    m.sequences_real_ = pilots.sequences;
    m.sequences_.reserve(pilots.sequences.size());
    for (const auto& seq : pilots.sequences)
        m.sequences_.push_back(seq.cast<std::complex<double>>());
    return m;
}

MeasurementModel build_measurement_model_complex(const std::vector<Eigen::VectorXcd>& sequences,
                                                 int num_rx, int taps) {
    if (num_rx < 1 || taps < 1 || sequences.empty())
        throw std::invalid_argument("build_measurement_model_complex: bad dimensions.");
    const int p = static_cast<int>(sequences.front().size());
    if (p < taps)
        throw std::invalid_argument("build_measurement_model_complex: sequences shorter than N.");
    for (const auto& seq : sequences)
        if (static_cast<int>(seq.size()) != p)
            throw std::invalid_argument("build_measurement_model_complex: unequal lengths.");

    MeasurementModel m;
    m.num_tx_ = static_cast<int>(sequences.size());
    m.num_rx_ = num_rx;
    m.taps_ = taps;
    m.samples_per_slot_ = p - taps + 1;
    m.is_real_ = false;
    m.sequences_ = sequences;
    return m;
}

Eigen::MatrixXcd MeasurementModel::toeplitz_block(int tx) const {
    Eigen::MatrixXcd block(samples_per_slot_, taps_);
    const auto& x = sequences_[static_cast<std::size_t>(tx)];
    for (int r = 0; r < samples_per_slot_; ++r)
        for (int c = 0; c < taps_; ++c)
            block(r, c) = x[taps_ - 1 + r - c];
    return block;
}

Eigen::MatrixXd MeasurementModel::toeplitz_block_real(int tx) const {
    if (!is_real_)
        throw std::invalid_argument("toeplitz_block_real: model has complex pilots.");
    Eigen::MatrixXd block(samples_per_slot_, taps_);
    const auto& x = sequences_real_[static_cast<std::size_t>(tx)];
    for (int r = 0; r < samples_per_slot_; ++r)
        for (int c = 0; c < taps_; ++c)
            block(r, c) = x[taps_ - 1 + r - c];
    return block;
}

Eigen::MatrixXcd MeasurementModel::mimo_matrix() const {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(rows(), cols());
    for (int j = 0; j < num_rx_; ++j)
        for (int i = 0; i < num_tx_; ++i)
            m.block(static_cast<Eigen::Index>(j) * samples_per_slot_,
                    (static_cast<Eigen::Index>(j) * num_tx_ + i) * taps_, samples_per_slot_,
                    taps_) = toeplitz_block(i);
    return m;
}

Eigen::MatrixXd MeasurementModel::real_stacked_x1() const {
    const Eigen::MatrixXcd m = mimo_matrix();
    Eigen::MatrixXd out(rows(), 2 * cols());
    out << m.real(), -m.imag();
    return out;
}

Eigen::MatrixXd MeasurementModel::real_stacked_x2() const {
    const Eigen::MatrixXcd m = mimo_matrix();
    Eigen::MatrixXd out(rows(), 2 * cols());
    out << m.imag(), m.real();
    return out;
}

Eigen::MatrixXd MeasurementModel::joint_real() const {
    Eigen::MatrixXd out(joint_rows(), joint_cols());
    out.topRows(rows()) = real_stacked_x1();
    out.bottomRows(rows()) = real_stacked_x2();
    return out;
}

Eigen::VectorXcd MeasurementModel::apply(const Eigen::VectorXcd& channel) const {
    if (channel.size() != cols())
        throw std::invalid_argument("MeasurementModel::apply: channel length mismatch.");
    if (is_real_) {
        Eigen::VectorXcd out(rows());
        out.real() = apply_real_part(channel.real());
        out.imag() = apply_real_part(channel.imag());
        return out;
    }
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(rows());
    for (int j = 0; j < num_rx_; ++j) {
        for (int i = 0; i < num_tx_; ++i) {
            const Eigen::VectorXcd h =
                channel.segment((static_cast<Eigen::Index>(j) * num_tx_ + i) * taps_, taps_)
                    .reverse();
            const auto& x = sequences_[static_cast<std::size_t>(i)];
            for (int r = 0; r < samples_per_slot_; ++r)
                out[static_cast<Eigen::Index>(j) * samples_per_slot_ + r] +=
                    (x.segment(r, taps_).transpose() * h).value();
        }
    }
    return out;
}

Eigen::VectorXcd MeasurementModel::apply_adjoint(const Eigen::VectorXcd& observation) const {
    if (observation.size() != rows())
        throw std::invalid_argument("MeasurementModel::apply_adjoint: length mismatch.");
    if (is_real_) {
        Eigen::VectorXcd out(cols());
        out.real() = apply_real_part_adjoint(observation.real());
        out.imag() = apply_real_part_adjoint(observation.imag());
        return out;
    }
    Eigen::VectorXcd out(cols());
    for (int j = 0; j < num_rx_; ++j) {
        const Eigen::VectorXcd y = observation.segment(
            static_cast<Eigen::Index>(j) * samples_per_slot_, samples_per_slot_);
        for (int i = 0; i < num_tx_; ++i) {
            const auto& x = sequences_[static_cast<std::size_t>(i)];
            const Eigen::Index base = (static_cast<Eigen::Index>(j) * num_tx_ + i) * taps_;
            for (int c = 0; c < taps_; ++c)
                out[base + c] = x.segment(taps_ - 1 - c, samples_per_slot_).dot(y);
        }
    }
    return out;
}

Eigen::VectorXd MeasurementModel::apply_real_part(const Eigen::VectorXd& channel_part) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(rows());
    // Sparse inputs dominate here (thresholded iterates): accumulate pilot
    // windows per nonzero instead of looping rows.
    for (Eigen::Index g = 0; g < channel_part.size(); ++g) {
        const double v = channel_part[g];
        if (v == 0.0)
            continue;
        const int pair = static_cast<int>(g / taps_);
        const int c = static_cast<int>(g % taps_);
        const int i = pair % num_tx_;
        const int j = pair / num_tx_;
        out.segment(static_cast<Eigen::Index>(j) * samples_per_slot_, samples_per_slot_) +=
            v * sequences_real_[static_cast<std::size_t>(i)].segment(taps_ - 1 - c,
                                                                     samples_per_slot_);
    }
    return out;
}

Eigen::VectorXd MeasurementModel::apply_real_part_adjoint(const Eigen::VectorXd& obs_part) const {
    Eigen::VectorXd out(cols());
    for (int j = 0; j < num_rx_; ++j) {
        const Eigen::VectorXd y =
            obs_part.segment(static_cast<Eigen::Index>(j) * samples_per_slot_, samples_per_slot_);
        for (int i = 0; i < num_tx_; ++i) {
            const auto& x = sequences_real_[static_cast<std::size_t>(i)];
            const Eigen::Index base = (static_cast<Eigen::Index>(j) * num_tx_ + i) * taps_;
            for (int c = 0; c < taps_; ++c)
                out[base + c] = x.segment(taps_ - 1 - c, samples_per_slot_).dot(y);
        }
    }
    return out;
}

Eigen::VectorXd MeasurementModel::joint_apply(const Eigen::VectorXd& stacked) const {
    if (stacked.size() != joint_cols())
        throw std::invalid_argument("MeasurementModel::joint_apply: length mismatch.");
    if (is_real_) {
        Eigen::VectorXd out(joint_rows());
        out.head(rows()) = apply_real_part(stacked.head(cols()));
        out.tail(rows()) = apply_real_part(stacked.tail(cols()));
        return out;
    }
    Eigen::VectorXcd h(cols());
    h.real() = stacked.head(cols());
    h.imag() = stacked.tail(cols());
    const Eigen::VectorXcd y = apply(h);
    Eigen::VectorXd out(joint_rows());
    out.head(rows()) = y.real();
    out.tail(rows()) = y.imag();
    return out;
}

Eigen::VectorXd MeasurementModel::joint_apply_adjoint(const Eigen::VectorXd& residual) const {
    if (residual.size() != joint_rows())
        throw std::invalid_argument("MeasurementModel::joint_apply_adjoint: length mismatch.");
    if (is_real_) {
        Eigen::VectorXd out(joint_cols());
        out.head(cols()) = apply_real_part_adjoint(residual.head(rows()));
        out.tail(cols()) = apply_real_part_adjoint(residual.tail(rows()));
        return out;
    }
    Eigen::VectorXcd rho(rows());
    rho.real() = residual.head(rows());
    rho.imag() = residual.tail(rows());
    const Eigen::VectorXcd g = apply_adjoint(rho);
    Eigen::VectorXd out(joint_cols());
    out.head(cols()) = g.real();
    out.tail(cols()) = g.imag();
    return out;
}

Eigen::MatrixXcd MeasurementModel::restricted_columns(const std::vector<int>& support) const {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k) {
        const int g = support[k];
        if (g < 0 || g >= cols())
            throw std::invalid_argument("restricted_columns: index out of range.");
        const int pair = g / taps_;
        const int c = g % taps_;
        const int i = pair % num_tx_;
        const int j = pair / num_tx_;
        out.block(static_cast<Eigen::Index>(j) * samples_per_slot_, static_cast<Eigen::Index>(k),
                  samples_per_slot_, 1) =
            sequences_[static_cast<std::size_t>(i)].segment(taps_ - 1 - c, samples_per_slot_);
    }
    return out;
}

Eigen::MatrixXd MeasurementModel::restricted_columns_real(const std::vector<int>& support) const {
    if (!is_real_)
        throw std::invalid_argument("restricted_columns_real: model has complex pilots.");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k) {
        const int g = support[k];
        if (g < 0 || g >= cols())
            throw std::invalid_argument("restricted_columns_real: index out of range.");
        const int pair = g / taps_;
        const int c = g % taps_;
        const int i = pair % num_tx_;
        const int j = pair / num_tx_;
        out.block(static_cast<Eigen::Index>(j) * samples_per_slot_, static_cast<Eigen::Index>(k),
                  samples_per_slot_, 1) =
            sequences_real_[static_cast<std::size_t>(i)].segment(taps_ - 1 - c, samples_per_slot_);
    }
    return out;
}

Eigen::MatrixXd MeasurementModel::joint_restricted_columns(const std::vector<int>& support) const {
    const Eigen::Index d = cols();
    Eigen::MatrixXd out =
        Eigen::MatrixXd::Zero(joint_rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k) {
        const int g = support[k];
        if (g < 0 || g >= 2 * d)
            throw std::invalid_argument("joint_restricted_columns: index out of range.");
        const std::vector<int> one = {g < d ? g : g - static_cast<int>(d)};
        const Eigen::MatrixXcd col = restricted_columns(one);
        if (g < d) {
            out.col(static_cast<Eigen::Index>(k)).head(rows()) = col.real();
            out.col(static_cast<Eigen::Index>(k)).tail(rows()) = col.imag();
        } else {
            out.col(static_cast<Eigen::Index>(k)).head(rows()) = -col.imag();
            out.col(static_cast<Eigen::Index>(k)).tail(rows()) = col.real();
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// RIP probing

ColumnSource dense_column_source(const Eigen::MatrixXd& matrix) {
    ColumnSource src;
    src.num_columns = matrix.cols();
    src.materialize = [matrix](const std::vector<int>& idx) {
        Eigen::MatrixXd out(matrix.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k)
            out.col(static_cast<Eigen::Index>(k)) = matrix.col(idx[k]);
        return out;
    };
    return src;
}

ColumnSource toeplitz_column_source(const MeasurementModel& model, int tx) {
    if (tx < 0 || tx >= model.num_tx())
        throw std::invalid_argument("toeplitz_column_source: tx out of range.");
    ColumnSource src;
    src.num_columns = model.taps();
    src.materialize = [&model, tx](const std::vector<int>& idx) {
        // Tap index within block tx of receiver slot 0.
        std::vector<int> global(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k)
            global[k] = tx * model.taps() + idx[k];
        const Eigen::MatrixXd full = model.restricted_columns_real(global);
        return Eigen::MatrixXd(full.topRows(model.samples_per_slot()));
    };
    return src;
}

ColumnSource mimo_column_source(const MeasurementModel& model) {
    ColumnSource src;
    src.num_columns = model.cols();
    src.num_blocks = model.num_tx() * model.num_rx();
    src.materialize = [&model](const std::vector<int>& idx) {
        return model.restricted_columns_real(idx);
    };
    return src;
}

RipEstimate probe_rip(const ColumnSource& source, int sparsity_order, int num_samples,
                      std::uint64_t seed) {
    if (sparsity_order < 1 || sparsity_order > source.num_columns)
        throw std::invalid_argument("probe_rip: sparsity order must lie in [1, columns].");
    if (num_samples < 1)
        throw std::invalid_argument("probe_rip: need at least one sample.");
    const int blocks = std::max(1, source.num_blocks);
    if (sparsity_order % blocks != 0)
        throw std::invalid_argument("probe_rip: sparsity order " + std::to_string(sparsity_order) +
                                    " is not divisible by the " + std::to_string(blocks) +
                                    " column blocks.");
    const int per_block = sparsity_order / blocks;
    const int block_size = static_cast<int>(source.num_columns) / blocks;
    if (per_block > block_size)
        throw std::invalid_argument("probe_rip: per-block order exceeds block size.");

    Rng rng(seed);
    RipEstimate est;
    est.sparsity_order = sparsity_order;
    est.num_samples = num_samples;
    est.min_eig_seen = std::numeric_limits<double>::infinity();
    est.max_eig_seen = -std::numeric_limits<double>::infinity();

    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(sparsity_order));
    for (int s = 0; s < num_samples; ++s) {
        idx.clear();
        for (int b = 0; b < blocks; ++b)
            for (int v : rng.sample_without_replacement(block_size, per_block))
                idx.push_back(b * block_size + v);
        const Eigen::MatrixXd cols = source.materialize(idx);
        Eigen::MatrixXd gram(cols.cols(), cols.cols());
        gram.setZero();
        gram.selfadjointView<Eigen::Lower>().rankUpdate(cols.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
            gram.selfadjointView<Eigen::Lower>(), Eigen::EigenvaluesOnly);
        est.min_eig_seen = std::min(est.min_eig_seen, eig.eigenvalues().minCoeff());
        est.max_eig_seen = std::max(est.max_eig_seen, eig.eigenvalues().maxCoeff());
    }
    est.delta_hat = std::max(0.0, std::max(1.0 - est.min_eig_seen, est.max_eig_seen - 1.0));
    return est;
}

} // namespace fewbit
