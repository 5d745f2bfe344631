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
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace fewbit {

/// Pilot family for the training stage.
///
/// iid_random draws fair-coin signs; sequence orthogonality then holds only
/// in expectation. exact_orthogonal modulates one shared sign sequence by
/// Walsh patterns from a Sylvester design, which makes every pair of
/// equal-tap convolution-matrix columns from distinct sequences exactly
/// orthogonal (and the full sequences mutually orthogonal) while keeping the
/// entries random. That mode needs the per-slot sample count to be a
/// multiple of the Walsh period.
enum class PilotMode { iid_random, exact_orthogonal };

/// Nt training sequences of length P = M + N - 1 with entries +-1/sqrt(M).
struct PilotSet {
    std::vector<Eigen::VectorXd> sequences;
    int samples_per_slot = 0; ///< M, rows of each Toeplitz block
    int taps = 0;             ///< N, columns of each Toeplitz block
    PilotMode mode = PilotMode::iid_random;

    int num_tx() const { return static_cast<int>(sequences.size()); }
    int length() const { return samples_per_slot + taps - 1; } ///< P
};

/// Deterministic in (arguments, seed). exact_orthogonal throws
/// std::invalid_argument naming the smallest feasible sequence length when
/// (Nt, M) cannot support the orthogonal design.
PilotSet generate_pilots(int num_tx, int samples_per_slot, int taps, PilotMode mode,
                         std::uint64_t seed);

/// Walsh period that exact_orthogonal mode requires to divide M.
int orthogonal_design_period(int num_tx);

/// The measurement system of a training run, held matrix-free.
///
/// Per receiver slot j the noiseless observation is sum_i X_i h_ij where
/// X_i is the M x N Toeplitz matrix of pilot i (entry (r, c) = x[N-1+r-c]).
/// Stacking slots gives the block-diagonal system of dimension
/// (Nr*M) x (Nt*Nr*N); splitting complex into real parts gives the stacked
/// real systems [X_R -X_I] and [X_I X_R] over [h_R; h_I].
///
/// Dense views exist for inspection and tests; apply/adjoint run as
/// convolutions so large geometries never materialize the matrix. The
/// default pipeline uses real pilots; a complex-sequence constructor keeps
/// the general path honest.
class MeasurementModel {
  public:
    MeasurementModel() = default;

    int num_tx() const { return num_tx_; }
    int num_rx() const { return num_rx_; }
    int taps() const { return taps_; }
    int samples_per_slot() const { return samples_per_slot_; }
    bool is_real() const { return is_real_; }

    Eigen::Index rows() const { return static_cast<Eigen::Index>(num_rx_) * samples_per_slot_; }
    Eigen::Index cols() const {
        return static_cast<Eigen::Index>(num_tx_) * num_rx_ * taps_;
    }
    Eigen::Index joint_rows() const { return 2 * rows(); }
    Eigen::Index joint_cols() const { return 2 * cols(); }

    /// Dense views. Sizes are not guarded; callers own the memory call.
    Eigen::MatrixXcd toeplitz_block(int tx) const;
    Eigen::MatrixXd toeplitz_block_real(int tx) const; ///< requires is_real()
    Eigen::MatrixXcd mimo_matrix() const;
    Eigen::MatrixXd real_stacked_x1() const; ///< [X_R  -X_I]
    Eigen::MatrixXd real_stacked_x2() const; ///< [X_I   X_R]
    Eigen::MatrixXd joint_real() const;      ///< [[x1], [x2]]

    /// Matrix-free products.
    Eigen::VectorXcd apply(const Eigen::VectorXcd& channel) const;
    Eigen::VectorXcd apply_adjoint(const Eigen::VectorXcd& observation) const;
    /// Joint real system on [h_R; h_I]; sparse inputs are exploited.
    Eigen::VectorXd joint_apply(const Eigen::VectorXd& stacked) const;
    Eigen::VectorXd joint_apply_adjoint(const Eigen::VectorXd& residual) const;

    /// Columns of the complex system for the given channel indices.
    Eigen::MatrixXcd restricted_columns(const std::vector<int>& support) const;
    /// Same restriction on the real view (requires is_real()).
    Eigen::MatrixXd restricted_columns_real(const std::vector<int>& support) const;
    /// Columns of the joint real system for real-stacked indices.
    Eigen::MatrixXd joint_restricted_columns(const std::vector<int>& support) const;

    friend MeasurementModel build_measurement_model(const PilotSet&, int num_rx);
    friend MeasurementModel build_measurement_model_complex(
        const std::vector<Eigen::VectorXcd>&, int num_rx, int taps);

  private:
    std::vector<Eigen::VectorXcd> sequences_; // length P each
    std::vector<Eigen::VectorXd> sequences_real_;
    int num_tx_ = 0, num_rx_ = 0, taps_ = 0, samples_per_slot_ = 0;
    bool is_real_ = true;

    Eigen::VectorXd apply_real_part(const Eigen::VectorXd& channel_part) const;
    Eigen::VectorXd apply_real_part_adjoint(const Eigen::VectorXd& obs_part) const;
};

/// Throws std::invalid_argument when pilot lengths are inconsistent with
/// M + N - 1 or dimensions are non-positive.
MeasurementModel build_measurement_model(const PilotSet& pilots, int num_rx);

/// General complex construction used to exercise the real-stacking
/// identities with nonzero imaginary parts.
MeasurementModel build_measurement_model_complex(const std::vector<Eigen::VectorXcd>& sequences,
                                                 int num_rx, int taps);

/// Sampled estimate of a restricted isometry constant. Sampling can only
/// miss worse submatrices, so delta_hat lower-bounds the true delta_s.
struct RipEstimate {
    int sparsity_order = 0;
    double delta_hat = 0.0;
    int num_samples = 0;
    double min_eig_seen = 0.0;
    double max_eig_seen = 0.0;
};

/// Column access used by the prober; materialize returns the requested
/// columns as a dense real matrix. num_blocks > 1 makes the prober sample
/// index sets per column block (sparsity_order / num_blocks from each),
/// matching the structured supports of the stacked system.
struct ColumnSource {
    Eigen::Index num_columns = 0;
    int num_blocks = 1;
    std::function<Eigen::MatrixXd(const std::vector<int>&)> materialize;
};

ColumnSource dense_column_source(const Eigen::MatrixXd& matrix);
/// Columns of one Toeplitz block (SISO view).
ColumnSource toeplitz_column_source(const MeasurementModel& model, int tx);
/// Columns of the full block-diagonal system, blocked per antenna pair.
ColumnSource mimo_column_source(const MeasurementModel& model);

/// Samples random index sets of the given order, takes the extreme
/// eigenvalues of each Gram matrix, and reports
/// delta_hat = max(1 - min_eig, max_eig - 1).
RipEstimate probe_rip(const ColumnSource& source, int sparsity_order, int num_samples,
                      std::uint64_t seed);

} // namespace fewbit
