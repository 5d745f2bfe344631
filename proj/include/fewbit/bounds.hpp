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

#include <utility>

#include <Eigen/Dense>

#include "fewbit/adc.hpp"

namespace fewbit {

/// Additive white model of quantization distortion: the effective noise
/// variance is the thermal variance plus the quantizer's per-sample MSE
/// (designed at the measurement scale). Returns a variance.
double effective_noise_variance(double noise_std, const QuantizerModel& quantizer);

/// Covariance of the projected noise on a restricted system:
/// Sigma = variance * (B^T B)^{-1}. Throws std::runtime_error when the
/// restricted matrix is rank deficient.
Eigen::MatrixXd sigma_matrix(const Eigen::MatrixXd& restricted_matrix,
                             double effective_noise_var);

/// Inputs of the oracle-assisted reconstruction-SNR bound.
struct BoundInput {
    double channel_energy = 0.0;  ///< squared norm of the (real-stacked) channel
    int sparsity_order = 0;       ///< support size of the bounded system
    double delta = 0.0;           ///< probed restricted-isometry constant, in [0, 1)
    Eigen::MatrixXd sigma;        ///< projected-noise covariance (symmetric PSD)
};

/// Upper bound on the oracle reconstruction SNR:
/// energy / ((order / (1 + delta)) * lambda_min(Sigma)), in dB.
/// A singular Sigma yields +infinity (flagged by the caller).
double oracle_rsnr_bound_db(const BoundInput& input);

/// Oracle MSE band for unquantized white noise:
/// [order * var / (1 + delta), order * var / (1 - delta)].
/// Throws std::domain_error when delta >= 1 (band undefined).
std::pair<double, double> unquantized_mse_band(int sparsity_order, double delta,
                                               double noise_std);

} // namespace fewbit
