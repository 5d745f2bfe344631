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

#include <vector>

#include <Eigen/Dense>

namespace fewbit {

/// One ADC operating point. Power follows the Walden model
/// P = c * f_s * 2^B; the sample count is M = floor(T * f_s).
struct AdcConfig {
    int bit_depth = 0;            ///< B >= 1
    double sampling_rate_hz = 0.0; ///< f_s
    int sample_count = 0;          ///< M
    double walden_c_j = 494e-15;   ///< energy per conversion step
    double duration_s = 0.0;       ///< T
};

/// Walden power model, evaluated exactly as written.
double adc_power_w(int bit_depth, double sampling_rate_hz, double walden_c_j);
double adc_power_w(const AdcConfig& config);

/// Energy over the sampling duration: P * T.
double adc_energy_j(const AdcConfig& config);

struct BudgetEntry {
    AdcConfig config;
    bool feasible = true; ///< false when flooring drives M to zero
};

/// For each bit depth, the fastest sampling rate that stays within the
/// power budget, and the sample count it buys over the duration. Entries
/// with M = 0 are flagged infeasible rather than dropped.
std::vector<BudgetEntry> solve_budget(double power_budget_w, double walden_c_j,
                                      double duration_s, const std::vector<int>& bit_depths);

/// Minimum-MSE scalar quantizer for a zero-mean Gaussian input
/// (Lloyd-Max fixed point). Immutable once designed.
struct QuantizerModel {
    int bit_depth = 0;
    double input_std = 0.0;
    std::vector<double> thresholds; ///< 2^B - 1, sorted ascending
    std::vector<double> levels;     ///< 2^B, ascending cell centroids
    double mse = 0.0;               ///< per-sample distortion at input_std
};

/// Lloyd-Max design: levels are cell centroids under the Gaussian density,
/// thresholds are level midpoints, iterated to relative level change
/// < 1e-10. B=1 uses the closed form (levels +-sigma*sqrt(2/pi)).
/// Throws std::invalid_argument for B < 1 or input_std <= 0 and
/// std::runtime_error if 1e5 iterations do not converge.
QuantizerModel design_quantizer(int bit_depth, double input_std);

/// Maps a sample to the level of its cell. A sample exactly on a threshold
/// goes to the upper cell. Saturation is handled by the outermost cells.
double quantize_sample(const QuantizerModel& q, double x);
Eigen::VectorXd quantize(const QuantizerModel& q, const Eigen::VectorXd& samples);

/// Elementwise sign with sign(0) = +1.
double sign_value(double x);
Eigen::VectorXd sign_quantize(const Eigen::VectorXd& samples);

} // namespace fewbit
