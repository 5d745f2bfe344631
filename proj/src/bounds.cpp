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

#include "fewbit/bounds.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fewbit {

double effective_noise_variance(double noise_std, const QuantizerModel& quantizer) {
    if (noise_std < 0.0)
        throw std::invalid_argument("effective_noise_variance: noise std must be nonnegative.");
    return noise_std * noise_std + quantizer.mse;
}

Eigen::MatrixXd sigma_matrix(const Eigen::MatrixXd& restricted_matrix,
                             double effective_noise_var) {
    if (effective_noise_var < 0.0)
        throw std::invalid_argument("sigma_matrix: variance must be nonnegative.");
    const Eigen::Index s = restricted_matrix.cols();
    Eigen::MatrixXd gram(s, s);
    gram.setZero();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(restricted_matrix.transpose());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram.selfadjointView<Eigen::Lower>());
    const double dmax = ldlt.vectorD().maxCoeff();
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= dmax * 1e-12)
        throw std::runtime_error("sigma_matrix: restricted matrix is rank deficient.");
    Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(s, s));
    // Symmetrize away solve round-off.
    inv = 0.5 * (inv + inv.transpose()).eval();
    return effective_noise_var * inv;
}

double oracle_rsnr_bound_db(const BoundInput& input) {
    if (input.sparsity_order < 1)
        throw std::invalid_argument("oracle_rsnr_bound_db: sparsity order must be positive.");
    if (!(input.delta >= 0.0 && input.delta < 1.0))
        throw std::invalid_argument("oracle_rsnr_bound_db: delta must lie in [0, 1).");
    if (input.channel_energy <= 0.0)
        throw std::invalid_argument("oracle_rsnr_bound_db: channel energy must be positive.");
    if (input.sigma.rows() != input.sigma.cols() || input.sigma.rows() < 1)
        throw std::invalid_argument("oracle_rsnr_bound_db: Sigma must be square.");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(input.sigma, Eigen::EigenvaluesOnly);
    const double lambda_min = eig.eigenvalues().minCoeff();
    if (lambda_min <= 0.0)
        return std::numeric_limits<double>::infinity();
    const double denom =
        (static_cast<double>(input.sparsity_order) / (1.0 + input.delta)) * lambda_min;
    return 10.0 * std::log10(input.channel_energy / denom);
}

std::pair<double, double> unquantized_mse_band(int sparsity_order, double delta,
                                               double noise_std) {
    if (sparsity_order < 1)
        throw std::invalid_argument("unquantized_mse_band: sparsity order must be positive.");
    if (noise_std < 0.0)
        throw std::invalid_argument("unquantized_mse_band: noise std must be nonnegative.");
    if (!(delta >= 0.0 && delta < 1.0))
        throw std::domain_error("unquantized_mse_band: band undefined for delta >= 1.");
    const double core = static_cast<double>(sparsity_order) * noise_std * noise_std;
    return {core / (1.0 + delta), core / (1.0 - delta)};
}

} // namespace fewbit
