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

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fewbit/pilot.hpp"

namespace fewbit {

/// Real linear operator abstraction so the support stage can run either on
/// an explicit matrix or on the matrix-free measurement model.
class RealLinearOp {
  public:
    virtual ~RealLinearOp() = default;
    virtual Eigen::Index rows() const = 0;
    virtual Eigen::Index cols() const = 0;
    virtual Eigen::VectorXd apply(const Eigen::VectorXd& x) const = 0;
    virtual Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& y) const = 0;
};

class DenseRealOp final : public RealLinearOp {
  public:
    explicit DenseRealOp(Eigen::MatrixXd matrix) : a_(std::move(matrix)) {}
    Eigen::Index rows() const override { return a_.rows(); }
    Eigen::Index cols() const override { return a_.cols(); }
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const override { return a_ * x; }
    Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& y) const override {
        return a_.transpose() * y;
    }

  private:
    Eigen::MatrixXd a_;
};

/// Joint real system [[X_R, -X_I], [X_I, X_R]] of a measurement model,
/// applied matrix-free. The referenced model must outlive the operator.
class JointModelOp final : public RealLinearOp {
  public:
    explicit JointModelOp(const MeasurementModel& model) : model_(model) {}
    Eigen::Index rows() const override { return model_.joint_rows(); }
    Eigen::Index cols() const override { return model_.joint_cols(); }
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const override {
        return model_.joint_apply(x);
    }
    Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& y) const override {
        return model_.joint_apply_adjoint(y);
    }

  private:
    const MeasurementModel& model_;
};

/// Support-stage configuration. The gradient iteration is scale-equivariant
/// in the step size, so tau only sets the iterate magnitude before the final
/// normalization; the default matches common practice.
struct BihtConfig {
    double step_size = 1e-5;
    /// Replace step_size with |A|_2^2 / sqrt(rows), estimated by power
    /// iteration on the operator.
    bool auto_step = false;
    int sparsity_target = 0; ///< total kept components on the real-stacked vector
    int max_iters = 100;
    int stall_window = 10; ///< unchanged-support iterations before stopping
};

/// Optional per-run diagnostics for tests and tuning.
struct BihtTrace {
    std::vector<int> sparsity_per_iter;
    Eigen::VectorXd final_iterate; ///< normalized onto the unit l2 sphere
    int iterations = 0;
    bool converged = false; ///< sign consistency or support stall
};

/// Binary iterative hard thresholding on sign observations. Starts from
/// zero; each step applies the sign-residual gradient, keeps the
/// sparsity_target largest magnitudes (ties keep the lower index), and
/// stops on sign consistency, support stall, or max_iters. Returns the
/// sorted support of the final iterate.
/// Throws std::runtime_error naming the step size if the iterate leaves
/// the finite range.
std::vector<int> biht_support(const Eigen::VectorXd& one_bit_obs, const RealLinearOp& model,
                              const BihtConfig& config, BihtTrace* trace = nullptr);

enum class Method { biht_linear, oracle_linear, least_squares };
std::string method_name(Method m);

struct EstimationResult {
    Eigen::VectorXcd estimate;
    std::vector<int> support; ///< complex channel indices, sorted
    int iterations_used = 0;
    bool converged = true;
    Method method = Method::biht_linear;
};

/// Least-squares solve restricted to the given support columns; zero
/// elsewhere. Throws std::runtime_error (listing the support) when the
/// restricted matrix is rank deficient, std::invalid_argument when the
/// support exceeds the row count.
EstimationResult estimate_channel(const Eigen::VectorXcd& quantized_obs,
                                  const MeasurementModel& model,
                                  const std::vector<int>& support);

struct BihtEstimatorConfig {
    int sparsity_per_pair = 0; ///< K-hat per antenna pair
    double step_size = 1e-5;
    bool auto_step = false;
    int max_iters = 100;
    int stall_window = 10;
    /// Run one BIHT over the joint real system (default), or two separate
    /// runs on the [X_R -X_I] and [X_I X_R] halves with a support union.
    bool separate_real_imag = false;
};

/// Two-stage estimator: BIHT on the one-bit data identifies the support,
/// linear reconstruction on the B-bit data fills the values. The
/// real-stacked support maps to channel indices modulo the channel length;
/// the K-hat budget per pair caps the mapped support by iterate magnitude.
EstimationResult estimate_biht_linear(const Eigen::VectorXcd& quantized_obs,
                                      const Eigen::VectorXd& one_bit_obs,
                                      const MeasurementModel& model,
                                      const BihtEstimatorConfig& config);

/// Linear reconstruction with the true support revealed.
EstimationResult estimate_oracle(const Eigen::VectorXcd& quantized_obs,
                                 const MeasurementModel& model,
                                 const std::vector<int>& true_support);

/// Unrestricted pseudo-inverse baseline; minimum-norm when underdetermined.
EstimationResult estimate_least_squares(const Eigen::VectorXcd& quantized_obs,
                                        const MeasurementModel& model);

} // namespace fewbit
