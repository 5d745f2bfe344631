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

#include "fewbit/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fewbit/adc.hpp"

namespace fewbit {

std::string method_name(Method m) {
    switch (m) {
    case Method::biht_linear:
        return "biht_linear";
    case Method::oracle_linear:
        return "oracle_linear";
    case Method::least_squares:
        return "least_squares";
    }
    return "unknown";
}

namespace {

Eigen::VectorXd sign_of(const Eigen::VectorXd& v) {
    Eigen::VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out[i] = v[i] >= 0.0 ? 1.0 : -1.0;
    return out;
}

// Keep the k largest magnitudes; ties keep the lower index. Returns the
// sorted kept indices with nonzero value.
std::vector<int> hard_threshold(Eigen::VectorXd& v, int k) {
    const Eigen::Index n = v.size();
    if (k >= n) {
        std::vector<int> all;
        for (Eigen::Index i = 0; i < n; ++i)
            if (v[i] != 0.0)
                all.push_back(static_cast<int>(i));
        return all;
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const auto better = [&v](int a, int b) {
        const double ma = std::abs(v[a]);
        const double mb = std::abs(v[b]);
        return ma > mb || (ma == mb && a < b);
    };
    std::nth_element(order.begin(), order.begin() + k, order.end(), better);
    order.resize(static_cast<std::size_t>(k));
    std::sort(order.begin(), order.end());

    Eigen::VectorXd kept = Eigen::VectorXd::Zero(n);
    std::vector<int> support;
    support.reserve(order.size());
    for (int idx : order) {
        if (v[idx] != 0.0) {
            kept[idx] = v[idx];
            support.push_back(idx);
        }
    }
    v.swap(kept);
    return support;
}

double spectral_norm_estimate(const RealLinearOp& op) {
    // Fixed-start power iteration; deterministic and plenty for a step size.
    Eigen::VectorXd v = Eigen::VectorXd::Ones(op.cols()).normalized();
    double norm = 0.0;
    for (int i = 0; i < 30; ++i) {
        Eigen::VectorXd w = op.apply_adjoint(op.apply(v));
        norm = std::sqrt(w.norm());
        if (w.norm() == 0.0)
            return 0.0;
        v = w.normalized();
    }
    return norm;
}

std::string index_list(const std::vector<int>& idx, std::size_t limit = 16) {
    std::ostringstream os;
    os << "{";
    for (std::size_t i = 0; i < idx.size() && i < limit; ++i)
        os << (i ? "," : "") << idx[i];
    if (idx.size() > limit)
        os << ",...";
    os << "}";
    return os.str();
}

} // namespace

std::vector<int> biht_support(const Eigen::VectorXd& one_bit_obs, const RealLinearOp& model,
                              const BihtConfig& config, BihtTrace* trace) {
    if (one_bit_obs.size() != model.rows())
        throw std::invalid_argument("biht_support: observation length does not match rows.");
    if (config.sparsity_target < 1)
        throw std::invalid_argument("biht_support: sparsity target must be >= 1.");
    if (config.max_iters < 1 || config.stall_window < 1)
        throw std::invalid_argument("biht_support: max_iters and stall_window must be >= 1.");

    double tau = config.step_size;
    if (config.auto_step) {
        const double s = spectral_norm_estimate(model);
        tau = s * s / std::sqrt(static_cast<double>(model.rows()));
    }
    if (!(tau > 0.0))
        throw std::invalid_argument("biht_support: step size must be positive.");

    Eigen::VectorXd iterate = Eigen::VectorXd::Zero(model.cols());
    Eigen::VectorXd projected = Eigen::VectorXd::Zero(model.rows());
    std::vector<int> support;
    std::vector<int> prev_support;
    int stall = 0;
    int iters = 0;
    bool converged = false;

    for (int l = 0; l < config.max_iters; ++l) {
        const Eigen::VectorXd residual = one_bit_obs - sign_of(projected);
        if (residual.isZero(0.0)) {
            converged = true;
            break;
        }
        iterate += (tau / 2.0) * model.apply_adjoint(residual);
        support = hard_threshold(iterate, config.sparsity_target);
        ++iters;
        if (!iterate.allFinite())
            throw std::runtime_error("biht_support: iterate diverged (step size tau=" +
                                     std::to_string(tau) + " too large).");
        if (trace)
            trace->sparsity_per_iter.push_back(static_cast<int>(support.size()));
        projected = model.apply(iterate);
        if (support == prev_support) {
            if (++stall >= config.stall_window) {
                converged = true;
                break;
            }
        } else {
            stall = 0;
            prev_support = support;
        }
    }
    if (!converged && (sign_of(projected) - one_bit_obs).isZero(0.0))
        converged = true;

    // Normalization onto the unit sphere cannot change the support.
    const double norm = iterate.norm();
    if (norm > 0.0)
        iterate /= norm;
    if (trace) {
        trace->final_iterate = iterate;
        trace->iterations = iters;
        trace->converged = converged;
    }
    return support;
}

EstimationResult estimate_channel(const Eigen::VectorXcd& quantized_obs,
                                  const MeasurementModel& model,
                                  const std::vector<int>& support) {
    if (quantized_obs.size() != model.rows())
        throw std::invalid_argument("estimate_channel: observation length mismatch.");
    const Eigen::Index s = static_cast<Eigen::Index>(support.size());
    if (s > model.rows())
        throw std::invalid_argument("estimate_channel: support larger than the row count.");

    EstimationResult result;
    result.method = Method::oracle_linear;
    result.support = support;
    std::sort(result.support.begin(), result.support.end());
    result.estimate = Eigen::VectorXcd::Zero(model.cols());
    if (s == 0)
        return result;

    Eigen::VectorXcd solution(s);
    if (model.is_real() && s > 160) {
        // Large supports: normal equations on the shared real Gram.
        const Eigen::MatrixXd cols = model.restricted_columns_real(result.support);
        Eigen::MatrixXd gram(s, s);
        gram.setZero();
        gram.selfadjointView<Eigen::Lower>().rankUpdate(cols.transpose());
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram.selfadjointView<Eigen::Lower>());
        const double dmax = ldlt.vectorD().maxCoeff();
        if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= dmax * 1e-12)
            throw std::runtime_error("estimate_channel: restricted matrix is rank deficient "
                                     "on support " + index_list(result.support) + ".");
        Eigen::VectorXcd rhs(s);
        rhs.real() = cols.transpose() * quantized_obs.real();
        rhs.imag() = cols.transpose() * quantized_obs.imag();
        solution.real() = ldlt.solve(rhs.real().eval());
        solution.imag() = ldlt.solve(rhs.imag().eval());
    } else {
        const Eigen::MatrixXcd cols = model.restricted_columns(result.support);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(cols);
        if (qr.rank() < s)
            throw std::runtime_error("estimate_channel: restricted matrix is rank deficient "
                                     "on support " + index_list(result.support) + ".");
        solution = qr.solve(quantized_obs);
    }
    for (Eigen::Index k = 0; k < s; ++k)
        result.estimate[result.support[static_cast<std::size_t>(k)]] = solution[k];
    return result;
}

namespace {

// Map real-stacked indices to channel indices, rank by the energy of the
// final iterate, and keep at most the per-pair budget in total.
std::vector<int> map_stacked_support(const std::vector<int>& stacked,
                                     const Eigen::VectorXd& iterate, Eigen::Index dim,
                                     int max_kept) {
    std::vector<double> score(static_cast<std::size_t>(dim), 0.0);
    for (int idx : stacked) {
        const int g = idx < dim ? idx : idx - static_cast<int>(dim);
        score[static_cast<std::size_t>(g)] += iterate[idx] * iterate[idx];
    }
    std::vector<int> candidates;
    for (Eigen::Index g = 0; g < dim; ++g)
        if (score[static_cast<std::size_t>(g)] > 0.0)
            candidates.push_back(static_cast<int>(g));
    if (static_cast<int>(candidates.size()) > max_kept) {
        std::sort(candidates.begin(), candidates.end(), [&score](int a, int b) {
            const double sa = score[static_cast<std::size_t>(a)];
            const double sb = score[static_cast<std::size_t>(b)];
            return sa > sb || (sa == sb && a < b);
        });
        candidates.resize(static_cast<std::size_t>(max_kept));
    }
    std::sort(candidates.begin(), candidates.end());
    return candidates;
}

} // namespace

EstimationResult estimate_biht_linear(const Eigen::VectorXcd& quantized_obs,
                                      const Eigen::VectorXd& one_bit_obs,
                                      const MeasurementModel& model,
                                      const BihtEstimatorConfig& config) {
    if (config.sparsity_per_pair < 1)
        throw std::invalid_argument("estimate_biht_linear: K-hat must be >= 1.");
    const int pairs = model.num_tx() * model.num_rx();
    const int max_kept = pairs * config.sparsity_per_pair;

    BihtConfig biht;
    biht.step_size = config.step_size;
    biht.auto_step = config.auto_step;
    biht.max_iters = config.max_iters;
    biht.stall_window = config.stall_window;

    std::vector<int> stacked;
    Eigen::VectorXd iterate;
    int iterations = 0;
    bool converged = true;

    if (!config.separate_real_imag) {
        if (one_bit_obs.size() != model.joint_rows())
            throw std::invalid_argument("estimate_biht_linear: one-bit length must be 2*Nr*M.");
        biht.sparsity_target = 2 * max_kept;
        JointModelOp op(model);
        BihtTrace trace;
        stacked = biht_support(one_bit_obs, op, biht, &trace);
        iterate = trace.final_iterate;
        iterations = trace.iterations;
        converged = trace.converged;
    } else {
        // Two half-system runs against [X_R -X_I] and [X_I X_R]; the union
        // of supports feeds the linear stage.
        if (one_bit_obs.size() != model.joint_rows())
            throw std::invalid_argument("estimate_biht_linear: one-bit length must be 2*Nr*M.");
        biht.sparsity_target = 2 * config.sparsity_per_pair * pairs;
        DenseRealOp op1(model.real_stacked_x1());
        DenseRealOp op2(model.real_stacked_x2());
        BihtTrace t1, t2;
        const std::vector<int> s1 =
            biht_support(one_bit_obs.head(model.rows()), op1, biht, &t1);
        const std::vector<int> s2 =
            biht_support(one_bit_obs.tail(model.rows()), op2, biht, &t2);
        stacked = s1;
        stacked.insert(stacked.end(), s2.begin(), s2.end());
        std::sort(stacked.begin(), stacked.end());
        stacked.erase(std::unique(stacked.begin(), stacked.end()), stacked.end());
        iterate = (t1.final_iterate + t2.final_iterate) * 0.5;
        iterations = std::max(t1.iterations, t2.iterations);
        converged = t1.converged && t2.converged;
    }

    const std::vector<int> support =
        map_stacked_support(stacked, iterate, model.cols(), max_kept);
    EstimationResult result = estimate_channel(quantized_obs, model, support);
    result.method = Method::biht_linear;
    result.iterations_used = iterations;
    result.converged = converged;
    return result;
}

EstimationResult estimate_oracle(const Eigen::VectorXcd& quantized_obs,
                                 const MeasurementModel& model,
                                 const std::vector<int>& true_support) {
    EstimationResult result = estimate_channel(quantized_obs, model, true_support);
    result.method = Method::oracle_linear;
    return result;
}

EstimationResult estimate_least_squares(const Eigen::VectorXcd& quantized_obs,
                                        const MeasurementModel& model) {
    if (quantized_obs.size() != model.rows())
        throw std::invalid_argument("estimate_least_squares: observation length mismatch.");

    EstimationResult result;
    result.method = Method::least_squares;
    result.estimate = Eigen::VectorXcd::Zero(model.cols());

    // The block-diagonal system decouples per receiver slot: solving each
    // M x (Nt*N) block is the exact pseudo-inverse of the whole system.
    const int m = model.samples_per_slot();
    const Eigen::Index block_cols = static_cast<Eigen::Index>(model.num_tx()) * model.taps();
    std::vector<int> block_support(static_cast<std::size_t>(block_cols));

    for (int j = 0; j < model.num_rx(); ++j) {
        for (Eigen::Index c = 0; c < block_cols; ++c)
            block_support[static_cast<std::size_t>(c)] =
                static_cast<int>(j * block_cols + c);
        const Eigen::VectorXcd y = quantized_obs.segment(static_cast<Eigen::Index>(j) * m, m);

        Eigen::VectorXcd sol(block_cols);
        if (model.is_real()) {
            const Eigen::MatrixXd block = model.restricted_columns_real(block_support);
            if (m >= block_cols) {
                Eigen::MatrixXd gram(block_cols, block_cols);
                gram.setZero();
                gram.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
                Eigen::LDLT<Eigen::MatrixXd> ldlt(gram.selfadjointView<Eigen::Lower>());
                const double dmax = std::max(0.0, ldlt.vectorD().maxCoeff());
                if (ldlt.info() == Eigen::Success &&
                    ldlt.vectorD().minCoeff() > dmax * 1e-12) {
                    sol.real() = ldlt.solve((block.transpose() * y.real()).eval());
                    sol.imag() = ldlt.solve((block.transpose() * y.imag()).eval());
                } else {
                    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(block);
                    sol.real() = cod.solve(y.real().eval());
                    sol.imag() = cod.solve(y.imag().eval());
                }
            } else {
                // Minimum-norm solution through the M x M outer Gram.
                Eigen::MatrixXd outer(m, m);
                outer.setZero();
                outer.selfadjointView<Eigen::Lower>().rankUpdate(block);
                Eigen::LDLT<Eigen::MatrixXd> ldlt(outer.selfadjointView<Eigen::Lower>());
                const double dmax = std::max(0.0, ldlt.vectorD().maxCoeff());
                if (ldlt.info() == Eigen::Success &&
                    ldlt.vectorD().minCoeff() > dmax * 1e-12) {
                    sol.real() = block.transpose() * ldlt.solve(y.real().eval());
                    sol.imag() = block.transpose() * ldlt.solve(y.imag().eval());
                } else {
                    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(block);
                    sol.real() = cod.solve(y.real().eval());
                    sol.imag() = cod.solve(y.imag().eval());
                }
            }
        } else {
            const Eigen::MatrixXcd block = model.restricted_columns(block_support);
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(block);
            sol = cod.solve(y);
        }
        result.estimate.segment(static_cast<Eigen::Index>(j) * block_cols, block_cols) = sol;
    }

    for (Eigen::Index g = 0; g < result.estimate.size(); ++g)
        if (result.estimate[g] != std::complex<double>(0.0, 0.0))
            result.support.push_back(static_cast<int>(g));
    return result;
}

} // namespace fewbit
