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

#include <cmath>
#include <complex>

#include "doctest.h"

#include "fewbit/channel.hpp"
#include "fewbit/pilot.hpp"
#include "fewbit/rng.hpp"
#include "oracles.hpp"

using namespace fewbit;

TEST_CASE("generate_pilots: entries, lengths, determinism") {
    const PilotSet set = generate_pilots(1, 250, 200, PilotMode::iid_random, 7);
    REQUIRE(set.num_tx() == 1);
    CHECK(set.length() == 449);
    const double mag = 1.0 / std::sqrt(250.0);
    for (int t = 0; t < set.length(); ++t)
        CHECK(std::abs(set.sequences[0][t]) == mag);

    const PilotSet again = generate_pilots(1, 250, 200, PilotMode::iid_random, 7);
    for (int t = 0; t < set.length(); ++t)
        CHECK(set.sequences[0][t] == again.sequences[0][t]);

    const PilotSet tiny = generate_pilots(1, 1, 1, PilotMode::iid_random, 3);
    CHECK(tiny.length() == 1);
    CHECK(std::abs(tiny.sequences[0][0]) == 1.0);
}

TEST_CASE("generate_pilots: exact_orthogonal feasibility") {
    CHECK_THROWS_WITH_AS(generate_pilots(2, 15, 4, PilotMode::exact_orthogonal, 1),
                         doctest::Contains("M=16"), std::invalid_argument);
    CHECK_NOTHROW(generate_pilots(2, 16, 4, PilotMode::exact_orthogonal, 1));
    CHECK_NOTHROW(generate_pilots(1, 13, 4, PilotMode::exact_orthogonal, 1));
    CHECK(orthogonal_design_period(1) == 1);
    CHECK(orthogonal_design_period(2) == 2);
    CHECK(orthogonal_design_period(3) == 4);
    CHECK(orthogonal_design_period(5) == 8);
}

TEST_CASE("generate_pilots: exact_orthogonal equal-tap cross-Grams vanish") {
    const int m = 32, n = 6;
    const PilotSet set = generate_pilots(2, m, n, PilotMode::exact_orthogonal, 5);
    const MeasurementModel model = build_measurement_model(set, 1);
    const Eigen::MatrixXd x0 = model.toeplitz_block_real(0);
    const Eigen::MatrixXd x1 = model.toeplitz_block_real(1);
    // Same-tap columns from distinct sequences are constructed orthogonal;
    // verified by direct multiplication.
    for (int c = 0; c < n; ++c)
        CHECK(std::abs(x0.col(c).dot(x1.col(c))) < 1e-12);
    // Entries stay exact sign values.
    const double mag = 1.0 / std::sqrt(static_cast<double>(m));
    for (int i = 0; i < 2; ++i)
        for (int t = 0; t < set.length(); ++t)
            CHECK(std::abs(set.sequences[static_cast<std::size_t>(i)][t]) == mag);
    // Full sequences over any window of length M are mutually orthogonal.
    for (int s = 0; s + m <= set.length(); ++s)
        CHECK(std::abs(set.sequences[0].segment(s, m).dot(set.sequences[1].segment(s, m))) <
              1e-12);
}

TEST_CASE("build_measurement_model: Toeplitz layout and diagonal constancy") {
    // First row of the convolution matrix reads the sequence backwards:
    // [x_N, x_{N-1}, ..., x_1].
    Eigen::VectorXcd seq(5);
    seq << 1.0, 2.0, 3.0, 4.0, 5.0;
    const MeasurementModel model = build_measurement_model_complex({seq}, 1, 3);
    CHECK(model.samples_per_slot() == 3);
    const Eigen::MatrixXcd x = model.toeplitz_block(0);
    CHECK(x(0, 0) == std::complex<double>(3.0));
    CHECK(x(0, 1) == std::complex<double>(2.0));
    CHECK(x(0, 2) == std::complex<double>(1.0));
    for (int r = 0; r + 1 < 3; ++r)
        for (int c = 0; c + 1 < 3; ++c)
            CHECK(x(r, c) == x(r + 1, c + 1));

    const PilotSet set = generate_pilots(2, 40, 16, PilotMode::iid_random, 9);
    const MeasurementModel random_model = build_measurement_model(set, 2);
    for (int i = 0; i < 2; ++i) {
        const Eigen::MatrixXd block = random_model.toeplitz_block_real(i);
        for (int r = 0; r + 1 < block.rows(); ++r)
            for (int c = 0; c + 1 < block.cols(); ++c)
                CHECK(block(r, c) == block(r + 1, c + 1));
        // Unit column norms: M entries of squared magnitude 1/M.
        for (int c = 0; c < block.cols(); ++c)
            CHECK(block.col(c).squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("build_measurement_model: block-diagonal stacking per receiver") {
    const PilotSet set = generate_pilots(2, 12, 5, PilotMode::iid_random, 4);
    const MeasurementModel model = build_measurement_model(set, 3);
    const Eigen::MatrixXcd big = model.mimo_matrix();
    REQUIRE(big.rows() == 36);
    REQUIRE(big.cols() == 2 * 3 * 5);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 2; ++i)
            CHECK((big.block(12 * j, (j * 2 + i) * 5, 12, 5) - model.toeplitz_block(i)).norm() ==
                  0.0);
    // Off-block entries are zero.
    CHECK(big.block(0, 10, 12, 20).norm() == 0.0);
    CHECK(big.block(12, 0, 12, 10).norm() == 0.0);
}

TEST_CASE("apply: matches the naive convolution oracle and the dense matrix") {
    const PilotSet set = generate_pilots(2, 20, 7, PilotMode::iid_random, 21);
    const MeasurementModel model = build_measurement_model(set, 2);
    ChannelSpec spec;
    spec.taps = 7;
    spec.sparsity = 3;
    spec.num_tx = 2;
    spec.num_rx = 2;
    const SparseChannel ch = generate_channel(spec, 77);

    const Eigen::VectorXcd fast = model.apply(ch.entries);
    std::vector<Eigen::VectorXcd> seqs;
    for (const auto& s : set.sequences)
        seqs.push_back(s.cast<std::complex<double>>());
    const Eigen::VectorXcd naive = oracles::naive_observation(seqs, 2, 7, ch.entries);
    CHECK((fast - naive).norm() <= 1e-12 * naive.norm());

    const Eigen::VectorXcd dense = model.mimo_matrix() * ch.entries;
    CHECK((fast - dense).norm() <= 1e-12 * dense.norm());

    // Adjoint agrees with the dense transpose too.
    Rng rng(5);
    Eigen::VectorXcd y(model.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y[i] = rng.next_cnormal();
    const Eigen::VectorXcd adj = model.apply_adjoint(y);
    const Eigen::VectorXcd dense_adj = model.mimo_matrix().adjoint() * y;
    CHECK((adj - dense_adj).norm() <= 1e-12 * dense_adj.norm());
}

TEST_CASE("apply: zero channel and single-tap delta") {
    const PilotSet set = generate_pilots(1, 16, 6, PilotMode::iid_random, 2);
    const MeasurementModel model = build_measurement_model(set, 1);
    CHECK(model.apply(Eigen::VectorXcd::Zero(6)).norm() == 0.0);

    Eigen::VectorXcd delta = Eigen::VectorXcd::Zero(6);
    delta[2] = std::complex<double>(0.0, 2.0);
    const Eigen::VectorXcd y = model.apply(delta);
    for (int r = 0; r < 16; ++r)
        CHECK(y[r] == delta[2] * set.sequences[0][6 - 1 + r - 2]);
}

TEST_CASE("real stacking identity on random complex instances") {
    Rng rng(31);
    std::vector<Eigen::VectorXcd> seqs(2);
    const int taps = 5, m = 11, num_rx = 2;
    for (auto& s : seqs) {
        s.resize(m + taps - 1);
        for (Eigen::Index t = 0; t < s.size(); ++t)
            s[t] = rng.next_cnormal();
    }
    const MeasurementModel model = build_measurement_model_complex(seqs, num_rx, taps);
    CHECK_FALSE(model.is_real());

    const Eigen::MatrixXcd big = model.mimo_matrix();
    const Eigen::MatrixXd x1 = model.real_stacked_x1();
    const Eigen::MatrixXd x2 = model.real_stacked_x2();
    // Exact rearrangement of real and imaginary parts.
    CHECK((x1.leftCols(big.cols()) - big.real()).norm() == 0.0);
    CHECK((x1.rightCols(big.cols()) + big.imag()).norm() == 0.0);
    CHECK((x2.leftCols(big.cols()) - big.imag()).norm() == 0.0);
    CHECK((x2.rightCols(big.cols()) - big.real()).norm() == 0.0);

    for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXcd h(model.cols());
        for (Eigen::Index i = 0; i < h.size(); ++i)
            h[i] = rng.next_cnormal();
        Eigen::VectorXd stacked(2 * model.cols());
        stacked.head(model.cols()) = h.real();
        stacked.tail(model.cols()) = h.imag();

        const Eigen::VectorXcd y = model.apply(h);
        const Eigen::VectorXd y1 = x1 * stacked;
        const Eigen::VectorXd y2 = x2 * stacked;
        CHECK((y.real() - y1).norm() <= 1e-12 * y.norm());
        CHECK((y.imag() - y2).norm() <= 1e-12 * y.norm());

        const Eigen::VectorXd joint = model.joint_apply(stacked);
        CHECK((joint.head(model.rows()) - y1).norm() <= 1e-12 * y1.norm());
        CHECK((joint.tail(model.rows()) - y2).norm() <= 1e-12 * y2.norm());
    }

    // Real pilots degenerate to x1 = [X 0], x2 = [0 X].
    const PilotSet set = generate_pilots(1, 8, 3, PilotMode::iid_random, 1);
    const MeasurementModel real_model = build_measurement_model(set, 1);
    const Eigen::MatrixXd rx1 = real_model.real_stacked_x1();
    const Eigen::MatrixXd rx2 = real_model.real_stacked_x2();
    CHECK(rx1.rightCols(3).norm() == 0.0);
    CHECK(rx2.leftCols(3).norm() == 0.0);
    CHECK((rx1.leftCols(3) - rx2.rightCols(3)).norm() == 0.0);
}

TEST_CASE("joint operators match the dense joint matrix") {
    const PilotSet set = generate_pilots(2, 24, 9, PilotMode::iid_random, 13);
    const MeasurementModel model = build_measurement_model(set, 2);
    const Eigen::MatrixXd joint = model.joint_real();
    Rng rng(99);
    Eigen::VectorXd x(joint.cols()), y(joint.rows());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x[i] = rng.next_normal();
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y[i] = rng.next_normal();
    CHECK((model.joint_apply(x) - joint * x).norm() <= 1e-12 * (joint * x).norm());
    CHECK((model.joint_apply_adjoint(y) - joint.transpose() * y).norm() <=
          1e-12 * (joint.transpose() * y).norm());

    // Restricted columns agree with the dense views.
    const std::vector<int> support = {0, 5, 9 + 3, 2 * 9 + 1, 4 * 9 - 1};
    const Eigen::MatrixXcd cols = model.restricted_columns(support);
    const Eigen::MatrixXcd big = model.mimo_matrix();
    for (std::size_t k = 0; k < support.size(); ++k)
        CHECK((cols.col(static_cast<Eigen::Index>(k)) - big.col(support[k])).norm() == 0.0);

    std::vector<int> stacked_support = support;
    for (int idx : support)
        stacked_support.push_back(idx + static_cast<int>(model.cols()));
    const Eigen::MatrixXd jcols = model.joint_restricted_columns(stacked_support);
    for (std::size_t k = 0; k < stacked_support.size(); ++k)
        CHECK((jcols.col(static_cast<Eigen::Index>(k)) - joint.col(stacked_support[k])).norm() ==
              0.0);
}

TEST_CASE("probe_rip: identity, duplicated column, random Toeplitz") {
    const RipEstimate ident =
        probe_rip(dense_column_source(Eigen::MatrixXd::Identity(12, 12)), 3, 50, 1);
    CHECK(ident.delta_hat == doctest::Approx(0.0).epsilon(1e-12));

    Eigen::MatrixXd dup(6, 2);
    dup.col(0) = Eigen::VectorXd::Ones(6).normalized();
    dup.col(1) = dup.col(0);
    const RipEstimate degenerate = probe_rip(dense_column_source(dup), 2, 1, 1);
    CHECK(degenerate.delta_hat >= 1.0);

    const PilotSet set = generate_pilots(1, 250, 200, PilotMode::iid_random, 10);
    const MeasurementModel model = build_measurement_model(set, 1);
    const RipEstimate bern = probe_rip(toeplitz_column_source(model, 0), 10, 1000, 3);
    CHECK(bern.delta_hat < 1.0);
    CHECK(bern.delta_hat > 0.0);
    CHECK(bern.min_eig_seen > 0.0);
    CHECK(bern.max_eig_seen > 1.0);
}

TEST_CASE("probe_rip: argument validation") {
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(8, 8);
    CHECK_THROWS_AS(probe_rip(dense_column_source(eye), 9, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(probe_rip(dense_column_source(eye), 0, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(probe_rip(dense_column_source(eye), 3, 0, 1), std::invalid_argument);

    const PilotSet set = generate_pilots(2, 16, 4, PilotMode::iid_random, 2);
    const MeasurementModel model = build_measurement_model(set, 1);
    // Structured sampling needs the order to split across the 2 blocks.
    CHECK_THROWS_AS(probe_rip(mimo_column_source(model), 3, 10, 1), std::invalid_argument);
    CHECK_NOTHROW(probe_rip(mimo_column_source(model), 4, 10, 1));
}

TEST_CASE("probe_rip: stacked block order stays close to the per-block order") {
    // Lemma-style monotonicity, empirical form: with orthogonal pilots and
    // structured index sets the stacked delta at order Nt*k stays within
    // sampling slack of the worst per-block delta at order k.
    const int m = 4096, n = 16, k = 2;
    const PilotSet set = generate_pilots(2, m, n, PilotMode::exact_orthogonal, 77);
    const MeasurementModel model = build_measurement_model(set, 1);
    const RipEstimate d0 = probe_rip(toeplitz_column_source(model, 0), k, 200, 5);
    const RipEstimate d1 = probe_rip(toeplitz_column_source(model, 1), k, 200, 5);
    const RipEstimate stacked = probe_rip(mimo_column_source(model), 2 * k, 200, 5);
    CHECK(stacked.delta_hat <= std::max(d0.delta_hat, d1.delta_hat) + 0.05);

    // Same trend for i.i.d. pilots once M is comfortably large.
    const PilotSet iid = generate_pilots(2, m, n, PilotMode::iid_random, 78);
    const MeasurementModel iid_model = build_measurement_model(iid, 1);
    const RipEstimate i0 = probe_rip(toeplitz_column_source(iid_model, 0), k, 200, 6);
    const RipEstimate i1 = probe_rip(toeplitz_column_source(iid_model, 1), k, 200, 6);
    const RipEstimate istacked = probe_rip(mimo_column_source(iid_model), 2 * k, 200, 6);
    CHECK(istacked.delta_hat <= std::max(i0.delta_hat, i1.delta_hat) + 0.05);
}
