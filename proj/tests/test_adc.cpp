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
#include <numbers>

#include "doctest.h"

#include "fewbit/adc.hpp"
#include "fewbit/rng.hpp"
#include "oracles.hpp"

using namespace fewbit;

TEST_CASE("adc_power_w: direct evaluations") {
    // 494 fJ * 5 GHz * 2^3 = 19.76 mW; same power at half the rate and one
    // more bit.
    CHECK(adc_power_w(3, 5e9, 494e-15) == doctest::Approx(19.76e-3).epsilon(1e-12));
    CHECK(adc_power_w(4, 2.5e9, 494e-15) == doctest::Approx(19.76e-3).epsilon(1e-12));
    CHECK(adc_power_w(1, 0.0, 494e-15) == 0.0);
    CHECK_THROWS_AS(adc_power_w(0, 1e9, 494e-15), std::invalid_argument);
}

TEST_CASE("adc energy identity: P*T = c * (T f_s) * 2^B") {
    AdcConfig cfg;
    cfg.bit_depth = 5;
    cfg.sampling_rate_hz = 1.2652e9;
    cfg.walden_c_j = 494e-15;
    cfg.duration_s = 100e-9;
    const double m_exact = cfg.duration_s * cfg.sampling_rate_hz;
    CHECK(adc_energy_j(cfg) ==
          doctest::Approx(cfg.walden_c_j * m_exact * 32.0).epsilon(1e-12));
}

TEST_CASE("solve_budget: canonical 20 mW budget") {
    const auto entries = solve_budget(20e-3, 494e-15, 100e-9, {2, 3, 4, 5, 6, 7, 8});
    REQUIRE(entries.size() == 7);
    CHECK(entries[0].config.sampling_rate_hz == doctest::Approx(1.01215e10).epsilon(1e-4));
    CHECK(entries[0].config.sample_count == 1012);
    CHECK(entries[3].config.bit_depth == 5);
    CHECK(entries[3].config.sampling_rate_hz == doctest::Approx(1.2652e9).epsilon(1e-4));
    CHECK(entries[3].config.sample_count == 126);
    for (const auto& e : entries) {
        CHECK(e.feasible);
        // Inverse check: the solved rate exactly meets the budget before
        // flooring.
        CHECK(adc_power_w(e.config) == doctest::Approx(20e-3).epsilon(1e-12));
    }
}

TEST_CASE("solve_budget: halving the budget halves rates and sample counts") {
    const auto full = solve_budget(20e-3, 494e-15, 100e-9, {2, 3, 4});
    const auto half = solve_budget(10e-3, 494e-15, 100e-9, {2, 3, 4});
    for (std::size_t i = 0; i < full.size(); ++i) {
        CHECK(half[i].config.sampling_rate_hz ==
              doctest::Approx(full[i].config.sampling_rate_hz / 2.0).epsilon(1e-12));
        CHECK(half[i].config.sample_count ==
              static_cast<int>(std::floor(full[i].config.duration_s *
                                          full[i].config.sampling_rate_hz / 2.0)));
    }
}

TEST_CASE("solve_budget: M = 0 cells are flagged infeasible, not dropped") {
    const auto entries = solve_budget(20e-3, 494e-15, 100e-9, {20});
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].config.sample_count == 0);
    CHECK_FALSE(entries[0].feasible);
}

TEST_CASE("design_quantizer: one-bit closed form") {
    const QuantizerModel q = design_quantizer(1, 1.0);
    const double level = std::sqrt(2.0 / std::numbers::pi);
    REQUIRE(q.levels.size() == 2);
    REQUIRE(q.thresholds.size() == 1);
    CHECK(q.thresholds[0] == 0.0);
    CHECK(q.levels[0] == doctest::Approx(-level).epsilon(1e-12));
    CHECK(q.levels[1] == doctest::Approx(level).epsilon(1e-12));
    CHECK(q.mse == doctest::Approx(1.0 - 2.0 / std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("design_quantizer: two-bit fixed point matches the grid-Lloyd oracle") {
    const QuantizerModel q = design_quantizer(2, 1.0);
    REQUIRE(q.levels.size() == 4);
    REQUIRE(q.thresholds.size() == 3);
    // Known Lloyd-Max values for the unit Gaussian.
    CHECK(q.thresholds[1] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(q.thresholds[2] == doctest::Approx(0.9816).epsilon(1e-3));
    CHECK(q.levels[2] == doctest::Approx(0.4528).epsilon(1e-3));
    CHECK(q.levels[3] == doctest::Approx(1.510).epsilon(1e-3));

    const oracles::GridLloyd ref = oracles::grid_lloyd(2);
    for (int k = 0; k < 4; ++k)
        CHECK(q.levels[static_cast<std::size_t>(k)] ==
              doctest::Approx(ref.levels[static_cast<std::size_t>(k)]).epsilon(1e-4));
    CHECK(q.mse == doctest::Approx(ref.mse).epsilon(1e-4));
}

TEST_CASE("design_quantizer: scale equivariance") {
    const QuantizerModel base = design_quantizer(3, 1.0);
    const QuantizerModel scaled = design_quantizer(3, 2.0);
    for (std::size_t i = 0; i < base.levels.size(); ++i)
        CHECK(scaled.levels[i] == doctest::Approx(2.0 * base.levels[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < base.thresholds.size(); ++i)
        CHECK(scaled.thresholds[i] == doctest::Approx(2.0 * base.thresholds[i]).epsilon(1e-12));
    CHECK(scaled.mse == doctest::Approx(4.0 * base.mse).epsilon(1e-12));
}

TEST_CASE("design_quantizer: distortion decreases strictly in bit depth") {
    double prev = design_quantizer(1, 1.0).mse;
    for (int b = 2; b <= 12; ++b) {
        const double mse = design_quantizer(b, 1.0).mse;
        CHECK(mse < prev);
        prev = mse;
    }
}

TEST_CASE("design_quantizer: centroid residuals after convergence") {
    const QuantizerModel q = design_quantizer(4, 1.5);
    // Independent centroid recomputation on a fine grid.
    const int grid = 400001;
    const double span = 10.0 * q.input_std;
    std::vector<double> mass(q.levels.size(), 0.0), moment(q.levels.size(), 0.0);
    for (int i = 0; i < grid; ++i) {
        const double x = -span + 2.0 * span * i / (grid - 1);
        const double w = std::exp(-0.5 * x * x / (q.input_std * q.input_std));
        std::size_t cell = 0;
        while (cell < q.thresholds.size() && x >= q.thresholds[cell])
            ++cell;
        mass[cell] += w;
        moment[cell] += w * x;
    }
    for (std::size_t k = 0; k < q.levels.size(); ++k)
        CHECK(std::abs(q.levels[k] - moment[k] / mass[k]) < 1e-6 * q.input_std);
}

TEST_CASE("design_quantizer: rejects bad arguments") {
    CHECK_THROWS_AS(design_quantizer(0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(design_quantizer(3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(design_quantizer(3, -1.0), std::invalid_argument);
}

TEST_CASE("quantize: sign behavior, tie rule, idempotence") {
    const QuantizerModel q1 = design_quantizer(1, 2.0);
    Eigen::VectorXd pos(3);
    pos << 0.1, 5.0, 0.0;
    const Eigen::VectorXd out = quantize(q1, pos);
    for (Eigen::Index i = 0; i < out.size(); ++i)
        CHECK(out[i] == doctest::Approx(2.0 * std::sqrt(2.0 / std::numbers::pi)));

    const QuantizerModel q3 = design_quantizer(3, 1.0);
    // A sample exactly on a threshold belongs to the upper cell.
    for (std::size_t t = 0; t < q3.thresholds.size(); ++t)
        CHECK(quantize_sample(q3, q3.thresholds[t]) == q3.levels[t + 1]);
    // Far outside the range saturates at the outermost levels.
    CHECK(quantize_sample(q3, 100.0) == q3.levels.back());
    CHECK(quantize_sample(q3, -100.0) == q3.levels.front());
    // Quantizing the output returns it unchanged.
    Eigen::VectorXd samples(5);
    samples << -2.3, -0.4, 0.0, 0.7, 3.1;
    const Eigen::VectorXd once = quantize(q3, samples);
    const Eigen::VectorXd twice = quantize(q3, once);
    for (Eigen::Index i = 0; i < once.size(); ++i)
        CHECK(once[i] == twice[i]);
}

TEST_CASE("quantize: empirical distortion matches the model MSE") {
    const QuantizerModel q = design_quantizer(3, 1.0);
    Rng rng(2024);
    const int n = 200000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.next_normal();
        const double d = x - quantize_sample(q, x);
        acc += d * d;
    }
    CHECK(acc / n == doctest::Approx(q.mse).epsilon(0.03));
}

TEST_CASE("sign_quantize: zero maps to +1, idempotent, scale invariant") {
    Eigen::VectorXd v(3);
    v << 0.3, -2.0, 0.0;
    const Eigen::VectorXd s = sign_quantize(v);
    CHECK(s[0] == 1.0);
    CHECK(s[1] == -1.0);
    CHECK(s[2] == 1.0);
    const Eigen::VectorXd s2 = sign_quantize(s);
    for (Eigen::Index i = 0; i < s.size(); ++i)
        CHECK(s[i] == s2[i]);
    const Eigen::VectorXd scaled = sign_quantize(3.7 * v);
    for (Eigen::Index i = 0; i < s.size(); ++i)
        CHECK(s[i] == scaled[i]);
}
