// Copyright 2026 The Gatekit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "gatekit/backend.hpp"

namespace gk = gatekit;

namespace {

gk::SimBackendConfig noiseless() {
    gk::SimBackendConfig cfg;
    cfg.pulse_error = 0.0;
    cfg.gzz_error = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("binomial draws survive large shot counts") {
    gk::Rng a(7), b(7);
    const auto x = a.binomial(2000000, 0.25);
    REQUIRE(x == b.binomial(2000000, 0.25));
    // mean 5e5, sigma ~612; allow 5 sigma
    REQUIRE(std::llabs(static_cast<long long>(x) - 500000) < 3100);
    // symmetry reduction for p > 1/2
    gk::Rng c(7);
    const auto y = c.binomial(2000000, 0.75);
    REQUIRE(y == 2000000 - x);
}

TEST_CASE("empty circuit leaves the prepared state untouched") {
    const gk::SimBackend be(noiseless());
    const auto p = be.probabilities("");
    REQUIRE(p[0] == Catch::Approx(1.0).margin(1e-12));
    const auto counts = be.sample("", 100, 0);
    REQUIRE(counts == std::array<long, 4>{100, 0, 0, 0});
}

TEST_CASE("pi pulse moves the population deterministically") {
    const gk::SimBackend be(noiseless());
    const auto p1 = be.probabilities("Gpi:1");
    REQUIRE(p1[2] == Catch::Approx(1.0).margin(1e-12));
    const auto p2 = be.probabilities("Gpi:2");
    REQUIRE(p2[1] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("entangling gate bracketed by pi/2 pulses makes the Bell state") {
    const gk::SimBackend be(noiseless());
    const auto p = be.probabilities("Gyp:1 Gyp:2 Gzz Gyp:1 Gyp:2");
    REQUIRE(p[0] == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(p[1] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(p[2] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(p[3] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("sampling is deterministic and keyed by canonical text") {
    gk::SimBackendConfig cfg = noiseless();
    cfg.seed = 11;
    const gk::SimBackend be(cfg);
    const auto a = be.sample("Gyp:1", 1000, 0);
    REQUIRE(a == be.sample("Gyp:1", 1000, 0));
    // sugar with the same canonical expansion draws the same shots
    REQUIRE(be.sample("Gzz Gzz", 500, 3) == be.sample("Gzz^2", 500, 3));
    REQUIRE(be.sample("Gzz Gzz", 500, 3) == be.sample("(Gzz)^2", 500, 3));
    // a different record index or root seed reshuffles the draw
    REQUIRE(a != be.sample("Gyp:1", 1000, 1));
    cfg.seed = 12;
    const gk::SimBackend other(cfg);
    REQUIRE(a != other.sample("Gyp:1", 1000, 0));
    REQUIRE(a[0] + a[1] + a[2] + a[3] == 1000);
    // Gyp:1 splits the first qubit evenly
    REQUIRE(std::abs(a[0] + a[1] - 500) < 80);
}

TEST_CASE("empirical distribution converges to the exact one") {
    gk::SimBackendConfig cfg;
    cfg.gzz_error = 5e-3;
    cfg.seed = 2024;
    const gk::SimBackend be(cfg);
    const std::string circuit = "Gyp:1 Ga45:2 Gzz Gxm:2";
    const auto exact = be.probabilities(circuit);
    for (double v : exact) REQUIRE(v > 0.01);  // all outcomes populated
    const long shots = 1000000;
    const auto counts = be.sample(circuit, shots, 0);
    double kl = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double q = static_cast<double>(counts[i]) / shots;
        if (q > 0.0) kl += q * std::log(q / exact[i]);
    }
    REQUIRE(kl >= 0.0);
    REQUIRE(kl < 1e-4);
}

TEST_CASE("readout confusion mixes outcomes per qubit") {
    gk::SimBackendConfig cfg = noiseless();
    cfg.readout_flip_ca = 0.1;
    cfg.readout_flip_sr = 0.25;
    const gk::SimBackend be(cfg);
    const auto p = be.probabilities("");
    REQUIRE(p[0] == Catch::Approx(0.9 * 0.75).margin(1e-12));
    REQUIRE(p[1] == Catch::Approx(0.9 * 0.25).margin(1e-12));
    REQUIRE(p[2] == Catch::Approx(0.1 * 0.75).margin(1e-12));
    REQUIRE(p[3] == Catch::Approx(0.1 * 0.25).margin(1e-12));
}

TEST_CASE("drift leaves the first gate alone and grows with depth") {
    gk::SimBackendConfig off = noiseless();
    gk::SimBackendConfig on = off;
    on.drift_heating_qps = 110.0;
    const gk::SimBackend be_off(off), be_on(on);

    // first entangling gate starts at t = 0, so a single-gate circuit is
    // unaffected by drift
    const auto a = be_off.probabilities("Gzz");
    const auto b = be_on.probabilities("Gzz");
    for (int i = 0; i < 4; ++i) REQUIRE(a[i] == Catch::Approx(b[i]).margin(1e-15));

    // deeper circuits depolarize toward uniform only when drift is on
    const std::string deep = "Gzz^10";
    const auto p_off = be_off.probabilities(deep);
    const auto p_on = be_on.probabilities(deep);
    REQUIRE(p_off[0] == Catch::Approx(1.0).margin(1e-9));  // even gate count
    REQUIRE(p_on[0] < p_off[0] - 1e-4);
    // and the advantage compounds: 20 gates lose more than 10
    const auto p_on20 = be_on.probabilities("Gzz^20");
    REQUIRE(p_on20[0] < p_on[0] - 1e-4);
}

TEST_CASE("budget channel backend stays close to the ideal gate") {
    gk::SimBackendConfig cfg = noiseless();
    cfg.use_budget_channel = true;
    const gk::SimBackend be(cfg);
    const auto p = be.probabilities("Gyp:1 Gyp:2 Gzz Gyp:1 Gyp:2");
    // the coherent stray-ZZ term tips the parity fringe at amplitude order
    // (~sqrt of its infidelity); odd outcomes only grow at infidelity order
    REQUIRE(p[0] == Catch::Approx(0.5).margin(0.04));
    REQUIRE(p[3] == Catch::Approx(0.5).margin(0.04));
    REQUIRE(p[0] + p[3] > 1.0 - 5e-3);
    REQUIRE(p[1] + p[2] < 5e-3);
}

TEST_CASE("datasets generated by the backend replay byte for byte") {
    gk::SimBackendConfig cfg;
    cfg.gzz_error = 1e-3;
    cfg.seed = 5;
    const gk::SimBackend be(cfg);
    const std::vector<std::string> circuits = {"Gyp:1 Gyp:2 Gzz Gyp:1 Gyp:2",
                                               "Gzz^2", "Gpi:1"};
    const gk::CountDataset d1 = be.run(circuits, 2000);
    const gk::CountDataset d2 = be.run(circuits, 2000);
    std::ostringstream s1, s2;
    gk::write_dataset(s1, d1);
    gk::write_dataset(s2, d2);
    REQUIRE(s1.str() == s2.str());
    REQUIRE(d1.records[1].circuit == "Gzz Gzz");
    REQUIRE(d1.records[0].shots() == 2000);
}
