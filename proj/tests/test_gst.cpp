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
#include <set>

#include "gatekit/backend.hpp"
#include "gatekit/gst.hpp"
#include "gatekit/rng.hpp"

namespace gk = gatekit;
namespace gs = gatekit::gst;

namespace {

// Reduced design shared by the fitting tests: same fiducials and germs as
// the default, shorter length ladder.
const gs::GstDesign& test_design() {
    static const gs::GstDesign d = [] {
        gs::DesignOptions opt;
        opt.lengths = {1, 2, 4, 8};
        opt.singles_pairs = 8;
        opt.other_pairs = 2;
        return gs::build_design(opt);
    }();
    return d;
}

std::vector<std::array<double, 4>> exact_weights(const gs::GateSet& truth,
                                                 const gs::GstDesign& d) {
    std::vector<std::array<double, 4>> w;
    w.reserve(d.circuits.size());
    for (const gk::Circuit& c : d.circuits) w.push_back(gs::predict(truth, c));
    return w;
}

gs::GateSet depolarized_truth(double eps) {
    gs::GateSet truth = gs::target_gateset();
    for (int g = 0; g < gs::kNumGates; ++g)
        truth.gates[g] = gk::depolarizing2(4.0 / 3.0 * eps) * truth.gates[g];
    return truth;
}

double max_generator_norm(const gs::GateSet& est, const gs::GateSet& target) {
    double worst = 0.0;
    for (int g = 0; g < gs::kNumGates; ++g)
        worst = std::max(
            worst, gk::error_generator(est.gates[g], target.gates[g]).norm());
    return worst;
}

const gs::MleResult& ideal_fit() {
    static const gs::MleResult fit = gs::mle_fit_weights(
        exact_weights(gs::target_gateset(), test_design()), test_design());
    return fit;
}

const gs::MleResult& depolarizing_fit() {
    static const gs::MleResult fit = gs::mle_fit_weights(
        exact_weights(depolarized_truth(0.0075), test_design()),
        test_design());
    return fit;
}

}  // namespace

// ----------------------------- experiment design -----------------------------

TEST_CASE("default design covers SPAM and all germ length stages") {
    const gs::GstDesign d = gs::build_design();
    REQUIRE(d.prep_fiducials.size() == 16);
    REQUIRE(d.meas_fiducials.size() == 10);
    REQUIRE(d.germs.size() == 29);
    REQUIRE(d.circuits.size() == 673);

    long spam = 0;
    std::set<std::string> texts;
    for (std::size_t i = 0; i < d.entries.size(); ++i) {
        const auto& e = d.entries[i];
        if (e.germ < 0) {
            ++spam;
        } else {
            const int glen = static_cast<int>(d.germs[e.germ].ops.size());
            REQUIRE(e.reps == std::max(1, e.base_length / glen));
        }
        texts.insert(d.texts[i]);
    }
    REQUIRE(spam == 160);
    REQUIRE(texts.size() == d.circuits.size());

    std::set<int> lengths(d.lengths.begin(), d.lengths.end());
    REQUIRE(lengths == std::set<int>{1, 2, 4, 8, 16, 32, 64});
    for (const auto& e : d.entries) REQUIRE(lengths.count(e.base_length) == 1);
}

TEST_CASE("design truncation keeps only short base lengths") {
    const gs::GstDesign& d = test_design();
    const gs::GstDesign sub = gs::design_up_to(d, 2);
    REQUIRE(sub.lengths == std::vector<int>{1, 2});
    REQUIRE(sub.circuits.size() < d.circuits.size());
    for (const auto& e : sub.entries) REQUIRE(e.base_length <= 2);
    REQUIRE(sub.circuits.size() == sub.texts.size());
}

TEST_CASE("rank-deficient fiducial frames are rejected with the spectrum") {
    gs::DesignOptions opt;
    opt.prep_fiducials = {"", "Gxp:1", "Gxp:2", "Gxp:1 Gxp:2"};
    REQUIRE_THROWS_WITH(gs::build_design(opt),
                        Catch::Matchers::ContainsSubstring("Gram spectrum"));

    gs::DesignOptions bad_meas;
    bad_meas.meas_fiducials = {"", "Gzp:1"};
    REQUIRE_THROWS_WITH(gs::build_design(bad_meas),
                        Catch::Matchers::ContainsSubstring("measurement"));
}

TEST_CASE("design rejects invalid knobs") {
    gs::DesignOptions opt;
    opt.lengths = {};
    REQUIRE_THROWS_AS(gs::build_design(opt), std::invalid_argument);
    opt.lengths = {0, 1};
    REQUIRE_THROWS_AS(gs::build_design(opt), std::invalid_argument);
    opt.lengths = {1};
    opt.singles_pairs = 0;
    REQUIRE_THROWS_AS(gs::build_design(opt), std::invalid_argument);
    opt.singles_pairs = 8;
    opt.germs = {"Gxp:1", ""};
    REQUIRE_THROWS_AS(gs::build_design(opt), std::invalid_argument);
}

// -------------------------------- prediction ---------------------------------

TEST_CASE("prediction matches the noiseless simulator") {
    gk::SimBackendConfig cfg;
    cfg.pulse_error = 0.0;
    cfg.gzz_error = 0.0;
    const gk::SimBackend backend(cfg);
    const gs::GateSet target = gs::target_gateset();
    const gs::GstDesign& d = test_design();
    for (std::size_t i = 0; i < d.circuits.size(); i += 37) {
        const auto a = gs::predict(target, d.circuits[i]);
        const auto b = backend.probabilities(d.circuits[i]);
        for (int k = 0; k < 4; ++k)
            REQUIRE(a[k] == Catch::Approx(b[k]).margin(1e-12));
    }

    const auto p0 = gs::predict(target, gk::Circuit{});
    REQUIRE(p0[0] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(p0[1] + p0[2] + p0[3] == Catch::Approx(0.0).margin(1e-12));

    REQUIRE_THROWS_AS(gs::predict(target, gk::parse_circuit("Gpi:1")),
                      std::invalid_argument);
}

TEST_CASE("parameter counts follow the model structure") {
    const gs::ParamCounts c = gs::param_counts();
    REQUIRE(c.raw == 1280);
    REQUIRE(c.tp == 1263);
    REQUIRE(c.gauge_reduced == 1023);
    REQUIRE(c.reference == 1026);
}

// ------------------------------ parameterization ------------------------------

TEST_CASE("parameterization round trip reproduces CPTP gate sets") {
    namespace gd = gs::detail;
    for (const gs::GateSet& gset :
         {gs::target_gateset(), depolarized_truth(0.01)}) {
        const Eigen::VectorXd x = gd::params_from_gateset(gset, 1e-9);
        gd::ModelEval ev;
        gd::decode_params(x, &ev);
        for (int g = 0; g < gs::kNumGates; ++g)
            REQUIRE((ev.gs.gates[g] - gset.gates[g]).norm() < 1e-6);
        REQUIRE((ev.gs.rho - gset.rho).norm() < 1e-6);
        for (int k = 0; k < 4; ++k)
            REQUIRE((ev.gs.effects[k] - gset.effects[k]).norm() < 1e-6);
    }
}

TEST_CASE("decoded models are CPTP for arbitrary parameters") {
    namespace gd = gs::detail;
    gk::Rng rng(7);
    Eigen::VectorXd x(gd::kParamCount);
    for (int i = 0; i < x.size(); ++i) x(i) = 0.3 * rng.normal();
    gd::ModelEval ev;
    gd::decode_params(x, &ev);
    gk::RVec16 e1 = gk::RVec16::Zero();
    e1(0) = 1.0;
    for (int g = 0; g < gs::kNumGates; ++g) {
        REQUIRE((ev.gs.gates[g].row(0).transpose() - e1).norm() < 1e-12);
        const Eigen::SelfAdjointEigenSolver<gk::Mat16> es(
            gk::choi_from_ptm(ev.gs.gates[g]));
        REQUIRE(es.eigenvalues().minCoeff() > -1e-10);
    }
    gk::RVec16 esum = gk::RVec16::Zero();
    for (int k = 0; k < 4; ++k) esum += ev.gs.effects[k];
    REQUIRE((esum - e1).norm() < 1e-10);
    REQUIRE(ev.gs.rho(0) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("analytic gradient matches finite differences") {
    namespace gd = gs::detail;
    gs::DesignOptions opt;
    opt.lengths = {1, 2};
    opt.singles_pairs = 2;
    opt.other_pairs = 1;
    opt.germs = {"Gzz", "Gxp:1", "Gzz Gxp:2"};
    const gs::GstDesign d = gs::build_design(opt);

    gs::GateSet truth = gs::target_gateset();
    truth.gates[0] = gk::depolarizing2(0.02) * truth.gates[0];
    truth.gates[1] = gk::depolarizing2(0.01) * truth.gates[1];
    std::vector<std::array<double, 4>> w = exact_weights(truth, d);
    double wtot = 0.0;
    for (auto& arr : w) {
        for (double& v : arr) v *= 500.0;
        wtot += 500.0;
    }
    std::vector<std::vector<int>> ops(d.circuits.size());
    for (std::size_t i = 0; i < d.circuits.size(); ++i)
        for (const gk::GateOp& op : d.circuits[i].ops)
            ops[i].push_back(gs::gate_index(op));

    Eigen::VectorXd x = gd::params_from_gateset(gs::target_gateset(), 1e-3);
    gk::Rng rng(42);
    for (int i = 0; i < x.size(); ++i) x(i) += 1e-3 * rng.normal();

    gd::ModelEval ev;
    Eigen::VectorXd g(x.size());
    gd::model_objective(x, ops, w, wtot, &ev, &g);

    const double h = 1e-4;
    for (int probe = 0; probe < 60; ++probe) {
        const int i = static_cast<int>(
            rng.below(static_cast<std::uint64_t>(x.size())));
        Eigen::VectorXd xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        const double fp = gd::model_objective(xp, ops, w, wtot, &ev, nullptr);
        const double fm = gd::model_objective(xm, ops, w, wtot, &ev, nullptr);
        const double fd = (fp - fm) / (2.0 * h);
        const double scale =
            std::max({1e-7, std::abs(fd), std::abs(g(i))});
        REQUIRE(std::abs(fd - g(i)) / scale < 1e-4);
    }
}

// ------------------------------- likelihood fit -------------------------------

TEST_CASE("exact ideal data is fit to the global optimum") {
    const gs::MleResult& fit = ideal_fit();
    REQUIRE(fit.converged);
    REQUIRE(fit.two_delta_ll < 1e-8);
    REQUIRE(fit.tp_violation < 1e-12);
    REQUIRE(fit.cp_min_eig > -1e-10);
    REQUIRE(fit.effect_min_eig > -1e-10);
    REQUIRE(fit.cptp_ok);
    for (std::size_t i = 1; i < fit.objective_history.size(); ++i)
        REQUIRE(fit.objective_history[i] <=
                fit.objective_history[i - 1] + 1e-14);

    const gs::GaugeResult gauge =
        gs::gauge_optimize(fit.estimate, gs::target_gateset());
    REQUIRE(gauge.converged);
    REQUIRE(max_generator_norm(gauge.estimate, gs::target_gateset()) < 1e-6);

    const gs::GstReport rep =
        gs::report(gauge.estimate, gs::target_gateset());
    REQUIRE(rep.rho_infidelity < 1e-7);
    REQUIRE(rep.effect_deviation < 1e-6);
}

TEST_CASE("depolarizing error is recovered from exact data") {
    const gs::MleResult& fit = depolarizing_fit();
    REQUIRE(fit.cptp_ok);
    const gs::GaugeResult gauge =
        gs::gauge_optimize(fit.estimate, gs::target_gateset());
    const gs::GateSet truth = depolarized_truth(0.0075);
    for (int g = 0; g < gs::kNumGates; ++g) {
        const double est = gk::average_infidelity(
            gauge.estimate.gates[g], gs::target_gateset().gates[g]);
        const double expect = gk::average_infidelity(
            truth.gates[g], gs::target_gateset().gates[g]);
        REQUIRE(est == Catch::Approx(expect).margin(1e-3));
    }
}

TEST_CASE("sampled depolarizing data recovers the injected rates") {
    gk::SimBackendConfig cfg;
    cfg.seed = 20260311;
    cfg.gzz_error = 0.01;
    cfg.pulse_error = 0.002;
    const gk::SimBackend backend(cfg);
    const gs::GstDesign& d = test_design();
    const gk::CountDataset data = gs::run_design(backend, d, 1000);

    const gs::MleResult fit = gs::mle_fit(data, d);
    REQUIRE(fit.cptp_ok);
    const gs::GaugeResult gauge =
        gs::gauge_optimize(fit.estimate, gs::target_gateset());

    gs::GateSet truth = gs::target_gateset();
    truth.gates[0] = gk::depolarizing2(4.0 / 3.0 * cfg.gzz_error) *
                     truth.gates[0];
    truth.gates[1] =
        gk::depolarizing1(5.0 / 3.0 * cfg.pulse_error, 1) * truth.gates[1];
    truth.gates[2] =
        gk::depolarizing1(5.0 / 3.0 * cfg.pulse_error, 2) * truth.gates[2];
    for (int g = 0; g < gs::kNumGates; ++g) {
        const double est = gk::average_infidelity(
            gauge.estimate.gates[g], gs::target_gateset().gates[g]);
        const double expect = gk::average_infidelity(
            truth.gates[g], gs::target_gateset().gates[g]);
        REQUIRE(est == Catch::Approx(expect).margin(3e-3));
    }
}

TEST_CASE("coherent errors dominate the recovered generator") {
    gs::GateSet truth = gs::target_gateset();
    const double theta = 0.02;
    gk::Mat4 uerr = gk::Mat4::Zero();
    for (int i = 0; i < 4; ++i) {
        const double z1 = (i & 2) ? -1.0 : 1.0;
        const double z2 = (i & 1) ? -1.0 : 1.0;
        uerr(i, i) = std::exp(gk::cx(0.0, -0.5 * theta * z1 * z2));
    }
    truth.gates[0] = gk::ptm_from_unitary(uerr) * truth.gates[0];

    const gs::MleResult fit = gs::mle_fit_weights(
        exact_weights(truth, test_design()), test_design());
    const gs::GaugeResult gauge =
        gs::gauge_optimize(fit.estimate, gs::target_gateset());
    const gs::GstReport rep =
        gs::report(gauge.estimate, gs::target_gateset());

    REQUIRE(rep.gates[0].generator_norm ==
            Catch::Approx(gk::error_generator(truth.gates[0],
                                              gs::target_gateset().gates[0])
                              .norm())
                .epsilon(0.05));
    REQUIRE(rep.gates[0].coherent_fraction > 0.8);
    REQUIRE(rep.gates[0].stochastic_norm < 0.2 * rep.gates[0].coherent_norm);
}

TEST_CASE("fit rejects malformed data") {
    const gs::GstDesign& d = test_design();
    gk::CountDataset data;
    data.records.push_back({d.texts[0], {10, 0, 0, 0}});
    REQUIRE_THROWS_WITH(gs::mle_fit(data, d),
                        Catch::Matchers::ContainsSubstring("missing circuit"));

    std::vector<std::array<double, 4>> w = exact_weights(
        gs::target_gateset(), d);
    w[3] = {0.0, 0.0, 0.0, 0.0};
    REQUIRE_THROWS_WITH(gs::mle_fit_weights(w, d),
                        Catch::Matchers::ContainsSubstring("zero-shot"));
    w[3] = {1.0, -0.25, 0.0, 0.0};
    REQUIRE_THROWS_AS(gs::mle_fit_weights(w, d), std::invalid_argument);
}

// ----------------------------------- gauge -----------------------------------

TEST_CASE("gauge transformations leave every prediction unchanged") {
    const gs::GateSet truth = depolarized_truth(0.01);
    const gk::Ptm mu =
        gk::ptm_from_unitary(gk::kron2(gk::rx(0.3), gk::ry(-0.2)));
    gk::Rng rng(11);
    gk::Ptm mr = gk::Ptm::Identity();
    for (int a = 1; a < 16; ++a)
        for (int b = 0; b < 16; ++b) mr(a, b) += 0.01 * rng.normal();

    for (const gk::Ptm& m : {mu, mr}) {
        const gs::GateSet twisted = gs::apply_gauge(truth, m);
        const gs::GstDesign& d = test_design();
        for (std::size_t i = 0; i < d.circuits.size(); i += 29) {
            const auto a = gs::predict(truth, d.circuits[i]);
            const auto b = gs::predict(twisted, d.circuits[i]);
            for (int k = 0; k < 4; ++k)
                REQUIRE(a[k] == Catch::Approx(b[k]).margin(1e-9));
        }
    }
}

TEST_CASE("gauge optimization undoes a unitary twist") {
    const gs::GateSet truth = depolarized_truth(0.01);
    const gk::Ptm mu =
        gk::ptm_from_unitary(gk::kron2(gk::rx(0.3), gk::ry(-0.2)));
    const gs::GateSet twisted = gs::apply_gauge(truth, mu);

    const gs::GaugeResult res = gs::gauge_optimize(twisted, truth);
    REQUIRE(res.converged);
    REQUIRE(res.objective < 1e-12);
    for (int g = 0; g < gs::kNumGates; ++g)
        REQUIRE((res.estimate.gates[g] - truth.gates[g]).norm() < 1e-5);
    REQUIRE((res.estimate.rho - truth.rho).norm() < 1e-5);
}

TEST_CASE("gauge optimization fixes the target in place") {
    const gs::GaugeResult res =
        gs::gauge_optimize(gs::target_gateset(), gs::target_gateset());
    REQUIRE(res.converged);
    REQUIRE(res.objective < 1e-15);
    REQUIRE((res.m - gk::Ptm::Identity()).norm() < 1e-6);
}

TEST_CASE("ill-conditioned gauge matrices are rejected") {
    gk::Ptm m = gk::Ptm::Identity();
    m(5, 5) = 0.0;
    REQUIRE_THROWS_WITH(gs::apply_gauge(gs::target_gateset(), m),
                        Catch::Matchers::ContainsSubstring("condition"));
}

// ------------------------------ goodness of fit ------------------------------

TEST_CASE("exact data scores zero deviation") {
    const gs::GstDesign& d = test_design();
    std::vector<std::array<double, 4>> w =
        exact_weights(gs::target_gateset(), d);
    for (auto& arr : w)
        for (double& v : arr) v *= 1000.0;
    const gs::GofReport rep =
        gs::gof_table_weights(gs::target_gateset(), w, d);
    REQUIRE(rep.nongauge_params == 1023);
    REQUIRE(rep.rows.size() == d.lengths.size());
    long ncirc = 0;
    for (const auto& e : d.entries)
        if (e.base_length <= 8) ++ncirc;
    const gs::GofRow& last = rep.rows.back();
    REQUIRE(last.circuits == ncirc);
    REQUIRE(std::abs(last.statistic) < 1e-6);
    REQUIRE(last.dof ==
            Catch::Approx(std::max(3.0 * ncirc - 1023.0, 1.0)));
    REQUIRE(last.nsigma ==
            Catch::Approx(-last.dof / std::sqrt(2.0 * last.dof))
                .margin(1e-6));
}

TEST_CASE("markovian data passes the per-length consistency test") {
    gk::SimBackendConfig cfg;
    cfg.seed = 41;
    cfg.gzz_error = 0.005;
    cfg.pulse_error = 0.001;
    const gk::SimBackend backend(cfg);
    const gs::GstDesign& d = test_design();
    const gk::CountDataset data = gs::run_design(backend, d, 1000);
    const gs::GofReport rep = gs::goodness_of_fit(data, d);
    REQUIRE(rep.rows.size() == 4);
    for (const gs::GofRow& row : rep.rows) {
        INFO("length " << row.length << " nsigma " << row.nsigma);
        REQUIRE(std::abs(row.nsigma) <= 3.0);
    }
}

TEST_CASE("drifting data fails the markovian fit at long lengths") {
    gk::SimBackendConfig cfg;
    cfg.seed = 42;
    cfg.gzz_error = 0.005;
    cfg.pulse_error = 0.001;
    cfg.drift_heating_qps = 2e4;
    const gk::SimBackend backend(cfg);
    const gs::GstDesign& d = test_design();
    const gk::CountDataset data = gs::run_design(backend, d, 1000);
    const gs::GofReport rep = gs::goodness_of_fit(data, d);
    REQUIRE(rep.rows.front().nsigma < rep.rows.back().nsigma);
    REQUIRE(rep.rows.back().nsigma > 5.0);
}

// ------------------------------- amplification --------------------------------

TEST_CASE("default germs amplify every non-gauge direction") {
    const gs::GstDesign d = gs::build_design();
    const gs::AmplificationReport rep =
        gs::amplification_report(d.germs, gs::target_gateset());
    REQUIRE(rep.gate_params == 1200);
    REQUIRE(rep.gauge_rank > 0);
    REQUIRE(rep.complete);
    REQUIRE(rep.rank >= rep.gate_params - rep.gauge_rank);
}

TEST_CASE("a single-germ set is flagged incomplete") {
    const std::vector<gk::Circuit> germs = {gk::parse_circuit("Gxp:1")};
    const gs::AmplificationReport rep =
        gs::amplification_report(germs, gs::target_gateset());
    REQUIRE_FALSE(rep.complete);
    REQUIRE(rep.rank < rep.gate_params - rep.gauge_rank);
}
