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
#include <sstream>

#include "gatekit/config.hpp"
#include "gatekit/dataset.hpp"
#include "gatekit/rng.hpp"

namespace gk = gatekit;

using Catch::Matchers::ContainsSubstring;

namespace {

gk::GateOp random_op(gk::Rng& rng) {
    static const gk::OpKind kinds[] = {
        gk::OpKind::Gxp, gk::OpKind::Gxm,  gk::OpKind::Gyp, gk::OpKind::Gym,
        gk::OpKind::Gzp, gk::OpKind::Gzm,  gk::OpKind::Gpi, gk::OpKind::Ga45,
        gk::OpKind::Ga135, gk::OpKind::Gzz};
    const gk::OpKind k = kinds[rng.below(10)];
    if (gk::op_is_two_qubit(k)) return {k, 0};
    return {k, static_cast<int>(1 + rng.below(2))};
}

// random text using the repeat and group sugar, together with the flat ops
// it must expand to
std::pair<std::string, gk::Circuit> random_sugared(gk::Rng& rng) {
    std::string text;
    gk::Circuit flat;
    const int items = static_cast<int>(rng.below(6));
    for (int i = 0; i < items; ++i) {
        if (!text.empty()) text += ' ';
        if (rng.below(4) == 0) {
            const int inner = static_cast<int>(1 + rng.below(3));
            const int times = static_cast<int>(1 + rng.below(3));
            std::string body;
            std::vector<gk::GateOp> ops;
            for (int j = 0; j < inner; ++j) {
                if (!body.empty()) body += ' ';
                const gk::GateOp op = random_op(rng);
                body += gk::op_to_string(op);
                ops.push_back(op);
            }
            text += "(" + body + ")^" + std::to_string(times);
            for (int t = 0; t < times; ++t)
                flat.ops.insert(flat.ops.end(), ops.begin(), ops.end());
        } else {
            const gk::GateOp op = random_op(rng);
            const int times = static_cast<int>(1 + rng.below(3));
            text += gk::op_to_string(op);
            if (times > 1) text += "^" + std::to_string(times);
            for (int t = 0; t < times; ++t) flat.ops.push_back(op);
        }
    }
    return {text, flat};
}

}  // namespace

TEST_CASE("parser handles plain ops, repeats and groups") {
    const gk::Circuit c = gk::parse_circuit("Gxp:1 Gzz Gym:2");
    REQUIRE(c.ops.size() == 3);
    REQUIRE(c.ops[0] == gk::GateOp{gk::OpKind::Gxp, 1});
    REQUIRE(c.ops[1] == gk::GateOp{gk::OpKind::Gzz, 0});
    REQUIRE(c.ops[2] == gk::GateOp{gk::OpKind::Gym, 2});

    REQUIRE(gk::parse_circuit("Gzz^3").ops ==
            std::vector<gk::GateOp>(3, {gk::OpKind::Gzz, 0}));
    REQUIRE(gk::parse_circuit("(Gzz Gxp:1)^2").ops.size() == 4);
    REQUIRE(gk::parse_circuit("((Gxp:1)^2 Gzz)^2").ops.size() == 6);
    REQUIRE(gk::parse_circuit("").ops.empty());
    REQUIRE(gk::parse_circuit(" \t ").ops.empty());
    // sugar expands to the same canonical text
    REQUIRE(gk::canonical_circuit("(Gzz Gxp:1)^2") ==
            "Gzz Gxp:1 Gzz Gxp:1");
}

TEST_CASE("parser reports the byte offset of each error") {
    auto offset_of = [](const std::string& text) -> std::string {
        try {
            gk::parse_circuit(text);
        } catch (const std::invalid_argument& e) {
            return e.what();
        }
        return "(no error)";
    };
    REQUIRE_THAT(offset_of("Gfoo:1"), ContainsSubstring("unknown gate name 'Gfoo'") &&
                                          ContainsSubstring("at byte 0"));
    REQUIRE_THAT(offset_of("Gzz Gxp"), ContainsSubstring("requires a qubit") &&
                                           ContainsSubstring("at byte 4"));
    REQUIRE_THAT(offset_of("Gzz:1"), ContainsSubstring("does not take a qubit"));
    REQUIRE_THAT(offset_of("Gxp:3"), ContainsSubstring("qubit must be 1 or 2"));
    REQUIRE_THAT(offset_of("Gzz )"), ContainsSubstring("unmatched ')'"));
    REQUIRE_THAT(offset_of("(Gzz"), ContainsSubstring("expected ')'"));
    REQUIRE_THAT(offset_of("(Gzz)"), ContainsSubstring("expected '^' after group"));
    REQUIRE_THAT(offset_of("Gzz^"), ContainsSubstring("expected repeat count"));
    REQUIRE_THAT(offset_of("Gzz^0"), ContainsSubstring("repeat count must be positive"));
    REQUIRE_THAT(offset_of("Gzz^99999999999"), ContainsSubstring("repeat count too large"));
    REQUIRE_THAT(offset_of("(Gzz^200000)^6"),
                 ContainsSubstring("exceeds 1000000 operations"));
}

TEST_CASE("ten thousand random circuits round trip exactly") {
    gk::Rng rng(20260816);
    for (int trial = 0; trial < 5000; ++trial) {
        gk::Circuit c;
        const int n = static_cast<int>(rng.below(40));
        for (int i = 0; i < n; ++i) c.ops.push_back(random_op(rng));
        const std::string text = gk::circuit_to_string(c);
        REQUIRE(gk::parse_circuit(text) == c);
        REQUIRE(gk::circuit_to_string(gk::parse_circuit(text)) == text);
    }
    for (int trial = 0; trial < 5000; ++trial) {
        const auto [text, flat] = random_sugared(rng);
        REQUIRE(gk::parse_circuit(text) == flat);
    }
}

TEST_CASE("datasets round trip with metadata") {
    gk::CountDataset ds;
    ds.metadata["backend"] = "sim";
    ds.metadata["seed"] = "42";
    ds.records.push_back({"Gyp:1 Gyp:2 Gzz", {50, 0, 0, 50}});
    ds.records.push_back({"", {100, 0, 0, 0}});
    std::ostringstream out;
    gk::write_dataset(out, ds);
    std::istringstream in(out.str());
    const gk::CountDataset back = gk::read_dataset(in);
    REQUIRE(back.metadata == ds.metadata);
    REQUIRE(back.records.size() == 2);
    REQUIRE(back.records[0].circuit == ds.records[0].circuit);
    REQUIRE(back.records[0].counts == ds.records[0].counts);
    REQUIRE(back.records[1].circuit.empty());
    REQUIRE(back.records[1].shots() == 100);
}

TEST_CASE("dataset reader reports line numbers") {
    auto error_of = [](const std::string& text) -> std::string {
        std::istringstream in(text);
        try {
            gk::read_dataset(in);
        } catch (const std::invalid_argument& e) {
            return e.what();
        }
        return "(no error)";
    };
    REQUIRE_THAT(error_of("Gzz 1 2 3 4\n"),
                 ContainsSubstring("line 1") && ContainsSubstring("tab"));
    REQUIRE_THAT(error_of("# ok\nGzz\t1 2 3\n"),
                 ContainsSubstring("line 2") &&
                     ContainsSubstring("expected four counts"));
    REQUIRE_THAT(error_of("Gzz\t1 2 3 4 5\n"),
                 ContainsSubstring("exactly four counts"));
    REQUIRE_THAT(error_of("Gzz\t1 -2 3 4\n"),
                 ContainsSubstring("negative count"));
    REQUIRE_THAT(error_of("comments\nGbad:1\t1 2 3 4\n"),
                 ContainsSubstring("line 1"));
    REQUIRE_THAT(error_of("# fine\nGbad:1\t1 2 3 4\n"),
                 ContainsSubstring("line 2") &&
                     ContainsSubstring("unknown gate name"));
    // blank lines, CRLF and comment-only files are fine
    std::istringstream ok("# a = b\r\n\r\n# plain comment\r\nGzz\t1 0 0 0\r\n");
    const gk::CountDataset ds = gk::read_dataset(ok);
    REQUIRE(ds.metadata.at("a") == "b");
    REQUIRE(ds.records.size() == 1);
}

TEST_CASE("config defaults rebuild the built-in parameter structs") {
    const gk::Config c = gk::Config::defaults();
    const gk::phys::IonSpecies ca = c.ion_ca();
    REQUIRE(ca.name == "Ca43");
    REQUIRE(ca.eta_oop == 0.127);
    REQUIRE(ca.c_down == 0.6543631655180397);
    REQUIRE(ca.c_up == -0.3485147898000169);
    const gk::phys::GateDriveConfig d = c.drive();
    REQUIRE(d.gate_detuning == -40e3);
    REQUIRE(d.gate_time == 2.0 / 40e3);
    const gk::phys::NoiseInputs n = c.noise();
    REQUIRE(n.gate_mode.label == "ax_oop");
    REQUIRE(n.stray_infidelity_coeff == 7e-4 / (0.3 * 0.3));
    const gk::SimBackendConfig s = c.sim();
    REQUIRE(s.pulse_error == 4.3e-4);
    REQUIRE(s.gate_time == d.gate_time);
    REQUIRE(c.shots() == 1000);
}

TEST_CASE("shipped default config matches the built-in defaults") {
    const std::string path =
        std::string(GATEKIT_REPO_ROOT) + "/configs/default.cfg";
    const gk::Config shipped = gk::Config::from_file(path);
    const gk::Config builtin = gk::Config::defaults();
    REQUIRE(shipped.canonical_text() == builtin.canonical_text());
}

TEST_CASE("config overlay changes only the named keys") {
    const gk::Config c = gk::Config::from_text(
        "[sim]\ngzz_error = 1e-3\nseed = 99\n\n[drive]\nloops = 4\n"
        "gate_time = 1e-4\n");
    REQUIRE(c.sim().gzz_error == 1e-3);
    REQUIRE(c.sim().seed == 99);
    REQUIRE(c.drive().loops == 4);
    REQUIRE(c.drive().gate_time == 1e-4);
    // untouched keys keep their defaults
    REQUIRE(c.sim().pulse_error == 4.3e-4);
    REQUIRE(c.ion_sr().c_down == 1.3);
}

TEST_CASE("config rejects unknown keys and bad values with line numbers") {
    auto error_of = [](const std::string& text) -> std::string {
        try {
            gk::Config::from_text(text);
        } catch (const std::invalid_argument& e) {
            return e.what();
        }
        return "(no error)";
    };
    REQUIRE_THAT(error_of("[sim]\nsheed = 1\n"),
                 ContainsSubstring("line 2") &&
                     ContainsSubstring("unknown key 'sim.sheed'"));
    REQUIRE_THAT(error_of("seed = 1\n"),
                 ContainsSubstring("unknown key 'seed'"));
    REQUIRE_THAT(error_of("[sim]\ngzz_error = abc\n"),
                 ContainsSubstring("line 2") &&
                     ContainsSubstring("not a number"));
    REQUIRE_THAT(error_of("[drive]\nwalsh_flip = maybe\n"),
                 ContainsSubstring("true or false"));
    REQUIRE_THAT(error_of("[sim\nseed = 1\n"), ContainsSubstring("']'"));
    REQUIRE_THAT(error_of("[sim]\njust words\n"),
                 ContainsSubstring("expected 'key = value'"));

    // gate_mode must name an axial mode
    REQUIRE_THROWS_WITH(
        gk::Config::from_text("[noise]\ngate_mode = rad_ip\n").noise(),
        ContainsSubstring("ax_ip or ax_oop"));
}

TEST_CASE("canonical config text is a fixed point") {
    const gk::Config a = gk::Config::defaults();
    const gk::Config b = gk::Config::from_text(a.canonical_text());
    REQUIRE(a.canonical_text() == b.canonical_text());
}
