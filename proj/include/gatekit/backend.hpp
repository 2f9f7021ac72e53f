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

#ifndef GATEKIT_BACKEND_HPP_
#define GATEKIT_BACKEND_HPP_

#include <array>
#include <map>
#include <string>
#include <vector>

#include "gatekit/circuit.hpp"
#include "gatekit/dataset.hpp"
#include "gatekit/gate_channel.hpp"
#include "gatekit/rng.hpp"

namespace gatekit {

// Noise model for simulated experiments.  Error strengths are average gate
// infidelities; depolarizing parameters are derived internally.
struct SimBackendConfig {
    std::uint64_t seed = 1;

    // average infidelity of each physical single-qubit pulse (software Z
    // rotations are exact)
    double pulse_error = 4.3e-4;

    // entangling gate model: either a flat two-qubit depolarizing channel of
    // this average infidelity, or the full physics error budget
    double gzz_error = 0.0;
    bool use_budget_channel = false;
    phys::NoiseInputs budget = phys::default_noise();

    // slow drift: the k-th entangling gate of a circuit picks up extra
    // depolarizing infidelity  drift_error_per_quantum * qps * k * slot_time,
    // with slot_time = gate_time + drift_slot_overhead.  The overhead covers
    // the single-qubit pulses and dead time between entangling gates, sized
    // so the longest benchmarking sequences span ~16 ms
    double drift_heating_qps = 0.0;
    double drift_error_per_quantum = 1.667e-3;
    double gate_time = 50e-6;
    double drift_slot_overhead = 60e-6;

    // symmetric readout flip probability per qubit
    double readout_flip_ca = 0.0;
    double readout_flip_sr = 0.0;

    void validate() const {
        if (pulse_error < 0.0 || pulse_error > 0.1)
            throw std::invalid_argument(
                "SimBackendConfig: pulse_error out of range");
        if (gzz_error < 0.0 || gzz_error > 0.5)
            throw std::invalid_argument(
                "SimBackendConfig: gzz_error out of range");
        if (drift_heating_qps < 0.0 || drift_error_per_quantum < 0.0 ||
            drift_slot_overhead < 0.0)
            throw std::invalid_argument(
                "SimBackendConfig: drift parameters must be nonnegative");
        if (gate_time <= 0.0)
            throw std::invalid_argument(
                "SimBackendConfig: gate_time must be positive");
        for (double f : {readout_flip_ca, readout_flip_sr})
            if (f < 0.0 || f >= 0.5)
                throw std::invalid_argument(
                    "SimBackendConfig: readout flip must be in [0, 0.5)");
    }
};

class SimBackend {
  public:
    explicit SimBackend(const SimBackendConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        if (cfg_.use_budget_channel) {
            const phys::SpinConfigForces forces = phys::force_amplitudes(
                cfg_.budget.ca, cfg_.budget.sr, cfg_.budget.gate_mode);
            gzz_ = phys::noisy_gate_channel(cfg_.budget, forces);
        } else {
            const double p = 4.0 / 3.0 * cfg_.gzz_error;
            gzz_ = depolarizing2(p) * phys::ideal_gate();
        }
        const double p1 = 5.0 / 3.0 * cfg_.pulse_error;
        for (int q = 1; q <= 2; ++q)
            for (OpKind k :
                 {OpKind::Gxp, OpKind::Gxm, OpKind::Gyp, OpKind::Gym,
                  OpKind::Gzp, OpKind::Gzm, OpKind::Gpi, OpKind::Ga45,
                  OpKind::Ga135}) {
                Ptm r = ptm_from_unitary(op_unitary(k, q));
                if (!op_is_software(k)) r = depolarizing1(p1, q) * r;
                ops_[key(k, q)] = r;
            }
    }

    const SimBackendConfig& config() const { return cfg_; }

    // exact outcome distribution (00, 01, 10, 11) including readout errors
    std::array<double, 4> probabilities(const Circuit& c) const {
        RVec16 r = initial_state();
        int zz_index = 0;
        for (const GateOp& op : c.ops) {
            if (op.kind == OpKind::Gzz) {
                r = gzz_ * r;
                if (cfg_.drift_heating_qps > 0.0) {
                    const double t = zz_index * (cfg_.gate_time +
                                                 cfg_.drift_slot_overhead);
                    const double eps = cfg_.drift_error_per_quantum *
                                       cfg_.drift_heating_qps * t;
                    const double p = std::min(1.0, 4.0 / 3.0 * eps);
                    r = depolarizing2(p) * r;
                }
                ++zz_index;
            } else {
                r = ops_.at(key(op.kind, op.qubit)) * r;
            }
        }
        std::array<double, 4> p{};
        for (int out = 0; out < 4; ++out) {
            Mat4 e = Mat4::Zero();
            e(out, out) = 1.0;
            p[out] = effect_vector(e).dot(r);
        }
        p = apply_confusion(p);
        double sum = 0.0;
        for (double& v : p) {
            if (v < 0.0) v = 0.0;
            sum += v;
        }
        if (sum <= 0.0)
            throw std::logic_error("SimBackend: degenerate outcome distribution");
        for (double& v : p) v /= sum;
        return p;
    }

    std::array<double, 4> probabilities(const std::string& text) const {
        return probabilities(parse_circuit(text));
    }

    // shot counts with a per-record seed derived from the canonical circuit
    // text and the record's position, so datasets replay byte for byte
    std::array<long, 4> sample(const std::string& circuit_text, long shots,
                               long record_index) const {
        if (shots < 0)
            throw std::invalid_argument("SimBackend: negative shot count");
        const Circuit c = parse_circuit(circuit_text);
        const auto p = probabilities(c);
        Rng rng(derive_seed(cfg_.seed, circuit_to_string(c),
                            static_cast<std::uint64_t>(record_index)));
        const auto counts = rng.multinomial(
            static_cast<std::uint64_t>(shots), {p[0], p[1], p[2], p[3]});
        std::array<long, 4> out{};
        for (int i = 0; i < 4; ++i) out[i] = static_cast<long>(counts[i]);
        return out;
    }

    CountDataset run(const std::vector<std::string>& circuits,
                     long shots) const {
        CountDataset ds;
        ds.metadata["seed"] = std::to_string(cfg_.seed);
        ds.metadata["shots"] = std::to_string(shots);
        for (size_t i = 0; i < circuits.size(); ++i) {
            CountRecord rec;
            rec.circuit = canonical_circuit(circuits[i]);
            rec.counts = sample(circuits[i], shots, static_cast<long>(i));
            ds.records.push_back(std::move(rec));
        }
        return ds;
    }

  private:
    static int key(OpKind k, int qubit) {
        return static_cast<int>(k) * 4 + qubit;
    }

    static RVec16 initial_state() {
        Mat4 rho = Mat4::Zero();
        rho(0, 0) = 1.0;
        return pauli_vector(rho);
    }

    std::array<double, 4> apply_confusion(
        const std::array<double, 4>& p) const {
        const double e1 = cfg_.readout_flip_ca, e2 = cfg_.readout_flip_sr;
        if (e1 == 0.0 && e2 == 0.0) return p;
        auto c1 = [&](int i, int j) { return i == j ? 1.0 - e1 : e1; };
        auto c2 = [&](int i, int j) { return i == j ? 1.0 - e2 : e2; };
        std::array<double, 4> out{};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int x = 0; x < 2; ++x)
                    for (int y = 0; y < 2; ++y)
                        out[2 * a + b] += c1(a, x) * c2(b, y) * p[2 * x + y];
        return out;
    }

    SimBackendConfig cfg_;
    Ptm gzz_;
    std::map<int, Ptm> ops_;
};

}  // namespace gatekit

#endif  // GATEKIT_BACKEND_HPP_
