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

#ifndef GATEKIT_GATE_CHANNEL_HPP_
#define GATEKIT_GATE_CHANNEL_HPP_

#include <cmath>

#include "gatekit/budget.hpp"
#include "gatekit/channel.hpp"
#include "gatekit/gates.hpp"
#include "gatekit/lightshift.hpp"
#include "gatekit/metrics.hpp"

namespace gatekit {
namespace phys {

inline Ptm ideal_gate() { return ptm_from_unitary(ideal_gate_unitary()); }

// Collective dephasing along the state-dependent force axis: a Gaussian
// random phase of width sigma on the force operator damps each coherence by
// exp(-sigma^2 (f_q - f_p)^2 / 2).  This is how residual entanglement with
// a heated drive mode shows up on the spins.
inline Ptm force_axis_dephasing(const SpinConfigForces& f, double sigma) {
    if (sigma < 0.0)
        throw std::invalid_argument("force_axis_dephasing: negative width");
    const auto& paulis = pauli16();
    Ptm r = Ptm::Zero();
    for (int j = 0; j < 16; ++j) {
        Mat4 out = paulis[j];
        for (int q = 0; q < 4; ++q)
            for (int p = 0; p < 4; ++p) {
                const double d = f.f[q] - f.f[p];
                out(q, p) *= std::exp(-0.5 * sigma * sigma * d * d);
            }
        for (int i = 0; i < 16; ++i)
            r(i, j) = 0.25 * (paulis[i] * out).trace().real();
    }
    return r;
}

// width that makes the force-axis dephasing cost a given average fidelity
inline double calibrate_heating_width(const SpinConfigForces& f,
                                      double target_infidelity) {
    if (target_infidelity < 0.0 || target_infidelity > 0.2)
        throw std::invalid_argument(
            "calibrate_heating_width: target infidelity out of range");
    if (target_infidelity == 0.0) return 0.0;
    const Ptm id = Ptm::Identity();
    auto infidelity = [&](double sigma) {
        return average_infidelity(force_axis_dephasing(f, sigma), id);
    };
    double hi = 1.0;
    while (infidelity(hi) < target_infidelity) {
        hi *= 2.0;
        if (hi > 1e6)
            throw std::invalid_argument(
                "calibrate_heating_width: target unreachable, forces are "
                "degenerate");
    }
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (infidelity(mid) < target_infidelity ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// residual sigma_z sigma_z rotation costing a given average fidelity
inline Ptm stray_zz_channel(double infidelity) {
    if (infidelity < 0.0 || infidelity > 0.8)
        throw std::invalid_argument(
            "stray_zz_channel: infidelity out of range");
    const double chi = std::asin(std::sqrt(1.25 * infidelity));
    Mat4 u = Mat4::Zero();
    for (int q = 0; q < 4; ++q) {
        const double zz =
            SpinConfigForces::z1(q) * SpinConfigForces::z2(q);
        u(q, q) = std::exp(cx(0, -chi * zz));
    }
    return ptm_from_unitary(u);
}

// Full physical channel of one gate: the ideal unitary followed by the
// budgeted error mechanisms.  An all-zero budget returns the ideal channel
// bit for bit.
inline Ptm noisy_gate_channel(const ErrorBudget& b,
                              const SpinConfigForces& forces) {
    const Ptm ideal = ideal_gate();
    if (b.total() == 0.0) return ideal;

    auto guard_prob = [](double p, const char* what) {
        if (!(p >= 0.0 && p < 0.5))
            throw std::invalid_argument(std::string("noisy_gate_channel: ") +
                                        what + " out of range");
        return p;
    };

    // depolarizing strengths from infidelities: two-qubit 1-F = (3/4) p,
    // single-qubit 1-F = (3/5) p, phase flip 1-F = (4/5) p
    const double p2 = guard_prob((4.0 / 3.0) * (b.kerr + b.spectator),
                                 "two-qubit depolarizing");
    const double p_sc_ca =
        guard_prob((5.0 / 3.0) * b.scattering_ca, "Ca scattering");
    const double p_sc_sr =
        guard_prob((5.0 / 3.0) * b.scattering_sr, "Sr scattering");
    const double p_d_ca =
        guard_prob(1.25 * b.dephasing_ca, "Ca dephasing");
    const double p_d_sr =
        guard_prob(1.25 * b.dephasing_sr, "Sr dephasing");

    Ptm err = depolarizing2(p2);
    err = depolarizing1(p_sc_ca, 1) * err;
    err = depolarizing1(p_sc_sr, 2) * err;
    err = dephasing1(p_d_ca, 1) * err;
    err = dephasing1(p_d_sr, 2) * err;
    err = force_axis_dephasing(forces,
                               calibrate_heating_width(forces, b.heating)) *
          err;
    err = stray_zz_channel(b.stray_zz) * err;

    const Ptm out = err * ideal;
    const Choi j = choi_from_ptm(out);
    Eigen::SelfAdjointEigenSolver<Mat16> es(j);
    if (es.eigenvalues().minCoeff() < -1e-10)
        throw std::invalid_argument(
            "noisy_gate_channel: composed channel is not CPTP");
    return out;
}

inline Ptm noisy_gate_channel(const NoiseInputs& n,
                              const SpinConfigForces& forces) {
    return noisy_gate_channel(error_budget(n), forces);
}

}  // namespace phys
}  // namespace gatekit

#endif  // GATEKIT_GATE_CHANNEL_HPP_
