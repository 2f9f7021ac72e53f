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

#ifndef GATEKIT_BUDGET_HPP_
#define GATEKIT_BUDGET_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "gatekit/ion.hpp"

namespace gatekit {
namespace phys {

// Knobs of the physical error model.  All infidelities are average gate
// infidelities (1 - F_avg).
struct NoiseInputs {
    IonSpecies ca = default_ca();
    IonSpecies sr = default_sr();
    GateDriveConfig drive = default_drive();
    MotionalMode gate_mode;  // the driven mode; its heating enters the budget

    // residual sigma_z sigma_z coupling from imbalanced light fields; the
    // infidelity scales with the square of the relative field imbalance
    double stray_field = 0.3;
    double stray_infidelity_coeff = 7e-4 / (0.3 * 0.3);

    // fixed small contributions
    double kerr_infidelity = 2e-4;       // mode cross-Kerr during the drive
    double spectator_infidelity = 1e-4;  // off-resonant spectator modes

    // qubit phase coherence, one rate per ion (1/s)
    double dephasing_rate_ca = 1.25;
    double dephasing_rate_sr = 1.25;
};

inline NoiseInputs default_noise() {
    NoiseInputs n;
    n.gate_mode = default_modes().ax_oop;
    return n;
}

// per-mechanism average gate infidelities
struct ErrorBudget {
    double stray_zz = 0.0;
    double heating = 0.0;
    double scattering_ca = 0.0;
    double scattering_sr = 0.0;
    double kerr = 0.0;
    double spectator = 0.0;
    double dephasing_ca = 0.0;
    double dephasing_sr = 0.0;

    double scattering() const { return scattering_ca + scattering_sr; }
    double dephasing() const { return dephasing_ca + dephasing_sr; }
    double total() const {
        return stray_zz + heating + scattering() + kerr + spectator +
               dephasing();
    }
};

inline ErrorBudget error_budget(const NoiseInputs& n) {
    n.ca.validate();
    n.sr.validate();
    n.drive.validate();
    n.gate_mode.validate();

    const double t_g = n.drive.gate_time;
    ErrorBudget b;

    b.stray_zz = n.stray_infidelity_coeff * n.stray_field * n.stray_field;

    // each heating quantum scrambles the state-dependent phase of a quarter
    // of the branch pairs
    b.heating = n.gate_mode.heating_rate * t_g / 4.0;

    // Raman photon scattering, one rate per ion
    const double photon_budget = 2.0 * kPi * n.drive.carrier_rabi * t_g;
    b.scattering_ca =
        photon_budget * n.ca.linewidth / std::abs(n.ca.raman_detuning);
    b.scattering_sr =
        photon_budget * n.sr.linewidth / std::abs(n.sr.raman_detuning);

    b.kerr = n.kerr_infidelity;
    b.spectator = n.spectator_infidelity;

    // qubit dephasing: phase-flip probability p = (1 - e^{-gamma t})/2,
    // costing (4/5) p of average fidelity per qubit
    const double p_ca = 0.5 * (1.0 - std::exp(-n.dephasing_rate_ca * t_g));
    const double p_sr = 0.5 * (1.0 - std::exp(-n.dephasing_rate_sr * t_g));
    b.dephasing_ca = 0.8 * p_ca;
    b.dephasing_sr = 0.8 * p_sr;

    return b;
}

// ---- mode spectrum sanity checks ----

struct ResonanceCheck {
    std::string label;
    double gap = 0.0;     // Hz distance from the dangerous condition
    double window = 0.0;  // Hz width considered unsafe
    bool flagged = false;
};

// Frequency collisions that would funnel gate drive power into the wrong
// motional transition.  A check is flagged when the spectral gap falls
// inside the window of twice the gate detuning.
inline std::vector<ResonanceCheck> check_resonances(
    const ModeSet& m, const GateDriveConfig& drive) {
    m.ax_ip.validate();
    m.ax_oop.validate();
    m.rad_ip.validate();
    m.rad_oop.validate();
    const double window = 2.0 * std::abs(drive.gate_detuning);

    std::vector<ResonanceCheck> out;
    auto add = [&](const std::string& label, double gap) {
        out.push_back({label, gap, window, gap < window});
    };
    add("ax_oop vs 2x rad_oop (parametric)",
        std::abs(m.ax_oop.frequency - 2.0 * m.rad_oop.frequency));
    add("2x ax_ip vs driven ax_oop sideband",
        std::abs(2.0 * m.ax_ip.frequency -
                 (m.ax_oop.frequency + drive.gate_detuning)));
    add("ax_ip vs rad_oop",
        std::abs(m.ax_ip.frequency - m.rad_oop.frequency));
    return out;
}

}  // namespace phys
}  // namespace gatekit

#endif  // GATEKIT_BUDGET_HPP_
