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

#ifndef GATEKIT_ION_HPP_
#define GATEKIT_ION_HPP_

#include <cmath>
#include <string>

#include "gatekit/common.hpp"

namespace gatekit {
namespace phys {

struct IonSpecies {
    std::string name;
    double mass_amu = 0.0;
    double raman_detuning = 0.0;   // Hz, signed
    double linewidth = 22e6;       // Hz, S-P natural linewidth
    double qubit_frequency = 0.0;  // Hz
    double eta_ip = 0.0;           // axial Lamb-Dicke parameters
    double eta_oop = 0.0;
    // dimensionless light-shift force coefficients c(s) per qubit state
    double c_down = 0.0;
    double c_up = 0.0;

    void validate() const {
        if (!(eta_ip > 0.0 && eta_ip < 1.0 && eta_oop > 0.0 && eta_oop < 1.0))
            throw std::invalid_argument("IonSpecies: eta must be in (0, 1)");
        if (std::abs(raman_detuning) < 100.0 * linewidth)
            throw std::invalid_argument(
                "IonSpecies: Raman detuning must be far outside the linewidth");
    }
};

// The c coefficients below are fixed by two measured anchors of the
// asymmetric-force configuration: the two-qubit phase fraction
// 2ab/(m^2+a^2+b^2) = 0.80 (the two-qubit part is 20% of the total
// accumulated phase) and the
// required drive scaling sqrt((a^2+b^2)/(2ab)) = 1.03, where
// f = m + a z1 + b z2 on the oop mode.  Sr is normalized to c = 0.3 -+ 1.0
// and the Ca pair is solved from the anchors (see the derivation in the
// default config).
inline IonSpecies default_ca() {
    IonSpecies s;
    s.name = "Ca43";
    s.mass_amu = 43.0;
    s.raman_detuning = -9.0e12;
    s.linewidth = 22e6;
    s.qubit_frequency = 2.874e9;
    s.eta_ip = 0.090;
    s.eta_oop = 0.127;
    s.c_down = 0.6543631655180397;
    s.c_up = -0.3485147898000169;
    return s;
}

inline IonSpecies default_sr() {
    IonSpecies s;
    s.name = "Sr88";
    s.mass_amu = 88.0;
    s.raman_detuning = +11.2e12;
    s.linewidth = 22e6;
    s.qubit_frequency = 409e6;
    s.eta_ip = 0.124;
    s.eta_oop = 0.045;
    s.c_down = 1.3;
    s.c_up = -0.7;
    return s;
}

struct MotionalMode {
    std::string label;          // "ax_ip", "ax_oop", "rad_ip", "rad_oop"
    double frequency = 0.0;     // Hz
    double nbar = 0.1;          // mean thermal occupation
    double heating_rate = 0.0;  // quanta/s

    void validate() const {
        if (frequency <= 0.0 || nbar < 0.0 || heating_rate < 0.0)
            throw std::invalid_argument("MotionalMode: invalid parameters");
    }
};

struct ModeSet {
    MotionalMode ax_ip, ax_oop, rad_ip, rad_oop;
};

// Mode frequency defaults are config placeholders: the axial oop/ip ratio
// follows the two-ion mixed-crystal relation at mass ratio ~2, and the
// heating rates are measured values.  They are never treated as ground
// truth beyond that.
inline ModeSet default_modes() {
    ModeSet m;
    m.ax_ip = {"ax_ip", 1.15e6, 0.1, 110.0};
    m.ax_oop = {"ax_oop", 2.222e6, 0.1, 30.0};
    m.rad_ip = {"rad_ip", 4.0e6, 5.0, 0.0};
    m.rad_oop = {"rad_oop", 2.9e6, 5.0, 0.0};
    return m;
}

struct GateDriveConfig {
    double gate_detuning = -40e3;  // Hz, delta_g
    int loops = 2;                 // closed loops over the full gate
    double gate_time = 2.0 / 40e3;  // s, = loops/|delta_g|
    double shaping_time = 2e-6;     // s, Hann edge, sin^2(pi t/2 t_s)
    bool walsh_flip = true;         // second pulse drive phase flipped by pi
    double carrier_rabi = 180e3;    // Hz, Omega_down/2pi
    double ion_spacing_ratio = 12.5;  // spacing in units of lambda_z

    void validate() const {
        if (gate_detuning == 0.0)
            throw std::invalid_argument("GateDriveConfig: zero gate detuning");
        if (loops < 1)
            throw std::invalid_argument("GateDriveConfig: loops must be >= 1");
        const double expected = loops / std::abs(gate_detuning);
        if (std::abs(gate_time - expected) > 1e-9 * expected)
            throw std::invalid_argument(
                "GateDriveConfig: gate_time must equal loops/|gate_detuning|");
        if (!(shaping_time < gate_time / 4.0))
            throw std::invalid_argument(
                "GateDriveConfig: shaping_time must be below gate_time/4");
    }
};

inline GateDriveConfig default_drive() { return GateDriveConfig{}; }

}  // namespace phys
}  // namespace gatekit

#endif  // GATEKIT_ION_HPP_
