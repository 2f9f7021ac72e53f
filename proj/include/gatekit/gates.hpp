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

#ifndef GATEKIT_GATES_HPP_
#define GATEKIT_GATES_HPP_

#include <string>

#include "gatekit/pauli.hpp"

namespace gatekit {

// Native operation alphabet.  Single-qubit ops address qubit 1 (Ca) or
// qubit 2 (Sr); Gzz is the composite entangling gate; Gzp/Gzm are software
// phase shifts with zero physical cost.
enum class OpKind {
    Gxp,    // +pi/2 about X
    Gxm,    // -pi/2 about X
    Gyp,    // +pi/2 about Y
    Gym,    // -pi/2 about Y
    Gzp,    // +pi/2 about Z (software)
    Gzm,    // -pi/2 about Z (software)
    Gpi,    // pi about X (echo / state flip)
    Ga45,   // +pi/2 about the 45 degree axis in the XY plane (analysis)
    Ga135,  // +pi/2 about the 135 degree axis in the XY plane (analysis)
    Gzz,    // entangling gate
};

inline const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::Gxp: return "Gxp";
        case OpKind::Gxm: return "Gxm";
        case OpKind::Gyp: return "Gyp";
        case OpKind::Gym: return "Gym";
        case OpKind::Gzp: return "Gzp";
        case OpKind::Gzm: return "Gzm";
        case OpKind::Gpi: return "Gpi";
        case OpKind::Ga45: return "Ga45";
        case OpKind::Ga135: return "Ga135";
        case OpKind::Gzz: return "Gzz";
    }
    throw std::logic_error("op_name: bad OpKind");
}

inline bool op_is_two_qubit(OpKind k) { return k == OpKind::Gzz; }

// software Z rotations cost no physical pulse
inline bool op_is_software(OpKind k) {
    return k == OpKind::Gzp || k == OpKind::Gzm;
}

inline Mat2 op_unitary_1q(OpKind k) {
    switch (k) {
        case OpKind::Gxp: return rx(kPi / 2);
        case OpKind::Gxm: return rx(-kPi / 2);
        case OpKind::Gyp: return ry(kPi / 2);
        case OpKind::Gym: return ry(-kPi / 2);
        case OpKind::Gzp: return rz(kPi / 2);
        case OpKind::Gzm: return rz(-kPi / 2);
        case OpKind::Gpi: return rx(kPi);
        case OpKind::Ga45: return rxy(kPi / 4, kPi / 2);
        case OpKind::Ga135: return rxy(3 * kPi / 4, kPi / 2);
        default:
            throw std::invalid_argument("op_unitary_1q: not a single-qubit op");
    }
}

// Composite entangling gate: a pi/4 ZZ phase bracketed by the echo flips,
// U = (X (x) X) exp(-i pi/4 Z(x)Z).
inline const Mat4& ideal_gate_unitary() {
    static const Mat4 u = [] {
        Mat4 zz = Mat4::Zero();
        for (int i = 0; i < 4; ++i) {
            const double z1 = (i & 2) ? -1.0 : 1.0;
            const double z2 = (i & 1) ? -1.0 : 1.0;
            zz(i, i) = std::exp(cx(0, -kPi / 4 * z1 * z2));
        }
        return Mat4(kron2(sigma(1), sigma(1)) * zz);
    }();
    return u;
}

// Full-circuit unitary for one op
inline Mat4 op_unitary(OpKind k, int qubit) {
    if (k == OpKind::Gzz) return ideal_gate_unitary();
    return embed1q(op_unitary_1q(k), qubit);
}

// One addressed operation; qubit is 0 for the two-qubit gate, else 1 or 2
struct GateOp {
    OpKind kind = OpKind::Gzz;
    int qubit = 0;

    bool operator==(const GateOp& o) const {
        return kind == o.kind && qubit == o.qubit;
    }
    bool operator!=(const GateOp& o) const { return !(*this == o); }
};

inline Mat4 op_unitary(const GateOp& op) { return op_unitary(op.kind, op.qubit); }

}  // namespace gatekit

#endif  // GATEKIT_GATES_HPP_
