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

#ifndef GATEKIT_PAULI_HPP_
#define GATEKIT_PAULI_HPP_

#include <array>
#include <cmath>

#include "gatekit/common.hpp"

namespace gatekit {

// --------------------------- single-qubit operators -------------------------

inline const Mat2& sigma(int a) {
    static const std::array<Mat2, 4> s = [] {
        std::array<Mat2, 4> m;
        m[0] << 1, 0, 0, 1;
        m[1] << 0, 1, 1, 0;
        m[2] << 0, cx(0, -1), cx(0, 1), 0;
        m[3] << 1, 0, 0, -1;
        return m;
    }();
    return s[a];
}

// exp(-i theta/2 * (nx X + ny Y + nz Z)) for a unit axis
inline Mat2 rot_axis(double theta, double nx, double ny, double nz) {
    const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
    Mat2 u = c * sigma(0) -
             cx(0, 1) * s * (nx * sigma(1) + ny * sigma(2) + nz * sigma(3));
    return u;
}

inline Mat2 rx(double theta) { return rot_axis(theta, 1, 0, 0); }
inline Mat2 ry(double theta) { return rot_axis(theta, 0, 1, 0); }
inline Mat2 rz(double theta) { return rot_axis(theta, 0, 0, 1); }

// pi/2 rotation about the axis at angle phi in the XY plane
inline Mat2 rxy(double phi, double theta) {
    return rot_axis(theta, std::cos(phi), std::sin(phi), 0);
}

// --------------------------- two-qubit composites ----------------------------

inline Mat4 kron2(const Mat2& a, const Mat2& b) {
    Mat4 out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

// qubit argument is 1 or 2; qubit 1 is the high (first) tensor factor
inline Mat4 embed1q(const Mat2& u, int qubit) {
    if (qubit != 1 && qubit != 2)
        throw std::invalid_argument("embed1q: qubit must be 1 or 2");
    return qubit == 1 ? kron2(u, sigma(0)) : kron2(sigma(0), u);
}

// P_{4a+b} = sigma_a (x) sigma_b (second-qubit index fastest)
inline const std::array<Mat4, 16>& pauli16() {
    static const std::array<Mat4, 16> p = [] {
        std::array<Mat4, 16> out;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) out[4 * a + b] = kron2(sigma(a), sigma(b));
        return out;
    }();
    return p;
}

inline Mat16 kron4(const Mat4& a, const Mat4& b) {
    Mat16 out;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            out.block<4, 4>(4 * i, 4 * j) = a(i, j) * b;
    return out;
}

}  // namespace gatekit

#endif  // GATEKIT_PAULI_HPP_
