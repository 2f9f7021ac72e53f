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

#ifndef GATEKIT_COMMON_HPP_
#define GATEKIT_COMMON_HPP_

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace gatekit {

using cx = std::complex<double>;

// Two-qubit Hilbert space: qubit 1 (Ca) is the high bit, qubit 2 (Sr) the low
// bit, so the basis order is |00>, |01>, |10>, |11> with |0> the lower qubit
// state of each ion.
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;

// Operator space: Pauli products P_i (x) P_j with the second-qubit index
// fastest (index = 4*a + b, sigma_0..3 = I, X, Y, Z).
using Mat16 = Eigen::Matrix<cx, 16, 16>;
using RMat16 = Eigen::Matrix<double, 16, 16>;
using RVec16 = Eigen::Matrix<double, 16, 1>;

using PureState = Vec4;            // amplitudes, 2-norm 1
using DensityMatrix = Mat4;        // Hermitian, trace 1, PSD
using Ptm = RMat16;                // R_ij = (1/4) Tr[P_i Lambda(P_j)]
using Choi = Mat16;                // trace-normalized, output factor first
using ErrorGenerator = RMat16;     // L with G = exp(L) G0

inline constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace gatekit

#endif  // GATEKIT_COMMON_HPP_
