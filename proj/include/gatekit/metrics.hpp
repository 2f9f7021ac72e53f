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

#ifndef GATEKIT_METRICS_HPP_
#define GATEKIT_METRICS_HPP_

#include "gatekit/channel.hpp"

namespace gatekit {

inline bool is_unitary4(const Mat4& u, double tol = 1e-10) {
    return (u.adjoint() * u - Mat4::Identity()).norm() < tol;
}

// A unitary channel has an orthogonal PTM.
inline bool is_unitary_ptm(const Ptm& r, double tol = 1e-8) {
    return (r * r.transpose() - Ptm::Identity()).norm() < tol &&
           std::abs(r(0, 0) - 1.0) < tol;
}

// Process (entanglement) fidelity of a channel against a unitary reference:
// F_pro = Tr(G0^T G)/16.  The reference must be a unitary channel, in which
// case this equals the Choi overlap with the reference's pure Choi state.
inline double process_fidelity(const Ptm& g, const Ptm& g0) {
    if (!is_unitary_ptm(g0))
        throw std::invalid_argument(
            "process_fidelity: reference channel is not unitary");
    return (g0.transpose() * g).trace() / 16.0;
}

// F_avg = (d F_pro + 1)/(d + 1) with d = 4
inline double average_fidelity(const Ptm& g, const Ptm& g0) {
    return (4.0 * process_fidelity(g, g0) + 1.0) / 5.0;
}

inline double average_infidelity(const Ptm& g, const Ptm& g0) {
    return 1.0 - average_fidelity(g, g0);
}

// ------------------------ generator decomposition ----------------------------

// PTM representation of the Hamiltonian error generator
//   rho -> -i [P_k, rho]
// for k = 1..15.  These span the coherent part of an error generator.
inline Ptm hamiltonian_generator(int k) {
    if (k < 1 || k > 15)
        throw std::invalid_argument("hamiltonian_generator: k must be in 1..15");
    Ptm l = Ptm::Zero();
    for (int j = 0; j < 16; ++j) {
        const Mat4 comm =
            cx(0, -1) * (pauli16()[k] * pauli16()[j] - pauli16()[j] * pauli16()[k]);
        for (int i = 0; i < 16; ++i)
            l(i, j) = (pauli16()[i] * comm).trace().real() / 4.0;
    }
    return l;
}

struct GeneratorSplit {
    ErrorGenerator coherent;    // least-squares projection onto the
                                // Hamiltonian-generator span
    ErrorGenerator stochastic;  // remainder
    Eigen::Matrix<double, 15, 1> hamiltonian_coeffs;
    double coherent_norm = 0.0;
    double stochastic_norm = 0.0;
};

// Split an error generator into its coherent (Hamiltonian) projection and the
// stochastic remainder.  The Hamiltonian generators are mutually orthogonal
// under the Frobenius inner product but not normalized, so solve the small
// Gram system explicitly.
inline GeneratorSplit split_generator(const ErrorGenerator& l) {
    Eigen::Matrix<double, 15, 15> gram;
    Eigen::Matrix<double, 15, 1> rhs;
    std::vector<Ptm> basis;
    basis.reserve(15);
    for (int k = 1; k <= 15; ++k) basis.push_back(hamiltonian_generator(k));
    for (int a = 0; a < 15; ++a) {
        rhs(a) = (basis[a].transpose() * l).trace();
        for (int b = 0; b < 15; ++b)
            gram(a, b) = (basis[a].transpose() * basis[b]).trace();
    }
    GeneratorSplit out;
    out.hamiltonian_coeffs = gram.ldlt().solve(rhs);
    out.coherent = ErrorGenerator::Zero();
    for (int a = 0; a < 15; ++a)
        out.coherent += out.hamiltonian_coeffs(a) * basis[a];
    out.stochastic = l - out.coherent;
    out.coherent_norm = out.coherent.norm();
    out.stochastic_norm = out.stochastic.norm();
    return out;
}

}  // namespace gatekit

#endif  // GATEKIT_METRICS_HPP_
