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

#ifndef GATEKIT_CHANNEL_HPP_
#define GATEKIT_CHANNEL_HPP_

#include <vector>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "gatekit/pauli.hpp"

namespace gatekit {

// Two-qubit channels in the Pauli transfer representation:
//   R_ij = (1/4) Tr(P_i Lambda(P_j)),   i, j in 0..15.
// States are Pauli vectors c_j = Tr(P_j rho) so that c' = R c, and effects
// are row vectors e_j = (1/4) Tr(P_j E) with p = e . c.

// ------------------------------- state vectors -------------------------------

inline RVec16 pauli_vector(const DensityMatrix& rho) {
    RVec16 c;
    for (int j = 0; j < 16; ++j) c(j) = (pauli16()[j] * rho).trace().real();
    return c;
}

inline DensityMatrix density_from_pauli(const RVec16& c) {
    DensityMatrix rho = DensityMatrix::Zero();
    for (int j = 0; j < 16; ++j) rho += (c(j) / 4.0) * pauli16()[j];
    return rho;
}

inline RVec16 effect_vector(const Mat4& effect) {
    RVec16 e;
    for (int j = 0; j < 16; ++j)
        e(j) = (pauli16()[j] * effect).trace().real() / 4.0;
    return e;
}

// --------------------------------- builders ---------------------------------

// PTM of the unitary conjugation rho -> U rho U^dagger
inline Ptm ptm_from_unitary(const Mat4& u) {
    if ((u.adjoint() * u - Mat4::Identity()).norm() > 1e-10)
        throw std::invalid_argument("ptm_from_unitary: input is not unitary");
    Ptm r;
    const Mat4 ud = u.adjoint();
    for (int j = 0; j < 16; ++j) {
        const Mat4 img = u * pauli16()[j] * ud;
        for (int i = 0; i < 16; ++i)
            r(i, j) = (pauli16()[i] * img).trace().real() / 4.0;
    }
    return r;
}

// PTM from Kraus operators
inline Ptm ptm_from_kraus(const std::vector<Mat4>& ks) {
    Ptm r = Ptm::Zero();
    for (const Mat4& k : ks) {
        const Mat4 kd = k.adjoint();
        for (int j = 0; j < 16; ++j) {
            const Mat4 img = k * pauli16()[j] * kd;
            for (int i = 0; i < 16; ++i)
                r(i, j) += (pauli16()[i] * img).trace().real() / 4.0;
        }
    }
    return r;
}

// Two-qubit depolarizing channel: rho -> (1-p) rho + p I/4.
// Diagonal PTM with 1 on the identity row and (1-p) elsewhere.
inline Ptm depolarizing2(double p) {
    Ptm r = Ptm::Zero();
    r(0, 0) = 1.0;
    for (int j = 1; j < 16; ++j) r(j, j) = 1.0 - p;
    return r;
}

// Single-qubit depolarizing on one qubit of the pair
inline Ptm depolarizing1(double p, int qubit) {
    if (qubit != 1 && qubit != 2)
        throw std::invalid_argument("depolarizing1: qubit must be 1 or 2");
    Ptm r = Ptm::Zero();
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            const int j = 4 * a + b;
            const int local = qubit == 1 ? a : b;
            r(j, j) = local == 0 ? 1.0 : 1.0 - p;
        }
    return r;
}

// Single-qubit dephasing on one qubit: X and Y components shrink by
// (1 - 2p), Z survives.
inline Ptm dephasing1(double p, int qubit) {
    if (qubit != 1 && qubit != 2)
        throw std::invalid_argument("dephasing1: qubit must be 1 or 2");
    Ptm r = Ptm::Zero();
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            const int j = 4 * a + b;
            const int local = qubit == 1 ? a : b;
            r(j, j) = (local == 1 || local == 2) ? 1.0 - 2.0 * p : 1.0;
        }
    return r;
}

// ------------------------------ Choi conversions -----------------------------

// Choi matrix with the OUTPUT space as the first tensor factor:
//   J = (1/16) sum_ij R_ij P_i (x) P_j^T,  Tr J = 1 for trace-preserving maps.
inline Choi choi_from_ptm(const Ptm& r) {
    Choi j = Choi::Zero();
    for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) {
            if (r(a, b) == 0.0) continue;
            j += (r(a, b) / 16.0) *
                 kron4(pauli16()[a], pauli16()[b].transpose());
        }
    return j;
}

inline Ptm ptm_from_choi(const Choi& j) {
    Ptm r;
    for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) {
            const Mat16 basis = kron4(pauli16()[a], pauli16()[b].transpose());
            r(a, b) = (basis * j).trace().real();
        }
    return r;
}

// Partial trace over the output (first) factor of a 16x16 Choi-space matrix;
// returns the 4x4 input-space matrix.  TP maps satisfy Tr_out J = I/4.
inline Mat4 trace_out_output(const Mat16& m) {
    Mat4 out = Mat4::Zero();
    for (int k = 0; k < 4; ++k) out += m.block<4, 4>(4 * k, 4 * k);
    return out;
}

// Partial trace over the input (second) factor; returns the 4x4 output-space
// matrix.
inline Mat4 trace_out_input(const Mat16& m) {
    Mat4 out;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            out(i, j) = m.block<4, 4>(4 * i, 4 * j).trace();
    return out;
}

// ------------------------------ CPTP projection ------------------------------

inline Mat16 project_psd(const Mat16& m) {
    const Mat16 h = (m + m.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Mat16> es(h);
    Eigen::Matrix<double, 16, 1> ev = es.eigenvalues();
    for (int i = 0; i < 16; ++i) ev(i) = ev(i) > 0.0 ? ev(i) : 0.0;
    return es.eigenvectors() * ev.asDiagonal() *
           es.eigenvectors().adjoint();
}

// Nearest trace-preserving PTM: the TP condition is exactly "row 0 equals
// e_0", so the Frobenius projection just overwrites that row.
inline Ptm project_tp(const Ptm& r) {
    Ptm out = r;
    out.row(0).setZero();
    out(0, 0) = 1.0;
    return out;
}

// Alternating projection onto the CPTP set: clip the Choi spectrum, restore
// the TP row, repeat.  Finishes on the TP step so the result is TP to
// machine precision; the CP constraint is then verified.
inline Ptm project_cptp(const Ptm& r, int max_iters = 10000,
                        double tol = 1e-10) {
    Ptm cur = project_tp(r);
    for (int it = 0; it < max_iters; ++it) {
        const Choi j = choi_from_ptm(cur);
        const Choi jp = project_psd(j);
        Ptm next = project_tp(ptm_from_choi(jp));
        const double delta = (next - cur).norm();
        cur = next;
        if (delta < tol) break;
    }
    const Choi j = choi_from_ptm(cur);
    Eigen::SelfAdjointEigenSolver<Mat16> es(j);
    if (es.eigenvalues().minCoeff() < -1e-8)
        throw std::runtime_error("project_cptp: projection did not converge");
    return cur;
}

// ------------------------------ error generator ------------------------------

// Logarithm of G G0^{-1}: the post-gate error map in generator form.  Both
// inputs must be PTMs of the same gate up to a small error; an eigenvalue of
// G G0^{-1} on the negative real axis means the branch cut is ambiguous.
inline ErrorGenerator error_generator(const Ptm& g, const Ptm& g0) {
    const Ptm m = g * g0.inverse();
    Eigen::EigenSolver<Ptm> es(m);
    for (int i = 0; i < 16; ++i) {
        const cx ev = es.eigenvalues()(i);
        if (ev.real() <= 0.0 && std::abs(ev.imag()) < 1e-12)
            throw std::runtime_error(
                "error_generator: eigenvalue on the negative real axis; "
                "matrix logarithm branch is ambiguous");
    }
    const Eigen::Matrix<cx, 16, 16> mc = m.cast<cx>();
    const Eigen::Matrix<cx, 16, 16> lg = mc.log();
    if (lg.imag().norm() > 1e-6)
        throw std::runtime_error(
            "error_generator: logarithm is not real; inputs are not close to "
            "a common gate");
    return lg.real();
}

}  // namespace gatekit

#endif  // GATEKIT_CHANNEL_HPP_
