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

#include "gatekit/channel.hpp"
#include "gatekit/gates.hpp"
#include "gatekit/metrics.hpp"
#include "gatekit/rng.hpp"

using namespace gatekit;

namespace {

// Independent integer-arithmetic Pauli oracle: single-qubit Paulis as
// (x, z) bit pairs with sigma_x^x sigma_z^z ordering and an explicit phase
// exponent (power of i).  Multiplication never touches Eigen.
struct PauliXZ {
    int x1, z1, x2, z2;  // exponents in {0, 1} per qubit
    int phase;           // power of i in {0, 1, 2, 3}
};

// index 0..3 = I, X, Y, Z as (x, z) with Y = i X Z
PauliXZ from_index(int idx4) {
    const int a = idx4 / 4, b = idx4 % 4;
    auto bits = [](int s, int& x, int& z, int& ph) {
        switch (s) {
            case 0: x = 0; z = 0; ph = 0; break;
            case 1: x = 1; z = 0; ph = 0; break;
            case 2: x = 1; z = 1; ph = 1; break;  // Y = i XZ
            case 3: x = 0; z = 1; ph = 0; break;
        }
    };
    PauliXZ p{};
    int ph1 = 0, ph2 = 0;
    bits(a, p.x1, p.z1, ph1);
    bits(b, p.x2, p.z2, ph2);
    p.phase = (ph1 + ph2) % 4;
    return p;
}

// multiply (x z)(x' z') reordering z x' -> (-1)^{z x'} x' z
PauliXZ multiply(const PauliXZ& p, const PauliXZ& q) {
    PauliXZ r{};
    r.phase = (p.phase + q.phase + 2 * (p.z1 * q.x1 + p.z2 * q.x2)) % 4;
    r.x1 = p.x1 ^ q.x1;
    r.z1 = p.z1 ^ q.z1;
    r.x2 = p.x2 ^ q.x2;
    r.z2 = p.z2 ^ q.z2;
    return r;
}

int to_index(const PauliXZ& p, int* phase_out) {
    auto idx = [](int x, int z, int& ph) {
        if (x == 0 && z == 0) { ph = 0; return 0; }
        if (x == 1 && z == 0) { ph = 0; return 1; }
        if (x == 1 && z == 1) { ph = 3; return 2; }  // XZ = -i Y
        ph = 0;
        return 3;
    };
    int ph1 = 0, ph2 = 0;
    const int a = idx(p.x1, p.z1, ph1);
    const int b = idx(p.x2, p.z2, ph2);
    *phase_out = (p.phase + ph1 + ph2) % 4;
    return 4 * a + b;
}

bool commutes_with(const PauliXZ& p, const PauliXZ& q) {
    return ((p.z1 * q.x1 + p.x1 * q.z1 + p.z2 * q.x2 + p.x2 * q.z2) % 2) == 0;
}

Mat4 random_unitary(Rng& rng) {
    Mat4 g;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) g(i, j) = cx(rng.normal(), rng.normal());
    const Eigen::HouseholderQR<Mat4> qr(g);
    Mat4 q = qr.householderQ();
    const Mat4 r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < 4; ++i) q.col(i) *= r(i, i) / std::abs(r(i, i));
    return q;
}

// random CPTP channel from a Ginibre Stinespring isometry with one
// 4-dimensional environment
std::vector<Mat4> random_kraus(Rng& rng, int n_env = 4) {
    Eigen::MatrixXcd g(4 * n_env, 4);
    for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < 4; ++j) g(i, j) = cx(rng.normal(), rng.normal());
    const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd v = qr.householderQ() *
                         Eigen::MatrixXcd::Identity(4 * n_env, 4);
    std::vector<Mat4> ks;
    for (int e = 0; e < n_env; ++e) ks.push_back(Mat4(v.block<4, 4>(4 * e, 0)));
    return ks;
}

DensityMatrix random_density(Rng& rng) {
    Mat4 g;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) g(i, j) = cx(rng.normal(), rng.normal());
    DensityMatrix rho = g * g.adjoint();
    return rho / rho.trace();
}

DensityMatrix apply_channel(const Ptm& r, const DensityMatrix& rho) {
    return density_from_pauli(RVec16(r * pauli_vector(rho)));
}

}  // namespace

TEST_CASE("pauli basis matches the integer oracle") {
    // products P_a P_b = i^phi P_c cross-checked against matrix products
    for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) {
            int phase = 0;
            const int c = to_index(multiply(from_index(a), from_index(b)), &phase);
            const cx ph = std::pow(cx(0, 1), phase);
            const Mat4 lhs = pauli16()[a] * pauli16()[b];
            const Mat4 rhs = ph * pauli16()[c];
            REQUIRE((lhs - rhs).norm() < 1e-12);
        }
}

TEST_CASE("ptm of identity is identity") {
    const Ptm r = ptm_from_unitary(Mat4::Identity());
    REQUIRE((r - Ptm::Identity()).norm() < 1e-12);
}

TEST_CASE("ptm of the ZZ quarter rotation matches the conjugation oracle") {
    Mat4 u = Mat4::Zero();
    for (int i = 0; i < 4; ++i) {
        const double z1 = (i & 2) ? -1.0 : 1.0;
        const double z2 = (i & 1) ? -1.0 : 1.0;
        u(i, i) = std::exp(cx(0, -kPi / 4 * z1 * z2));
    }
    const Ptm r = ptm_from_unitary(u);

    // oracle: P commuting with ZZ is fixed; P anticommuting maps to
    // exp(-i pi/2 ZZ) P = -i (ZZ) P, evaluated in integer Pauli arithmetic
    const PauliXZ zz = from_index(15);
    Ptm expected = Ptm::Zero();
    for (int j = 0; j < 16; ++j) {
        const PauliXZ pj = from_index(j);
        if (commutes_with(pj, zz)) {
            expected(j, j) = 1.0;
        } else {
            int phase = 0;
            const int tgt = to_index(multiply(zz, pj), &phase);
            // -i * i^phase must be +-1 for a Pauli-to-Pauli map
            const int net = (phase + 3) % 4;
            REQUIRE((net == 0 || net == 2));
            expected(tgt, j) = net == 0 ? 1.0 : -1.0;
        }
    }
    REQUIRE((r - expected).norm() < 1e-12);
}

TEST_CASE("ptm of X on qubit 1 is the conjugation sign pattern") {
    const Ptm r = ptm_from_unitary(kron2(sigma(1), sigma(0)));
    Ptm expected = Ptm::Zero();
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            expected(4 * a + b, 4 * a + b) = (a == 2 || a == 3) ? -1.0 : 1.0;
    REQUIRE((r - expected).norm() < 1e-12);
}

TEST_CASE("ptm_from_unitary rejects non-unitary input") {
    Mat4 m = Mat4::Identity();
    m(0, 0) = 1.5;
    REQUIRE_THROWS_AS(ptm_from_unitary(m), std::invalid_argument);
}

TEST_CASE("unitary ptms are orthogonal, TP, and homomorphic") {
    Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const Mat4 u = random_unitary(rng);
        const Mat4 v = random_unitary(rng);
        const Ptm ru = ptm_from_unitary(u);
        REQUIRE((ru * ru.transpose() - Ptm::Identity()).norm() < 1e-10);
        REQUIRE(std::abs(ru(0, 0) - 1.0) < 1e-12);
        REQUIRE(ru.row(0).tail<15>().cwiseAbs().maxCoeff() < 1e-12);
        REQUIRE(ru.col(0).tail<15>().cwiseAbs().maxCoeff() < 1e-12);  // unital
        const Ptm rv = ptm_from_unitary(v);
        REQUIRE((ptm_from_unitary(Mat4(u * v)) - ru * rv).norm() < 1e-10);
    }
}

TEST_CASE("choi of identity is the maximally entangled projector") {
    const Choi j = choi_from_ptm(Ptm::Identity());
    Eigen::Matrix<cx, 16, 1> omega = Eigen::Matrix<cx, 16, 1>::Zero();
    for (int k = 0; k < 4; ++k) omega(4 * k + k) = 0.5;
    const Mat16 expected = omega * omega.adjoint();
    REQUIRE((j - expected).norm() < 1e-12);
}

TEST_CASE("choi of the fully depolarizing channel is I/16") {
    Ptm r = Ptm::Zero();
    r(0, 0) = 1.0;
    const Choi j = choi_from_ptm(r);
    REQUIRE((j - Mat16::Identity() / 16.0).norm() < 1e-12);
}

TEST_CASE("ptm choi round trip and CP TP predicate agreement") {
    Rng rng(12);
    for (int trial = 0; trial < 40; ++trial) {
        const Ptm r = ptm_from_kraus(random_kraus(rng));
        const Choi j = choi_from_ptm(r);
        REQUIRE((ptm_from_choi(j) - r).norm() < 1e-12);
        // TP on the PTM side
        REQUIRE(std::abs(r(0, 0) - 1.0) < 1e-10);
        REQUIRE(r.row(0).tail<15>().cwiseAbs().maxCoeff() < 1e-10);
        // TP on the Choi side
        REQUIRE((trace_out_output(j) - Mat4::Identity() / 4.0).norm() < 1e-10);
        // CP on the Choi side
        Eigen::SelfAdjointEigenSolver<Mat16> es(j);
        REQUIRE(es.eigenvalues().minCoeff() > -1e-10);
        REQUIRE(std::abs(j.trace().real() - 1.0) < 1e-10);
    }
}

TEST_CASE("apply and compose behave as channel algebra") {
    Rng rng(13);
    SECTION("full depolarizing sends everything to I/4") {
        for (int trial = 0; trial < 5; ++trial) {
            const DensityMatrix out =
                apply_channel(depolarizing2(1.0), random_density(rng));
            REQUIRE((out - Mat4::Identity() / 4.0).norm() < 1e-12);
        }
    }
    SECTION("unitary channel composed with its inverse is identity") {
        const Mat4 u = random_unitary(rng);
        const Ptm r = ptm_from_unitary(u);
        const Ptm rinv = ptm_from_unitary(Mat4(u.adjoint()));
        REQUIRE((r * rinv - Ptm::Identity()).norm() < 1e-10);
    }
    SECTION("composition is associative and matches state propagation") {
        for (int trial = 0; trial < 10; ++trial) {
            const Ptm a = ptm_from_kraus(random_kraus(rng));
            const Ptm b = ptm_from_kraus(random_kraus(rng));
            const Ptm c = ptm_from_kraus(random_kraus(rng));
            REQUIRE(((a * b) * c - a * (b * c)).norm() < 1e-12);
            const DensityMatrix rho = random_density(rng);
            const DensityMatrix lhs = apply_channel(Ptm(a * b), rho);
            const DensityMatrix rhs = apply_channel(a, apply_channel(b, rho));
            REQUIRE((lhs - rhs).norm() < 1e-12);
        }
    }
}

TEST_CASE("single qubit noise constructors act on the right factor") {
    Rng rng(14);
    const DensityMatrix rho = random_density(rng);
    // depolarizing on qubit 1 leaves the qubit 2 reduced state alone
    const DensityMatrix out = apply_channel(depolarizing1(0.37, 1), rho);
    // reduced state over qubit 2: trace out qubit 1 (high bit)
    auto reduce2 = [](const DensityMatrix& m) {
        Mat2 r = m.block<2, 2>(0, 0) + m.block<2, 2>(2, 2);
        return r;
    };
    REQUIRE((reduce2(out) - reduce2(rho)).norm() < 1e-12);

    // dephasing on qubit 2 with p = 1/2 kills the qubit 2 coherences
    const DensityMatrix deph = apply_channel(dephasing1(0.5, 2), rho);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if ((i & 1) != (j & 1)) REQUIRE(std::abs(deph(i, j)) < 1e-12);
}

TEST_CASE("cptp projection") {
    Rng rng(15);
    SECTION("CPTP input is a fixed point") {
        for (int trial = 0; trial < 8; ++trial) {
            const Ptm r = ptm_from_kraus(random_kraus(rng));
            REQUIRE((project_cptp(r) - r).norm() < 1e-8);
        }
    }
    SECTION("fully depolarizing input unchanged") {
        Ptm r = Ptm::Zero();
        r(0, 0) = 1.0;
        REQUIRE((project_cptp(r) - r).norm() < 1e-10);
    }
    SECTION("small negative Choi eigenvalue gets repaired nearby") {
        const Ptm r = ptm_from_kraus(random_kraus(rng));
        Choi j = choi_from_ptm(r);
        Eigen::SelfAdjointEigenSolver<Mat16> es(j);
        // push one eigenvalue to -0.01 along its own eigenvector
        const int k = 0;  // smallest
        const double lam = es.eigenvalues()(k);
        const Eigen::Matrix<cx, 16, 1> vec = es.eigenvectors().col(k);
        j += (-0.01 - lam) * vec * vec.adjoint();
        const Ptm busted = ptm_from_choi(j);
        const Ptm fixed = project_cptp(busted);
        const Choi jf = choi_from_ptm(fixed);
        Eigen::SelfAdjointEigenSolver<Mat16> es2(jf);
        REQUIRE(es2.eigenvalues().minCoeff() > -1e-9);
        REQUIRE(std::abs(fixed(0, 0) - 1.0) < 1e-12);
        REQUIRE(fixed.row(0).tail<15>().cwiseAbs().maxCoeff() < 1e-12);
        // trace-norm distance of the Choi states stays of the clip order
        Eigen::SelfAdjointEigenSolver<Mat16> esd(Mat16(jf - j));
        REQUIRE(esd.eigenvalues().cwiseAbs().sum() <= 0.02 + 1e-9);
    }
}

TEST_CASE("error generator") {
    SECTION("equal channels give zero") {
        const Ptm g0 = ptm_from_unitary(ideal_gate_unitary());
        const ErrorGenerator l = error_generator(g0, g0);
        REQUIRE(l.norm() < 1e-10);
    }
    SECTION("construct then invert round trip") {
        const Ptm g0 = ptm_from_unitary(ideal_gate_unitary());
        const ErrorGenerator lzz = 0.02 * hamiltonian_generator(15);
        const Ptm g = Ptm((lzz.exp()) * g0);
        const ErrorGenerator rec = error_generator(g, g0);
        REQUIRE((rec - lzz).norm() < 1e-8);
        REQUIRE((Ptm(rec.exp() * g0) - g).norm() < 1e-9);
    }
    SECTION("depolarizing generator is the diagonal log") {
        const Ptm g0 = Ptm::Identity();
        const Ptm g = depolarizing2(0.01);
        const ErrorGenerator l = error_generator(g, g0);
        Ptm expected = Ptm::Zero();
        for (int j = 1; j < 16; ++j) expected(j, j) = std::log(1.0 - 0.01);
        REQUIRE((l - expected).norm() < 1e-10);
    }
    SECTION("round trip for random generators of norm below one") {
        Rng rng(16);
        const Ptm g0 = ptm_from_unitary(ideal_gate_unitary());
        for (int trial = 0; trial < 10; ++trial) {
            ErrorGenerator l = ErrorGenerator::Zero();
            for (int k = 1; k <= 15; ++k) {
                l += 0.01 * rng.normal() * hamiltonian_generator(k);
                l(k, k) -= 0.02 * std::abs(rng.normal());  // stochastic decay
            }
            if (l.norm() > 1.0) l *= 0.9 / l.norm();
            const Ptm g = Ptm(l.exp() * g0);
            const ErrorGenerator rec = error_generator(g, g0);
            REQUIRE((Ptm(rec.exp() * g0) - g).norm() < 1e-9);
        }
    }
    SECTION("branch cut reported") {
        // a pi X rotation against identity puts eigenvalues at -1
        const Ptm g = ptm_from_unitary(kron2(sigma(1), sigma(0)));
        REQUIRE_THROWS_AS(error_generator(g, Ptm::Identity()),
                          std::runtime_error);
    }
}

TEST_CASE("pauli vector round trip") {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const DensityMatrix rho = random_density(rng);
        REQUIRE((density_from_pauli(pauli_vector(rho)) - rho).norm() < 1e-12);
        REQUIRE(std::abs(pauli_vector(rho)(0) - 1.0) < 1e-12);
    }
    // effect algebra: p = e . c for projective effects
    const Mat4 e11 = Vec4(0, 0, 0, 1).asDiagonal();
    const DensityMatrix rho = random_density(rng);
    const double p = effect_vector(e11).dot(pauli_vector(rho));
    REQUIRE(std::abs(p - rho(3, 3).real()) < 1e-12);
}
