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

#ifndef GATEKIT_DIAMOND_HPP_
#define GATEKIT_DIAMOND_HPP_

#include <algorithm>
#include <limits>
#include <sstream>
#include <vector>

#include "gatekit/channel.hpp"

namespace gatekit {

// Half diamond distance between two channels, (1/2)||A - B||_diamond, by the
// semidefinite program over the Choi matrix of the difference:
//
//   maximize   <C, P>
//   subject to 0 <= P <= 1 (x) rho,  rho a density matrix,
//
// where C = (1/4) sum_ij (Ra - Rb)_ij P_i (x) P_j^T is the column-stacking
// Choi matrix of the difference (trace zero for TP inputs).  Solved by a
// first-order primal-dual iteration with feasible bound certificates:
//   lower: for the current rho, the exact inner maximum over P is the sum of
//          positive eigenvalues of (1 (x) sqrt(rho)) C (1 (x) sqrt(rho));
//   upper: any Z >= C, Z >= 0 gives lambda_max(Tr_out Z) by weak duality.

struct DiamondResult {
    double value = 0.0;  // (lower + upper)/2
    double lower = 0.0;
    double upper = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

// Euclidean projection onto the probability simplex
inline Eigen::Vector4d project_simplex4(const Eigen::Vector4d& v) {
    Eigen::Vector4d s = v;
    std::sort(s.data(), s.data() + 4, std::greater<double>());
    double cum = 0.0;
    int last = 0;
    for (int k = 0; k < 4; ++k) {
        cum += s(k);
        if (s(k) - (cum - 1.0) / (k + 1) > 0.0) last = k;
    }
    double cump = 0.0;
    for (int k = 0; k <= last; ++k) cump += s(k);
    const double theta = (cump - 1.0) / (last + 1);
    Eigen::Vector4d out;
    for (int k = 0; k < 4; ++k) out(k) = std::max(v(k) - theta, 0.0);
    return out;
}

inline Mat4 project_density(const Mat4& m) {
    const Mat4 h = (m + m.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Mat4> es(h);
    const Eigen::Vector4d lam = project_simplex4(es.eigenvalues());
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

inline Mat16 kron_id4(const Mat4& rho) {
    Mat16 out = Mat16::Zero();
    for (int k = 0; k < 4; ++k) out.block<4, 4>(4 * k, 4 * k) = rho;
    return out;
}

// sum of positive eigenvalues of (1 (x) sqrt(rho)) C (1 (x) sqrt(rho))
inline double primal_value_for_rho(const Mat16& c, const Mat4& rho) {
    Eigen::SelfAdjointEigenSolver<Mat4> es(rho);
    Eigen::Vector4d lam = es.eigenvalues();
    for (int i = 0; i < 4; ++i) lam(i) = lam(i) > 0.0 ? std::sqrt(lam(i)) : 0.0;
    const Mat4 sq = es.eigenvectors() * lam.asDiagonal() *
                    es.eigenvectors().adjoint();
    const Mat16 w = kron_id4(sq);
    Eigen::SelfAdjointEigenSolver<Mat16> es16(w * c * w);
    double v = 0.0;
    for (int i = 0; i < 16; ++i)
        if (es16.eigenvalues()(i) > 0.0) v += es16.eigenvalues()(i);
    return v;
}

}  // namespace detail

inline Mat16 choi_of_difference(const Ptm& a, const Ptm& b) {
    Mat16 c = Mat16::Zero();
    const Ptm d = a - b;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            if (d(i, j) == 0.0) continue;
            c += (d(i, j) / 4.0) * kron4(pauli16()[i], pauli16()[j].transpose());
        }
    return c;
}

inline DiamondResult diamond_distance_full(const Ptm& a, const Ptm& b,
                                           int max_iters = 50000,
                                           double gap_tol = 1e-5) {
    // TP check: the certificate algebra below assumes a traceless difference
    for (const Ptm* r : {&a, &b}) {
        if (std::abs((*r)(0, 0) - 1.0) > 1e-6 ||
            (*r).row(0).tail<15>().cwiseAbs().maxCoeff() > 1e-6)
            throw std::invalid_argument(
                "diamond_distance: input channel is not trace preserving");
    }
    const Mat16 c = choi_of_difference(a, b);

    DiamondResult res;
    if (c.norm() < 1e-14) {
        res.converged = true;
        return res;
    }

    // primal-dual step sizes: the coupling operator (P, rho) -> P - 1(x)rho
    // has norm sqrt(5)
    const double tau = 0.98 / std::sqrt(5.0);
    const double sigma = tau;

    Mat16 p = Mat16::Zero(), pbar = Mat16::Zero(), z = Mat16::Zero();
    Mat4 rho = Mat4::Identity() / 4.0, rhobar = rho;
    double best_lb = 0.0, best_ub = std::numeric_limits<double>::infinity();

    for (int it = 1; it <= max_iters; ++it) {
        z = project_psd(z + sigma * (pbar - detail::kron_id4(rhobar)));
        const Mat16 pnew = project_psd(p - tau * z + tau * c);
        const Mat4 rhonew = detail::project_density(rho + tau * trace_out_output(z));
        pbar = 2.0 * pnew - p;
        rhobar = 2.0 * rhonew - rho;
        p = pnew;
        rho = rhonew;
        res.iterations = it;

        if (it % 25 == 0 || it == max_iters) {
            best_lb = std::max(best_lb, detail::primal_value_for_rho(c, rho));
            const Mat16 z1 = project_psd(z);
            const Mat16 zf = z1 + project_psd(Mat16(c - z1));
            Eigen::SelfAdjointEigenSolver<Mat4> es(trace_out_output(zf));
            best_ub = std::min(best_ub, es.eigenvalues().maxCoeff());
            if (best_ub - best_lb < gap_tol) {
                res.converged = true;
                break;
            }
        }
    }
    res.lower = best_lb;
    res.upper = best_ub;
    res.value = (best_lb + best_ub) / 2.0;
    return res;
}

inline double diamond_distance(const Ptm& a, const Ptm& b) {
    const DiamondResult r = diamond_distance_full(a, b);
    if (!r.converged) {
        std::ostringstream msg;
        msg << "diamond_distance: no convergence after " << r.iterations
            << " iterations; bounds [" << r.lower << ", " << r.upper << "]";
        throw std::runtime_error(msg.str());
    }
    return r.value;
}

}  // namespace gatekit

#endif  // GATEKIT_DIAMOND_HPP_
