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

#ifndef GATEKIT_GST_HPP_
#define GATEKIT_GST_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "gatekit/backend.hpp"
#include "gatekit/channel.hpp"
#include "gatekit/circuit.hpp"
#include "gatekit/dataset.hpp"
#include "gatekit/diamond.hpp"
#include "gatekit/gates.hpp"
#include "gatekit/metrics.hpp"

namespace gatekit {
namespace gst {

// Gate set tomography over the five-channel gate set {Gzz, Gxp:1, Gxp:2,
// Gzp:1, Gzp:2} plus one preparation and a four-outcome measurement.  Every
// operation appearing in fiducials and germs is one of the estimated
// channels, so an invertible gauge applied to an estimate leaves every
// predicted probability unchanged.

// -------------------------------- gate set ----------------------------------

constexpr int kNumGates = 5;

inline const std::array<GateOp, kNumGates>& gate_ops() {
    static const std::array<GateOp, kNumGates> ops = {
        GateOp{OpKind::Gzz, 0}, GateOp{OpKind::Gxp, 1},
        GateOp{OpKind::Gxp, 2}, GateOp{OpKind::Gzp, 1},
        GateOp{OpKind::Gzp, 2}};
    return ops;
}

inline int gate_index(const GateOp& op) {
    const auto& ops = gate_ops();
    for (int i = 0; i < kNumGates; ++i)
        if (ops[i] == op) return i;
    return -1;
}

// PTMs for the five channels, a preparation Pauli vector (c0 = 1), and four
// measurement effect vectors in outcome order 00, 01, 10, 11.
struct GateSet {
    std::array<Ptm, kNumGates> gates;
    RVec16 rho = RVec16::Zero();
    std::array<RVec16, 4> effects;
};

inline GateSet target_gateset() {
    GateSet gs;
    for (int g = 0; g < kNumGates; ++g)
        gs.gates[g] = ptm_from_unitary(op_unitary(gate_ops()[g]));
    Mat4 rho = Mat4::Zero();
    rho(0, 0) = 1.0;
    gs.rho = pauli_vector(rho);
    for (int k = 0; k < 4; ++k) {
        Mat4 e = Mat4::Zero();
        e(k, k) = 1.0;
        gs.effects[k] = effect_vector(e);
    }
    return gs;
}

// ----------------------------- parameter counts ------------------------------

// Raw: per gate a generator with 15 Hamiltonian coefficients and a 15x15
// dissipator factor (240 real), plus a density factor and four effect
// factors (16 real each).  TP: 240 per gate, 15 for the state, 48 for a
// complete measurement.  Gauge-reduced subtracts the 240-dimensional
// TP-preserving gauge group.  The reference count is the published value for
// the equivalent experiment and is displayed, not matched.
struct ParamCounts {
    int raw = 0;
    int tp = 0;
    int gauge_reduced = 0;
    int reference = 1026;
};

inline ParamCounts param_counts(int num_gates = kNumGates) {
    ParamCounts c;
    c.raw = num_gates * 240 + 16 + 4 * 16;
    c.tp = num_gates * 240 + 15 + 48;
    c.gauge_reduced = c.tp - 240;
    return c;
}

// --------------------------------- design -----------------------------------

namespace detail {

inline std::string qubit_word(const std::string& word, int qubit) {
    std::istringstream ss(word);
    std::string tok, out;
    while (ss >> tok) {
        if (!out.empty()) out += ' ';
        out += tok + ':' + std::to_string(qubit);
    }
    return out;
}

inline std::string join_words(const std::string& a, const std::string& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    return a + ' ' + b;
}

}  // namespace detail

// Per-qubit preparation words {I, X90, X180, X90 Z90} tensored over the pair:
// the sixteen prepared states span the full operator space.
inline std::vector<std::string> default_prep_fiducials() {
    static const std::array<const char*, 4> kWords = {"", "Gxp", "Gxp Gxp",
                                                      "Gxp Gzp"};
    std::vector<std::string> out;
    for (const char* a : kWords)
        for (const char* b : kWords)
            out.push_back(detail::join_words(detail::qubit_word(a, 1),
                                             detail::qubit_word(b, 2)));
    return out;
}

// Per-qubit measurement words {I, X90, Z90 X90} read out Z, Y and X on each
// qubit; the tenth fiducial adds an entangled direction.
inline std::vector<std::string> default_meas_fiducials() {
    static const std::array<const char*, 3> kWords = {"", "Gxp", "Gzp Gxp"};
    std::vector<std::string> out;
    for (const char* a : kWords)
        for (const char* b : kWords)
            out.push_back(detail::join_words(detail::qubit_word(a, 1),
                                             detail::qubit_word(b, 2)));
    out.push_back("Gzz");
    return out;
}

// Every gate singly, every distinct ordered pair, and a small curated set of
// longer germs that amplify tilt and entangling-phase errors.
inline std::vector<std::string> default_germs() {
    std::vector<std::string> out;
    std::vector<std::string> singles;
    for (const GateOp& op : gate_ops()) singles.push_back(op_to_string(op));
    for (const std::string& s : singles) out.push_back(s);
    for (const std::string& a : singles)
        for (const std::string& b : singles)
            if (a != b) out.push_back(a + ' ' + b);
    out.push_back("Gzz Gxp:1 Gxp:2");
    out.push_back("Gxp:1 Gxp:1 Gzp:1");
    out.push_back("Gxp:2 Gxp:2 Gzp:2");
    out.push_back("Gzz Gzp:1 Gxp:1 Gzz Gxp:2");
    return out;
}

struct DesignOptions {
    std::vector<int> lengths = {1, 2, 4, 8, 16, 32, 64};
    int singles_pairs = 8;  // fiducial pairs per repeated single-gate stage
    int other_pairs = 2;    // fiducial pairs per multi-gate germ stage
    std::vector<std::string> prep_fiducials;  // empty: defaults
    std::vector<std::string> meas_fiducials;
    std::vector<std::string> germs;
};

// One circuit is prep fiducial i, germ k repeated reps times, measurement
// fiducial j.  The SPAM layer (germ = -1) enumerates every fiducial pair;
// longer stages rotate through a deterministic reduced pair schedule.
struct GstDesign {
    std::vector<Circuit> prep_fiducials;
    std::vector<Circuit> meas_fiducials;
    std::vector<Circuit> germs;
    std::vector<int> lengths;

    struct Entry {
        int prep = 0;
        int germ = -1;
        int reps = 1;
        int meas = 0;
        int base_length = 0;
    };
    std::vector<Entry> entries;
    std::vector<Circuit> circuits;
    std::vector<std::string> texts;
};

namespace detail {

inline Ptm word_ptm(const GateSet& gs, const Circuit& c) {
    Ptm r = Ptm::Identity();
    for (const GateOp& op : c.ops) {
        const int g = gate_index(op);
        if (g < 0)
            throw std::invalid_argument(
                "gst: operation outside the estimated gate set: " +
                op_to_string(op));
        r = gs.gates[g] * r;
    }
    return r;
}

inline void check_frame_rank(const Eigen::MatrixXd& frame,
                             const std::string& which) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(frame);
    const auto& sv = svd.singularValues();
    const double tol = sv(0) * 1e-9;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++rank;
    if (rank < 16) {
        std::ostringstream msg;
        msg << "build_design: " << which
            << " fiducial frame is rank deficient (rank " << rank
            << " of 16); Gram spectrum:";
        for (int i = 0; i < std::min<int>(16, sv.size()); ++i)
            msg << ' ' << sv(i) * sv(i);
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace detail

inline GstDesign build_design(const DesignOptions& opt = {}) {
    GstDesign d;
    const auto parse_all = [](const std::vector<std::string>& texts) {
        std::vector<Circuit> out;
        out.reserve(texts.size());
        for (const std::string& t : texts) out.push_back(parse_circuit(t));
        return out;
    };
    d.prep_fiducials = parse_all(
        opt.prep_fiducials.empty() ? default_prep_fiducials()
                                   : opt.prep_fiducials);
    d.meas_fiducials = parse_all(
        opt.meas_fiducials.empty() ? default_meas_fiducials()
                                   : opt.meas_fiducials);
    d.germs = parse_all(opt.germs.empty() ? default_germs() : opt.germs);
    d.lengths = opt.lengths;
    std::sort(d.lengths.begin(), d.lengths.end());
    d.lengths.erase(std::unique(d.lengths.begin(), d.lengths.end()),
                    d.lengths.end());
    if (d.lengths.empty() || d.lengths.front() < 1)
        throw std::invalid_argument("build_design: lengths must be positive");
    if (opt.singles_pairs < 1 || opt.other_pairs < 1)
        throw std::invalid_argument("build_design: pair budgets must be >= 1");
    for (const Circuit& g : d.germs)
        if (g.ops.empty())
            throw std::invalid_argument("build_design: empty germ");

    const GateSet target = target_gateset();
    const int np = static_cast<int>(d.prep_fiducials.size());
    const int nm = static_cast<int>(d.meas_fiducials.size());
    Eigen::MatrixXd prep_frame(16, np);
    for (int i = 0; i < np; ++i)
        prep_frame.col(i) =
            detail::word_ptm(target, d.prep_fiducials[i]) * target.rho;
    detail::check_frame_rank(prep_frame, "prep");
    Eigen::MatrixXd meas_frame(4 * nm, 16);
    for (int j = 0; j < nm; ++j) {
        const Ptm r = detail::word_ptm(target, d.meas_fiducials[j]);
        for (int k = 0; k < 4; ++k)
            meas_frame.row(4 * j + k) = target.effects[k].transpose() * r;
    }
    detail::check_frame_rank(meas_frame, "measurement");

    std::set<std::string> seen;
    const auto add_entry = [&](int i, int k, int reps, int j, int base) {
        Circuit c;
        for (const GateOp& op : d.prep_fiducials[i].ops) c.ops.push_back(op);
        if (k >= 0)
            for (int r = 0; r < reps; ++r)
                for (const GateOp& op : d.germs[k].ops) c.ops.push_back(op);
        for (const GateOp& op : d.meas_fiducials[j].ops) c.ops.push_back(op);
        std::string text = circuit_to_string(c);
        if (!seen.insert(text).second) return;
        d.entries.push_back({i, k, reps, j, base});
        d.circuits.push_back(std::move(c));
        d.texts.push_back(std::move(text));
    };

    for (int i = 0; i < np; ++i)
        for (int j = 0; j < nm; ++j)
            add_entry(i, -1, 1, j, d.lengths.front());

    for (int k = 0; k < static_cast<int>(d.germs.size()); ++k) {
        const int glen = static_cast<int>(d.germs[k].ops.size());
        const int budget = std::min(glen == 1 ? opt.singles_pairs
                                              : opt.other_pairs,
                                    np * nm);
        std::set<int> used;
        int stage = 0;
        for (const int length : d.lengths) {
            const int reps = std::max(1, length / glen);
            if (!used.insert(reps).second) continue;
            std::set<std::pair<int, int>> pairs;
            for (int t = 0;
                 static_cast<int>(pairs.size()) < budget && t < 8 * budget;
                 ++t) {
                const int i = (7 * t + 3 * k + 5 * stage) % np;
                const int j = (3 * t + k + 2 * stage) % nm;
                if (pairs.insert({i, j}).second)
                    add_entry(i, k, reps, j, length);
            }
            ++stage;
        }
    }
    return d;
}

// Entries whose base length does not exceed max_length, for per-length fits.
inline GstDesign design_up_to(const GstDesign& d, int max_length) {
    GstDesign out;
    out.prep_fiducials = d.prep_fiducials;
    out.meas_fiducials = d.meas_fiducials;
    out.germs = d.germs;
    for (int l : d.lengths)
        if (l <= max_length) out.lengths.push_back(l);
    for (std::size_t i = 0; i < d.entries.size(); ++i) {
        if (d.entries[i].base_length > max_length) continue;
        out.entries.push_back(d.entries[i]);
        out.circuits.push_back(d.circuits[i]);
        out.texts.push_back(d.texts[i]);
    }
    return out;
}

// ------------------------------- prediction ---------------------------------

namespace detail {

// Unclamped outcome weights; TP-only estimates can leave these slightly
// negative at unobserved outcomes, which likelihood scoring must see as-is.
inline std::array<double, 4> raw_probs(const GateSet& gs, const Circuit& c) {
    RVec16 v = gs.rho;
    for (const GateOp& op : c.ops) {
        const int g = gate_index(op);
        if (g < 0)
            throw std::invalid_argument(
                "gst: operation outside the estimated gate set: " +
                op_to_string(op));
        v = gs.gates[g] * v;
    }
    std::array<double, 4> p{};
    for (int k = 0; k < 4; ++k) p[k] = gs.effects[k].dot(v);
    return p;
}

}  // namespace detail

inline std::array<double, 4> predict(const GateSet& gs, const Circuit& c) {
    std::array<double, 4> p = detail::raw_probs(gs, c);
    double sum = 0.0;
    for (double& x : p) {
        x = std::max(0.0, x);
        sum += x;
    }
    if (sum > 0.0)
        for (double& x : p) x /= sum;
    return p;
}

inline CountDataset run_design(const SimBackend& backend, const GstDesign& d,
                               long shots) {
    return backend.run(d.texts, shots);
}

// --------------------------- model parameterization --------------------------

namespace detail {

constexpr int kHamParams = 15;
constexpr int kDissParams = 225;
constexpr int kGateParams = kHamParams + kDissParams;
constexpr int kSpamParams = 16;
constexpr int kParamCount =
    kNumGates * kGateParams + kSpamParams + 4 * kSpamParams;
constexpr double kMinProb = 1e-6;
constexpr double kZeroRadius = 3e-5;

// log(p) continued below kMinProb by its second-order Taylor polynomial, so
// the objective stays finite and C2 when a predicted probability crosses
// zero during optimization.
inline double safe_log(double p, double* dlog) {
    if (p >= kMinProb) {
        *dlog = 1.0 / p;
        return std::log(p);
    }
    const double r = (p - kMinProb) / kMinProb;
    *dlog = (1.0 - r) / kMinProb;
    return std::log(kMinProb) + r - 0.5 * r * r;
}

template <int N>
Eigen::Matrix<cx, N, N> unpack_lower(const double* x) {
    Eigen::Matrix<cx, N, N> t = Eigen::Matrix<cx, N, N>::Zero();
    int k = 0;
    for (int r = 0; r < N; ++r) {
        for (int c = 0; c < r; ++c) {
            t(r, c) = cx(x[k], x[k + 1]);
            k += 2;
        }
        t(r, r) = cx(x[k++], 0.0);
    }
    return t;
}

template <int N>
void pack_lower(const Eigen::Matrix<cx, N, N>& t, double* x) {
    int k = 0;
    for (int r = 0; r < N; ++r) {
        for (int c = 0; c < r; ++c) {
            x[k] = t(r, c).real();
            x[k + 1] = t(r, c).imag();
            k += 2;
        }
        x[k++] = t(r, r).real();
    }
}

// dNLL = 2 Re tr(W^dagger dT) for W = G_S T, restricted to the lower triangle
// with a real diagonal.
template <int N>
void pack_lower_grad(const Eigen::Matrix<cx, N, N>& w, double* g) {
    int k = 0;
    for (int r = 0; r < N; ++r) {
        for (int c = 0; c < r; ++c) {
            g[k] = 2.0 * w(r, c).real();
            g[k + 1] = 2.0 * w(r, c).imag();
            k += 2;
        }
        g[k++] = 2.0 * w(r, r).real();
    }
}

// Superoperator basis for trace-preserving generators: commutators with the
// traceless Paulis and the dissipator pair terms
// P_i rho P_j - (P_j P_i rho + rho P_j P_i) / 2, all as PTMs.  dissipator(j,
// i) is the elementwise conjugate of dissipator(i, j), so a Hermitian
// coefficient matrix always yields a real generator.
struct LindbladBasis {
    std::array<Ptm, 15> ham;
    std::vector<Mat16> diss;  // index (i - 1) * 15 + (j - 1)
};

inline const LindbladBasis& lindblad_basis() {
    static const LindbladBasis basis = [] {
        LindbladBasis out;
        out.diss.resize(225);
        const auto& p = pauli16();
        const cx mi(0.0, -1.0);
        for (int i = 1; i <= 15; ++i) {
            for (int b = 0; b < 16; ++b) {
                const Mat4 img = mi * (p[i] * p[b] - p[b] * p[i]);
                for (int a = 0; a < 16; ++a)
                    out.ham[i - 1](a, b) =
                        (p[a] * img).trace().real() / 4.0;
            }
        }
        for (int i = 1; i <= 15; ++i)
            for (int j = 1; j <= 15; ++j) {
                Mat16& d = out.diss[(i - 1) * 15 + (j - 1)];
                const Mat4 q = p[j] * p[i];
                for (int b = 0; b < 16; ++b) {
                    const Mat4 img = p[i] * p[b] * p[j] -
                                     0.5 * (q * p[b] + p[b] * q);
                    for (int a = 0; a < 16; ++a)
                        d(a, b) = (p[a] * img).trace() / 4.0;
                }
            }
        return out;
    }();
    return basis;
}

inline const GateSet& target_frame() {
    static const GateSet tgt = target_gateset();
    return tgt;
}

struct ModelEval {
    std::array<Eigen::Matrix<cx, 15, 15>, kNumGates> tdiss;  // C = T T^dagger
    std::array<Ptm, kNumGates> kgen;   // error generator
    std::array<Ptm, kNumGates> egen;   // exp(kgen)
    Eigen::Matrix4cd arho;
    Mat4 rho_mat;
    double rho_trace = 0.0;
    std::array<Eigen::Matrix4cd, 4> beff;
    std::array<Mat4, 4> eff_raw;  // B B^dagger
    Mat4 eff_sum;                 // S = sum of raw effects
    Mat4 unrm;                    // eigenvectors of S
    Eigen::Vector4d lnrm;         // eigenvalues of S
    Mat4 nrm;                     // S^{-1/2}
    std::array<Mat4, 4> eff;      // normalized effects
    bool spam_ok = true;
    GateSet gs;
};

// Gates are exp(K) times the ideal PTM with K a Lindblad generator, the
// state is A A^dagger normalized to unit trace, and the effects are raw PSD
// blocks renormalized by S^{-1/2} so they always form a POVM.  Every decoded
// gate set is CPTP by construction.
inline void decode_params(const Eigen::VectorXd& x, ModelEval* ev) {
    const LindbladBasis& basis = lindblad_basis();
    for (int g = 0; g < kNumGates; ++g) {
        const double* xg = x.data() + g * kGateParams;
        Ptm k = Ptm::Zero();
        for (int i = 0; i < 15; ++i) k += xg[i] * basis.ham[i];
        ev->tdiss[g] = unpack_lower<15>(xg + kHamParams);
        const Eigen::Matrix<cx, 15, 15> c =
            ev->tdiss[g] * ev->tdiss[g].adjoint();
        for (int i = 0; i < 15; ++i) {
            k += c(i, i).real() * basis.diss[i * 15 + i].real();
            for (int j = i + 1; j < 15; ++j) {
                const cx cij = c(i, j);
                if (cij != cx(0.0, 0.0))
                    k += (2.0 * cij * basis.diss[i * 15 + j]).real();
            }
        }
        ev->kgen[g] = k;
        ev->egen[g] = ev->kgen[g].exp();
        ev->gs.gates[g] = ev->egen[g] * target_frame().gates[g];
    }
    const int base = kNumGates * kGateParams;
    ev->arho = unpack_lower<4>(x.data() + base);
    const Mat4 srho = ev->arho * ev->arho.adjoint();
    double tr = srho.trace().real();
    if (!(tr > 1e-300)) tr = 1e-300;
    ev->rho_trace = tr;
    ev->rho_mat = srho / tr;
    ev->gs.rho = pauli_vector(ev->rho_mat);
    ev->eff_sum = Mat4::Zero();
    for (int k = 0; k < 4; ++k) {
        ev->beff[k] = unpack_lower<4>(x.data() + base + kSpamParams * (k + 1));
        ev->eff_raw[k] = ev->beff[k] * ev->beff[k].adjoint();
        ev->eff_sum += ev->eff_raw[k];
    }
    const Eigen::SelfAdjointEigenSolver<Mat4> es(ev->eff_sum);
    ev->unrm = es.eigenvectors();
    ev->lnrm = es.eigenvalues();
    const double lmax = std::max(ev->lnrm(3), 1e-300);
    ev->spam_ok = ev->lnrm(0) > 1e-10 * lmax;
    Eigen::Vector4d isqrt;
    for (int i = 0; i < 4; ++i)
        isqrt(i) = 1.0 / std::sqrt(std::max(ev->lnrm(i), 1e-12 * lmax));
    ev->nrm = ev->unrm * isqrt.asDiagonal() * ev->unrm.adjoint();
    for (int k = 0; k < 4; ++k) {
        ev->eff[k] = ev->nrm * ev->eff_raw[k] * ev->nrm;
        ev->gs.effects[k] = effect_vector(ev->eff[k]);
    }
}

// Least-squares coefficients of a generator in the Lindblad basis: 15
// Hamiltonian columns, then the Hermitian dissipator parameters (diagonal,
// then real and imaginary parts of each upper off-diagonal entry).
inline void generator_coefficients(const Ptm& k, Eigen::VectorXd* h,
                                   Eigen::Matrix<cx, 15, 15>* c) {
    static const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr = [] {
        const LindbladBasis& basis = lindblad_basis();
        Eigen::MatrixXd a(256, kGateParams);
        for (int i = 0; i < 15; ++i)
            a.col(i) = Eigen::Map<const Eigen::VectorXd>(
                basis.ham[i].data(), 256);
        int col = kHamParams;
        for (int i = 0; i < 15; ++i) {
            const Ptm dii = basis.diss[i * 15 + i].real();
            a.col(col++) =
                Eigen::Map<const Eigen::VectorXd>(dii.data(), 256);
            for (int j = 0; j < i; ++j) {
                const Ptm re = 2.0 * basis.diss[j * 15 + i].real();
                const Ptm im = -2.0 * basis.diss[j * 15 + i].imag();
                a.col(col++) =
                    Eigen::Map<const Eigen::VectorXd>(re.data(), 256);
                a.col(col++) =
                    Eigen::Map<const Eigen::VectorXd>(im.data(), 256);
            }
        }
        return Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(a);
    }();
    const Eigen::VectorXd sol =
        qr.solve(Eigen::Map<const Eigen::VectorXd>(k.data(), 256));
    *h = sol.head(kHamParams);
    c->setZero();
    int col = kHamParams;
    for (int i = 0; i < 15; ++i) {
        (*c)(i, i) = sol(col++);
        for (int j = 0; j < i; ++j) {
            (*c)(j, i) = cx(sol(col), sol(col + 1));
            (*c)(i, j) = std::conj((*c)(j, i));
            col += 2;
        }
    }
}

// Factor a gate set into interior-point parameters.  Gates go through the
// matrix logarithm relative to the ideal frame and a least-squares Lindblad
// decomposition with the dissipator clipped to PSD; the ridge keeps every
// factor direction away from the rank boundary so it has gradient flow.
inline Eigen::VectorXd params_from_gateset(const GateSet& gs, double ridge) {
    Eigen::VectorXd x(kParamCount);
    for (int g = 0; g < kNumGates; ++g) {
        const Ptm rel = gs.gates[g] * target_frame().gates[g].inverse();
        const Eigen::MatrixXd k = Eigen::MatrixXd(rel).log();
        if (!k.allFinite())
            throw std::invalid_argument(
                "params_from_gateset: gate has no real generator relative "
                "to the ideal frame");
        Eigen::VectorXd h;
        Eigen::Matrix<cx, 15, 15> c;
        generator_coefficients(Ptm(k), &h, &c);
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<cx, 15, 15>> es(c);
        const Eigen::Matrix<double, 15, 1> lam =
            es.eigenvalues().cwiseMax(0.0).array() + ridge;
        const Eigen::Matrix<cx, 15, 15> cpsd =
            es.eigenvectors() * lam.asDiagonal() *
            es.eigenvectors().adjoint();
        const Eigen::LLT<Eigen::Matrix<cx, 15, 15>> llt(cpsd);
        if (llt.info() != Eigen::Success)
            throw std::invalid_argument(
                "params_from_gateset: dissipator factorization failed");
        double* xg = x.data() + g * kGateParams;
        for (int i = 0; i < 15; ++i) xg[i] = h(i);
        pack_lower<15>(Eigen::Matrix<cx, 15, 15>(llt.matrixL()),
                       xg + kHamParams);
    }
    const int base = kNumGates * kGateParams;
    Mat4 rho = density_from_pauli(gs.rho);
    rho += ridge * Mat4::Identity();
    const Eigen::LLT<Mat4> lrho(rho);
    if (lrho.info() != Eigen::Success)
        throw std::invalid_argument("params_from_gateset: state is not PSD");
    pack_lower<4>(Eigen::Matrix4cd(lrho.matrixL()), x.data() + base);
    for (int k = 0; k < 4; ++k) {
        Mat4 e = Mat4::Zero();
        for (int i = 0; i < 16; ++i) e += gs.effects[k](i) * pauli16()[i];
        e += ridge * Mat4::Identity();
        const Eigen::LLT<Mat4> le(e);
        if (le.info() != Eigen::Success)
            throw std::invalid_argument(
                "params_from_gateset: effect is not PSD");
        pack_lower<4>(Eigen::Matrix4cd(le.matrixL()),
                      x.data() + base + kSpamParams * (k + 1));
    }
    return x;
}

// Negative log-likelihood per shot.  The decoded model is CPTP by
// construction, so no constraint or penalty terms are needed.
// Shared likelihood sweep: forward states, safe_log outcome terms, and
// reverse-mode accumulators with respect to the gate matrices, the state
// vector, and the effect vectors.
struct SweepGrads {
    std::array<RMat16, kNumGates> gates;
    RVec16 rho = RVec16::Zero();
    std::array<RVec16, 4> effects;
};

inline double nll_sweep(const GateSet& gs,
                        const std::vector<std::vector<int>>& ops,
                        const std::vector<std::array<double, 4>>& w,
                        double wtot, SweepGrads* sg) {
    if (sg) {
        for (auto& m : sg->gates) m.setZero();
        sg->rho.setZero();
        for (auto& v : sg->effects) v.setZero();
    }
    double f = 0.0;
    std::vector<RVec16> fwd;
    for (std::size_t c = 0; c < ops.size(); ++c) {
        const auto& seq = ops[c];
        fwd.resize(seq.size() + 1);
        fwd[0] = gs.rho;
        for (std::size_t t = 0; t < seq.size(); ++t)
            fwd[t + 1].noalias() = gs.gates[seq[t]] * fwd[t];
        const double nc = w[c][0] + w[c][1] + w[c][2] + w[c][3];
        std::array<double, 4> coef{};
        for (int k = 0; k < 4; ++k) {
            const double p = gs.effects[k].dot(fwd[seq.size()]);
            if (w[c][k] == 0.0) {
                // zero-count outcomes are flat on [0, 1]; a cubic wall below
                // kZeroRadius keeps unconstrained fits on the simplex, with
                // continuous curvature so model-based steps stay reliable
                if (p < kZeroRadius) {
                    const double dp = kZeroRadius - p;
                    const double a2 = kZeroRadius * kZeroRadius;
                    f += nc * dp * dp * dp / (6.0 * a2) / wtot;
                    coef[k] = -nc * dp * dp / (2.0 * a2) / wtot;
                }
                continue;
            }
            double dlog = 0.0;
            f -= w[c][k] * safe_log(p, &dlog) / wtot;
            coef[k] = -w[c][k] * dlog / wtot;
        }
        if (!sg) continue;
        RVec16 u = RVec16::Zero();
        for (int k = 0; k < 4; ++k) {
            if (coef[k] == 0.0) continue;
            sg->effects[k] += coef[k] * fwd[seq.size()];
            u += coef[k] * gs.effects[k];
        }
        for (int t = static_cast<int>(seq.size()) - 1; t >= 0; --t) {
            sg->gates[seq[t]].noalias() += u * fwd[t].transpose();
            u = gs.gates[seq[t]].transpose() * u;
        }
        sg->rho += u;
    }
    return f;
}

inline double model_objective(const Eigen::VectorXd& x,
                              const std::vector<std::vector<int>>& ops,
                              const std::vector<std::array<double, 4>>& w,
                              double wtot, ModelEval* ev,
                              Eigen::VectorXd* grad) {
    decode_params(x, ev);
    if (!ev->spam_ok) {
        if (grad) grad->setZero();
        return std::numeric_limits<double>::infinity();
    }
    SweepGrads sg;
    const double f = nll_sweep(ev->gs, ops, w, wtot, grad ? &sg : nullptr);
    if (!grad) return f;

    grad->setZero();
    const LindbladBasis& basis = lindblad_basis();
    for (int g = 0; g < kNumGates; ++g) {
        // dF/d(exp K) for R = exp(K) R0, then the exponential adjoint via
        // the block identity exp([[A, E], [0, A]]) = [[e^A, L(A, E)], ...]
        // evaluated at A = K^T.
        const Ptm ebar = sg.gates[g] * target_frame().gates[g].transpose();
        Eigen::Matrix<double, 32, 32> blk =
            Eigen::Matrix<double, 32, 32>::Zero();
        blk.topLeftCorner<16, 16>() = ev->kgen[g].transpose();
        blk.bottomRightCorner<16, 16>() = ev->kgen[g].transpose();
        blk.topRightCorner<16, 16>() = ebar;
        const Eigen::Matrix<double, 32, 32> eblk = blk.exp();
        const Ptm kbar = eblk.topRightCorner<16, 16>();
        double* gg = grad->data() + g * kGateParams;
        for (int i = 0; i < 15; ++i)
            gg[i] = basis.ham[i].cwiseProduct(kbar).sum();
        Eigen::Matrix<cx, 15, 15> y;
        for (int i = 0; i < 15; ++i) {
            y(i, i) =
                basis.diss[i * 15 + i].real().cwiseProduct(kbar).sum();
            for (int j = i + 1; j < 15; ++j) {
                cx v(0.0, 0.0);
                const Mat16& d = basis.diss[i * 15 + j];
                for (int col = 0; col < 16; ++col)
                    for (int row = 0; row < 16; ++row)
                        v += kbar(row, col) * d(row, col);
                y(i, j) = v;
                y(j, i) = std::conj(v);
            }
        }
        const Eigen::Matrix<cx, 15, 15> wmat = y.conjugate() * ev->tdiss[g];
        pack_lower_grad<15>(wmat, gg + kHamParams);
    }
    const int base = kNumGates * kGateParams;
    Mat4 g4 = Mat4::Zero();
    for (int i = 0; i < 16; ++i) g4 += sg.rho(i) * pauli16()[i];
    const double inner4 = g4.cwiseProduct(ev->rho_mat.transpose())
                              .sum()
                              .real();
    const Mat4 gs4 = (g4 - inner4 * Mat4::Identity()) / ev->rho_trace;
    pack_lower_grad<4>(Eigen::Matrix4cd(gs4 * ev->arho), grad->data() + base);

    // Effects: the direct term through each raw block plus the shared term
    // through S^{-1/2}, whose derivative uses divided differences over the
    // eigenvalues of S.
    std::array<Mat4, 4> veff;
    Mat4 pacc = Mat4::Zero();
    for (int k = 0; k < 4; ++k) {
        veff[k] = Mat4::Zero();
        for (int i = 0; i < 16; ++i)
            veff[k] += sg.effects[k](i) * pauli16()[i] / 4.0;
        pacc += ev->eff_raw[k] * ev->nrm * veff[k] +
                veff[k] * ev->nrm * ev->eff_raw[k];
    }
    Eigen::Matrix4d phi;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            const double la = ev->lnrm(a), lb = ev->lnrm(b);
            if (std::abs(la - lb) > 1e-12 * std::max(la, lb)) {
                phi(a, b) = (1.0 / std::sqrt(la) - 1.0 / std::sqrt(lb)) /
                            (la - lb);
            } else {
                const double lm = 0.5 * (la + lb);
                phi(a, b) = -0.5 / (lm * std::sqrt(lm));
            }
        }
    const Mat4 pu = ev->unrm.adjoint() * pacc * ev->unrm;
    const Mat4 sbar =
        ev->unrm * pu.cwiseProduct(phi.cast<cx>()) * ev->unrm.adjoint();
    for (int k = 0; k < 4; ++k) {
        const Mat4 u = ev->nrm * veff[k] * ev->nrm + sbar;
        pack_lower_grad<4>(Eigen::Matrix4cd(u * ev->beff[k]),
                           grad->data() + base + kSpamParams * (k + 1));
    }
    return f;
}

// ------------------------- TP-only parameterization --------------------------

// Free gate rows below the pinned first row, a free state, and a complete
// set of free effects, with no CP cone.  The unconstrained optimum follows
// the chi-squared reference, so per-length goodness-of-fit tables are scored
// against fits in this parameterization.
constexpr int kTpParamCount = kNumGates * kGateParams + 15 + 48;

inline void decode_tp(const Eigen::VectorXd& x, GateSet* gs) {
    for (int g = 0; g < kNumGates; ++g) {
        Ptm& r = gs->gates[g];
        r.row(0).setZero();
        r(0, 0) = 1.0;
        for (int row = 1; row < 16; ++row)
            for (int col = 0; col < 16; ++col)
                r(row, col) = x(g * kGateParams + (row - 1) * 16 + col);
    }
    const int base = kNumGates * kGateParams;
    gs->rho(0) = 1.0;
    for (int i = 1; i < 16; ++i) gs->rho(i) = x(base + i - 1);
    RVec16 rest = RVec16::Zero();
    rest(0) = 1.0;
    for (int k = 0; k < 3; ++k) {
        for (int j = 0; j < 16; ++j)
            gs->effects[k](j) = x(base + 15 + k * 16 + j);
        rest -= gs->effects[k];
    }
    gs->effects[3] = rest;
}

// Exact inverse of decode_tp on TP-form gate sets; rows outside the TP form
// are dropped.
inline Eigen::VectorXd encode_tp(const GateSet& gs) {
    Eigen::VectorXd x(kTpParamCount);
    for (int g = 0; g < kNumGates; ++g)
        for (int row = 1; row < 16; ++row)
            for (int col = 0; col < 16; ++col)
                x(g * kGateParams + (row - 1) * 16 + col) =
                    gs.gates[g](row, col);
    const int base = kNumGates * kGateParams;
    for (int i = 1; i < 16; ++i) x(base + i - 1) = gs.rho(i);
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 16; ++j)
            x(base + 15 + k * 16 + j) = gs.effects[k](j);
    return x;
}

inline double tp_objective(const Eigen::VectorXd& x,
                           const std::vector<std::vector<int>>& ops,
                           const std::vector<std::array<double, 4>>& w,
                           double wtot, GateSet* gs, Eigen::VectorXd* grad) {
    decode_tp(x, gs);
    SweepGrads sg;
    const double f = nll_sweep(*gs, ops, w, wtot, grad ? &sg : nullptr);
    if (!grad) return f;
    grad->resize(kTpParamCount);
    for (int g = 0; g < kNumGates; ++g)
        for (int row = 1; row < 16; ++row)
            for (int col = 0; col < 16; ++col)
                (*grad)(g * kGateParams + (row - 1) * 16 + col) =
                    sg.gates[g](row, col);
    const int base = kNumGates * kGateParams;
    for (int i = 1; i < 16; ++i) (*grad)(base + i - 1) = sg.rho(i);
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 16; ++j)
            (*grad)(base + 15 + k * 16 + j) =
                sg.effects[k](j) - sg.effects[3](j);
    return f;
}

// Tangent direction in the TP coordinates: gate rows 1..15, the traceless
// state components, and three free effects with the fourth balancing them.
struct TpTangent {
    std::array<RMat16, kNumGates> gates;
    RVec16 rho;
    std::array<RVec16, 4> effects;
};

inline void decode_tp_tangent(const Eigen::VectorXd& v, TpTangent* t) {
    for (int g = 0; g < kNumGates; ++g) {
        t->gates[g].row(0).setZero();
        for (int row = 1; row < 16; ++row)
            for (int col = 0; col < 16; ++col)
                t->gates[g](row, col) =
                    v(g * kGateParams + (row - 1) * 16 + col);
    }
    const int base = kNumGates * kGateParams;
    t->rho(0) = 0.0;
    for (int i = 1; i < 16; ++i) t->rho(i) = v(base + i - 1);
    t->effects[3].setZero();
    for (int k = 0; k < 3; ++k) {
        for (int j = 0; j < 16; ++j)
            t->effects[k](j) = v(base + 15 + k * 16 + j);
        t->effects[3] -= t->effects[k];
    }
}

// Second-order correction to the Gauss-Newton model: the part of the Hessian
// product coming from the curvature of the outcome map itself,
//   sum_cells coef * d^2 p[v] ,
// accumulated by a fused tangent-forward / adjoint-backward sweep.  The
// per-cell coefficients match nll_sweep, so together with J^T Q J the product
// is the exact Hessian of the TP objective.
inline void tp_curvature(const GateSet& gs, const TpTangent& tv,
                         const std::vector<std::vector<int>>& ops,
                         const std::vector<std::array<double, 4>>& w,
                         double wtot,
                         const std::vector<std::vector<RVec16>>& fwd_cache,
                         Eigen::VectorXd* out) {
    SweepGrads sg;
    for (auto& m : sg.gates) m.setZero();
    sg.rho.setZero();
    for (auto& v : sg.effects) v.setZero();
    std::vector<RVec16> dfwd;
    for (std::size_t c = 0; c < ops.size(); ++c) {
        const auto& seq = ops[c];
        const auto& fwd = fwd_cache[c];
        dfwd.resize(seq.size() + 1);
        dfwd[0] = tv.rho;
        for (std::size_t t = 0; t < seq.size(); ++t) {
            dfwd[t + 1].noalias() = gs.gates[seq[t]] * dfwd[t];
            dfwd[t + 1].noalias() += tv.gates[seq[t]] * fwd[t];
        }
        const double nc = w[c][0] + w[c][1] + w[c][2] + w[c][3];
        RVec16 a = RVec16::Zero(), b = RVec16::Zero();
        bool any = false;
        for (int k = 0; k < 4; ++k) {
            const double p = gs.effects[k].dot(fwd[seq.size()]);
            double coef = 0.0;
            if (w[c][k] > 0.0) {
                double dlog = 0.0;
                safe_log(p, &dlog);
                coef = -w[c][k] * dlog / wtot;
            } else if (p < kZeroRadius) {
                const double dp = kZeroRadius - p;
                coef = -nc * dp * dp /
                       (2.0 * kZeroRadius * kZeroRadius) / wtot;
            } else {
                continue;
            }
            any = true;
            sg.effects[k] += coef * dfwd[seq.size()];
            a += coef * tv.effects[k];
            b += coef * gs.effects[k];
        }
        if (!any) continue;
        for (int t = static_cast<int>(seq.size()) - 1; t >= 0; --t) {
            const int gi = seq[t];
            sg.gates[gi].noalias() += a * fwd[t].transpose();
            sg.gates[gi].noalias() += b * dfwd[t].transpose();
            RVec16 anew = gs.gates[gi].transpose() * a;
            anew.noalias() += tv.gates[gi].transpose() * b;
            b = gs.gates[gi].transpose() * b;
            a = anew;
        }
        sg.rho += a;
    }
    out->resize(kTpParamCount);
    for (int g = 0; g < kNumGates; ++g)
        for (int row = 1; row < 16; ++row)
            for (int col = 0; col < 16; ++col)
                (*out)(g * kGateParams + (row - 1) * 16 + col) =
                    sg.gates[g](row, col);
    const int base = kNumGates * kGateParams;
    for (int i = 1; i < 16; ++i) (*out)(base + i - 1) = sg.rho(i);
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 16; ++j)
            (*out)(base + 15 + k * 16 + j) =
                sg.effects[k](j) - sg.effects[3](j);
}

// Trust-region Newton polish for the TP likelihood.  The outcome map is
// multilinear, so per-cell gradients assemble into an explicit Jacobian over
// the active cells; J^T Q J plus the tangent-sweep curvature correction gives
// exact Hessian products.  Steps solve the metric-scaled model with truncated
// conjugate gradients confined to a trust region, which absorbs the model
// error from wall crossings.  Returns the final objective and leaves the
// improved parameters in *x.
inline double tp_polish(Eigen::VectorXd* x,
                        const std::vector<std::vector<int>>& ops,
                        const std::vector<std::array<double, 4>>& w,
                        double wtot, int max_steps, GateSet* gs,
                        bool* settled = nullptr) {
    const int np = kTpParamCount;
    Eigen::VectorXd g(np);
    Eigen::MatrixXd jac;
    Eigen::VectorXd q;
    std::vector<std::vector<RVec16>> fwd_cache(ops.size());
    GateSet cur;
    double f = tp_objective(*x, ops, w, wtot, gs, &g);
    double radius = 1.0;
    long hessian_budget = 1200;
    if (settled) *settled = false;
    int flat = 0;
    for (int step = 0; step < max_steps && hessian_budget > 0; ++step) {
        if (g.lpNorm<Eigen::Infinity>() < 1e-12) {
            if (settled) *settled = true;
            break;
        }
        decode_tp(*x, &cur);
        long cells = 0;
        for (std::size_t c = 0; c < ops.size(); ++c) {
            const auto& seq = ops[c];
            auto& fwd = fwd_cache[c];
            fwd.resize(seq.size() + 1);
            fwd[0] = cur.rho;
            for (std::size_t t = 0; t < seq.size(); ++t)
                fwd[t + 1].noalias() = cur.gates[seq[t]] * fwd[t];
            for (int k = 0; k < 4; ++k) {
                const double p = cur.effects[k].dot(fwd[seq.size()]);
                if (w[c][k] > 0.0 || p < kZeroRadius) ++cells;
            }
        }
        jac.resize(cells, np);
        q.resize(cells);
        long row = 0;
        for (std::size_t c = 0; c < ops.size(); ++c) {
            const auto& seq = ops[c];
            const auto& fwd = fwd_cache[c];
            const double nc = w[c][0] + w[c][1] + w[c][2] + w[c][3];
            for (int k = 0; k < 4; ++k) {
                const double p = cur.effects[k].dot(fwd[seq.size()]);
                double qc = 0.0;
                if (w[c][k] > 0.0) {
                    const double pc = std::max(p, kMinProb);
                    qc = w[c][k] / (pc * pc) / wtot;
                } else if (p < kZeroRadius) {
                    qc = nc * (kZeroRadius - p) /
                         (kZeroRadius * kZeroRadius) / wtot;
                }
                if (qc == 0.0) continue;
                q(row) = qc;
                auto jrow = jac.row(row);
                jrow.setZero();
                RVec16 u = cur.effects[k];
                for (int t = static_cast<int>(seq.size()) - 1; t >= 0;
                     --t) {
                    const int gbase = seq[t] * kGateParams;
                    for (int r = 1; r < 16; ++r)
                        for (int col = 0; col < 16; ++col)
                            jrow(gbase + (r - 1) * 16 + col) +=
                                u(r) * fwd[t](col);
                    u = cur.gates[seq[t]].transpose() * u;
                }
                const int base = kNumGates * kGateParams;
                for (int i = 1; i < 16; ++i) jrow(base + i - 1) += u(i);
                if (k < 3) {
                    for (int j = 0; j < 16; ++j)
                        jrow(base + 15 + k * 16 + j) += fwd[seq.size()](j);
                } else {
                    for (int kk = 0; kk < 3; ++kk)
                        for (int j = 0; j < 16; ++j)
                            jrow(base + 15 + kk * 16 + j) -=
                                fwd[seq.size()](j);
                }
                ++row;
            }
        }
        const long m = row;
        Eigen::VectorXd diag(np);
        for (int j = 0; j < np; ++j)
            diag(j) = q.head(m).dot(jac.col(j).head(m).cwiseAbs2());
        const double dmax = std::max(diag.maxCoeff(), 1e-300);
        const Eigen::VectorXd dinv_sqrt =
            diag.cwiseMax(1e-12 * dmax).cwiseInverse().cwiseSqrt();
        // column-scaled Jacobian: unit-diagonal metric up to the floor
        jac.topRows(m).array().rowwise() *= dinv_sqrt.transpose().array();
        const Eigen::VectorXd gsc = dinv_sqrt.cwiseProduct(g);
        TpTangent tang;
        Eigen::VectorXd curv(np);
        const auto hmul = [&](const Eigen::VectorXd& v) {
            --hessian_budget;
            Eigen::VectorXd t = jac.topRows(m) * v;
            t.array() *= q.head(m).array();
            Eigen::VectorXd out = jac.topRows(m).transpose() * t;
            decode_tp_tangent(dinv_sqrt.cwiseProduct(v), &tang);
            tp_curvature(cur, tang, ops, w, wtot, fwd_cache, &curv);
            out += dinv_sqrt.cwiseProduct(curv);
            return out;
        };
        bool accepted = false;
        for (int tries = 0; tries < 20 && !accepted; ++tries) {
            // Steihaug: truncated CG on the scaled model inside the radius
            Eigen::VectorXd sol = Eigen::VectorXd::Zero(np);
            Eigen::VectorXd r = -gsc, d = r;
            double rr = r.squaredNorm();
            const double r0 = std::sqrt(rr);
            const double tol =
                r0 * std::min(0.25, std::sqrt(r0));
            bool boundary = false;
            for (int it = 0;
                 it < 400 && std::sqrt(rr) > tol && hessian_budget > 0;
                 ++it) {
                const Eigen::VectorXd hd = hmul(d);
                const double dhd = d.dot(hd);
                double alpha =
                    dhd > 0.0 ? rr / dhd
                              : std::numeric_limits<double>::infinity();
                const double ss = sol.squaredNorm(), sd = sol.dot(d),
                             dd = d.squaredNorm();
                const double disc = sd * sd + dd * (radius * radius - ss);
                const double abound =
                    (-sd + std::sqrt(std::max(disc, 0.0))) /
                    std::max(dd, 1e-300);
                if (alpha >= abound) {
                    sol += abound * d;
                    boundary = true;
                    break;
                }
                sol += alpha * d;
                r -= alpha * hd;
                const double rr2 = r.squaredNorm();
                d = r + (rr2 / rr) * d;
                rr = rr2;
            }
            const double pred =
                -(gsc.dot(sol) + 0.5 * sol.dot(hmul(sol)));
            const Eigen::VectorXd xt =
                *x + dinv_sqrt.cwiseProduct(sol);
            const double ft = tp_objective(xt, ops, w, wtot, gs, nullptr);
            const double rho = pred > 0.0 ? (f - ft) / pred : -1.0;
            const double slen = sol.norm();
            if (ft < f) {
                const double drop = f - ft;
                *x = xt;
                f = ft;
                accepted = true;
                if (rho > 0.75 && boundary)
                    radius = std::min(radius * 2.0, 1e4);
                else if (rho < 0.25)
                    radius = std::max(slen * 0.25, 1e-8);
                if (drop < 1e-13 * (std::abs(f) + 1.0)) {
                    ++flat;
                } else {
                    flat = 0;
                }
            } else {
                radius = std::max(slen * 0.25, 1e-8);
                if (radius <= 1e-8) break;
            }
        }
        if (std::getenv("GK_LM_TRACE"))
            std::fprintf(stderr,
                         "tr step %d m %ld f %.10f radius %.3g acc %d flat %d "
                         "ginf %.3g\n",
                         step, m, f, radius, accepted ? 1 : 0, flat,
                         g.lpNorm<Eigen::Infinity>());
        if (!accepted || flat >= 3) {
            if (settled) *settled = true;
            break;
        }
        tp_objective(*x, ops, w, wtot, gs, &g);
    }
    tp_objective(*x, ops, w, wtot, gs, nullptr);
    return f;
}

// ------------------------------ quasi-Newton ---------------------------------

struct MinimizeOptions {
    int max_iterations = 1500;
    double grad_tol = 1e-8;
    double f_tol = 1e-15;
    int memory = 12;
    double armijo = 1e-4;
    int max_backtracks = 60;
};

struct MinimizeResult {
    Eigen::VectorXd x;
    double f = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<double> history;
};

template <class F>
MinimizeResult minimize_lbfgs(F&& fg, Eigen::VectorXd x0,
                              const MinimizeOptions& opt) {
    MinimizeResult res;
    res.x = std::move(x0);
    const auto n = res.x.size();
    Eigen::VectorXd g(n), gnew(n), xnew(n), dir(n);
    double f = fg(res.x, g);
    res.history.push_back(f);
    std::deque<Eigen::VectorXd> svec, yvec;
    std::deque<double> rho;
    int flat = 0;
    while (static_cast<int>(res.history.size()) - 1 < opt.max_iterations) {
        if (g.lpNorm<Eigen::Infinity>() < opt.grad_tol) {
            res.converged = true;
            break;
        }
        dir = -g;
        if (!svec.empty()) {
            std::vector<double> alpha(svec.size());
            for (int i = static_cast<int>(svec.size()) - 1; i >= 0; --i) {
                alpha[i] = rho[i] * svec[i].dot(dir);
                dir -= alpha[i] * yvec[i];
            }
            dir *= svec.back().dot(yvec.back()) / yvec.back().squaredNorm();
            for (std::size_t i = 0; i < svec.size(); ++i) {
                const double beta = rho[i] * yvec[i].dot(dir);
                dir += (alpha[i] - beta) * svec[i];
            }
        }
        double slope = g.dot(dir);
        if (slope >= 0.0) {
            dir = -g;
            slope = g.dot(dir);
        }
        double step = 1.0, fnew = f;
        bool accepted = false;
        for (int bt = 0; bt < opt.max_backtracks; ++bt) {
            xnew = res.x + step * dir;
            fnew = fg(xnew, gnew);
            if (std::isfinite(fnew) &&
                fnew <= f + opt.armijo * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            res.converged = g.lpNorm<Eigen::Infinity>() < 10.0 * opt.grad_tol;
            break;
        }
        const Eigen::VectorXd s = xnew - res.x;
        const Eigen::VectorXd y = gnew - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            svec.push_back(s);
            yvec.push_back(y);
            rho.push_back(1.0 / sy);
            if (static_cast<int>(svec.size()) > opt.memory) {
                svec.pop_front();
                yvec.pop_front();
                rho.pop_front();
            }
        }
        const double drop = f - fnew;
        res.x.swap(xnew);
        g.swap(gnew);
        f = fnew;
        res.history.push_back(f);
        if (drop < opt.f_tol * (std::abs(f) + 1.0)) {
            ++flat;
            if (flat >= 3 &&
                g.lpNorm<Eigen::Infinity>() < 1e3 * opt.grad_tol) {
                res.converged = true;
                break;
            }
            if (flat >= 12) break;
        } else {
            flat = 0;
        }
    }
    if (!res.converged && g.lpNorm<Eigen::Infinity>() < opt.grad_tol)
        res.converged = true;
    res.f = f;
    res.iterations = static_cast<int>(res.history.size()) - 1;
    return res;
}

}  // namespace detail

// ------------------------------ likelihood fit -------------------------------

struct MleOptions {
    int max_iterations = 1500;
    double grad_tol = 1e-8;
    double init_ridge = 1e-4;
    const GateSet* initial = nullptr;  // default: ideal targets
    bool tp_only = false;  // drop the CP cone; used for chi^2-calibrated fits
};

struct MleResult {
    GateSet estimate;
    bool converged = false;
    int iterations = 0;
    double log_likelihood = 0.0;      // natural log, unnormalized
    double max_log_likelihood = 0.0;  // saturated model
    double two_delta_ll = 0.0;
    double tp_violation = 0.0;   // max |row0 - e1| over gates, pre-projection
    double cp_min_eig = 0.0;     // min Choi eigenvalue over reported gates
    double effect_min_eig = 0.0;
    bool cptp_ok = false;
    std::vector<double> objective_history;  // monotone nonincreasing
};

// Maximum-likelihood fit over real-valued outcome weights; counts are the
// integer case, infinite-shot fits pass exact probabilities.
inline MleResult mle_fit_weights(
    const std::vector<std::array<double, 4>>& weights, const GstDesign& d,
    const MleOptions& opt = {}) {
    if (weights.size() != d.circuits.size())
        throw std::invalid_argument(
            "mle_fit: one weight record per design circuit required");
    double wtot = 0.0, llmax = 0.0;
    for (const auto& w : weights) {
        const double n = w[0] + w[1] + w[2] + w[3];
        if (n <= 0.0)
            throw std::invalid_argument("mle_fit: zero-shot circuit");
        wtot += n;
        for (double v : w) {
            if (v < 0.0)
                throw std::invalid_argument("mle_fit: negative weight");
            if (v > 0.0) llmax += v * std::log(v / n);
        }
    }
    std::vector<std::vector<int>> ops(d.circuits.size());
    for (std::size_t i = 0; i < d.circuits.size(); ++i) {
        ops[i].reserve(d.circuits[i].ops.size());
        for (const GateOp& op : d.circuits[i].ops) {
            const int g = gate_index(op);
            if (g < 0)
                throw std::invalid_argument(
                    "mle_fit: operation outside the estimated gate set: " +
                    op_to_string(op));
            ops[i].push_back(g);
        }
    }

    const GateSet start = opt.initial ? *opt.initial : target_gateset();
    detail::MinimizeOptions mopt;
    mopt.max_iterations = opt.max_iterations;
    mopt.grad_tol = opt.grad_tol;
    detail::MinimizeResult min;
    GateSet est;
    if (opt.tp_only) {
        // unconstrained iterations are cheap and the chi^2 reference needs a
        // tight optimum: alternate deep quasi-Newton sweeps with the exact
        // second-order polish until a cycle stops paying
        mopt.max_iterations = std::max(opt.max_iterations, 20000);
        mopt.memory = 30;
        const auto objective = [&](const Eigen::VectorXd& x,
                                   Eigen::VectorXd& grad) {
            return detail::tp_objective(x, ops, weights, wtot, &est, &grad);
        };
        min = detail::minimize_lbfgs(objective, detail::encode_tp(start),
                                     mopt);
        bool settled = false;
        double fp = detail::tp_polish(&min.x, ops, weights, wtot, 10, &est,
                                      &settled);
        min.f = std::min(min.f, fp);
        mopt.max_iterations = 8000;
        for (int cycle = 0; cycle < 3; ++cycle) {
            detail::MinimizeResult again =
                detail::minimize_lbfgs(objective, min.x, mopt);
            min.x = again.x;
            min.iterations += again.iterations;
            fp = detail::tp_polish(&min.x, ops, weights, wtot, 10, &est,
                                   &settled);
            const double fnew = std::min(again.f, fp);
            const double gain = min.f - fnew;
            min.f = std::min(min.f, fnew);
            if (gain < 1e-9) break;
        }
        min.history.push_back(min.f);
        min.converged = min.converged || settled;
        detail::decode_tp(min.x, &est);
    } else {
        detail::ModelEval ev;
        const auto objective = [&](const Eigen::VectorXd& x,
                                   Eigen::VectorXd& grad) {
            return detail::model_objective(x, ops, weights, wtot, &ev,
                                           &grad);
        };
        min = detail::minimize_lbfgs(
            objective, detail::params_from_gateset(start, opt.init_ridge),
            mopt);
        detail::decode_params(min.x, &ev);
        est = ev.gs;
    }

    MleResult res;
    res.estimate = est;
    res.converged = min.converged;
    res.iterations = min.iterations;
    res.objective_history = std::move(min.history);
    double nll = 0.0;
    for (std::size_t c = 0; c < d.circuits.size(); ++c) {
        const auto p = detail::raw_probs(est, d.circuits[c]);
        for (int k = 0; k < 4; ++k)
            if (weights[c][k] > 0.0)
                nll -= weights[c][k] *
                       std::log(std::max(p[k], detail::kMinProb));
    }
    res.log_likelihood = -nll;
    res.max_log_likelihood = llmax;
    res.two_delta_ll = 2.0 * (llmax - res.log_likelihood);

    RVec16 e1 = RVec16::Zero();
    e1(0) = 1.0;
    for (int g = 0; g < kNumGates; ++g)
        res.tp_violation = std::max(
            res.tp_violation,
            (est.gates[g].row(0).transpose() - e1)
                .lpNorm<Eigen::Infinity>());
    res.cp_min_eig = std::numeric_limits<double>::infinity();
    for (int g = 0; g < kNumGates; ++g) {
        const Eigen::SelfAdjointEigenSolver<Mat16> es(
            choi_from_ptm(est.gates[g]));
        res.cp_min_eig = std::min(res.cp_min_eig,
                                  es.eigenvalues().minCoeff());
    }
    res.effect_min_eig = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4; ++k) {
        Mat4 em = Mat4::Zero();
        for (int j = 0; j < 16; ++j)
            em += est.effects[k](j) * pauli16()[j];
        const Eigen::SelfAdjointEigenSolver<Mat4> es(em);
        res.effect_min_eig =
            std::min(res.effect_min_eig, es.eigenvalues().minCoeff());
    }
    res.cptp_ok = res.tp_violation < 1e-8 && res.cp_min_eig > -1e-8 &&
                  res.effect_min_eig > -1e-8;
    return res;
}

inline MleResult mle_fit(const CountDataset& data, const GstDesign& d,
                         const MleOptions& opt = {}) {
    std::map<std::string, const CountRecord*> by_text;
    for (const CountRecord& rec : data.records)
        by_text.emplace(canonical_circuit(rec.circuit), &rec);
    std::vector<std::array<double, 4>> weights;
    weights.reserve(d.texts.size());
    for (const std::string& text : d.texts) {
        const auto it = by_text.find(text);
        if (it == by_text.end())
            throw std::invalid_argument("mle_fit: missing circuit \"" + text +
                                        "\"");
        std::array<double, 4> w{};
        for (int k = 0; k < 4; ++k)
            w[k] = static_cast<double>(it->second->counts[k]);
        weights.push_back(w);
    }
    return mle_fit_weights(weights, d, opt);
}

// ---------------------------------- gauge -----------------------------------

// Conjugate the gate set by an invertible gauge with first row e1 (so TP form
// and outcome completeness are preserved).  Predictions are unchanged.
inline GateSet apply_gauge(const GateSet& gs, const Ptm& m) {
    const Eigen::JacobiSVD<Ptm> svd(m);
    const double smin = svd.singularValues()(15);
    const double smax = svd.singularValues()(0);
    if (!(smin > 0.0) || smax / smin > 1e6) {
        std::ostringstream msg;
        msg << "apply_gauge: gauge matrix condition number "
            << (smin > 0.0 ? smax / smin
                           : std::numeric_limits<double>::infinity())
            << " exceeds 1e6";
        throw std::invalid_argument(msg.str());
    }
    const Ptm inv = m.inverse();
    GateSet out;
    for (int g = 0; g < kNumGates; ++g) out.gates[g] = m * gs.gates[g] * inv;
    out.rho = m * gs.rho;
    for (int k = 0; k < 4; ++k)
        out.effects[k] = inv.transpose() * gs.effects[k];
    return out;
}

struct GaugeOptions {
    double spam_weight = 0.1;
    int max_iterations = 3000;
    double grad_tol = 1e-12;
};

struct GaugeResult {
    GateSet estimate;
    Ptm m = Ptm::Identity();
    double objective = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Pick the gauge that brings the estimate closest to the target in weighted
// Frobenius distance over gates and SPAM.
inline GaugeResult gauge_optimize(const GateSet& gs, const GateSet& target,
                                  const GaugeOptions& opt = {}) {
    const double ws = opt.spam_weight;
    const auto objective = [&](const Eigen::VectorXd& x,
                               Eigen::VectorXd& grad) {
        Ptm m = Ptm::Zero();
        m(0, 0) = 1.0;
        for (int r = 1; r < 16; ++r)
            for (int c = 0; c < 16; ++c) m(r, c) = x((r - 1) * 16 + c);
        const Ptm k = m.partialPivLu().inverse();
        if (!k.allFinite()) {
            grad.setZero();
            return std::numeric_limits<double>::infinity();
        }
        double f = 0.0;
        RMat16 gm = RMat16::Zero();
        for (int g = 0; g < kNumGates; ++g) {
            const Ptm gk = gs.gates[g] * k;
            const Ptm b = m * gk;
            const Ptm delta = b - target.gates[g];
            f += delta.squaredNorm();
            gm += 2.0 * (delta * gk.transpose() -
                         b.transpose() * delta * k.transpose());
        }
        const RVec16 rdiff = m * gs.rho - target.rho;
        f += ws * rdiff.squaredNorm();
        gm += 2.0 * ws * rdiff * gs.rho.transpose();
        for (int e = 0; e < 4; ++e) {
            const RVec16 ek = k.transpose() * gs.effects[e];
            const RVec16 ediff = ek - target.effects[e];
            f += ws * ediff.squaredNorm();
            gm -= 2.0 * ws * ek * (k * ediff).transpose();
        }
        for (int r = 1; r < 16; ++r)
            for (int c = 0; c < 16; ++c) grad((r - 1) * 16 + c) = gm(r, c);
        return f;
    };

    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(240);
    for (int r = 1; r < 16; ++r) x0((r - 1) * 16 + r) = 1.0;
    detail::MinimizeOptions mopt;
    mopt.max_iterations = opt.max_iterations;
    mopt.grad_tol = opt.grad_tol;
    mopt.f_tol = 0.0;
    const detail::MinimizeResult min =
        detail::minimize_lbfgs(objective, std::move(x0), mopt);

    GaugeResult res;
    res.m = Ptm::Zero();
    res.m(0, 0) = 1.0;
    for (int r = 1; r < 16; ++r)
        for (int c = 0; c < 16; ++c) res.m(r, c) = min.x((r - 1) * 16 + c);
    res.estimate = apply_gauge(gs, res.m);
    res.objective = min.f;
    res.converged = min.converged;
    res.iterations = min.iterations;
    return res;
}

// ------------------------------ goodness of fit ------------------------------

struct GofRow {
    int length = 0;
    long circuits = 0;
    double statistic = 0.0;  // cumulative 2*Delta(log L)
    double dof = 0.0;
    double nsigma = 0.0;
};

struct GofReport {
    std::vector<GofRow> rows;
    int nongauge_params = 0;
};

// Score a fixed estimate against data, cumulatively per base length.
inline GofReport gof_table_weights(
    const GateSet& gs, const std::vector<std::array<double, 4>>& weights,
    const GstDesign& d, int nongauge_params = -1) {
    if (weights.size() != d.circuits.size())
        throw std::invalid_argument(
            "gof_table: one weight record per design circuit required");
    GofReport rep;
    rep.nongauge_params = nongauge_params >= 0
                              ? nongauge_params
                              : param_counts().gauge_reduced;
    struct Acc {
        double stat = 0.0;
        long circuits = 0;
        long dims = 0;
    };
    std::map<int, Acc> by_length;
    for (std::size_t c = 0; c < d.entries.size(); ++c) {
        const auto p = detail::raw_probs(gs, d.circuits[c]);
        const double n =
            weights[c][0] + weights[c][1] + weights[c][2] + weights[c][3];
        double stat = 0.0;
        int populated = 0;
        for (int k = 0; k < 4; ++k) {
            if (weights[c][k] <= 0.0) continue;
            ++populated;
            const double model = std::max(p[k], detail::kMinProb) * n;
            stat += 2.0 * weights[c][k] * std::log(weights[c][k] / model);
        }
        Acc& acc = by_length[d.entries[c].base_length];
        acc.stat += stat;
        acc.circuits += 1;
        acc.dims += populated - 1;
    }
    Acc cum;
    for (const int length : d.lengths) {
        const auto it = by_length.find(length);
        if (it != by_length.end()) {
            cum.stat += it->second.stat;
            cum.circuits += it->second.circuits;
            cum.dims += it->second.dims;
        }
        GofRow row;
        row.length = length;
        row.circuits = cum.circuits;
        row.statistic = cum.stat;
        // zero-count outcomes contribute nothing to the statistic, so only
        // populated cells count as data dimensions
        row.dof = std::max(
            static_cast<double>(cum.dims) - rep.nongauge_params, 1.0);
        row.nsigma = (row.statistic - row.dof) / std::sqrt(2.0 * row.dof);
        rep.rows.push_back(row);
    }
    return rep;
}

inline GofReport gof_table(const GateSet& gs, const CountDataset& data,
                           const GstDesign& d, int nongauge_params = -1) {
    std::map<std::string, const CountRecord*> by_text;
    for (const CountRecord& rec : data.records)
        by_text.emplace(canonical_circuit(rec.circuit), &rec);
    std::vector<std::array<double, 4>> weights;
    weights.reserve(d.texts.size());
    for (const std::string& text : d.texts) {
        const auto it = by_text.find(text);
        if (it == by_text.end())
            throw std::invalid_argument("gof_table: missing circuit \"" +
                                        text + "\"");
        std::array<double, 4> w{};
        for (int k = 0; k < 4; ++k)
            w[k] = static_cast<double>(it->second->counts[k]);
        weights.push_back(w);
    }
    return gof_table_weights(gs, weights, d, nongauge_params);
}

// Wilks-style per-length table: refit the model to the data up to each
// length and score that fit on the same truncation, so each row compares a
// maximized likelihood with its own dof.  Stage fits drop the CP cone: the
// chi-squared reference assumes an interior optimum, which the cone cannot
// guarantee.  Every stage starts from the ideal targets; chaining stages
// instead can strand the deeper fits in the shallow fits' overfitted basins.
inline GofReport goodness_of_fit(const CountDataset& data, const GstDesign& d,
                                 const MleOptions& opt = {},
                                 int nongauge_params = -1) {
    GofReport rep;
    rep.nongauge_params = nongauge_params >= 0
                              ? nongauge_params
                              : param_counts().gauge_reduced;
    MleOptions stage_opt = opt;
    stage_opt.tp_only = true;
    for (const int length : d.lengths) {
        const GstDesign sub = design_up_to(d, length);
        const MleResult fit = mle_fit(data, sub, stage_opt);
        const GofReport stage =
            gof_table(fit.estimate, data, sub, rep.nongauge_params);
        rep.rows.push_back(stage.rows.back());
    }
    return rep;
}

// --------------------------------- report -----------------------------------

struct GateReport {
    std::string name;
    double avg_infidelity = 0.0;
    double diamond = 0.0;
    double generator_norm = 0.0;
    double coherent_norm = 0.0;
    double stochastic_norm = 0.0;
    double coherent_fraction = 0.0;
};

struct GstReport {
    std::array<GateReport, kNumGates> gates;
    double rho_infidelity = 0.0;
    double effect_deviation = 0.0;
    ParamCounts params;
};

inline GstReport report(const GateSet& est, const GateSet& target) {
    GstReport rep;
    rep.params = param_counts();
    for (int g = 0; g < kNumGates; ++g) {
        GateReport& r = rep.gates[g];
        r.name = op_to_string(gate_ops()[g]);
        r.avg_infidelity = average_infidelity(est.gates[g], target.gates[g]);
        r.diamond = diamond_distance(est.gates[g], target.gates[g]);
        const ErrorGenerator l =
            error_generator(est.gates[g], target.gates[g]);
        const GeneratorSplit split = split_generator(l);
        r.generator_norm = l.norm();
        r.coherent_norm = split.coherent_norm;
        r.stochastic_norm = split.stochastic_norm;
        const double total = r.coherent_norm + r.stochastic_norm;
        r.coherent_fraction = total > 0.0 ? r.coherent_norm / total : 0.0;
    }
    const Mat4 re = density_from_pauli(est.rho);
    const Mat4 rt = density_from_pauli(target.rho);
    rep.rho_infidelity = 1.0 - (re * rt).trace().real();
    for (int k = 0; k < 4; ++k)
        rep.effect_deviation =
            std::max(rep.effect_deviation,
                     (est.effects[k] - target.effects[k]).norm());
    return rep;
}

// ----------------------------- germ amplification ----------------------------

// First-order sensitivity of the germ maps: the rank of the Jacobian of all
// germ products with respect to the TP gate parameters, with the gauge
// directions projected out.  A complete germ set leaves no blind non-gauge
// direction.
struct AmplificationReport {
    int rank = 0;
    int gauge_rank = 0;
    int gate_params = 0;
    bool complete = false;
};

inline AmplificationReport amplification_report(
    const std::vector<Circuit>& germs, const GateSet& target) {
    constexpr int kPer = 240;  // 15 rows x 16 columns per TP gate
    const int total = kNumGates * kPer;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(total, total);
    for (const Circuit& germ : germs) {
        const int m = static_cast<int>(germ.ops.size());
        std::vector<int> idx(m);
        for (int t = 0; t < m; ++t) {
            idx[t] = gate_index(germ.ops[t]);
            if (idx[t] < 0)
                throw std::invalid_argument(
                    "amplification_report: operation outside the estimated "
                    "gate set: " +
                    op_to_string(germ.ops[t]));
        }
        std::vector<Ptm> before(m), after(m);
        Ptm acc = Ptm::Identity();
        for (int t = 0; t < m; ++t) {
            before[t] = acc;
            acc = target.gates[idx[t]] * acc;
        }
        acc = Ptm::Identity();
        for (int t = m - 1; t >= 0; --t) {
            after[t] = acc;
            acc = acc * target.gates[idx[t]];
        }
        for (int o1 = 0; o1 < m; ++o1)
            for (int o2 = 0; o2 < m; ++o2) {
                const RMat16 xa = after[o1].transpose() * after[o2];
                const RMat16 yb = before[o1] * before[o2].transpose();
                const int r0 = idx[o1] * kPer, c0 = idx[o2] * kPer;
                for (int a1 = 1; a1 < 16; ++a1)
                    for (int a2 = 1; a2 < 16; ++a2)
                        for (int b1 = 0; b1 < 16; ++b1)
                            for (int b2 = 0; b2 < 16; ++b2)
                                gram(r0 + (a1 - 1) * 16 + b1,
                                     c0 + (a2 - 1) * 16 + b2) +=
                                    xa(a1, a2) * yb(b1, b2);
            }
    }

    Eigen::MatrixXd gauge(240, total);
    for (int a = 1; a < 16; ++a)
        for (int b = 0; b < 16; ++b) {
            const int row = (a - 1) * 16 + b;
            for (int g = 0; g < kNumGates; ++g) {
                RMat16 v = RMat16::Zero();
                v.row(a) = target.gates[g].row(b);
                v.col(b) -= target.gates[g].col(a);
                for (int a1 = 1; a1 < 16; ++a1)
                    for (int b1 = 0; b1 < 16; ++b1)
                        gauge(row, g * kPer + (a1 - 1) * 16 + b1) = v(a1, b1);
            }
        }
    const Eigen::BDCSVD<Eigen::MatrixXd> gsvd(gauge,
                                              Eigen::ComputeThinV);
    const auto& gsv = gsvd.singularValues();
    const double gtol = gsv(0) * 1e-9;
    int grank = 0;
    for (int i = 0; i < gsv.size(); ++i)
        if (gsv(i) > gtol) ++grank;
    const Eigen::MatrixXd q = gsvd.matrixV().leftCols(grank);
    Eigen::MatrixXd proj = gram;
    const Eigen::MatrixXd qg = q.transpose() * gram;
    proj -= q * qg;
    proj -= qg.transpose() * q.transpose();
    proj += q * (qg * q) * q.transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (proj + proj.transpose()));
    const double tol = es.eigenvalues().maxCoeff() * 1e-9;
    AmplificationReport rep;
    rep.gate_params = total;
    rep.gauge_rank = grank;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) > tol) ++rep.rank;
    rep.complete = rep.rank == total - grank;
    return rep;
}

}  // namespace gst
}  // namespace gatekit

#endif  // GATEKIT_GST_HPP_
