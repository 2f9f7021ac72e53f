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

#ifndef GATEKIT_RBM_HPP_
#define GATEKIT_RBM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gatekit/circuit.hpp"
#include "gatekit/clifford.hpp"
#include "gatekit/dataset.hpp"
#include "gatekit/rng.hpp"

namespace gatekit {
namespace rbm {

// ---- design and sequence records ----

struct RbmDesign {
    std::vector<int> lengths;
    int randomizations = 100;
    long shots = 100;
    bool interleaved = true;
    std::uint64_t seed = 1;

    static RbmDesign defaults() {
        RbmDesign d;
        for (int l = 1; l <= 60; ++l) d.lengths.push_back(l);
        return d;
    }

    void validate() const {
        if (lengths.empty())
            throw std::invalid_argument("RbmDesign: no sequence lengths");
        for (int l : lengths)
            if (l < 1)
                throw std::invalid_argument(
                    "RbmDesign: lengths must be positive");
        if (randomizations < 1)
            throw std::invalid_argument(
                "RbmDesign: randomizations must be positive");
        if (shots < 1)
            throw std::invalid_argument("RbmDesign: shots must be positive");
    }
};

struct RbmSequence {
    int length = 0;
    int randomization = 0;
    bool interleaved = false;
    std::vector<int> cliffords;
    int inverse = 0;
    std::uint8_t pauli_frame = 0;
    int expected_outcome = 0;
    Circuit circuit;

    std::string text() const { return circuit_to_string(circuit); }
};

// ---- sequence generation ----

namespace detail {

// composes the random word, appends the exact inverse element and a random
// Pauli frame, and reads the deterministic outcome off the final tableau
inline RbmSequence build_sequence(const std::vector<int>& cliffords,
                                  std::uint8_t frame_bits, bool interleaved) {
    const CliffordGroup& group = CliffordGroup::instance();
    RbmSequence seq;
    seq.length = static_cast<int>(cliffords.size());
    seq.interleaved = interleaved;
    seq.cliffords = cliffords;
    seq.pauli_frame = frame_bits;

    const Tableau gzz = group.op_tableau({OpKind::Gzz, 0});
    Tableau net = Tableau::identity();
    for (int idx : cliffords) {
        for (const GateOp& op : group.word(idx)) seq.circuit.ops.push_back(op);
        net = tableau_compose(group.element(idx), net);
        if (interleaved) {
            seq.circuit.ops.push_back({OpKind::Gzz, 0});
            net = tableau_compose(gzz, net);
        }
    }
    seq.inverse = group.index_of(tableau_invert(net));
    for (const GateOp& op : group.word(seq.inverse))
        seq.circuit.ops.push_back(op);
    net = tableau_compose(group.element(seq.inverse), net);

    const Tableau frame = pauli_tableau(frame_bits);
    const int frame_idx = group.index_of(frame);
    for (const GateOp& op : group.word(frame_idx))
        seq.circuit.ops.push_back(op);
    net = tableau_compose(frame, net);

    // |00> is stabilized by +Z1, +Z2; a sign flip on Z_q flips that qubit
    static constexpr std::uint8_t kZBits[2] = {2, 8};
    int outcome = 0;
    for (int q = 0; q < 2; ++q) {
        const SignedPauli img = tableau_apply(net, {kZBits[q], 0});
        if (img.bits != kZBits[q])
            throw std::logic_error("build_sequence: net word is not a Pauli");
        if (img.phase == 2) outcome |= 2 >> q;
    }
    seq.expected_outcome = outcome;
    return seq;
}

}  // namespace detail

// Reference/interleaved twins share the Clifford draws and the Pauli frame;
// emitted in design order, reference first within each randomization.
inline std::vector<RbmSequence> generate(const RbmDesign& design) {
    design.validate();
    const CliffordGroup& group = CliffordGroup::instance();
    std::vector<RbmSequence> out;
    for (int length : design.lengths) {
        for (int k = 0; k < design.randomizations; ++k) {
            Rng rng(derive_seed(design.seed, "rbm",
                                (static_cast<std::uint64_t>(length) << 20) |
                                    static_cast<std::uint64_t>(k)));
            std::vector<int> cliffords(static_cast<size_t>(length));
            for (int& c : cliffords) c = group.sample(rng);
            const auto frame = static_cast<std::uint8_t>(rng.below(16));

            RbmSequence ref = detail::build_sequence(cliffords, frame, false);
            ref.randomization = k;
            out.push_back(std::move(ref));
            if (design.interleaved) {
                RbmSequence ilv =
                    detail::build_sequence(cliffords, frame, true);
                ilv.randomization = k;
                out.push_back(std::move(ilv));
            }
        }
    }
    return out;
}

inline std::vector<std::string> circuit_texts(
    const std::vector<RbmSequence>& sequences) {
    std::vector<std::string> texts;
    texts.reserve(sequences.size());
    for (const auto& s : sequences) texts.push_back(s.text());
    return texts;
}

// ---- fidelity extraction ----

struct FidelityPoint {
    int length = 0;
    double mean = 0.0;
    double sem = 0.0;
    int sequences = 0;
    long shots = 0;
};

struct FidelitySeries {
    std::vector<FidelityPoint> reference;
    std::vector<FidelityPoint> interleaved;
};

namespace detail {

inline std::vector<FidelityPoint> aggregate(
    const std::map<int, std::vector<std::pair<double, long>>>& by_length) {
    std::vector<FidelityPoint> points;
    for (const auto& [length, fids] : by_length) {
        FidelityPoint pt;
        pt.length = length;
        pt.sequences = static_cast<int>(fids.size());
        double sum = 0.0;
        for (const auto& [f, n] : fids) {
            sum += f;
            pt.shots += n;
        }
        pt.mean = sum / pt.sequences;
        if (pt.sequences > 1) {
            double ss = 0.0;
            for (const auto& [f, n] : fids)
                ss += (f - pt.mean) * (f - pt.mean);
            pt.sem = std::sqrt(ss / (pt.sequences * (pt.sequences - 1.0)));
        }
        points.push_back(pt);
    }
    return points;
}

}  // namespace detail

// Scores each record as the fraction of shots landing in the sequence's
// expected basis state.  Records are matched to regenerated sequences by
// circuit text; unmatched sequences are reported by identity.
inline FidelitySeries sequence_fidelity(const CountDataset& dataset,
                                        const RbmDesign& design) {
    const std::vector<RbmSequence> sequences = generate(design);
    std::map<std::string, std::deque<size_t>> by_text;
    for (size_t i = 0; i < dataset.records.size(); ++i)
        by_text[dataset.records[i].circuit].push_back(i);

    std::map<int, std::vector<std::pair<double, long>>> ref, ilv;
    for (const RbmSequence& seq : sequences) {
        const std::string text = seq.text();
        auto it = by_text.find(text);
        if (it == by_text.end() || it->second.empty())
            throw std::invalid_argument(
                "sequence_fidelity: dataset is missing circuit \"" + text +
                "\"");
        const CountRecord& rec = dataset.records[it->second.front()];
        it->second.pop_front();
        const long n = rec.shots();
        if (n <= 0)
            throw std::invalid_argument(
                "sequence_fidelity: zero shots for circuit \"" + text + "\"");
        const double f =
            static_cast<double>(rec.counts[seq.expected_outcome]) / n;
        (seq.interleaved ? ilv : ref)[seq.length].push_back({f, n});
    }

    FidelitySeries series;
    series.reference = detail::aggregate(ref);
    series.interleaved = detail::aggregate(ilv);
    return series;
}

// ---- decay fitting ----

struct DecayFit {
    double a = 0.0;
    double b = 0.0;
    double p = 0.0;
    double epsilon = 0.0;
    double sigma = 0.0;
    int max_length = 0;
    bool weighted = true;
    int iterations = 0;
};

// exact (A, p) through two points at a known floor, the algebraic special case
inline std::pair<double, double> two_point_decay(int l1, double f1, int l2,
                                                 double f2, double b) {
    if (l1 == l2)
        throw std::invalid_argument("two_point_decay: equal lengths");
    const double y1 = f1 - b, y2 = f2 - b;
    if (y1 <= 0.0 || y2 <= 0.0)
        throw std::invalid_argument("two_point_decay: points at or below floor");
    const double p = std::pow(y1 / y2, 1.0 / (l1 - l2));
    const double a = y1 / std::pow(p, l1);
    return {a, p};
}

namespace detail {

struct FitParams {
    double a, b, p;
};

inline double fit_residual(const FitParams& q,
                           const std::vector<FidelityPoint>& pts,
                           const std::vector<double>& w) {
    double chi2 = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
        const double r =
            pts[i].mean - (q.a * std::pow(q.p, pts[i].length) + q.b);
        chi2 += w[i] * r * r;
    }
    return chi2;
}

}  // namespace detail

// Weighted Levenberg-Marquardt fit of F(L) = A p^L + B with B kept in
// [0.2, 0.3]; weights are 1/sem^2 with a binomial floor on the sem.
inline DecayFit fit_decay(const std::vector<FidelityPoint>& points,
                          bool weighted = true) {
    std::vector<int> distinct;
    for (const auto& pt : points) distinct.push_back(pt.length);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()),
                   distinct.end());
    if (distinct.size() < 3)
        throw std::invalid_argument("fit_decay: need at least 3 lengths");

    std::vector<double> w(points.size(), 1.0);
    if (weighted) {
        for (size_t i = 0; i < points.size(); ++i) {
            double floor = 0.0;
            if (points[i].shots > 0)
                floor = 0.5 / std::sqrt(static_cast<double>(points[i].shots));
            const double sem = std::max(points[i].sem, floor);
            if (sem <= 0.0) {
                w.assign(points.size(), 1.0);
                break;
            }
            w[i] = 1.0 / (sem * sem);
        }
    }

    // log-linear seed above an assumed floor of 1/4
    detail::FitParams q{0.75, 0.25, 0.9};
    {
        double sl = 0.0, sy = 0.0, sll = 0.0, sly = 0.0;
        int n = 0;
        for (const auto& pt : points) {
            const double y = pt.mean - 0.25;
            if (y <= 1e-6) continue;
            const double ly = std::log(y);
            sl += pt.length;
            sy += ly;
            sll += static_cast<double>(pt.length) * pt.length;
            sly += pt.length * ly;
            ++n;
        }
        const double det = n * sll - sl * sl;
        if (n < 2 || std::abs(det) < 1e-12)
            throw std::runtime_error("fit_decay: decay is unidentifiable");
        const double slope = (n * sly - sl * sy) / det;
        const double icept = (sy * sll - sl * sly) / det;
        q.p = std::clamp(std::exp(slope), 1e-6, 1.0);
        q.a = std::clamp(std::exp(icept), 1e-6, 2.0);
    }

    double lambda = 1e-3;
    double chi2 = detail::fit_residual(q, points, w);
    int iter = 0;
    bool done = false;
    for (; iter < 200 && !done; ++iter) {
        double jtj[3][3] = {};
        double jtr[3] = {};
        for (size_t i = 0; i < points.size(); ++i) {
            const double l = points[i].length;
            const double pl = std::pow(q.p, l);
            const double r = points[i].mean - (q.a * pl + q.b);
            const double j[3] = {pl, 1.0, q.a * l * std::pow(q.p, l - 1.0)};
            for (int u = 0; u < 3; ++u) {
                jtr[u] += w[i] * j[u] * r;
                for (int v = 0; v < 3; ++v) jtj[u][v] += w[i] * j[u] * j[v];
            }
        }
        bool accepted = false;
        for (int damp = 0; damp < 12 && !accepted; ++damp) {
            double m[3][4];
            for (int u = 0; u < 3; ++u) {
                for (int v = 0; v < 3; ++v) m[u][v] = jtj[u][v];
                m[u][u] += lambda * (jtj[u][u] > 0.0 ? jtj[u][u] : 1.0);
                m[u][3] = jtr[u];
            }
            // gaussian elimination on the 3x3 normal system
            bool singular = false;
            for (int col = 0; col < 3; ++col) {
                int piv = col;
                for (int row = col + 1; row < 3; ++row)
                    if (std::abs(m[row][col]) > std::abs(m[piv][col]))
                        piv = row;
                if (std::abs(m[piv][col]) < 1e-14) {
                    singular = true;
                    break;
                }
                std::swap(m[col], m[piv]);
                for (int row = 0; row < 3; ++row) {
                    if (row == col) continue;
                    const double f = m[row][col] / m[col][col];
                    for (int v = col; v < 4; ++v) m[row][v] -= f * m[col][v];
                }
            }
            if (singular) {
                lambda *= 10.0;
                continue;
            }
            detail::FitParams trial{q.a + m[0][3] / m[0][0],
                                    q.b + m[1][3] / m[1][1],
                                    q.p + m[2][3] / m[2][2]};
            trial.b = std::clamp(trial.b, 0.2, 0.3);
            trial.p = std::clamp(trial.p, 1e-9, 1.0);
            const double trial_chi2 = detail::fit_residual(trial, points, w);
            if (trial_chi2 <= chi2) {
                const double gain = chi2 - trial_chi2;
                q = trial;
                chi2 = trial_chi2;
                lambda = std::max(lambda * 0.25, 1e-12);
                accepted = true;
                if (gain < 1e-15 * (1.0 + chi2)) done = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!accepted) break;
    }

    if (!(q.p > 0.0 && q.p <= 1.0))
        throw std::runtime_error("fit_decay: retention outside (0, 1]");
    if (std::abs(q.a) < 1e-4)
        throw std::runtime_error("fit_decay: decay is unidentifiable");

    DecayFit fit;
    fit.a = q.a;
    fit.b = q.b;
    fit.p = q.p;
    fit.epsilon = 0.75 * (1.0 - q.p);
    fit.max_length = distinct.back();
    fit.weighted = weighted;
    fit.iterations = iter;
    return fit;
}

// ---- interleaved-error algebra ----

// error of the interleaved gate from the two per-Clifford errors
inline double interleaved_error(double eps_ref, double eps_int, int n = 2) {
    if (n < 1 || n > 30)
        throw std::invalid_argument("interleaved_error: bad qubit count");
    const double alpha =
        static_cast<double>(1 << n) / (static_cast<double>(1 << n) - 1.0);
    if (eps_ref < 0.0 || eps_int < 0.0 || eps_ref >= 1.0 / alpha ||
        eps_int >= 1.0 / alpha)
        throw std::invalid_argument(
            "interleaved_error: errors outside [0, (2^n-1)/2^n)");
    const double den = 1.0 - alpha * eps_ref;
    if (den <= 0.0)
        throw std::invalid_argument("interleaved_error: degenerate reference");
    return (1.0 - (1.0 - alpha * eps_int) / den) / alpha;
}

// forward composition: per-Clifford error after interleaving a gate of
// error eps_gate into a reference of error eps_ref
inline double composed_error(double eps_ref, double eps_gate, int n = 2) {
    if (n < 1 || n > 30)
        throw std::invalid_argument("composed_error: bad qubit count");
    const double alpha =
        static_cast<double>(1 << n) / (static_cast<double>(1 << n) - 1.0);
    if (eps_ref < 0.0 || eps_gate < 0.0 || eps_ref >= 1.0 / alpha ||
        eps_gate >= 1.0 / alpha)
        throw std::invalid_argument(
            "composed_error: errors outside [0, (2^n-1)/2^n)");
    return (1.0 - (1.0 - alpha * eps_ref) * (1.0 - alpha * eps_gate)) / alpha;
}

// ---- parametric bootstrap ----

struct BootstrapResult {
    double sigma = 0.0;
    int resamples = 0;
    int excluded = 0;
    bool degenerate = false;
    std::vector<double> values;
};

namespace detail {

inline std::vector<FidelityPoint> resample_points(
    const std::vector<FidelityPoint>& points, const DecayFit& fit, Rng& rng) {
    std::vector<FidelityPoint> out;
    out.reserve(points.size());
    for (const auto& pt : points) {
        const double model =
            std::clamp(fit.a * std::pow(fit.p, pt.length) + fit.b, 0.0, 1.0);
        const int k = std::max(pt.sequences, 1);
        const long per_seq = std::max<long>(pt.shots / k, 1);
        std::vector<double> fids(static_cast<size_t>(k));
        for (double& f : fids)
            f = static_cast<double>(rng.binomial(
                    static_cast<std::uint64_t>(per_seq), model)) /
                static_cast<double>(per_seq);
        FidelityPoint rp;
        rp.length = pt.length;
        rp.sequences = k;
        rp.shots = per_seq * k;
        double sum = 0.0;
        for (double f : fids) sum += f;
        rp.mean = sum / k;
        if (k > 1) {
            double ss = 0.0;
            for (double f : fids) ss += (f - rp.mean) * (f - rp.mean);
            rp.sem = std::sqrt(ss / (k * (k - 1.0)));
        }
        out.push_back(rp);
    }
    return out;
}

inline double stddev(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (xs.size() - 1.0));
}

}  // namespace detail

// sigma of the per-Clifford error under count resampling from the fitted model
inline BootstrapResult bootstrap_sigma(const DecayFit& fit,
                                       const std::vector<FidelityPoint>& points,
                                       Rng& rng, int resamples = 200) {
    if (resamples < 1)
        throw std::invalid_argument("bootstrap_sigma: resamples must be >= 1");
    BootstrapResult res;
    res.resamples = resamples;
    for (int r = 0; r < resamples; ++r) {
        const auto pts = detail::resample_points(points, fit, rng);
        try {
            res.values.push_back(fit_decay(pts, fit.weighted).epsilon);
        } catch (const std::exception&) {
            ++res.excluded;
        }
    }
    res.degenerate = res.values.size() < 2;
    res.sigma = detail::stddev(res.values);
    return res;
}

// ---- end-to-end interleaved analysis ----

struct InterleavedResult {
    DecayFit reference;
    DecayFit interleaved;
    double eps_gate = 0.0;
    double sigma_gate = 0.0;
    int excluded = 0;
    bool degenerate = false;
};

// Fits both decays, extracts the gate error, and jointly bootstraps both
// series so the reported sigma includes the reference uncertainty.
inline InterleavedResult interleaved_analysis(const FidelitySeries& series,
                                              Rng& rng, int resamples = 200,
                                              bool weighted = true) {
    InterleavedResult res;
    res.reference = fit_decay(series.reference, weighted);
    res.interleaved = fit_decay(series.interleaved, weighted);
    res.eps_gate =
        interleaved_error(res.reference.epsilon, res.interleaved.epsilon);
    if (resamples < 1)
        throw std::invalid_argument(
            "interleaved_analysis: resamples must be >= 1");
    std::vector<double> values;
    for (int r = 0; r < resamples; ++r) {
        const auto ref_pts =
            detail::resample_points(series.reference, res.reference, rng);
        const auto ilv_pts =
            detail::resample_points(series.interleaved, res.interleaved, rng);
        try {
            const DecayFit fr = fit_decay(ref_pts, weighted);
            const DecayFit fi = fit_decay(ilv_pts, weighted);
            values.push_back(interleaved_error(fr.epsilon, fi.epsilon));
        } catch (const std::exception&) {
            ++res.excluded;
        }
    }
    res.degenerate = values.size() < 2;
    res.sigma_gate = detail::stddev(values);
    return res;
}

// ---- length-truncated refits ----

struct MaxlenPoint {
    int max_length = 0;
    double eps_gate = 0.0;
    double sigma = 0.0;
};

namespace detail {

inline std::vector<FidelityPoint> truncate(
    const std::vector<FidelityPoint>& points, int lmax) {
    std::vector<FidelityPoint> out;
    for (const auto& pt : points)
        if (pt.length <= lmax) out.push_back(pt);
    return out;
}

}  // namespace detail

// Refits the interleaved analysis using only lengths <= L_max; infeasible
// truncations (fewer than 3 surviving lengths) are skipped.
inline std::vector<MaxlenPoint> error_vs_maxlen(const FidelitySeries& series,
                                                const std::vector<int>& lmaxes,
                                                Rng& rng, int resamples = 200,
                                                bool weighted = true) {
    std::vector<MaxlenPoint> out;
    for (int lmax : lmaxes) {
        FidelitySeries cut;
        cut.reference = detail::truncate(series.reference, lmax);
        cut.interleaved = detail::truncate(series.interleaved, lmax);
        if (cut.reference.size() < 3 || cut.interleaved.size() < 3) continue;
        try {
            const InterleavedResult r =
                interleaved_analysis(cut, rng, resamples, weighted);
            out.push_back({lmax, r.eps_gate, r.sigma_gate});
        } catch (const std::exception&) {
        }
    }
    return out;
}

}  // namespace rbm
}  // namespace gatekit

#endif  // GATEKIT_RBM_HPP_
