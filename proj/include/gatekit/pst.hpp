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

#ifndef GATEKIT_PST_HPP_
#define GATEKIT_PST_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gatekit/backend.hpp"
#include "gatekit/dataset.hpp"

namespace gatekit {
namespace pst {

// ---- circuits ----

// The entangling gate bracketed by pi/2 pulses prepares the Bell state; the
// software Z on qubit 1 locks the analysis frame so the ideal parity follows
// sin(2 phi), and the calibration circuits prepare each basis state.
struct PstCircuits {
    std::string population = "Gyp:1 Gyp:2 Gzz Gyp:1 Gyp:2";
    std::string parity45 =
        "Gyp:1 Gyp:2 Gzz Gyp:1 Gyp:2 Gzp:1 Gzp:1 Ga45:1 Ga45:2";
    std::string parity135 =
        "Gyp:1 Gyp:2 Gzz Gyp:1 Gyp:2 Gzp:1 Gzp:1 Ga135:1 Ga135:2";
    std::array<std::string, 4> calibration = {
        "", "Gpi:2", "Gpi:1", "Gpi:1 Gpi:2"};
};

inline const PstCircuits& pst_circuits() {
    static const PstCircuits c;
    return c;
}

// ---- parity and fidelity assembly ----

inline double parity(const std::array<double, 4>& p) {
    const double sum = p[0] + p[1] + p[2] + p[3];
    if (std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument("parity: populations do not sum to 1");
    return p[0] + p[3] - p[1] - p[2];
}

struct BellEstimate {
    double p_even = 0.0;
    double coherence = 0.0;
    double fidelity = 0.0;
    bool clipped = false;
};

inline BellEstimate bell_fidelity(double p_even, double pi45, double pi135) {
    BellEstimate est;
    est.p_even = p_even;
    est.coherence = 0.5 * (pi45 - pi135);
    est.fidelity = 0.5 * p_even + 0.5 * est.coherence;
    if (est.fidelity < 0.0 || est.fidelity > 1.0) {
        est.fidelity = std::clamp(est.fidelity, 0.0, 1.0);
        est.clipped = true;
    }
    return est;
}

// ---- SPAM calibration ----

struct SpamCalibration {
    // column j holds the measured distribution when basis state j is prepared
    Eigen::Matrix4d confusion = Eigen::Matrix4d::Identity();
    std::array<long, 4> shots{0, 0, 0, 0};
    double eps_ca = 0.0;
    double eps_sr = 0.0;

    void validate() const {
        for (int j = 0; j < 4; ++j) {
            double col = 0.0;
            for (int i = 0; i < 4; ++i) {
                if (confusion(i, j) < 0.0)
                    throw std::invalid_argument(
                        "SpamCalibration: negative confusion entry");
                col += confusion(i, j);
            }
            if (std::abs(col - 1.0) > 1e-6)
                throw std::invalid_argument(
                    "SpamCalibration: column does not sum to 1");
            if (confusion(j, j) < 0.9)
                throw std::invalid_argument(
                    "SpamCalibration: diagonal below 0.9");
        }
    }
};

// mean per-species misassignment probabilities read off the confusion matrix
inline void fill_species_errors(SpamCalibration& cal) {
    double ca = 0.0, sr = 0.0;
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) {
            if (((i >> 1) & 1) != ((j >> 1) & 1)) ca += cal.confusion(i, j);
            if ((i & 1) != (j & 1)) sr += cal.confusion(i, j);
        }
    cal.eps_ca = ca / 4.0;
    cal.eps_sr = sr / 4.0;
}

inline SpamCalibration calibration_from_counts(
    const std::array<CountRecord, 4>& records) {
    SpamCalibration cal;
    for (int j = 0; j < 4; ++j) {
        const long n = records[j].shots();
        if (n <= 0)
            throw std::invalid_argument(
                "calibration_from_counts: zero shots for state " +
                std::to_string(j));
        cal.shots[j] = n;
        for (int i = 0; i < 4; ++i)
            cal.confusion(i, j) =
                static_cast<double>(records[j].counts[i]) / n;
    }
    cal.validate();
    fill_species_errors(cal);
    return cal;
}

// independent symmetric per-qubit misassignment, the default synthetic model
inline SpamCalibration synthetic_calibration(double eps_ca, double eps_sr,
                                             long shots = 0) {
    if (eps_ca < 0.0 || eps_ca >= 0.5 || eps_sr < 0.0 || eps_sr >= 0.5)
        throw std::invalid_argument(
            "synthetic_calibration: errors must be in [0, 0.5)");
    SpamCalibration cal;
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) {
            const double pca =
                (((i >> 1) ^ (j >> 1)) & 1) ? eps_ca : 1.0 - eps_ca;
            const double psr = ((i ^ j) & 1) ? eps_sr : 1.0 - eps_sr;
            cal.confusion(i, j) = pca * psr;
        }
    cal.shots = {shots, shots, shots, shots};
    cal.validate();
    fill_species_errors(cal);
    return cal;
}

// ---- correction ----

namespace detail {

inline double condition_number(const Eigen::Matrix4d& m) {
    const Eigen::JacobiSVD<Eigen::Matrix4d> svd(m);
    const auto& s = svd.singularValues();
    if (s(3) <= 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / s(3);
}

// Euclidean projection onto the probability simplex
inline std::array<double, 4> project_simplex(const std::array<double, 4>& v) {
    std::array<double, 4> u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0.0, theta = 0.0;
    for (int j = 0; j < 4; ++j) {
        cum += u[j];
        const double t = (cum - 1.0) / (j + 1);
        if (u[j] - t > 0.0) theta = t;
    }
    std::array<double, 4> out;
    for (int i = 0; i < 4; ++i) out[i] = std::max(v[i] - theta, 0.0);
    return out;
}

}  // namespace detail

struct SpamCorrected {
    std::array<double, 4> populations{};
    bool projected = false;
};

inline SpamCorrected spam_correct(const std::array<double, 4>& raw,
                                  const SpamCalibration& cal) {
    if (detail::condition_number(cal.confusion) >= 100.0)
        throw std::invalid_argument("spam_correct: ill-conditioned confusion");
    const Eigen::Vector4d r(raw[0], raw[1], raw[2], raw[3]);
    const Eigen::Vector4d c = cal.confusion.fullPivLu().solve(r);
    SpamCorrected out;
    for (int i = 0; i < 4; ++i) {
        out.populations[i] = c(i);
        if (c(i) < -1e-12) out.projected = true;
    }
    const double sum = c.sum();
    if (std::abs(sum - 1.0) > 1e-9) out.projected = true;
    if (out.projected)
        out.populations = detail::project_simplex(out.populations);
    return out;
}

// ---- uncertainty propagation ----

struct PstUncertainty {
    double total = 0.0;
    double gate = 0.0;
    double calibration = 0.0;
};

namespace detail {

// multinomial covariance quadratic form  a' (diag(p) - p p') a / n
inline double multinomial_var(const std::array<double, 4>& p,
                              const Eigen::Vector4d& a, long n) {
    if (n <= 0) return 0.0;
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < 4; ++i) {
        m1 += a(i) * p[i];
        m2 += a(i) * a(i) * p[i];
    }
    return (m2 - m1 * m1) / static_cast<double>(n);
}

}  // namespace detail

// Linearized shot-noise propagation of F = p_even/2 + (Pi45 - Pi135)/4
// through the confusion inversion; simplex projection is not linearized.
inline PstUncertainty fidelity_uncertainty(
    const std::array<double, 4>& raw_pop, long n_pop,
    const std::array<double, 4>& raw_45, long n_45,
    const std::array<double, 4>& raw_135, long n_135,
    const SpamCalibration& cal, bool corrected) {
    const Eigen::Vector4d a_even(1.0, 0.0, 0.0, 1.0);
    const Eigen::Vector4d a_par(1.0, -1.0, -1.0, 1.0);
    const std::array<const std::array<double, 4>*, 3> raws{&raw_pop, &raw_45,
                                                           &raw_135};
    const std::array<long, 3> shots{n_pop, n_45, n_135};
    const std::array<double, 3> weights{0.5, 0.25, -0.25};
    const std::array<Eigen::Vector4d, 3> axes{a_even, a_par, a_par};

    Eigen::Matrix4d inv = Eigen::Matrix4d::Identity();
    if (corrected) {
        if (detail::condition_number(cal.confusion) >= 100.0)
            throw std::invalid_argument(
                "fidelity_uncertainty: ill-conditioned confusion");
        inv = cal.confusion.inverse();
    }

    PstUncertainty out;
    for (int m = 0; m < 3; ++m) {
        const Eigen::Vector4d g = inv.transpose() * axes[m];
        out.gate +=
            weights[m] * weights[m] *
            detail::multinomial_var(*raws[m], g, shots[m]);
    }

    if (corrected) {
        // dF from confusion entry (i, j) is -sum_m w_m g_m(i) c_m(j); the
        // calibration columns are independent multinomials
        std::array<Eigen::Vector4d, 3> gs, cs;
        for (int m = 0; m < 3; ++m) {
            gs[m] = inv.transpose() * axes[m];
            const auto& r = *raws[m];
            cs[m] = inv * Eigen::Vector4d(r[0], r[1], r[2], r[3]);
        }
        for (int j = 0; j < 4; ++j) {
            if (cal.shots[j] <= 0) continue;
            Eigen::Vector4d h = Eigen::Vector4d::Zero();
            for (int m = 0; m < 3; ++m) h -= weights[m] * cs[m](j) * gs[m];
            double m1 = 0.0, m2 = 0.0;
            for (int i = 0; i < 4; ++i) {
                m1 += h(i) * cal.confusion(i, j);
                m2 += h(i) * h(i) * cal.confusion(i, j);
            }
            out.calibration +=
                (m2 - m1 * m1) / static_cast<double>(cal.shots[j]);
        }
    }

    out.total = std::sqrt(out.gate + out.calibration);
    out.gate = std::sqrt(out.gate);
    out.calibration = std::sqrt(out.calibration);
    return out;
}

// ---- end-to-end run ----

struct PstResult {
    std::array<double, 4> raw_populations{};
    std::array<double, 4> corrected_populations{};
    double raw_parity45 = 0.0, raw_parity135 = 0.0;
    double corrected_parity45 = 0.0, corrected_parity135 = 0.0;
    double raw_fidelity = 0.0, corrected_fidelity = 0.0;
    double raw_error = 0.0, corrected_error = 0.0;
    PstUncertainty raw_sigma, corrected_sigma;
    SpamCalibration calibration;
    long gate_shots = 0, calibration_shots = 0;
    bool clipped = false;
    bool projected = false;
    bool low_stats = false;
};

inline PstResult run_pst(const SimBackend& backend, long shots,
                         long calibration_shots) {
    if (shots <= 0 || calibration_shots <= 0)
        throw std::invalid_argument("run_pst: shot counts must be positive");
    const PstCircuits& circ = pst_circuits();

    const CountDataset cal_ds = backend.run(
        {circ.calibration[0], circ.calibration[1], circ.calibration[2],
         circ.calibration[3]},
        calibration_shots);
    std::array<CountRecord, 4> cal_records;
    for (int j = 0; j < 4; ++j) cal_records[j] = cal_ds.records[j];
    const SpamCalibration cal = calibration_from_counts(cal_records);

    const CountDataset ds = backend.run(
        {circ.population, circ.parity45, circ.parity135}, shots);
    std::array<std::array<double, 4>, 3> raw;
    for (int m = 0; m < 3; ++m) {
        const auto& rec = ds.records[m];
        for (int i = 0; i < 4; ++i)
            raw[m][i] = static_cast<double>(rec.counts[i]) / shots;
    }

    PstResult res;
    res.calibration = cal;
    res.gate_shots = shots;
    res.calibration_shots = calibration_shots;
    res.low_stats = shots < 1000 || calibration_shots < 1000;
    res.raw_populations = raw[0];
    res.raw_parity45 = parity(raw[1]);
    res.raw_parity135 = parity(raw[2]);
    const BellEstimate raw_est = bell_fidelity(
        raw[0][0] + raw[0][3], res.raw_parity45, res.raw_parity135);
    res.raw_fidelity = raw_est.fidelity;
    res.raw_error = 1.0 - raw_est.fidelity;

    std::array<std::array<double, 4>, 3> corr;
    for (int m = 0; m < 3; ++m) {
        const SpamCorrected sc = spam_correct(raw[m], cal);
        corr[m] = sc.populations;
        res.projected = res.projected || sc.projected;
    }
    res.corrected_populations = corr[0];
    res.corrected_parity45 = parity(corr[1]);
    res.corrected_parity135 = parity(corr[2]);
    const BellEstimate corr_est =
        bell_fidelity(corr[0][0] + corr[0][3], res.corrected_parity45,
                      res.corrected_parity135);
    res.corrected_fidelity = corr_est.fidelity;
    res.corrected_error = 1.0 - corr_est.fidelity;
    res.clipped = raw_est.clipped || corr_est.clipped;

    res.raw_sigma = fidelity_uncertainty(raw[0], shots, raw[1], shots, raw[2],
                                         shots, cal, false);
    res.corrected_sigma = fidelity_uncertainty(raw[0], shots, raw[1], shots,
                                               raw[2], shots, cal, true);
    return res;
}

}  // namespace pst
}  // namespace gatekit

#endif  // GATEKIT_PST_HPP_
