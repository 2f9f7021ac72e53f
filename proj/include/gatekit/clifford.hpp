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

#ifndef GATEKIT_CLIFFORD_HPP_
#define GATEKIT_CLIFFORD_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <unordered_map>
#include <vector>

#include "gatekit/channel.hpp"
#include "gatekit/gates.hpp"
#include "gatekit/rng.hpp"

namespace gatekit {

// ---- signed Pauli arithmetic over GF(2) bits ----

// i^phase * sigma(bits); bit layout x1 | z1<<1 | x2<<2 | z2<<3, a Hermitian
// Pauli has phase 0 (plus) or 2 (minus)
struct SignedPauli {
    uint8_t bits = 0;
    uint8_t phase = 0;

    bool operator==(const SignedPauli& o) const {
        return bits == o.bits && phase == o.phase;
    }
};

namespace detail {

// per-qubit code x + 2z: 0=I, 1=X, 2=Z, 3=Y
inline int pauli_code(uint8_t bits, int qubit) {
    return (bits >> (2 * qubit)) & 3;
}

// i-power in sigma(a) sigma(b) = i^f sigma(a xor b) for one qubit
inline int pauli_phase_f(int a, int b) {
    const int x = a & 1, z = (a >> 1) & 1;
    const int xp = b & 1, zp = (b >> 1) & 1;
    return (x * z + xp * zp + 2 * z * xp - (x ^ xp) * (z ^ zp)) & 3;
}

inline int symplectic_product(uint8_t u, uint8_t v) {
    const int ux = u & 1, uz = (u >> 1) & 1, ux2 = (u >> 2) & 1,
              uz2 = (u >> 3) & 1;
    const int vx = v & 1, vz = (v >> 1) & 1, vx2 = (v >> 2) & 1,
              vz2 = (v >> 3) & 1;
    return (ux * vz + uz * vx + ux2 * vz2 + uz2 * vx2) & 1;
}

}  // namespace detail

inline SignedPauli pauli_mul(const SignedPauli& a, const SignedPauli& b) {
    SignedPauli out;
    out.bits = a.bits ^ b.bits;
    int ph = a.phase + b.phase;
    for (int q = 0; q < 2; ++q)
        ph += detail::pauli_phase_f(detail::pauli_code(a.bits, q),
                                    detail::pauli_code(b.bits, q));
    out.phase = static_cast<uint8_t>(ph & 3);
    return out;
}

// index into pauli16() (second qubit fastest, I X Y Z) for a bit pattern
inline int pauli_index_from_bits(uint8_t bits) {
    static constexpr int kCodeToIdx[4] = {0, 1, 3, 2};
    return 4 * kCodeToIdx[detail::pauli_code(bits, 0)] +
           kCodeToIdx[detail::pauli_code(bits, 1)];
}

inline uint8_t bits_from_pauli_index(int idx) {
    if (idx < 0 || idx > 15)
        throw std::invalid_argument("bits_from_pauli_index: index out of range");
    static constexpr int kIdxToCode[4] = {0, 1, 3, 2};
    const int c1 = kIdxToCode[idx / 4], c2 = kIdxToCode[idx % 4];
    return static_cast<uint8_t>(c1 | (c2 << 2));
}

// ---- stabilizer tableau of a two-qubit Clifford ----

// images of the generators X1, Z1, X2, Z2 under conjugation
struct Tableau {
    std::array<SignedPauli, 4> img{};

    static Tableau identity() {
        Tableau t;
        t.img[0] = {uint8_t{1}, 0};
        t.img[1] = {uint8_t{2}, 0};
        t.img[2] = {uint8_t{4}, 0};
        t.img[3] = {uint8_t{8}, 0};
        return t;
    }

    // 16 symplectic bits, then 4 sign bits
    uint32_t key() const {
        uint32_t k = 0;
        for (int g = 0; g < 4; ++g) {
            k |= static_cast<uint32_t>(img[g].bits) << (4 * g);
            k |= static_cast<uint32_t>(img[g].phase == 2) << (16 + g);
        }
        return k;
    }

    static Tableau from_key(uint32_t k) {
        Tableau t;
        for (int g = 0; g < 4; ++g) {
            t.img[g].bits = static_cast<uint8_t>((k >> (4 * g)) & 15);
            t.img[g].phase = ((k >> (16 + g)) & 1) ? 2 : 0;
        }
        return t;
    }

    bool operator==(const Tableau& o) const { return key() == o.key(); }
    bool operator!=(const Tableau& o) const { return !(*this == o); }
};

inline bool tableau_is_valid(const Tableau& t) {
    for (int g = 0; g < 4; ++g)
        if (t.img[g].phase != 0 && t.img[g].phase != 2) return false;
    // commutation structure of the generators must be preserved
    static constexpr uint8_t kGen[4] = {1, 2, 4, 8};
    for (int g = 0; g < 4; ++g)
        for (int h = 0; h < 4; ++h)
            if (detail::symplectic_product(t.img[g].bits, t.img[h].bits) !=
                detail::symplectic_product(kGen[g], kGen[h]))
                return false;
    return true;
}

inline SignedPauli tableau_apply(const Tableau& t, const SignedPauli& p) {
    const int x1 = p.bits & 1, z1 = (p.bits >> 1) & 1;
    const int x2 = (p.bits >> 2) & 1, z2 = (p.bits >> 3) & 1;
    // sigma-pair = i^{x1 z1 + x2 z2} X1^x1 Z1^z1 X2^x2 Z2^z2
    SignedPauli acc{0, static_cast<uint8_t>((p.phase + x1 * z1 + x2 * z2) & 3)};
    const int e[4] = {x1, z1, x2, z2};
    for (int g = 0; g < 4; ++g)
        if (e[g]) acc = pauli_mul(acc, t.img[g]);
    return acc;
}

// a after b
inline Tableau tableau_compose(const Tableau& a, const Tableau& b) {
    Tableau c;
    for (int g = 0; g < 4; ++g) c.img[g] = tableau_apply(a, b.img[g]);
    return c;
}

inline Tableau tableau_invert(const Tableau& t) {
    if (!tableau_is_valid(t))
        throw std::invalid_argument("tableau_invert: not a valid tableau");
    // bit matrix M (columns = image bits); over GF(2) the symplectic inverse
    // is Omega M^T Omega with Omega the per-qubit swap of x and z rows
    auto bit = [&](int row, int col) -> int {
        return (t.img[col].bits >> row) & 1;
    };
    static constexpr int kSwap[4] = {1, 0, 3, 2};
    Tableau inv;
    for (int g = 0; g < 4; ++g) {
        uint8_t bits = 0;
        for (int row = 0; row < 4; ++row) {
            // (Omega M^T Omega)[row][g] = M[kSwap[g]][kSwap[row]]
            if (bit(kSwap[g], kSwap[row])) bits |= uint8_t{1} << row;
        }
        inv.img[g] = {bits, 0};
    }
    // fix signs so t composed with inv maps every generator to itself
    static constexpr uint8_t kGen[4] = {1, 2, 4, 8};
    for (int g = 0; g < 4; ++g) {
        const SignedPauli round = tableau_apply(t, inv.img[g]);
        if (round.bits != kGen[g])
            throw std::invalid_argument(
                "tableau_invert: symplectic inverse failed");
        if (round.phase == 2) inv.img[g].phase = 2;
    }
    return inv;
}

// exact signed permutation on the Pauli basis
inline Ptm tableau_ptm(const Tableau& t) {
    Ptm r = Ptm::Zero();
    for (int j = 0; j < 16; ++j) {
        const SignedPauli in{bits_from_pauli_index(j), 0};
        const SignedPauli out = tableau_apply(t, in);
        r(pauli_index_from_bits(out.bits), j) = (out.phase == 2) ? -1.0 : 1.0;
    }
    return r;
}

inline Tableau tableau_from_unitary(const Mat4& u, double tol = 1e-9) {
    if ((u * u.adjoint() - Mat4::Identity()).norm() > 1e-9)
        throw std::invalid_argument("tableau_from_unitary: not unitary");
    const auto& paulis = pauli16();
    static constexpr uint8_t kGen[4] = {1, 2, 4, 8};
    Tableau t;
    for (int g = 0; g < 4; ++g) {
        const Mat4 c =
            u * paulis[pauli_index_from_bits(kGen[g])] * u.adjoint();
        int hit = -1;
        double sign = 0.0;
        for (int k = 0; k < 16; ++k) {
            const cx coeff = (paulis[k] * c).trace() / 4.0;
            if (std::abs(coeff) < tol) continue;
            if (hit >= 0 || std::abs(coeff.imag()) > tol ||
                std::abs(std::abs(coeff.real()) - 1.0) > tol)
                throw std::invalid_argument(
                    "tableau_from_unitary: not a Clifford unitary");
            hit = k;
            sign = coeff.real();
        }
        if (hit < 0)
            throw std::invalid_argument(
                "tableau_from_unitary: not a Clifford unitary");
        t.img[g] = {bits_from_pauli_index(hit),
                    static_cast<uint8_t>(sign < 0 ? 2 : 0)};
    }
    if (!tableau_is_valid(t))
        throw std::invalid_argument(
            "tableau_from_unitary: images are not symplectic");
    return t;
}

// tableau of a Pauli gate (sign flips on anticommuting generators)
inline Tableau pauli_tableau(uint8_t bits) {
    Tableau t = Tableau::identity();
    for (int g = 0; g < 4; ++g)
        if (detail::symplectic_product(bits, t.img[g].bits)) t.img[g].phase = 2;
    return t;
}

// ---- the full two-qubit Clifford group ----

class CliffordGroup {
  public:
    CliffordGroup() {
        build_alphabet();
        enumerate();
        synthesize();
    }

    static const CliffordGroup& instance() {
        static const CliffordGroup g;
        return g;
    }

    int size() const { return static_cast<int>(elements_.size()); }

    const Tableau& element(int idx) const {
        if (idx < 0 || idx >= size())
            throw std::invalid_argument("CliffordGroup: index out of range");
        return elements_[idx];
    }

    int index_of(const Tableau& t) const {
        const auto it = index_.find(t.key());
        if (it == index_.end())
            throw std::invalid_argument(
                "CliffordGroup: tableau is not a two-qubit Clifford");
        return it->second;
    }

    const std::vector<GateOp>& word(int idx) const {
        element(idx);
        return words_[idx];
    }

    int entangling_count(int idx) const {
        element(idx);
        return zz_count_[idx];
    }

    int pulse_count(int idx) const {
        element(idx);
        return pulse_count_[idx];
    }

    int sample(Rng& rng) const {
        return static_cast<int>(rng.below(static_cast<uint64_t>(size())));
    }

    const std::vector<GateOp>& alphabet() const { return alphabet_; }

    Tableau op_tableau(const GateOp& op) const {
        if (op.kind == OpKind::Gzz) return gzz_tableau_;
        return tableau_from_unitary(op_unitary(op.kind, op.qubit));
    }

  private:
    void build_alphabet() {
        for (int q = 1; q <= 2; ++q)
            for (OpKind k : {OpKind::Gxp, OpKind::Gxm, OpKind::Gyp,
                             OpKind::Gym, OpKind::Gzp, OpKind::Gzm,
                             OpKind::Gpi})
                alphabet_.push_back({k, q});
        alphabet_.push_back({OpKind::Gzz, 0});
        gzz_tableau_ = tableau_from_unitary(ideal_gate_unitary());
        for (const auto& op : alphabet_)
            alphabet_tableaus_.push_back(op_tableau(op));
    }

    void enumerate() {
        std::unordered_map<uint32_t, char> seen;
        std::deque<Tableau> todo;
        const Tableau id = Tableau::identity();
        seen[id.key()] = 1;
        todo.push_back(id);
        while (!todo.empty()) {
            const Tableau cur = todo.front();
            todo.pop_front();
            elements_.push_back(cur);
            for (const auto& g : alphabet_tableaus_) {
                const Tableau nxt = tableau_compose(g, cur);
                if (seen.emplace(nxt.key(), 1).second) todo.push_back(nxt);
            }
        }
        std::sort(elements_.begin(), elements_.end(),
                  [](const Tableau& a, const Tableau& b) {
                      return a.key() < b.key();
                  });
        for (int i = 0; i < static_cast<int>(elements_.size()); ++i)
            index_[elements_[i].key()] = i;
        if (elements_.size() != 11520)
            throw std::logic_error(
                "CliffordGroup: generator closure has the wrong order");
    }

    // ops appended to a word compose on the left (circuit order)
    void synthesize() {
        const int n = size();
        constexpr int kInf = 1 << 28;
        std::vector<int> cost(n, kInf);
        std::vector<int> via_node(n, -1), via_op(n, -1);
        std::vector<char> settled(n, 0);

        auto op_cost = [](const GateOp& op) {
            if (op.kind == OpKind::Gzz) return 1 << 10;  // entangling weight
            const bool pulse = op.kind != OpKind::Gzp && op.kind != OpKind::Gzm;
            return pulse ? 1 : 0;
        };

        std::vector<std::deque<int>> buckets(8 << 10);
        const int start = index_of(Tableau::identity());
        cost[start] = 0;
        buckets[0].push_back(start);
        for (int c = 0; c < static_cast<int>(buckets.size()); ++c) {
            auto& bucket = buckets[c];
            while (!bucket.empty()) {
                const int u = bucket.front();
                bucket.pop_front();
                if (settled[u] || cost[u] != c) continue;
                settled[u] = 1;
                for (int a = 0; a < static_cast<int>(alphabet_.size()); ++a) {
                    const Tableau nxt =
                        tableau_compose(alphabet_tableaus_[a], elements_[u]);
                    const int v = index_.at(nxt.key());
                    const int nc = c + op_cost(alphabet_[a]);
                    if (nc < cost[v] && nc < static_cast<int>(buckets.size())) {
                        cost[v] = nc;
                        via_node[v] = u;
                        via_op[v] = a;
                        buckets[nc].push_back(v);
                    }
                }
            }
        }

        words_.resize(n);
        zz_count_.resize(n);
        pulse_count_.resize(n);
        for (int i = 0; i < n; ++i) {
            if (cost[i] >= kInf)
                throw std::logic_error("CliffordGroup: synthesis incomplete");
            zz_count_[i] = cost[i] >> 10;
            pulse_count_[i] = cost[i] & 1023;
            std::vector<GateOp> w;
            for (int v = i; v != start; v = via_node[v])
                w.push_back(alphabet_[via_op[v]]);
            std::reverse(w.begin(), w.end());
            words_[i] = std::move(w);
        }
    }

    std::vector<GateOp> alphabet_;
    std::vector<Tableau> alphabet_tableaus_;
    Tableau gzz_tableau_;
    std::vector<Tableau> elements_;
    std::unordered_map<uint32_t, int> index_;
    std::vector<std::vector<GateOp>> words_;
    std::vector<int> zz_count_;
    std::vector<int> pulse_count_;
};

}  // namespace gatekit

#endif  // GATEKIT_CLIFFORD_HPP_
