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

#ifndef GATEKIT_CIRCUIT_HPP_
#define GATEKIT_CIRCUIT_HPP_

#include <optional>
#include <string>
#include <vector>

#include "gatekit/gates.hpp"

namespace gatekit {

// A circuit is a flat sequence of addressed ops in execution order.  The
// text form is whitespace separated:
//
//   op      := name [":" qubit] ["^" count]
//   group   := "(" op+ ")" "^" count
//
// Single-qubit ops require ":1" or ":2"; the two-qubit gate takes no qubit.
// "^" repeats an op or a parenthesized group; groups may nest.
struct Circuit {
    std::vector<GateOp> ops;

    bool operator==(const Circuit& o) const { return ops == o.ops; }
    bool operator!=(const Circuit& o) const { return ops != o.ops; }
};

namespace detail {

struct CircuitParser {
    const std::string& text;
    size_t pos = 0;
    static constexpr size_t kMaxOps = 1000000;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("parse_circuit: " + what + " at byte " +
                                    std::to_string(pos));
    }

    bool at_end() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }

    void skip_ws() {
        while (!at_end() && (peek() == ' ' || peek() == '\t')) ++pos;
    }

    static bool name_char(char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
               (c >= '0' && c <= '9');
    }

    long parse_count() {
        if (at_end() || peek() < '0' || peek() > '9')
            fail("expected repeat count after '^'");
        long n = 0;
        while (!at_end() && peek() >= '0' && peek() <= '9') {
            n = n * 10 + (peek() - '0');
            if (n > static_cast<long>(kMaxOps)) fail("repeat count too large");
            ++pos;
        }
        if (n == 0) fail("repeat count must be positive");
        return n;
    }

    std::optional<OpKind> lookup(const std::string& name) const {
        for (OpKind k : {OpKind::Gxp, OpKind::Gxm, OpKind::Gyp, OpKind::Gym,
                         OpKind::Gzp, OpKind::Gzm, OpKind::Gpi, OpKind::Ga45,
                         OpKind::Ga135, OpKind::Gzz})
            if (name == op_name(k)) return k;
        return std::nullopt;
    }

    GateOp parse_op() {
        const size_t name_pos = pos;
        while (!at_end() && name_char(peek())) ++pos;
        if (pos == name_pos) fail("expected gate name");
        const std::string name = text.substr(name_pos, pos - name_pos);
        const auto kind = lookup(name);
        if (!kind) {
            pos = name_pos;
            fail("unknown gate name '" + name + "'");
        }
        GateOp op{*kind, 0};
        if (!at_end() && peek() == ':') {
            ++pos;
            if (at_end() || (peek() != '1' && peek() != '2'))
                fail("qubit must be 1 or 2");
            if (op_is_two_qubit(op.kind)) {
                pos = name_pos;
                fail("op '" + name + "' does not take a qubit");
            }
            op.qubit = peek() - '0';
            ++pos;
        } else if (!op_is_two_qubit(op.kind)) {
            pos = name_pos;
            fail("op '" + name + "' requires a qubit");
        }
        return op;
    }

    void append(std::vector<GateOp>& out, const GateOp& op, long times) {
        if (out.size() + static_cast<size_t>(times) > kMaxOps)
            fail("circuit expansion exceeds 1000000 operations");
        for (long i = 0; i < times; ++i) out.push_back(op);
    }

    // sequence of items until end of text or a closing parenthesis
    std::vector<GateOp> parse_sequence(bool top_level) {
        std::vector<GateOp> out;
        for (;;) {
            skip_ws();
            if (at_end()) {
                if (!top_level) fail("expected ')'");
                return out;
            }
            if (peek() == ')') {
                if (top_level) fail("unmatched ')'");
                return out;
            }
            if (peek() == '(') {
                ++pos;
                const std::vector<GateOp> inner = parse_sequence(false);
                ++pos;  // consume ')'
                skip_ws();
                if (at_end() || peek() != '^')
                    fail("expected '^' after group");
                ++pos;
                const long times = parse_count();
                if (out.size() + inner.size() * static_cast<size_t>(times) >
                    kMaxOps)
                    fail("circuit expansion exceeds 1000000 operations");
                for (long i = 0; i < times; ++i)
                    out.insert(out.end(), inner.begin(), inner.end());
                continue;
            }
            GateOp op = parse_op();
            long times = 1;
            if (!at_end() && peek() == '^') {
                ++pos;
                times = parse_count();
            }
            append(out, op, times);
        }
    }
};

}  // namespace detail

inline Circuit parse_circuit(const std::string& text) {
    detail::CircuitParser p{text};
    Circuit c;
    c.ops = p.parse_sequence(true);
    return c;
}

inline std::string op_to_string(const GateOp& op) {
    std::string s = op_name(op.kind);
    if (!op_is_two_qubit(op.kind)) {
        s += ':';
        s += static_cast<char>('0' + op.qubit);
    }
    return s;
}

// canonical text form: flat expansion, single spaces, explicit qubits
inline std::string circuit_to_string(const Circuit& c) {
    std::string s;
    for (size_t i = 0; i < c.ops.size(); ++i) {
        if (i) s += ' ';
        s += op_to_string(c.ops[i]);
    }
    return s;
}

inline std::string canonical_circuit(const std::string& text) {
    return circuit_to_string(parse_circuit(text));
}

}  // namespace gatekit

#endif  // GATEKIT_CIRCUIT_HPP_
