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

#ifndef GATEKIT_DATASET_HPP_
#define GATEKIT_DATASET_HPP_

#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gatekit/circuit.hpp"

namespace gatekit {

// One measured circuit: counts in the computational basis, outcome order
// 00, 01, 10, 11 with qubit 1 the left bit
struct CountRecord {
    std::string circuit;
    std::array<long, 4> counts{0, 0, 0, 0};

    long shots() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
};

// Tab separated text:  <circuit>\t<n00> <n01> <n10> <n11>
// Lines starting with '#' hold "# key = value" metadata or free comments.
struct CountDataset {
    std::map<std::string, std::string> metadata;
    std::vector<CountRecord> records;
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r'))
        --b;
    return s.substr(a, b - a);
}

}  // namespace detail

inline CountDataset read_dataset(std::istream& in) {
    CountDataset ds;
    std::string line;
    long lineno = 0;
    auto fail = [&](const std::string& what) {
        throw std::invalid_argument("dataset line " + std::to_string(lineno) +
                                    ": " + what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string body = detail::trim(line.substr(1));
            const size_t eq = body.find(" = ");
            if (eq != std::string::npos) {
                const std::string key = detail::trim(body.substr(0, eq));
                const std::string value = detail::trim(body.substr(eq + 3));
                if (!key.empty()) ds.metadata[key] = value;
            }
            continue;
        }
        const size_t tab = line.find('\t');
        if (tab == std::string::npos)
            fail("expected a tab between circuit and counts");
        CountRecord rec;
        rec.circuit = line.substr(0, tab);
        try {
            parse_circuit(rec.circuit);
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
        std::istringstream cs(line.substr(tab + 1));
        for (int i = 0; i < 4; ++i) {
            if (!(cs >> rec.counts[i])) fail("expected four counts");
            if (rec.counts[i] < 0) fail("negative count");
        }
        long extra;
        if (cs >> extra) fail("expected exactly four counts");
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

inline CountDataset read_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("read_dataset_file: cannot open " + path);
    return read_dataset(in);
}

inline void write_dataset(std::ostream& out, const CountDataset& ds) {
    for (const auto& [key, value] : ds.metadata)
        out << "# " << key << " = " << value << "\n";
    for (const auto& rec : ds.records) {
        out << rec.circuit << '\t' << rec.counts[0] << ' ' << rec.counts[1]
            << ' ' << rec.counts[2] << ' ' << rec.counts[3] << '\n';
    }
}

inline void write_dataset_file(const std::string& path,
                               const CountDataset& ds) {
    std::ofstream out(path);
    if (!out)
        throw std::invalid_argument("write_dataset_file: cannot open " + path);
    write_dataset(out, ds);
}

}  // namespace gatekit

#endif  // GATEKIT_DATASET_HPP_
