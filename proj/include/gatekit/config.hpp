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

#ifndef GATEKIT_CONFIG_HPP_
#define GATEKIT_CONFIG_HPP_

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gatekit/backend.hpp"
#include "gatekit/budget.hpp"
#include "gatekit/ion.hpp"

namespace gatekit {

// INI-style configuration: "[section]" headers followed by "key = value"
// lines; '#' or ';' comment out a whole line.  The key set is fixed by the
// built-in defaults and unknown keys are rejected, so typos fail loudly.
class Config {
  public:
    struct KeySpec {
        const char* key;
        char type;  // 'd' double, 'i' int, 'u' unsigned, 'b' bool, 's' string
    };

    static const std::vector<KeySpec>& key_specs() {
        static const std::vector<KeySpec> specs = {
            {"ion.ca.name", 's'},
            {"ion.ca.mass_amu", 'd'},
            {"ion.ca.raman_detuning", 'd'},
            {"ion.ca.linewidth", 'd'},
            {"ion.ca.qubit_frequency", 'd'},
            {"ion.ca.eta_ip", 'd'},
            {"ion.ca.eta_oop", 'd'},
            {"ion.ca.c_down", 'd'},
            {"ion.ca.c_up", 'd'},
            {"ion.sr.name", 's'},
            {"ion.sr.mass_amu", 'd'},
            {"ion.sr.raman_detuning", 'd'},
            {"ion.sr.linewidth", 'd'},
            {"ion.sr.qubit_frequency", 'd'},
            {"ion.sr.eta_ip", 'd'},
            {"ion.sr.eta_oop", 'd'},
            {"ion.sr.c_down", 'd'},
            {"ion.sr.c_up", 'd'},
            {"modes.ax_ip.frequency", 'd'},
            {"modes.ax_ip.nbar", 'd'},
            {"modes.ax_ip.heating_rate", 'd'},
            {"modes.ax_oop.frequency", 'd'},
            {"modes.ax_oop.nbar", 'd'},
            {"modes.ax_oop.heating_rate", 'd'},
            {"modes.rad_ip.frequency", 'd'},
            {"modes.rad_ip.nbar", 'd'},
            {"modes.rad_ip.heating_rate", 'd'},
            {"modes.rad_oop.frequency", 'd'},
            {"modes.rad_oop.nbar", 'd'},
            {"modes.rad_oop.heating_rate", 'd'},
            {"drive.gate_detuning", 'd'},
            {"drive.loops", 'i'},
            {"drive.gate_time", 'd'},
            {"drive.shaping_time", 'd'},
            {"drive.walsh_flip", 'b'},
            {"drive.carrier_rabi", 'd'},
            {"drive.ion_spacing_ratio", 'd'},
            {"noise.gate_mode", 's'},
            {"noise.stray_field", 'd'},
            {"noise.stray_infidelity_coeff", 'd'},
            {"noise.kerr_infidelity", 'd'},
            {"noise.spectator_infidelity", 'd'},
            {"noise.dephasing_rate_ca", 'd'},
            {"noise.dephasing_rate_sr", 'd'},
            {"sim.seed", 'u'},
            {"sim.shots", 'i'},
            {"sim.pulse_error", 'd'},
            {"sim.gzz_error", 'd'},
            {"sim.use_budget_channel", 'b'},
            {"sim.drift_heating_qps", 'd'},
            {"sim.drift_error_per_quantum", 'd'},
            {"sim.readout_flip_ca", 'd'},
            {"sim.readout_flip_sr", 'd'},
        };
        return specs;
    }

    static Config defaults() {
        Config c;
        const phys::IonSpecies ca = phys::default_ca();
        const phys::IonSpecies sr = phys::default_sr();
        c.put_ion("ion.ca", ca);
        c.put_ion("ion.sr", sr);
        const phys::ModeSet m = phys::default_modes();
        c.put_mode("modes.ax_ip", m.ax_ip);
        c.put_mode("modes.ax_oop", m.ax_oop);
        c.put_mode("modes.rad_ip", m.rad_ip);
        c.put_mode("modes.rad_oop", m.rad_oop);
        const phys::GateDriveConfig d = phys::default_drive();
        c.set_double("drive.gate_detuning", d.gate_detuning);
        c.set_int("drive.loops", d.loops);
        c.set_double("drive.gate_time", d.gate_time);
        c.set_double("drive.shaping_time", d.shaping_time);
        c.set_bool("drive.walsh_flip", d.walsh_flip);
        c.set_double("drive.carrier_rabi", d.carrier_rabi);
        c.set_double("drive.ion_spacing_ratio", d.ion_spacing_ratio);
        const phys::NoiseInputs n = phys::default_noise();
        c.set_string("noise.gate_mode", n.gate_mode.label);
        c.set_double("noise.stray_field", n.stray_field);
        c.set_double("noise.stray_infidelity_coeff", n.stray_infidelity_coeff);
        c.set_double("noise.kerr_infidelity", n.kerr_infidelity);
        c.set_double("noise.spectator_infidelity", n.spectator_infidelity);
        c.set_double("noise.dephasing_rate_ca", n.dephasing_rate_ca);
        c.set_double("noise.dephasing_rate_sr", n.dephasing_rate_sr);
        const SimBackendConfig s{};
        c.set_uint64("sim.seed", s.seed);
        c.set_int("sim.shots", 1000);
        c.set_double("sim.pulse_error", s.pulse_error);
        c.set_double("sim.gzz_error", s.gzz_error);
        c.set_bool("sim.use_budget_channel", s.use_budget_channel);
        c.set_double("sim.drift_heating_qps", s.drift_heating_qps);
        c.set_double("sim.drift_error_per_quantum", s.drift_error_per_quantum);
        c.set_double("sim.readout_flip_ca", s.readout_flip_ca);
        c.set_double("sim.readout_flip_sr", s.readout_flip_sr);
        return c;
    }

    static Config from_text(const std::string& text) {
        Config c = defaults();
        c.overlay_text(text);
        return c;
    }

    static Config from_file(const std::string& path) {
        Config c = defaults();
        c.overlay_file(path);
        return c;
    }

    void overlay_file(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw std::invalid_argument("config: cannot open " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        overlay_text(ss.str());
    }

    void overlay_text(const std::string& text) {
        std::istringstream in(text);
        std::string line, section;
        long lineno = 0;
        auto fail = [&](const std::string& what) {
            throw std::invalid_argument("config line " +
                                        std::to_string(lineno) + ": " + what);
        };
        while (std::getline(in, line)) {
            ++lineno;
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            if (t.front() == '[') {
                if (t.back() != ']') fail("expected ']' to close section");
                section = trim(t.substr(1, t.size() - 2));
                if (section.empty()) fail("empty section name");
                continue;
            }
            const size_t eq = t.find('=');
            if (eq == std::string::npos) fail("expected 'key = value'");
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            if (key.empty()) fail("empty key");
            const std::string full = section.empty() ? key : section + "." + key;
            const KeySpec* spec = find_spec(full);
            if (!spec) fail("unknown key '" + full + "'");
            check_value(*spec, value, lineno);
            kv_[full] = value;
        }
    }

    // ---- typed getters ----

    const std::string& get_string(const std::string& key) const {
        const auto it = kv_.find(key);
        if (it == kv_.end())
            throw std::invalid_argument("config: unknown key '" + key + "'");
        return it->second;
    }

    double get_double(const std::string& key) const {
        const std::string& v = get_string(key);
        char* end = nullptr;
        const double x = std::strtod(v.c_str(), &end);
        if (end != v.c_str() + v.size() || v.empty())
            throw std::invalid_argument("config: key '" + key +
                                        "' is not a number: '" + v + "'");
        return x;
    }

    long get_int(const std::string& key) const {
        const std::string& v = get_string(key);
        char* end = nullptr;
        const long x = std::strtol(v.c_str(), &end, 10);
        if (end != v.c_str() + v.size() || v.empty())
            throw std::invalid_argument("config: key '" + key +
                                        "' is not an integer: '" + v + "'");
        return x;
    }

    std::uint64_t get_uint64(const std::string& key) const {
        const std::string& v = get_string(key);
        char* end = nullptr;
        const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
        if (end != v.c_str() + v.size() || v.empty() || v[0] == '-')
            throw std::invalid_argument("config: key '" + key +
                                        "' is not an unsigned integer: '" + v +
                                        "'");
        return x;
    }

    bool get_bool(const std::string& key) const {
        const std::string& v = get_string(key);
        if (v == "true") return true;
        if (v == "false") return false;
        throw std::invalid_argument("config: key '" + key +
                                    "' must be true or false: '" + v + "'");
    }

    // ---- struct builders ----

    phys::IonSpecies ion_ca() const { return get_ion("ion.ca"); }
    phys::IonSpecies ion_sr() const { return get_ion("ion.sr"); }

    phys::ModeSet modes() const {
        phys::ModeSet m;
        m.ax_ip = get_mode("modes.ax_ip", "ax_ip");
        m.ax_oop = get_mode("modes.ax_oop", "ax_oop");
        m.rad_ip = get_mode("modes.rad_ip", "rad_ip");
        m.rad_oop = get_mode("modes.rad_oop", "rad_oop");
        return m;
    }

    phys::GateDriveConfig drive() const {
        phys::GateDriveConfig d;
        d.gate_detuning = get_double("drive.gate_detuning");
        d.loops = static_cast<int>(get_int("drive.loops"));
        d.gate_time = get_double("drive.gate_time");
        d.shaping_time = get_double("drive.shaping_time");
        d.walsh_flip = get_bool("drive.walsh_flip");
        d.carrier_rabi = get_double("drive.carrier_rabi");
        d.ion_spacing_ratio = get_double("drive.ion_spacing_ratio");
        d.validate();
        return d;
    }

    phys::NoiseInputs noise() const {
        phys::NoiseInputs n;
        n.ca = ion_ca();
        n.sr = ion_sr();
        n.drive = drive();
        const std::string label = get_string("noise.gate_mode");
        const phys::ModeSet m = modes();
        if (label == "ax_ip") n.gate_mode = m.ax_ip;
        else if (label == "ax_oop") n.gate_mode = m.ax_oop;
        else
            throw std::invalid_argument(
                "config: noise.gate_mode must be ax_ip or ax_oop, got '" +
                label + "'");
        n.stray_field = get_double("noise.stray_field");
        n.stray_infidelity_coeff = get_double("noise.stray_infidelity_coeff");
        n.kerr_infidelity = get_double("noise.kerr_infidelity");
        n.spectator_infidelity = get_double("noise.spectator_infidelity");
        n.dephasing_rate_ca = get_double("noise.dephasing_rate_ca");
        n.dephasing_rate_sr = get_double("noise.dephasing_rate_sr");
        return n;
    }

    SimBackendConfig sim() const {
        SimBackendConfig s;
        s.seed = get_uint64("sim.seed");
        s.pulse_error = get_double("sim.pulse_error");
        s.gzz_error = get_double("sim.gzz_error");
        s.use_budget_channel = get_bool("sim.use_budget_channel");
        s.budget = noise();
        s.drift_heating_qps = get_double("sim.drift_heating_qps");
        s.drift_error_per_quantum = get_double("sim.drift_error_per_quantum");
        s.gate_time = drive().gate_time;
        s.readout_flip_ca = get_double("sim.readout_flip_ca");
        s.readout_flip_sr = get_double("sim.readout_flip_sr");
        s.validate();
        return s;
    }

    long shots() const { return get_int("sim.shots"); }

    // normalized serialization: sections sorted, numbers reparsed into their
    // shortest round-trip form, so two semantically equal configs compare as
    // equal strings
    std::string canonical_text() const {
        std::map<std::string, std::vector<std::string>> sections;
        for (const KeySpec& spec : key_specs()) {
            const std::string full = spec.key;
            const size_t dot = full.rfind('.');
            const std::string section = full.substr(0, dot);
            const std::string leaf = full.substr(dot + 1);
            std::string value;
            switch (spec.type) {
                case 'd': value = format_double(get_double(full)); break;
                case 'i': value = std::to_string(get_int(full)); break;
                case 'u': value = std::to_string(get_uint64(full)); break;
                case 'b': value = get_bool(full) ? "true" : "false"; break;
                default: value = get_string(full); break;
            }
            sections[section].push_back(leaf + " = " + value);
        }
        std::string out;
        for (const auto& [name, lines] : sections) {
            out += "[" + name + "]\n";
            for (const auto& l : lines) out += l + "\n";
            out += "\n";
        }
        return out;
    }

    static std::string format_double(double x) {
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof(buf), x);
        return std::string(buf, res.ptr);
    }

  private:
    static std::string trim(const std::string& s) {
        size_t a = 0, b = s.size();
        while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
        while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' ||
                         s[b - 1] == '\r'))
            --b;
        return s.substr(a, b - a);
    }

    static const KeySpec* find_spec(const std::string& key) {
        for (const KeySpec& s : key_specs())
            if (key == s.key) return &s;
        return nullptr;
    }

    void check_value(const KeySpec& spec, const std::string& value,
                     long lineno) const {
        Config probe;
        probe.kv_[spec.key] = value;
        try {
            switch (spec.type) {
                case 'd': probe.get_double(spec.key); break;
                case 'i': probe.get_int(spec.key); break;
                case 'u': probe.get_uint64(spec.key); break;
                case 'b': probe.get_bool(spec.key); break;
                default: break;
            }
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(
                "config line " + std::to_string(lineno) + ": " + e.what());
        }
    }

    phys::IonSpecies get_ion(const std::string& prefix) const {
        phys::IonSpecies s;
        s.name = get_string(prefix + ".name");
        s.mass_amu = get_double(prefix + ".mass_amu");
        s.raman_detuning = get_double(prefix + ".raman_detuning");
        s.linewidth = get_double(prefix + ".linewidth");
        s.qubit_frequency = get_double(prefix + ".qubit_frequency");
        s.eta_ip = get_double(prefix + ".eta_ip");
        s.eta_oop = get_double(prefix + ".eta_oop");
        s.c_down = get_double(prefix + ".c_down");
        s.c_up = get_double(prefix + ".c_up");
        s.validate();
        return s;
    }

    phys::MotionalMode get_mode(const std::string& prefix,
                                const std::string& label) const {
        phys::MotionalMode m;
        m.label = label;
        m.frequency = get_double(prefix + ".frequency");
        m.nbar = get_double(prefix + ".nbar");
        m.heating_rate = get_double(prefix + ".heating_rate");
        m.validate();
        return m;
    }

    void put_ion(const std::string& prefix, const phys::IonSpecies& s) {
        set_string(prefix + ".name", s.name);
        set_double(prefix + ".mass_amu", s.mass_amu);
        set_double(prefix + ".raman_detuning", s.raman_detuning);
        set_double(prefix + ".linewidth", s.linewidth);
        set_double(prefix + ".qubit_frequency", s.qubit_frequency);
        set_double(prefix + ".eta_ip", s.eta_ip);
        set_double(prefix + ".eta_oop", s.eta_oop);
        set_double(prefix + ".c_down", s.c_down);
        set_double(prefix + ".c_up", s.c_up);
    }

    void put_mode(const std::string& prefix, const phys::MotionalMode& m) {
        set_double(prefix + ".frequency", m.frequency);
        set_double(prefix + ".nbar", m.nbar);
        set_double(prefix + ".heating_rate", m.heating_rate);
    }

    void set_string(const std::string& key, const std::string& v) {
        kv_[key] = v;
    }
    void set_double(const std::string& key, double v) {
        kv_[key] = format_double(v);
    }
    void set_int(const std::string& key, long v) {
        kv_[key] = std::to_string(v);
    }
    void set_uint64(const std::string& key, std::uint64_t v) {
        kv_[key] = std::to_string(v);
    }
    void set_bool(const std::string& key, bool v) {
        kv_[key] = v ? "true" : "false";
    }

    std::map<std::string, std::string> kv_;
};

}  // namespace gatekit

#endif  // GATEKIT_CONFIG_HPP_
