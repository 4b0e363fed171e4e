// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include "rpmbfi/campaign/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace rpmbfi::campaign {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

uint64_t parse_u64(std::string_view v, std::string_view key) {
    uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw ConfigError("bad integer for '" + std::string(key) + "': " + std::string(v));
    }
    return out;
}

double parse_f64(std::string_view v, std::string_view key) {
    try {
        size_t pos = 0;
        double out = std::stod(std::string(v), &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return out;
    } catch (const std::exception&) {
        throw ConfigError("bad number for '" + std::string(key) + "': " + std::string(v));
    }
}

}  // namespace

CampaignConfig CampaignConfig::parse(std::string_view text) {
    CampaignConfig c;
    bool saw_kind = false;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected 'key = value': " + raw);
        std::string_view key = trim(line.substr(0, eq));
        std::string_view val = trim(line.substr(eq + 1));

        if (key == "kind") {
            if (val != "campaign") throw ConfigError("not a campaign config");
            saw_kind = true;
        } else if (key == "experiment") {
            c.experiment = std::string(val);
        } else if (key == "device_profile") {
            c.device_profile = std::string(val);
        } else if (key == "fault_profile") {
            c.fault_profile = std::string(val);
        } else if (key == "seed") {
            c.seed = parse_u64(val, key);
        } else if (key == "variant") {
            auto v = device::parse_check_variant(val);
            if (!v) throw ConfigError("unknown check variant: " + std::string(val));
            c.variant_override = v;
        } else if (key == "iterations_per_cell") {
            c.iterations_per_cell = static_cast<uint32_t>(parse_u64(val, key));
        } else if (key == "pulse_voltage") {
            c.pulse_voltage = parse_f64(val, key);
        } else if (key == "pulse_duration_ns") {
            c.pulse_duration_ns = parse_f64(val, key);
        } else if (key == "workers") {
            c.workers = static_cast<int>(parse_u64(val, key));
        } else if (key == "trials") {
            c.trials = static_cast<uint32_t>(parse_u64(val, key));
        } else if (key == "window") {
            auto colon = val.find(':');
            if (colon == std::string_view::npos) throw ConfigError("window must be 'begin:end' ns");
            uint64_t begin = parse_u64(trim(val.substr(0, colon)), key);
            uint64_t end = parse_u64(trim(val.substr(colon + 1)), key);
            c.window_ns = {begin, end};
        } else if (key == "step_ns") {
            c.step_ns = parse_u64(val, key);
        } else if (key == "cell") {
            std::istringstream cs{std::string(val)};
            int x, y;
            if (!(cs >> x >> y)) throw ConfigError("cell must be 'x y'");
            c.cell = {x, y};
        } else if (key == "sweeps") {
            c.sweeps = static_cast<uint32_t>(parse_u64(val, key));
        } else if (key == "max_attempts") {
            c.max_attempts = static_cast<uint32_t>(parse_u64(val, key));
        } else if (key == "target_address") {
            c.target_address = static_cast<uint16_t>(parse_u64(val, key));
        } else {
            throw ConfigError("unknown campaign key: " + std::string(key));
        }
    }
    if (!saw_kind) throw ConfigError("missing 'kind = campaign' header");
    if (c.experiment.empty()) throw ConfigError("missing 'experiment'");
    if (c.step_ns == 0) throw ConfigError("step_ns must be positive");
    if (c.window_ns && c.window_ns->second <= c.window_ns->first) {
        throw ConfigError("empty sweep window");
    }
    return c;
}

CampaignConfig CampaignConfig::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open campaign config: " + path.string());
    std::stringstream buf;
    buf << f.rdbuf();
    return parse(buf.str());
}

std::string CampaignConfig::serialize() const {
    std::ostringstream out;
    out << "kind = campaign\n";
    out << "experiment = " << experiment << "\n";
    out << "device_profile = " << device_profile << "\n";
    out << "fault_profile = " << fault_profile << "\n";
    out << "seed = " << seed << "\n";
    if (variant_override) out << "variant = " << device::name(*variant_override) << "\n";
    out << "iterations_per_cell = " << iterations_per_cell << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", pulse_voltage);
    out << "pulse_voltage = " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.9g", pulse_duration_ns);
    out << "pulse_duration_ns = " << buf << "\n";
    out << "workers = " << workers << "\n";
    out << "trials = " << trials << "\n";
    if (window_ns) out << "window = " << window_ns->first << ":" << window_ns->second << "\n";
    out << "step_ns = " << step_ns << "\n";
    if (cell) out << "cell = " << cell->first << " " << cell->second << "\n";
    out << "sweeps = " << sweeps << "\n";
    out << "max_attempts = " << max_attempts << "\n";
    out << "target_address = " << target_address << "\n";
    return out.str();
}

}  // namespace rpmbfi::campaign
