// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include "rpmbfi/fault/susceptibility.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rpmbfi/bytes.hpp"
#include "rpmbfi/protocol/mac.hpp"

namespace rpmbfi::fault {

OutOfGrid::OutOfGrid(double x, double y)
    : std::runtime_error("pulse position (" + std::to_string(x) + ", " + std::to_string(y) +
                         ") mm is outside the profiling grid") {}

PulseOutOfRange::PulseOutOfRange(double voltage_v, double duration_ns)
    : std::runtime_error("pulse " + std::to_string(voltage_v) + " V / " +
                         std::to_string(duration_ns) + " ns is outside the injector bounds") {}

const CellRates& SusceptibilityProfile::cell(int x, int y) const {
    if (x < 0 || x >= width || y < 0 || y >= height) throw OutOfGrid(x, y);
    return cells_[size_t(y) * width + x];
}

CellRates& SusceptibilityProfile::cell_mut(int x, int y) {
    if (x < 0 || x >= width || y < 0 || y >= height) throw OutOfGrid(x, y);
    return cells_[size_t(y) * width + x];
}

void SusceptibilityProfile::resize(int w, int h) {
    width = w;
    height = h;
    cells_.assign(size_t(w) * h, CellRates{});
}

std::pair<int, int> SusceptibilityProfile::cell_of(double x_mm, double y_mm) const {
    int x = static_cast<int>(std::floor(x_mm));
    int y = static_cast<int>(std::floor(y_mm));
    if (x < 0 || x >= width || y < 0 || y >= height) throw OutOfGrid(x_mm, y_mm);
    return {x, y};
}

OutcomeClass SusceptibilityProfile::sample_class(const PulseSpec& pulse, Rng& rng) const {
    auto [x, y] = cell_of(pulse.x_mm, pulse.y_mm);
    const CellRates& rates = cell(x, y);
    double crash_p = pulse.voltage_v > threshold_v ? rates.crash_elevated : rates.crash;
    double r = rng.uniform01();
    if (r < rates.glitch) return OutcomeClass::Glitch;
    if (r < rates.glitch + crash_p) return OutcomeClass::Crash;
    return OutcomeClass::None;
}

FaultPrimitive SusceptibilityProfile::sample_primitive(OutcomeClass cls, Rng& rng) const {
    switch (cls) {
        case OutcomeClass::None:
            return FaultPrimitive::none();
        case OutcomeClass::Crash:
            return FaultPrimitive::crash(rng.chance(0.5) ? 0xFF : 0x00);
        case OutcomeClass::Glitch: {
            const GlitchWeights& w = glitch_weights;
            const double weights[] = {w.skip_call, w.length_zero, w.return_corrupt,
                                      w.generic_corrupt, w.sram_counter};
            switch (rng.pick_weighted(weights)) {
                case 0: return FaultPrimitive::skip_call();
                case 1:
                    return FaultPrimitive::corrupt_register(FaultPrimitive::Reg::Length, 0);
                case 2:
                    return FaultPrimitive::corrupt_register(FaultPrimitive::Reg::Return,
                                                            rng.next_u32());
                case 3:
                    return FaultPrimitive::corrupt_register(FaultPrimitive::Reg::Generic,
                                                            rng.next_u32());
                default:
                    return FaultPrimitive::corrupt_sram_counter(rng.next_u32());
            }
        }
    }
    return FaultPrimitive::none();
}

std::pair<int, int> SusceptibilityProfile::best_cell() const {
    std::pair<int, int> best{0, 0};
    double best_rate = -1.0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (cell(x, y).glitch > best_rate) {
                best_rate = cell(x, y).glitch;
                best = {x, y};
            }
        }
    }
    return best;
}

FaultPrimitive sample_fault(const SusceptibilityProfile& profile, const PulseSpec& pulse,
                            Rng& rng) {
    OutcomeClass cls = profile.sample_class(pulse, rng);
    return profile.sample_primitive(cls, rng);
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_f64(std::string_view v, std::string_view what) {
    try {
        size_t pos = 0;
        double out = std::stod(std::string(v), &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return out;
    } catch (const std::exception&) {
        throw ProfileError("bad number for '" + std::string(what) + "': " + std::string(v));
    }
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void check_rates(const CellRates& c) {
    auto ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!ok(c.glitch) || !ok(c.crash) || !ok(c.crash_elevated) || c.glitch + c.crash > 1.0 ||
        c.glitch + c.crash_elevated > 1.0) {
        throw ProfileError("cell rates must be probabilities summing to at most 1");
    }
}

}  // namespace

SusceptibilityProfile SusceptibilityProfile::parse(std::string_view text) {
    SusceptibilityProfile p;
    bool saw_kind = false, saw_grid = false;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;

        if (line.substr(0, 5) == "cell ") {
            if (!saw_grid) throw ProfileError("'cell' before 'grid'");
            std::istringstream cs{std::string(line.substr(5))};
            int x, y;
            double g, c, ce;
            if (!(cs >> x >> y >> g >> c >> ce)) throw ProfileError("bad cell line: " + raw);
            std::string rest;
            if (cs >> rest) throw ProfileError("trailing tokens on cell line: " + raw);
            CellRates& cell = p.cell_mut(x, y);
            cell = {g, c, ce};
            check_rates(cell);
            continue;
        }

        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ProfileError("expected 'key = value': " + raw);
        std::string_view key = trim(line.substr(0, eq));
        std::string_view val = trim(line.substr(eq + 1));
        if (key == "kind") {
            if (val != "fault-profile") throw ProfileError("not a fault profile");
            saw_kind = true;
        } else if (key == "name") {
            p.name = std::string(val);
        } else if (key == "grid") {
            std::istringstream gs{std::string(val)};
            int w, h;
            if (!(gs >> w >> h) || w <= 0 || h <= 0) throw ProfileError("bad grid: " + raw);
            p.resize(w, h);
            saw_grid = true;
        } else if (key == "threshold_v") {
            p.threshold_v = parse_f64(val, key);
        } else if (key == "voltage_range_v") {
            std::istringstream vs{std::string(val)};
            if (!(vs >> p.voltage_min >> p.voltage_max)) throw ProfileError("bad voltage range");
        } else if (key == "duration_range_ns") {
            std::istringstream vs{std::string(val)};
            if (!(vs >> p.duration_min_ns >> p.duration_max_ns))
                throw ProfileError("bad duration range");
        } else if (key == "gen_skip_call") {
            p.glitch_weights.skip_call = parse_f64(val, key);
        } else if (key == "gen_length_zero") {
            p.glitch_weights.length_zero = parse_f64(val, key);
        } else if (key == "gen_return_corrupt") {
            p.glitch_weights.return_corrupt = parse_f64(val, key);
        } else if (key == "gen_generic_corrupt") {
            p.glitch_weights.generic_corrupt = parse_f64(val, key);
        } else if (key == "gen_sram_counter") {
            p.glitch_weights.sram_counter = parse_f64(val, key);
        } else {
            throw ProfileError("unknown fault profile key: " + std::string(key));
        }
    }
    if (!saw_kind) throw ProfileError("missing 'kind = fault-profile' header");
    return p;
}

SusceptibilityProfile SusceptibilityProfile::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ProfileError("cannot open fault profile: " + path.string());
    std::stringstream buf;
    buf << f.rdbuf();
    return parse(buf.str());
}

std::string SusceptibilityProfile::serialize() const {
    std::ostringstream out;
    out << "kind = fault-profile\n";
    out << "name = " << name << "\n";
    out << "grid = " << width << " " << height << "\n";
    out << "threshold_v = " << fmt(threshold_v) << "\n";
    out << "voltage_range_v = " << fmt(voltage_min) << " " << fmt(voltage_max) << "\n";
    out << "duration_range_ns = " << fmt(duration_min_ns) << " " << fmt(duration_max_ns) << "\n";
    out << "gen_skip_call = " << fmt(glitch_weights.skip_call) << "\n";
    out << "gen_length_zero = " << fmt(glitch_weights.length_zero) << "\n";
    out << "gen_return_corrupt = " << fmt(glitch_weights.return_corrupt) << "\n";
    out << "gen_generic_corrupt = " << fmt(glitch_weights.generic_corrupt) << "\n";
    out << "gen_sram_counter = " << fmt(glitch_weights.sram_counter) << "\n";
    out << "# cell <x> <y> <glitch> <crash> <crash_above_threshold>\n";
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const CellRates& c = cell(x, y);
            if (c.glitch == 0.0 && c.crash == 0.0 && c.crash_elevated == 0.0) continue;
            out << "cell " << x << " " << y << " " << fmt(c.glitch) << " " << fmt(c.crash) << " "
                << fmt(c.crash_elevated) << "\n";
        }
    }
    return out.str();
}

void SusceptibilityProfile::save(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ProfileError("cannot write fault profile: " + path.string());
    f << serialize();
}

std::string SusceptibilityProfile::sha256_hex() const {
    std::string text = serialize();
    auto digest = protocol::sha256(
        std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
    return to_hex(digest);
}

// ---------------------------------------------------------------------------
// Shipped maps. Per-cell numbers are qualitative: a broad susceptible
// region with a 30% hotspot at (6,4) for target1, perimeter-only coupling
// with a hotspot at (10,0) for target2, and a weak (<10%) hotspot at
// (10,1) for target3. target2 and target3 crash more readily above 200 V.

namespace {

double round4(double v) { return std::round(v * 10000.0) / 10000.0; }

void fill_gaussian(SusceptibilityProfile& p, int cx, int cy, double peak_glitch,
                   double sigma2_glitch, double crash_ratio, double crash_boost,
                   double floor_cut) {
    for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
            double d2 = double(x - cx) * (x - cx) + double(y - cy) * (y - cy);
            double g = peak_glitch * std::exp(-d2 / sigma2_glitch);
            if (g < floor_cut) continue;
            CellRates& c = p.cell_mut(x, y);
            c.glitch = round4(g);
            c.crash = round4(g * crash_ratio);
            c.crash_elevated = round4(std::min(0.95 - c.glitch, c.crash * crash_boost));
        }
    }
}

}  // namespace

SusceptibilityProfile SusceptibilityProfile::builtin(std::string_view name) {
    SusceptibilityProfile p;
    p.name = std::string(name);
    p.resize(13, 9);

    if (name == "target1") {
        // Broad susceptible region over the controller; hotspot glitches
        // at 30% and corrupts the SRAM-resident write counter now and then.
        fill_gaussian(p, 6, 4, 0.30, 12.5, 0.4, 1.0, 0.02);
        p.cell_mut(6, 4).glitch = 0.30;
    } else if (name == "target2") {
        // Coupling only around the perimeter, strongest near (10,0);
        // crash-prone, and markedly more so above 200 V.
        p.glitch_weights.sram_counter = 0.0;
        p.glitch_weights.generic_corrupt = 0.20;
        for (int y = 0; y < p.height; ++y) {
            for (int x = 0; x < p.width; ++x) {
                bool perimeter = x == 0 || x == p.width - 1 || y == 0 || y == p.height - 1;
                if (!perimeter) continue;
                double d2 = double(x - 10) * (x - 10) + double(y - 0) * (y - 0);
                double s = std::exp(-d2 / 18.0);
                if (s < 0.05) continue;
                CellRates& c = p.cell_mut(x, y);
                c.glitch = round4(0.12 * s);
                c.crash = round4(0.20 * s);
                c.crash_elevated = round4(std::min(0.85, 0.45 * s));
            }
        }
    } else if (name == "target3") {
        // Narrow hotspot at (10,1) with a sub-10% glitch rate; crashes
        // escalate clearly above 200 V. No SRAM counter corruption was
        // seen on this part.
        p.glitch_weights.sram_counter = 0.0;
        p.glitch_weights.generic_corrupt = 0.20;
        fill_gaussian(p, 10, 1, 0.08, 2.88, 1.25, 2.5, 0.01);
        p.cell_mut(10, 1).glitch = 0.08;
        p.cell_mut(10, 1).crash = 0.10;
        p.cell_mut(10, 1).crash_elevated = 0.25;
    } else if (name == "inert") {
        // All cells dead; useful as a control.
    } else {
        throw ProfileError("unknown builtin fault profile: " + std::string(name));
    }
    return p;
}

SusceptibilityProfile SusceptibilityProfile::resolve(std::string_view name_or_path) {
    if (name_or_path == "target1" || name_or_path == "target2" || name_or_path == "target3" ||
        name_or_path == "inert") {
        return builtin(name_or_path);
    }
    return load(std::filesystem::path(name_or_path));
}

}  // namespace rpmbfi::fault
