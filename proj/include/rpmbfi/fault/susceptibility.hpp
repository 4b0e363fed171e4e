// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rpmbfi/fault/primitive.hpp"
#include "rpmbfi/fault/pulse.hpp"
#include "rpmbfi/rng.hpp"

namespace rpmbfi::fault {

struct OutOfGrid : std::runtime_error {
    OutOfGrid(double x, double y);
};

struct PulseOutOfRange : std::runtime_error {
    PulseOutOfRange(double voltage_v, double duration_ns);
};

struct ProfileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class OutcomeClass : uint8_t { None, Glitch, Crash };

/// Per-cell outcome rates. `crash` applies at or below the escalation
/// threshold voltage, `crash_elevated` above it; glitch probability does
/// not depend on voltage and nothing depends on pulse duration.
struct CellRates {
    double glitch = 0.0;
    double crash = 0.0;
    double crash_elevated = 0.0;
};

/// Relative weights of the concrete effects drawn for a Glitch outcome.
/// The first three are the scenario set acting on the HMAC check; the
/// rest are generic register and SRAM corruptions.
struct GlitchWeights {
    double skip_call = 0.30;
    double length_zero = 0.25;
    double return_corrupt = 0.25;
    double generic_corrupt = 0.15;
    double sram_counter = 0.05;
};

/// Spatial susceptibility map: a 1 mm grid of categorical outcome
/// distributions plus the generators that turn a drawn class into a
/// concrete FaultPrimitive. Immutable once built; share freely.
class SusceptibilityProfile {
public:
    std::string name = "custom";
    int width = 13;
    int height = 9;
    double threshold_v = 200.0;
    double voltage_min = 150.0, voltage_max = 500.0;
    double duration_min_ns = 40.0, duration_max_ns = 1000.0;
    GlitchWeights glitch_weights;

    SusceptibilityProfile() { cells_.resize(size_t(width) * height); }

    const CellRates& cell(int x, int y) const;
    CellRates& cell_mut(int x, int y);
    void resize(int w, int h);

    /// Grid cell containing a probe position; throws OutOfGrid outside.
    std::pair<int, int> cell_of(double x_mm, double y_mm) const;

    OutcomeClass sample_class(const PulseSpec& pulse, Rng& rng) const;
    FaultPrimitive sample_primitive(OutcomeClass cls, Rng& rng) const;

    /// Cell with the highest glitch rate (the Table-III "best location").
    std::pair<int, int> best_cell() const;

    static SusceptibilityProfile parse(std::string_view text);
    static SusceptibilityProfile load(const std::filesystem::path& path);
    /// Built-in maps: "target1", "target2", "target3", "inert".
    static SusceptibilityProfile builtin(std::string_view name);
    static SusceptibilityProfile resolve(std::string_view name_or_path);

    std::string serialize() const;
    void save(const std::filesystem::path& path) const;
    /// SHA-256 of the canonical serialized text, for report provenance.
    std::string sha256_hex() const;

private:
    std::vector<CellRates> cells_;
};

/// Draws the outcome class for a pulse from its grid cell, then a concrete
/// primitive from that class's generator. Deterministic given the seed.
FaultPrimitive sample_fault(const SusceptibilityProfile& profile, const PulseSpec& pulse,
                            Rng& rng);

}  // namespace rpmbfi::fault
