// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include "rpmbfi/device/check.hpp"

namespace rpmbfi::campaign {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One campaign run, fully specified: replaying the same config (same
/// seed included) reproduces the output files byte for byte.
struct CampaignConfig {
    std::string experiment;           // profile | search | sweep | attack | integrity
    std::string device_profile = "target1";
    std::string fault_profile = "target1";
    uint64_t seed = 1;
    std::optional<device::CheckVariant> variant_override;

    // profiling
    uint32_t iterations_per_cell = 25;
    double pulse_voltage = 200.0;
    double pulse_duration_ns = 100.0;
    int workers = 1;

    // parameter search
    uint32_t trials = 1500;

    // timing sweep / attack / integrity; sweeps default to 110000:125000 ns,
    // attack and integrity default to the device profile's compare window
    std::optional<std::pair<uint64_t, uint64_t>> window_ns;
    uint64_t step_ns = 10;
    std::optional<std::pair<int, int>> cell;  // defaults to the profile's best cell
    uint32_t sweeps = 1;

    // attack / integrity
    uint32_t max_attempts = 50;
    uint16_t target_address = 0;

    static CampaignConfig parse(std::string_view text);
    static CampaignConfig load(const std::filesystem::path& path);
    std::string serialize() const;
};

}  // namespace rpmbfi::campaign
