// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "rpmbfi/campaign/campaigns.hpp"
#include "rpmbfi/campaign/config.hpp"
#include "rpmbfi/device/profile.hpp"
#include "rpmbfi/fault/susceptibility.hpp"

namespace rpmbfi::campaign {

inline constexpr std::string_view kArtifactVersion = "0.1.0";

// CSV column contracts (stable, pinned by golden tests):
//   heatmap.csv: x,y,normal,glitch,crash
//   timing.csv:  delay_ns,result_value,outcome
//   search.csv:  trial,voltage_v,duration_ns,outcome
std::string heatmap_csv(const ProfilingResult& result);
std::string timing_csv(const SweepResult& result);
std::string search_csv(const SearchResult& result);

std::string integrity_json(const IntegrityReport& report);

/// Run provenance: artifact version, the full campaign config (replayable
/// text included), and SHA-256 hashes of both profiles.
std::string manifest_json(const CampaignConfig& config, const device::DeviceProfile& dev_profile,
                          const fault::SusceptibilityProfile& fprofile);

/// Reads the config back out of a manifest written by manifest_json.
CampaignConfig config_from_manifest(const std::filesystem::path& manifest_path);

void write_text_file(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex_of(std::string_view text);

}  // namespace rpmbfi::campaign
