// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "rpmbfi/campaign/config.hpp"
#include "rpmbfi/campaign/outcome.hpp"
#include "rpmbfi/device/device.hpp"
#include "rpmbfi/fault/injector.hpp"
#include "rpmbfi/fault/susceptibility.hpp"

namespace rpmbfi::campaign {

/// A cross-checked per-record guarantee failed mid-run (CLI exit 3).
struct InvariantViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Spatial profiling (fault observer over the grid)

struct HeatmapCell {
    int x = 0, y = 0;
    uint32_t iterations = 0;
    uint32_t normal = 0, glitch = 0, crash = 0;
};

struct ProfilingResult {
    std::vector<HeatmapCell> cells;  // row-major, y outer

    const HeatmapCell& at(int x, int y, int width) const { return cells[size_t(y) * width + x]; }
};

ProfilingResult run_profiling(const CampaignConfig& config,
                              const device::DeviceProfile& dev_profile,
                              std::shared_ptr<const fault::SusceptibilityProfile> fprofile);

// ---------------------------------------------------------------------------
// Glitch-parameter search (random voltage/duration at the best cell)

struct SearchTrial {
    uint32_t trial = 0;
    int voltage_v = 0;
    int duration_ns = 0;
    Outcome outcome = Outcome::Normal;
};

struct SearchResult {
    std::vector<SearchTrial> trials;
    // voltage marginals split at the escalation threshold
    uint32_t below_count = 0, below_crash = 0;
    uint32_t above_count = 0, above_crash = 0;
    // outcome counts per duration decile, [decile][class {normal,glitch,crash}]
    std::array<std::array<uint32_t, 3>, 10> duration_deciles{};
    double duration_chi_square = 0.0;
};

SearchResult run_parameter_search(const CampaignConfig& config,
                                  const device::DeviceProfile& dev_profile,
                                  std::shared_ptr<const fault::SusceptibilityProfile> fprofile);

// ---------------------------------------------------------------------------
// Timing sweep (wrong-HMAC writes across the busy window)

struct TimingTracePoint {
    uint64_t delay_ns = 0;
    uint16_t result_value = 0;
    Outcome outcome = Outcome::Normal;
    // simulation introspection, not part of the CSV contract
    int compare_ops = 0;
    bool check_invoked = false;
    fault::FaultPrimitive::Kind fault_kind = fault::FaultPrimitive::Kind::None;
};

struct SuccessWindow {
    uint64_t begin_ns = 0;
    uint64_t end_ns = 0;  // inclusive of the last successful delay
};

struct SweepResult {
    std::vector<TimingTracePoint> points;
    std::vector<SuccessWindow> windows;
    uint32_t successes = 0;
};

/// Maximal runs of successful delays, merging runs separated by less than
/// 50 ns of non-success.
std::vector<SuccessWindow> detect_success_windows(const std::vector<TimingTracePoint>& points);

SweepResult run_timing_sweep(const CampaignConfig& config,
                             const device::DeviceProfile& dev_profile,
                             std::shared_ptr<const fault::SusceptibilityProfile> fprofile);

// ---------------------------------------------------------------------------
// Repeated in-window attack (until bypass or cap)

struct AttackCampaignResult {
    bool success = false;
    uint32_t attempts = 0;
    uint64_t success_delay_ns = 0;
    uint32_t crashes = 0;
    uint32_t counter_corruption_events = 0;
};

AttackCampaignResult run_attack(const CampaignConfig& config,
                                const device::DeviceProfile& dev_profile,
                                std::shared_ptr<const fault::SusceptibilityProfile> fprofile);

// ---------------------------------------------------------------------------
// Integrity campaign (attack once, prove nothing else changed)

struct IntegrityReport {
    bool success = false;
    uint32_t attempts = 0;
    uint64_t success_delay_ns = 0;
    uint32_t counter_before = 0;
    uint32_t counter_after = 0;
    std::string user_digest_before;  // SHA-256, hex
    std::string user_digest_after;   // after repair of wear corruption
    std::vector<uint32_t> rpmb_diff_blocks;
    std::vector<uint32_t> attacked_blocks;
    std::vector<uint32_t> corrupted_repaired_sectors;
    uint32_t counter_corruption_events = 0;
    uint32_t crashes = 0;
    bool digests_match = false;
    bool pass = false;
};

IntegrityReport run_integrity_campaign(const CampaignConfig& config,
                                       const device::DeviceProfile& dev_profile,
                                       std::shared_ptr<const fault::SusceptibilityProfile> fprofile);

}  // namespace rpmbfi::campaign
