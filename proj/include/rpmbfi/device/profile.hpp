// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rpmbfi/device/check.hpp"
#include "rpmbfi/device/timeline.hpp"

namespace rpmbfi::device {

struct ProfileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Controller configuration: geometry, busy-window timings, which check
/// variant the firmware runs, and the per-pulse flash wear probability.
struct DeviceProfile {
    std::string name = "default";
    uint32_t rpmb_blocks = 1024;   // 256-byte half sectors in the RPMB area
    uint32_t user_sectors = 4096;  // 512-byte sectors in the user area
    WriteTimings timings{};
    CheckVariant check_variant = CheckVariant::NaiveEarlyExit;
    bool debug_interface = true;
    double wear_probability = 1e-4;

    static DeviceProfile parse(std::string_view text);
    static DeviceProfile load(const std::filesystem::path& path);
    /// Built-in profiles: "target1", "target2", "target3".
    static DeviceProfile builtin(std::string_view name);
    /// Resolves a name to a builtin, or a path to a file on disk.
    static DeviceProfile resolve(std::string_view name_or_path);

    std::string serialize() const;
    void save(const std::filesystem::path& path) const;

    bool operator==(const DeviceProfile&) const = default;
};

inline bool operator==(const WriteTimings& a, const WriteTimings& b) {
    return a.busy_end_ns == b.busy_end_ns && a.compare_start_ns == b.compare_start_ns &&
           a.compare_end_ns == b.compare_end_ns;
}

}  // namespace rpmbfi::device
