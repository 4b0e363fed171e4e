// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>

#include "rpmbfi/device/device.hpp"

namespace rpmbfi::campaign {

enum class Outcome : uint8_t { Normal, Glitch, Crash, Success, Error };

const char* name(Outcome o);

/// Observer classification: the expected (250000, 1750000) pair is Normal,
/// an all-0x00/0xFF image is Crash, anything else responsive is Glitch.
Outcome classify_observer(const device::CommandResponse& response);

struct RpmbClassification {
    Outcome outcome = Outcome::Normal;
    uint16_t result_value = 0;  // raw register value, or the crash fill pattern
    std::optional<uint32_t> counter;
};

/// Result-register classification for the RPMB campaigns: 0x02 is the
/// expected wrong-HMAC answer (Normal), 0x00 means the authentication was
/// bypassed (Success), an unresponsive fill is Crash, anything else Error.
RpmbClassification classify_rpmb(const device::CommandResponse& result_read);

}  // namespace rpmbfi::campaign
