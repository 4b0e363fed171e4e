// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include "rpmbfi/campaign/outcome.hpp"

#include <algorithm>

#include "rpmbfi/bytes.hpp"

namespace rpmbfi::campaign {

using device::CommandResponse;

const char* name(Outcome o) {
    switch (o) {
        case Outcome::Normal: return "normal";
        case Outcome::Glitch: return "glitch";
        case Outcome::Crash: return "crash";
        case Outcome::Success: return "success";
        case Outcome::Error: return "error";
    }
    return "?";
}

namespace {

bool all_fill(std::span<const uint8_t> bytes) {
    if (bytes.empty()) return false;
    uint8_t first = bytes.front();
    if (first != 0x00 && first != 0xff) return false;
    return std::all_of(bytes.begin(), bytes.end(), [first](uint8_t b) { return b == first; });
}

uint16_t fill16(uint8_t fill) { return static_cast<uint16_t>(fill) << 8 | fill; }

}  // namespace

Outcome classify_observer(const CommandResponse& response) {
    if (!response.responsive()) return Outcome::Crash;
    if (response.kind != CommandResponse::Kind::ExtCsd) return Outcome::Glitch;
    if (all_fill(response.ext_csd)) return Outcome::Crash;
    uint32_t total = 0, value = 0;
    for (int b = 3; b >= 0; --b) {
        total = total << 8 | response.ext_csd[b];
        value = value << 8 | response.ext_csd[4 + b];
    }
    if (total == device::kObserverExpectedIterations && value == device::kObserverExpectedValue) {
        return Outcome::Normal;
    }
    return Outcome::Glitch;
}

RpmbClassification classify_rpmb(const CommandResponse& result_read) {
    RpmbClassification c;
    if (!result_read.responsive()) {
        c.outcome = Outcome::Crash;
        c.result_value = fill16(result_read.fill);
        return c;
    }
    if (result_read.kind != CommandResponse::Kind::DataFrames || result_read.frames.empty()) {
        c.outcome = Outcome::Crash;
        c.result_value = 0x0000;
        return c;
    }
    const auto& frame = result_read.frames.front();
    auto image = frame.serialize();
    if (all_fill(image)) {
        c.outcome = Outcome::Crash;
        c.result_value = fill16(image[0]);
        return c;
    }
    c.result_value = frame.result;
    c.counter = frame.write_counter;
    auto code = frame.result_code();
    using Kind = protocol::ResultCode::Kind;
    switch (code.kind) {
        case Kind::AuthFailure: c.outcome = Outcome::Normal; break;
        case Kind::OperationOk: c.outcome = Outcome::Success; break;
        default: c.outcome = Outcome::Error; break;
    }
    return c;
}

}  // namespace rpmbfi::campaign
