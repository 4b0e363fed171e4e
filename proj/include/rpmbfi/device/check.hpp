// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "rpmbfi/rng.hpp"

namespace rpmbfi::device {

enum class CheckVariant : uint8_t {
    NaiveEarlyExit,     // early-exit word compare, 0 = bad / nonzero = good
    HardenedConstant,  // success is a high-Hamming-weight constant
    DoubleCheck,       // two compare passes with a randomized gap
    ConstantTime,      // full-length accumulate compare
};

std::optional<CheckVariant> parse_check_variant(std::string_view s);
const char* name(CheckVariant v);

/// What the caller accepts as "HMAC valid" when the check returns this
/// register value.
inline constexpr uint32_t kHardenedSuccessValue = 0xA5C3B4D2;

/// Simulated address of the received-MAC buffer: the value left in the
/// return register when the check call is skipped. Non-zero by nature.
inline constexpr uint32_t kMacBufferAddress = 0x20003A40;

/// Faults affecting one check invocation, bucketed from the pulse schedule
/// by the write pipeline.
struct CheckFaults {
    bool skip_call = false;
    uint16_t skip_words = 0;  // bit i: word i of this invocation is skipped
    std::optional<uint32_t> length_override;
    std::optional<uint32_t> return_set;
    uint32_t return_xor = 0;

    bool any() const {
        return skip_call || skip_words != 0 || length_override.has_value() ||
               return_set.has_value() || return_xor != 0;
    }
};

struct CheckOutcome {
    bool accepted = false;
    uint32_t reg = 0;             // final return-register value seen by the caller
    int compares_executed = 0;    // HmacCompareWord micro-ops that actually ran
    std::vector<uint8_t> executed_words;  // invocation-local word indices, in order
};

/// The controller's MAC-compare routine: word count is (length+3)>>2,
/// compares 4 bytes at a time, returns 0 at the first mismatching word,
/// 1 when every word matched or when the word count is 0.
uint32_t rpmb_check_hmac(const uint8_t* mac, uint32_t length, const uint8_t* correct,
                         std::vector<uint8_t>* executed_words = nullptr);

/// Runs the selected variant over a 32-byte received/expected pair.
/// `faults` has one slot per invocation (DoubleCheck uses both).
/// `gap_rng` feeds DoubleCheck's randomized inter-check delay elsewhere;
/// the check itself is deterministic.
CheckOutcome run_check(CheckVariant variant, const uint8_t* received, const uint8_t* expected,
                       const CheckFaults faults[2]);

}  // namespace rpmbfi::device
