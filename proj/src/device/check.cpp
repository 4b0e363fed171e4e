// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include "rpmbfi/device/check.hpp"

#include <cstring>

namespace rpmbfi::device {

std::optional<CheckVariant> parse_check_variant(std::string_view s) {
    if (s == "naive") return CheckVariant::NaiveEarlyExit;
    if (s == "hardened-constant") return CheckVariant::HardenedConstant;
    if (s == "double-check") return CheckVariant::DoubleCheck;
    if (s == "constant-time") return CheckVariant::ConstantTime;
    return std::nullopt;
}

const char* name(CheckVariant v) {
    switch (v) {
        case CheckVariant::NaiveEarlyExit: return "naive";
        case CheckVariant::HardenedConstant: return "hardened-constant";
        case CheckVariant::DoubleCheck: return "double-check";
        case CheckVariant::ConstantTime: return "constant-time";
    }
    return "?";
}

namespace {

uint32_t load_word(const uint8_t* p) {
    uint32_t w;
    std::memcpy(&w, p, 4);
    return w;
}

// Listing-2-shaped loop with per-word skip faults folded in. A skipped
// word compare is treated as matching (the compare instruction never ran).
uint32_t check_words(const uint8_t* mac, uint32_t length, const uint8_t* correct,
                     uint16_t skip_words, uint32_t success_value,
                     std::vector<uint8_t>* executed) {
    uint32_t words = (length + 3) >> 2;
    for (uint32_t i = 0; i < words; ++i) {
        if (skip_words & (1u << i)) continue;
        if (executed) executed->push_back(static_cast<uint8_t>(i));
        if (load_word(mac + i * 4) != load_word(correct + i * 4)) return 0;
    }
    return success_value;
}

}  // namespace

uint32_t rpmb_check_hmac(const uint8_t* mac, uint32_t length, const uint8_t* correct,
                         std::vector<uint8_t>* executed_words) {
    return check_words(mac, length, correct, 0, 1, executed_words);
}

namespace {

struct Invocation {
    uint32_t reg = 0;
    std::vector<uint8_t> executed;
};

Invocation run_one(CheckVariant variant, const uint8_t* received, const uint8_t* expected,
                   const CheckFaults& f) {
    Invocation inv;
    if (f.skip_call) {
        // Call never happens; r0 still holds the pointer to the received MAC.
        inv.reg = kMacBufferAddress;
        return inv;
    }
    uint32_t length = f.length_override.value_or(32);
    switch (variant) {
        case CheckVariant::NaiveEarlyExit:
        case CheckVariant::DoubleCheck:
            inv.reg = check_words(received, length, expected, f.skip_words, 1, &inv.executed);
            break;
        case CheckVariant::HardenedConstant:
            // Rejects a corrupted length outright instead of skipping the
            // loop, then reports success as a non-trivial constant.
            if (length != 32) {
                inv.reg = 0;
            } else {
                inv.reg = check_words(received, length, expected, f.skip_words,
                                      kHardenedSuccessValue, &inv.executed);
            }
            break;
        case CheckVariant::ConstantTime: {
            // Always checks the entire MAC: the loop bound is a constant,
            // so a corrupted length argument cannot shorten it.
            (void)length;
            uint32_t diff = 0;
            for (uint32_t i = 0; i < 8; ++i) {
                if (f.skip_words & (1u << i)) continue;
                inv.executed.push_back(static_cast<uint8_t>(i));
                diff |= load_word(received + i * 4) ^ load_word(expected + i * 4);
            }
            inv.reg = diff == 0 ? 1 : 0;
            break;
        }
    }
    if (f.return_set) inv.reg = *f.return_set;
    inv.reg ^= f.return_xor;
    return inv;
}

}  // namespace

CheckOutcome run_check(CheckVariant variant, const uint8_t* received, const uint8_t* expected,
                       const CheckFaults faults[2]) {
    CheckOutcome out;
    if (variant == CheckVariant::DoubleCheck) {
        Invocation a = run_one(variant, received, expected, faults[0]);
        Invocation b = run_one(variant, received, expected, faults[1]);
        out.accepted = a.reg != 0 && b.reg != 0;
        out.reg = b.reg;
        for (auto& w : b.executed) w = static_cast<uint8_t>(w + 8);  // second pass
        out.executed_words = std::move(a.executed);
        out.executed_words.insert(out.executed_words.end(), b.executed.begin(), b.executed.end());
    } else {
        Invocation a = run_one(variant, received, expected, faults[0]);
        out.reg = a.reg;
        out.executed_words = std::move(a.executed);
        out.accepted = variant == CheckVariant::HardenedConstant ? a.reg == kHardenedSuccessValue
                                                                 : a.reg != 0;
    }
    out.compares_executed = static_cast<int>(out.executed_words.size());
    return out;
}

}  // namespace rpmbfi::device
