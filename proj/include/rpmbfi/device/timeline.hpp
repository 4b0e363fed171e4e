// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rpmbfi/device/check.hpp"
#include "rpmbfi/rng.hpp"

namespace rpmbfi::device {

/// Internal steps the controller runs through while handling an
/// authenticated write, in order.
enum class MicroOp : uint8_t {
    ReceiveData,
    CrcStatus,
    BusyAssert,
    HmacCompute,
    HmacCompareWord,  // word_index selects the compared word (and the pass)
    CounterCheck,
    AddressCheck,
    FlashWrite,
    CounterIncrement,
    ResultStore,
    BusyRelease,
};

const char* name(MicroOp op);

struct TimelineEntry {
    MicroOp op;
    uint8_t word_index = 0;  // HmacCompareWord only; pass = word_index / 8
    uint64_t start_ns = 0;
    uint64_t end_ns = 0;

    bool contains(uint64_t t) const { return t >= start_ns && t < end_ns; }
};

/// Busy-window shape of a target: where the busy signal releases and where
/// the MAC comparison sits inside it, in ns from the trigger.
struct WriteTimings {
    uint64_t busy_end_ns = 119'000;
    uint64_t compare_start_ns = 117'720;
    uint64_t compare_end_ns = 118'300;
};

/// Timestamped schedule of the controller micro-operations for one
/// authenticated write. Intervals are contiguous, non-overlapping and
/// monotonically increasing; BusyRelease ends at the busy-window length.
class MicroOpTimeline {
public:
    /// DoubleCheck draws its randomized inter-pass gap from `gap_rng`
    /// (may be null for the other variants).
    static MicroOpTimeline for_write(const WriteTimings& timings, CheckVariant variant,
                                     Rng* gap_rng);

    std::span<const TimelineEntry> entries() const { return entries_; }
    uint64_t busy_end_ns() const { return busy_end_ns_; }

    /// Entry whose [start,end) interval contains the delay; nullptr when
    /// the delay falls past BusyRelease.
    const TimelineEntry* at_delay(uint64_t delay_ns) const;

private:
    std::vector<TimelineEntry> entries_;
    uint64_t busy_end_ns_ = 0;
};

}  // namespace rpmbfi::device
