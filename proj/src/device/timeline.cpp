// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include "rpmbfi/device/timeline.hpp"

#include <algorithm>
#include <cassert>

namespace rpmbfi::device {

const char* name(MicroOp op) {
    switch (op) {
        case MicroOp::ReceiveData: return "ReceiveData";
        case MicroOp::CrcStatus: return "CrcStatus";
        case MicroOp::BusyAssert: return "BusyAssert";
        case MicroOp::HmacCompute: return "HmacCompute";
        case MicroOp::HmacCompareWord: return "HmacCompareWord";
        case MicroOp::CounterCheck: return "CounterCheck";
        case MicroOp::AddressCheck: return "AddressCheck";
        case MicroOp::FlashWrite: return "FlashWrite";
        case MicroOp::CounterIncrement: return "CounterIncrement";
        case MicroOp::ResultStore: return "ResultStore";
        case MicroOp::BusyRelease: return "BusyRelease";
    }
    return "?";
}

namespace {

// Fixed head-of-window durations; everything between BusyAssert and the
// compare window is MAC computation.
constexpr uint64_t kReceiveTailNs = 1'000;
constexpr uint64_t kCrcStatusNs = 1'000;
constexpr uint64_t kBusyAssertNs = 500;

void push_compare_words(std::vector<TimelineEntry>& out, uint64_t begin, uint64_t end,
                        int pass) {
    const uint64_t width = end - begin;
    for (int i = 0; i < 8; ++i) {
        uint64_t s = begin + width * uint64_t(i) / 8;
        uint64_t e = begin + width * uint64_t(i + 1) / 8;
        out.push_back({MicroOp::HmacCompareWord, static_cast<uint8_t>(pass * 8 + i), s, e});
    }
}

}  // namespace

MicroOpTimeline MicroOpTimeline::for_write(const WriteTimings& t, CheckVariant variant,
                                           Rng* gap_rng) {
    assert(t.compare_start_ns > kReceiveTailNs + kCrcStatusNs + kBusyAssertNs);
    assert(t.compare_end_ns > t.compare_start_ns);
    assert(t.busy_end_ns > t.compare_end_ns);

    MicroOpTimeline tl;
    tl.busy_end_ns_ = t.busy_end_ns;
    auto& e = tl.entries_;

    uint64_t cursor = 0;
    auto push = [&](MicroOp op, uint64_t dur) {
        e.push_back({op, 0, cursor, cursor + dur});
        cursor += dur;
    };

    push(MicroOp::ReceiveData, kReceiveTailNs);
    push(MicroOp::CrcStatus, kCrcStatusNs);
    push(MicroOp::BusyAssert, kBusyAssertNs);
    push(MicroOp::HmacCompute, t.compare_start_ns - cursor);

    const uint64_t window = t.compare_end_ns - t.compare_start_ns;
    if (variant == CheckVariant::DoubleCheck) {
        // Two compare passes separated by a randomized idle gap (the busy
        // line stays asserted), each pass covering all 8 words.
        uint64_t max_gap = std::max<uint64_t>(window / 4, 2);
        uint64_t gap = gap_rng ? max_gap / 2 + gap_rng->below(max_gap / 2 + 1) : max_gap / 2;
        uint64_t pass = (window - gap) / 2;
        push_compare_words(e, cursor, cursor + pass, 0);
        cursor += pass;
        push(MicroOp::BusyAssert, gap);
        push_compare_words(e, cursor, t.compare_end_ns, 1);
        cursor = t.compare_end_ns;
    } else {
        push_compare_words(e, cursor, t.compare_end_ns, 0);
        cursor = t.compare_end_ns;
    }

    // The tail splits evenly across the post-compare steps.
    const MicroOp tail_ops[] = {MicroOp::CounterCheck, MicroOp::AddressCheck, MicroOp::FlashWrite,
                                MicroOp::CounterIncrement, MicroOp::ResultStore,
                                MicroOp::BusyRelease};
    const uint64_t tail_begin = cursor;
    const uint64_t tail = t.busy_end_ns - tail_begin;
    for (int i = 0; i < 6; ++i) {
        uint64_t s = tail_begin + tail * uint64_t(i) / 6;
        uint64_t end = tail_begin + tail * uint64_t(i + 1) / 6;
        e.push_back({tail_ops[i], 0, s, end});
    }
    return tl;
}

const TimelineEntry* MicroOpTimeline::at_delay(uint64_t delay_ns) const {
    auto it = std::upper_bound(entries_.begin(), entries_.end(), delay_ns,
                               [](uint64_t t, const TimelineEntry& e) { return t < e.end_ns; });
    if (it == entries_.end() || !it->contains(delay_ns)) return nullptr;
    return &*it;
}

}  // namespace rpmbfi::device
