// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rpmbfi/device/check.hpp"
#include "rpmbfi/device/profile.hpp"
#include "rpmbfi/device/timeline.hpp"
#include "rpmbfi/fault/primitive.hpp"
#include "rpmbfi/protocol/frame.hpp"
#include "rpmbfi/protocol/mac.hpp"
#include "rpmbfi/rng.hpp"

namespace rpmbfi::device {

struct ScheduledFault {
    uint64_t delay_ns = 0;
    fault::FaultPrimitive primitive;
};
using FaultSchedule = std::vector<ScheduledFault>;

/// What the host gets back from one bus command.
struct CommandResponse {
    enum class Kind : uint8_t { R1Status, DataFrames, ExtCsd, Unresponsive };

    Kind kind = Kind::R1Status;
    uint64_t busy_duration_ns = 0;
    std::vector<protocol::RpmbFrame> frames;
    std::array<uint8_t, 512> ext_csd{};
    uint8_t fill = 0;  // Unresponsive: every byte of the response reads as this

    static CommandResponse r1(uint64_t busy_ns);
    static CommandResponse data(std::vector<protocol::RpmbFrame> frames);
    static CommandResponse ext(const std::array<uint8_t, 512>& image);
    static CommandResponse unresponsive(uint8_t fill);

    bool responsive() const { return kind != Kind::Unresponsive; }
};

struct ExecutedOp {
    MicroOp op;
    uint8_t word_index = 0;
    uint64_t start_ns = 0;
    uint64_t end_ns = 0;
};

/// Micro-ops that actually ran during the last authenticated write, in
/// execution order. The number of HmacCompareWord entries is the timing
/// side channel the naive check leaks.
struct ExecutionTrace {
    std::vector<ExecutedOp> ops;

    int compare_word_count() const;
    bool contains(MicroOp op) const;
    void clear() { ops.clear(); }
};

struct DebugDisabled : std::runtime_error {
    DebugDisabled() : std::runtime_error("debug interface is disabled in the device profile") {}
};

struct SnapshotError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DebugRegion : uint8_t {
    SramCounter,
    WriteCounter,
    RpmbBlock,
    UserSector,
    ExtCsdHead,
};

/// Expected fault-observer outputs (4 outer x 62500 inner iterations, +7
/// per inner iteration).
inline constexpr uint32_t kObserverExpectedIterations = 250'000;
inline constexpr uint32_t kObserverExpectedValue = 1'750'000;
inline constexpr uint64_t kObserverIterationNs = 4;
inline constexpr uint64_t kObserverDurationNs =
    kObserverExpectedIterations * kObserverIterationNs;

/// Emulated eMMC controller: RPMB state machine, HMAC check variants, and
/// the fault-observer workload. Scheduled faults act on the micro-op whose
/// timeline interval contains their delay. Single-threaded; one instance
/// per worker.
class RpmbDevice {
public:
    RpmbDevice(DeviceProfile profile, uint64_t seed);

    // --- bus commands -----------------------------------------------------
    /// CMD23/CMD25 path: dispatches on the request type of the first frame.
    CommandResponse write_frames(std::span<const protocol::RpmbFrame> frames,
                                 const FaultSchedule& faults = {});
    /// CMD23/CMD18 path: returns the response frames prepared by the last
    /// request, at most `count` of them.
    CommandResponse read_frames(uint16_t count);
    /// CMD8 with the fault-observer hook installed: runs the observer loop
    /// and reports its outputs in the first 8 extended-CSD bytes.
    CommandResponse read_ext_csd(const FaultSchedule& faults = {});
    void hard_reset();

    /// Queues a fault for the next timeline-running command. Crash
    /// primitives take effect immediately (the chip hangs now).
    void pend_fault(const ScheduledFault& fault);

    // --- plain (non-RPMB) user area ---------------------------------------
    std::array<uint8_t, 512> read_user_sector(uint32_t index) const;
    void write_user_sector(uint32_t index, std::span<const uint8_t> data);

    /// Flash wear from one pulse: each user sector is corrupted with the
    /// profile's wear probability.
    void apply_pulse_wear(Rng& rng);

    // --- vendor/debug interface -------------------------------------------
    void debug_poke_counter(uint32_t value);
    std::vector<uint8_t> debug_peek(DebugRegion region, uint32_t index = 0) const;

    // --- introspection ------------------------------------------------------
    bool crashed() const { return crashed_; }
    bool key_programmed() const { return key_programmed_; }
    uint32_t write_counter() const { return write_counter_; }
    uint32_t sram_counter() const { return sram_counter_; }
    bool counter_expired() const { return counter_expired_; }
    protocol::ResultCode stored_result() const;
    const ExecutionTrace& last_write_trace() const { return last_trace_; }
    uint32_t rpmb_block_count() const { return profile_.rpmb_blocks; }
    uint32_t user_sector_count() const { return profile_.user_sectors; }
    std::span<const uint8_t, 256> rpmb_block(uint32_t index) const;
    const DeviceProfile& profile() const { return profile_; }
    void set_check_variant(CheckVariant v) { profile_.check_variant = v; }

    /// Timeline the next write would follow, with a fixed DoubleCheck gap;
    /// used for delay-window introspection without consuming RNG state.
    MicroOpTimeline preview_timeline() const;

    // --- snapshot ----------------------------------------------------------
    std::vector<uint8_t> export_snapshot() const;
    static RpmbDevice import_snapshot(std::span<const uint8_t> blob);

private:
    CommandResponse run_auth_write(std::span<const protocol::RpmbFrame> frames,
                                   const FaultSchedule& faults);
    void handle_program_key(const protocol::RpmbFrame& frame);
    void prepare_counter_response(const protocol::RpmbFrame& request);
    void prepare_read_response(const protocol::RpmbFrame& request);
    void prepare_result_response();
    void apply_memory_fault(const fault::FaultPrimitive& f);
    void mac_response(std::vector<protocol::RpmbFrame>& frames) const;
    void store_result(protocol::ResultCode::Kind kind);

    DeviceProfile profile_;
    Rng rng_;

    bool key_programmed_ = false;
    protocol::HmacKey key_{};
    uint32_t write_counter_ = 0;  // persistent counter
    uint32_t sram_counter_ = 0;   // volatile working copy, corruptible
    bool counter_expired_ = false;
    bool crashed_ = false;
    uint8_t fill_ = 0x00;
    uint16_t stored_result_raw_ = 0;
    std::array<uint8_t, 8> ext_csd_head_{};

    std::vector<std::array<uint8_t, 256>> rpmb_;
    std::vector<std::array<uint8_t, 512>> user_;

    std::vector<protocol::RpmbFrame> pending_read_;
    FaultSchedule pending_faults_;
    ExecutionTrace last_trace_;
};

}  // namespace rpmbfi::device
