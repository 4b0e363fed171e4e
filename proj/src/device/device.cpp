// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include "rpmbfi/device/device.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "rpmbfi/bytes.hpp"

namespace rpmbfi::device {

using fault::FaultPrimitive;
using protocol::RequestType;
using protocol::ResponseType;
using protocol::ResultCode;
using protocol::RpmbFrame;

CommandResponse CommandResponse::r1(uint64_t busy_ns) {
    CommandResponse r;
    r.kind = Kind::R1Status;
    r.busy_duration_ns = busy_ns;
    return r;
}

CommandResponse CommandResponse::data(std::vector<RpmbFrame> frames) {
    CommandResponse r;
    r.kind = Kind::DataFrames;
    r.frames = std::move(frames);
    return r;
}

CommandResponse CommandResponse::ext(const std::array<uint8_t, 512>& image) {
    CommandResponse r;
    r.kind = Kind::ExtCsd;
    r.ext_csd = image;
    return r;
}

CommandResponse CommandResponse::unresponsive(uint8_t fill) {
    CommandResponse r;
    r.kind = Kind::Unresponsive;
    r.fill = fill;
    return r;
}

int ExecutionTrace::compare_word_count() const {
    return static_cast<int>(
        std::count_if(ops.begin(), ops.end(),
                      [](const ExecutedOp& e) { return e.op == MicroOp::HmacCompareWord; }));
}

bool ExecutionTrace::contains(MicroOp op) const {
    return std::any_of(ops.begin(), ops.end(),
                       [op](const ExecutedOp& e) { return e.op == op; });
}

RpmbDevice::RpmbDevice(DeviceProfile profile, uint64_t seed)
    : profile_(std::move(profile)), rng_(seed) {
    rpmb_.resize(profile_.rpmb_blocks);
    user_.resize(profile_.user_sectors);
}

ResultCode RpmbDevice::stored_result() const { return ResultCode::from_raw(stored_result_raw_); }

std::span<const uint8_t, 256> RpmbDevice::rpmb_block(uint32_t index) const {
    if (index >= rpmb_.size()) throw std::out_of_range("rpmb block index");
    return std::span<const uint8_t, 256>(rpmb_[index]);
}

void RpmbDevice::store_result(ResultCode::Kind kind) {
    stored_result_raw_ = ResultCode::make(kind, counter_expired_).to_raw();
}

void RpmbDevice::pend_fault(const ScheduledFault& fault) {
    // Applied when the next timeline-running command reaches the micro-op
    // (or observer iteration) containing the delay; a delay mapping past
    // the end of the window has no effect.
    pending_faults_.push_back(fault);
}

void RpmbDevice::apply_memory_fault(const FaultPrimitive& f) {
    switch (f.mem) {
        case FaultPrimitive::Mem::SramCounter:
            sram_counter_ = f.mem_value;
            break;
        case FaultPrimitive::Mem::UserSector: {
            uint32_t idx = f.sector_index % profile_.user_sectors;
            uint8_t mask = static_cast<uint8_t>(f.mem_value != 0 ? f.mem_value : 1);
            user_[idx][f.mem_value % 512] ^= mask;
            break;
        }
    }
}

void RpmbDevice::mac_response(std::vector<RpmbFrame>& frames) const {
    if (!key_programmed_ || frames.empty()) return;
    frames.back().key_mac = protocol::compute_mac(key_, frames);
}

// ---------------------------------------------------------------------------
// Command dispatch

CommandResponse RpmbDevice::write_frames(std::span<const RpmbFrame> frames,
                                         const FaultSchedule& faults) {
    if (crashed_) return CommandResponse::unresponsive(fill_);

    FaultSchedule schedule = faults;
    schedule.insert(schedule.end(), pending_faults_.begin(), pending_faults_.end());
    pending_faults_.clear();

    if (frames.empty()) {
        store_result(ResultCode::Kind::GeneralFailure);
        return CommandResponse::r1(profile_.timings.busy_end_ns);
    }

    auto type = frames[0].request_type();
    if (!type) {
        store_result(ResultCode::Kind::GeneralFailure);
        return CommandResponse::r1(profile_.timings.busy_end_ns);
    }

    switch (*type) {
        case RequestType::ProgramKey:
            handle_program_key(frames[0]);
            break;
        case RequestType::ReadCounter:
            prepare_counter_response(frames[0]);
            break;
        case RequestType::AuthWrite:
            return run_auth_write(frames, schedule);
        case RequestType::AuthRead:
            prepare_read_response(frames[0]);
            break;
        case RequestType::ResultRead:
            prepare_result_response();
            break;
    }
    return CommandResponse::r1(profile_.timings.busy_end_ns);
}

CommandResponse RpmbDevice::read_frames(uint16_t count) {
    if (crashed_) return CommandResponse::unresponsive(fill_);
    std::vector<RpmbFrame> out;
    size_t n = std::min<size_t>(count, pending_read_.size());
    out.assign(pending_read_.begin(), pending_read_.begin() + n);
    pending_read_.clear();
    return CommandResponse::data(std::move(out));
}

void RpmbDevice::handle_program_key(const RpmbFrame& frame) {
    if (key_programmed_) {
        // The key is one-time programmable; a second attempt fails.
        store_result(ResultCode::Kind::GeneralFailure);
        return;
    }
    std::memcpy(key_.bytes.data(), frame.key_mac.data(), 32);
    key_programmed_ = true;
    store_result(ResultCode::Kind::OperationOk);
}

void RpmbDevice::prepare_counter_response(const RpmbFrame& request) {
    RpmbFrame resp;
    resp.req_resp = protocol::code(ResponseType::ReadCounter);
    resp.nonce = request.nonce;
    if (!key_programmed_) {
        resp.result = ResultCode::make(ResultCode::Kind::NoKey).to_raw();
    } else {
        resp.write_counter = sram_counter_;
        resp.result = ResultCode::make(ResultCode::Kind::OperationOk, counter_expired_).to_raw();
    }
    std::vector<RpmbFrame> frames{resp};
    mac_response(frames);
    pending_read_ = std::move(frames);
}

void RpmbDevice::prepare_read_response(const RpmbFrame& request) {
    uint16_t bc = request.block_count == 0 ? 1 : request.block_count;
    uint32_t addr = request.address;
    std::vector<RpmbFrame> frames;

    if (uint64_t(addr) + bc > profile_.rpmb_blocks) {
        RpmbFrame resp;
        resp.req_resp = protocol::code(ResponseType::AuthRead);
        resp.nonce = request.nonce;
        resp.address = request.address;
        resp.result = ResultCode::make(ResultCode::Kind::AddressFailure).to_raw();
        frames.push_back(resp);
    } else {
        for (uint16_t i = 0; i < bc; ++i) {
            RpmbFrame resp;
            resp.req_resp = protocol::code(ResponseType::AuthRead);
            resp.nonce = request.nonce;
            resp.address = request.address;
            resp.block_count = bc;
            resp.result = ResultCode::make(ResultCode::Kind::OperationOk, counter_expired_).to_raw();
            std::copy(rpmb_[addr + i].begin(), rpmb_[addr + i].end(), resp.data.begin());
            frames.push_back(resp);
        }
    }
    mac_response(frames);
    pending_read_ = std::move(frames);
}

void RpmbDevice::prepare_result_response() {
    RpmbFrame resp;
    resp.req_resp = protocol::code(ResponseType::ResultRead);
    resp.result = stored_result_raw_;
    resp.write_counter = sram_counter_;
    std::vector<RpmbFrame> frames{resp};
    mac_response(frames);
    pending_read_ = std::move(frames);
}

// ---------------------------------------------------------------------------
// Authenticated write pipeline
//
// The controller evaluates the HMAC, counter and address checks in that
// order and accumulates failures: one failure reports its own code, two or
// more report GeneralFailure ("multiple errors"). Flash write and counter
// increment run only when everything passed. Faults act on the micro-op
// whose interval contains their delay:
//   ReceiveData/CrcStatus/BusyAssert  register corruption -> general fault
//   HmacCompute   register corruption -> general fault; skip -> stale MAC
//   HmacCompareWord  the V-C scenario set acts on the check invocation
//   CounterCheck/AddressCheck  corruption makes the compare fail;
//                              a skipped check never records a failure
//   FlashWrite/CounterIncrement/ResultStore  any fault -> general fault
// Memory corruption applies wherever it lands; Crash aborts the command.

CommandResponse RpmbDevice::run_auth_write(std::span<const RpmbFrame> frames,
                                           const FaultSchedule& faults) {
    last_trace_.clear();

    if (!key_programmed_) {
        store_result(ResultCode::Kind::NoKey);
        return CommandResponse::r1(profile_.timings.busy_end_ns);
    }

    const RpmbFrame& tail = frames.back();
    const uint16_t bc = tail.block_count;
    const uint32_t addr = tail.address;
    const uint32_t counter_in = tail.write_counter;

    bool shape_ok = bc >= 1 && bc == frames.size();
    for (const auto& f : frames) {
        shape_ok = shape_ok && f.request_type() == RequestType::AuthWrite &&
                   f.address == tail.address && f.block_count == tail.block_count &&
                   f.write_counter == tail.write_counter;
    }
    if (!shape_ok) {
        store_result(ResultCode::Kind::GeneralFailure);
        return CommandResponse::r1(profile_.timings.busy_end_ns);
    }

    MicroOpTimeline timeline =
        MicroOpTimeline::for_write(profile_.timings, profile_.check_variant, &rng_);
    auto entries = timeline.entries();

    // Bucket scheduled faults by timeline entry; delays past BusyRelease
    // never map to a micro-op and have no effect.
    std::vector<std::vector<const FaultPrimitive*>> per_slot(entries.size());
    for (const auto& sf : faults) {
        for (size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].contains(sf.delay_ns)) {
                per_slot[i].push_back(&sf.primitive);
                break;
            }
        }
    }

    bool general_fault = false;
    bool auth_ok = false;
    bool counter_ok = false;
    bool addr_ok = false;
    bool wrote = false;
    bool incremented = false;

    protocol::Mac expected{};
    bool expected_valid = false;
    std::array<uint8_t, 32> received{};
    std::memcpy(received.data(), tail.key_mac.data(), 32);

    CheckFaults check_faults[2];
    bool check_ran = false;

    auto record = [&](const TimelineEntry& e) {
        last_trace_.ops.push_back({e.op, e.word_index, e.start_ns, e.end_ns});
    };

    for (size_t i = 0; i < entries.size(); ++i) {
        const TimelineEntry& entry = entries[i];

        // A crash anywhere in the window hangs the chip mid-command.
        for (const FaultPrimitive* f : per_slot[i]) {
            if (f->kind == FaultPrimitive::Kind::Crash) {
                crashed_ = true;
                fill_ = f->crash_fill;
                return CommandResponse::unresponsive(fill_);
            }
        }

        switch (entry.op) {
            case MicroOp::ReceiveData:
            case MicroOp::CrcStatus:
            case MicroOp::BusyAssert:
                record(entry);
                for (const FaultPrimitive* f : per_slot[i]) {
                    if (f->kind == FaultPrimitive::Kind::CorruptRegister) general_fault = true;
                    if (f->kind == FaultPrimitive::Kind::CorruptMemory) apply_memory_fault(*f);
                }
                break;

            case MicroOp::HmacCompute: {
                record(entry);
                bool skipped = false;
                for (const FaultPrimitive* f : per_slot[i]) {
                    switch (f->kind) {
                        case FaultPrimitive::Kind::SkipMicroOp:
                        case FaultPrimitive::Kind::SkipCall:
                            skipped = true;
                            break;
                        case FaultPrimitive::Kind::CorruptRegister:
                            general_fault = true;
                            break;
                        case FaultPrimitive::Kind::CorruptMemory:
                            apply_memory_fault(*f);
                            break;
                        default:
                            break;
                    }
                }
                if (!skipped) {
                    expected = protocol::compute_mac(key_, frames);
                    expected_valid = true;
                }
                break;
            }

            case MicroOp::HmacCompareWord: {
                if (check_ran) break;  // whole invocation handled at the first word slot
                check_ran = true;

                // Collect the faults landing anywhere in the compare window.
                std::array<uint8_t, 32> received_local = received;
                for (size_t j = i; j < entries.size(); ++j) {
                    if (entries[j].op == MicroOp::BusyAssert) continue;  // DoubleCheck gap
                    if (entries[j].op != MicroOp::HmacCompareWord) break;
                    int pass = entries[j].word_index / 8;
                    int word = entries[j].word_index % 8;
                    for (const FaultPrimitive* f : per_slot[j]) {
                        CheckFaults& cf = check_faults[pass];
                        switch (f->kind) {
                            case FaultPrimitive::Kind::SkipCall:
                                cf.skip_call = true;
                                break;
                            case FaultPrimitive::Kind::SkipMicroOp:
                                cf.skip_words |= uint16_t(1) << word;
                                break;
                            case FaultPrimitive::Kind::CorruptRegister:
                                switch (f->reg) {
                                    case FaultPrimitive::Reg::Length:
                                        cf.length_override = f->apply_to(32);
                                        break;
                                    case FaultPrimitive::Reg::Return:
                                        if (f->apply == FaultPrimitive::Apply::Set)
                                            cf.return_set = f->operand;
                                        else
                                            cf.return_xor ^= f->operand;
                                        break;
                                    default:
                                        // A corrupted operand register: the
                                        // compared word reads back wrong.
                                        received_local[word * 4] ^=
                                            static_cast<uint8_t>(f->operand | 1);
                                        break;
                                }
                                break;
                            case FaultPrimitive::Kind::CorruptMemory:
                                apply_memory_fault(*f);
                                break;
                            default:
                                break;
                        }
                    }
                }

                // A skipped HMAC computation leaves the comparand register
                // bank cleared; the compare then runs against zeros.
                protocol::Mac stale{};
                CheckOutcome outcome =
                    run_check(profile_.check_variant, received_local.data(),
                              expected_valid ? expected.data() : stale.data(), check_faults);
                auth_ok = outcome.accepted;

                for (uint8_t w : outcome.executed_words) {
                    for (const auto& e2 : entries) {
                        if (e2.op == MicroOp::HmacCompareWord && e2.word_index == w) {
                            record(e2);
                            break;
                        }
                    }
                }
                break;
            }

            case MicroOp::CounterCheck: {
                record(entry);
                uint32_t counter_reg = counter_in;
                bool skipped = false;
                for (const FaultPrimitive* f : per_slot[i]) {
                    switch (f->kind) {
                        case FaultPrimitive::Kind::SkipMicroOp:
                        case FaultPrimitive::Kind::SkipCall:
                            skipped = true;
                            break;
                        case FaultPrimitive::Kind::CorruptRegister:
                            counter_reg = f->apply_to(counter_reg);
                            break;
                        case FaultPrimitive::Kind::CorruptMemory:
                            apply_memory_fault(*f);
                            break;
                        default:
                            break;
                    }
                }
                counter_ok = skipped || (counter_reg == sram_counter_ && !counter_expired_);
                break;
            }

            case MicroOp::AddressCheck: {
                record(entry);
                uint32_t addr_reg = addr;
                bool skipped = false;
                for (const FaultPrimitive* f : per_slot[i]) {
                    switch (f->kind) {
                        case FaultPrimitive::Kind::SkipMicroOp:
                        case FaultPrimitive::Kind::SkipCall:
                            skipped = true;
                            break;
                        case FaultPrimitive::Kind::CorruptRegister:
                            addr_reg = f->apply_to(addr_reg);
                            break;
                        case FaultPrimitive::Kind::CorruptMemory:
                            apply_memory_fault(*f);
                            break;
                        default:
                            break;
                    }
                }
                addr_ok = skipped || uint64_t(addr_reg) + bc <= profile_.rpmb_blocks;
                break;
            }

            case MicroOp::FlashWrite: {
                bool should_write = auth_ok && counter_ok && addr_ok && !general_fault;
                if (should_write) {
                    record(entry);
                    bool disturbed = false;
                    for (const FaultPrimitive* f : per_slot[i]) {
                        if (f->kind == FaultPrimitive::Kind::CorruptMemory) {
                            apply_memory_fault(*f);
                        } else if (f->kind != FaultPrimitive::Kind::None) {
                            disturbed = true;
                        }
                    }
                    if (disturbed) {
                        general_fault = true;
                    } else {
                        for (uint16_t b = 0; b < bc; ++b) {
                            std::copy(frames[b].data.begin(), frames[b].data.end(),
                                      rpmb_[addr + b].begin());
                        }
                        wrote = true;
                    }
                } else {
                    for (const FaultPrimitive* f : per_slot[i]) {
                        if (f->kind == FaultPrimitive::Kind::CorruptMemory) apply_memory_fault(*f);
                    }
                }
                break;
            }

            case MicroOp::CounterIncrement: {
                if (wrote && !general_fault) {
                    record(entry);
                    bool disturbed = false;
                    for (const FaultPrimitive* f : per_slot[i]) {
                        if (f->kind == FaultPrimitive::Kind::CorruptMemory) {
                            apply_memory_fault(*f);
                        } else if (f->kind != FaultPrimitive::Kind::None) {
                            disturbed = true;
                        }
                    }
                    if (disturbed) {
                        general_fault = true;
                    } else {
                        sram_counter_ += 1;
                        write_counter_ = sram_counter_;
                        if (sram_counter_ == 0xFFFFFFFFu) counter_expired_ = true;
                        incremented = true;
                    }
                } else {
                    for (const FaultPrimitive* f : per_slot[i]) {
                        if (f->kind == FaultPrimitive::Kind::CorruptMemory) apply_memory_fault(*f);
                    }
                }
                break;
            }

            case MicroOp::ResultStore: {
                record(entry);
                for (const FaultPrimitive* f : per_slot[i]) {
                    if (f->kind == FaultPrimitive::Kind::CorruptMemory) {
                        apply_memory_fault(*f);
                    } else if (f->kind != FaultPrimitive::Kind::None) {
                        general_fault = true;
                    }
                }
                ResultCode::Kind kind;
                if (general_fault) {
                    kind = ResultCode::Kind::GeneralFailure;
                } else {
                    int failures = int(!auth_ok) + int(!counter_ok) + int(!addr_ok);
                    if (failures == 0) {
                        kind = wrote && incremented ? ResultCode::Kind::OperationOk
                                                    : ResultCode::Kind::GeneralFailure;
                    } else if (failures > 1) {
                        kind = ResultCode::Kind::GeneralFailure;
                    } else if (!auth_ok) {
                        kind = ResultCode::Kind::AuthFailure;
                    } else if (!counter_ok) {
                        kind = ResultCode::Kind::CounterFailure;
                    } else {
                        kind = ResultCode::Kind::AddressFailure;
                    }
                }
                store_result(kind);
                break;
            }

            case MicroOp::BusyRelease:
                record(entry);
                for (const FaultPrimitive* f : per_slot[i]) {
                    if (f->kind == FaultPrimitive::Kind::CorruptMemory) apply_memory_fault(*f);
                }
                break;
        }
    }

    return CommandResponse::r1(timeline.busy_end_ns());
}

// ---------------------------------------------------------------------------
// Fault observer (hooked CMD8)
//
// The nested loop is simulated arithmetically: clean stretches run in
// closed form and faults apply at their nominal iteration index
// (delay / 4 ns). Loop arithmetic is 32-bit and the inner exit tests the
// index as a signed int, like the firmware routine it stands in for.

CommandResponse RpmbDevice::read_ext_csd(const FaultSchedule& faults) {
    if (crashed_) return CommandResponse::unresponsive(fill_);

    FaultSchedule schedule = faults;
    schedule.insert(schedule.end(), pending_faults_.begin(), pending_faults_.end());
    pending_faults_.clear();

    struct Event {
        uint64_t iteration;
        const FaultPrimitive* primitive;
    };
    std::vector<Event> events;
    for (const auto& sf : schedule) {
        uint64_t iter = sf.delay_ns / kObserverIterationNs;
        if (iter < kObserverExpectedIterations) events.push_back({iter, &sf.primitive});
    }
    std::sort(events.begin(), events.end(),
              [](const Event& a, const Event& b) { return a.iteration < b.iteration; });

    size_t next_event = 0;
    uint64_t g = 0;  // nominal global iteration index
    uint32_t value = 0;
    uint32_t total_iterations = 0;

    for (int j = 1; j <= 4; ++j) {
        uint32_t i = 0;
        bool run_inner = true;  // do-while: the body executes at least once
        while (run_inner) {
            int32_t i_signed = static_cast<int32_t>(i);
            uint64_t remaining = i_signed < 62500 ? uint64_t(62500 - i_signed) : 1;

            if (next_event >= events.size() || events[next_event].iteration >= g + remaining) {
                value += 7u * static_cast<uint32_t>(remaining);
                i += static_cast<uint32_t>(remaining);
                g += remaining;
                run_inner = false;
            } else {
                uint64_t clean = events[next_event].iteration - g;
                value += 7u * static_cast<uint32_t>(clean);
                i += static_cast<uint32_t>(clean);
                g += clean;

                const FaultPrimitive& f = *events[next_event].primitive;
                ++next_event;
                switch (f.kind) {
                    case FaultPrimitive::Kind::Crash:
                        crashed_ = true;
                        fill_ = f.crash_fill;
                        return CommandResponse::unresponsive(fill_);
                    case FaultPrimitive::Kind::SkipMicroOp:
                    case FaultPrimitive::Kind::SkipCall:
                        // The corrupted back-edge drops out of the inner loop.
                        g += 1;
                        run_inner = false;
                        break;
                    case FaultPrimitive::Kind::CorruptRegister:
                        value += 7;
                        i += 1;
                        g += 1;
                        if (f.reg == FaultPrimitive::Reg::LoopIndex ||
                            f.reg == FaultPrimitive::Reg::Length) {
                            i = f.apply_to(i);
                        } else {
                            value = f.apply_to(value);
                        }
                        run_inner = static_cast<int32_t>(i) < 62500;
                        break;
                    case FaultPrimitive::Kind::CorruptMemory:
                        // The observer's working set lives in SRAM; a hit
                        // lands on the accumulator cell.
                        value += 7;
                        i += 1;
                        g += 1;
                        value = f.mem == FaultPrimitive::Mem::SramCounter ? f.mem_value
                                                                          : value ^ f.mem_value;
                        run_inner = static_cast<int32_t>(i) < 62500;
                        break;
                    case FaultPrimitive::Kind::None:
                        value += 7;
                        i += 1;
                        g += 1;
                        run_inner = static_cast<int32_t>(i) < 62500;
                        break;
                }
            }
        }
        total_iterations += i;
    }

    std::array<uint8_t, 512> image{};
    // Little-endian struct writes, as the controller core would emit them.
    for (int b = 0; b < 4; ++b) {
        image[b] = static_cast<uint8_t>(total_iterations >> (8 * b));
        image[4 + b] = static_cast<uint8_t>(value >> (8 * b));
    }
    std::copy(image.begin(), image.begin() + 8, ext_csd_head_.begin());
    return CommandResponse::ext(image);
}

// ---------------------------------------------------------------------------

void RpmbDevice::hard_reset() {
    crashed_ = false;
    fill_ = 0x00;
    sram_counter_ = write_counter_;
    counter_expired_ = write_counter_ == 0xFFFFFFFFu;
    stored_result_raw_ = 0;
    ext_csd_head_ = {};
    pending_read_.clear();
    pending_faults_.clear();
    last_trace_.clear();
}

std::array<uint8_t, 512> RpmbDevice::read_user_sector(uint32_t index) const {
    if (index >= user_.size()) throw std::out_of_range("user sector index");
    return user_[index];
}

void RpmbDevice::write_user_sector(uint32_t index, std::span<const uint8_t> data) {
    if (index >= user_.size()) throw std::out_of_range("user sector index");
    if (data.size() != 512) throw std::invalid_argument("user sector is 512 bytes");
    std::copy(data.begin(), data.end(), user_[index].begin());
}

void RpmbDevice::apply_pulse_wear(Rng& rng) {
    const double p = profile_.wear_probability;
    if (p <= 0.0) return;
    if (p >= 1.0) {
        for (auto& sector : user_) sector[rng.below(512)] ^= uint8_t(1 + rng.below(255));
        return;
    }
    // Bernoulli skip-sampling: only corrupted sectors cost RNG draws.
    const double log1m = std::log1p(-p);
    double idx = -1.0;
    while (true) {
        double u = rng.uniform01();
        idx += 1.0 + std::floor(std::log1p(-u) / log1m);
        if (idx >= static_cast<double>(user_.size())) break;
        auto& sector = user_[static_cast<size_t>(idx)];
        sector[rng.below(512)] ^= uint8_t(1 + rng.below(255));
    }
}

void RpmbDevice::debug_poke_counter(uint32_t value) {
    if (!profile_.debug_interface) throw DebugDisabled();
    write_counter_ = value;
    sram_counter_ = value;
    counter_expired_ = value == 0xFFFFFFFFu;
}

std::vector<uint8_t> RpmbDevice::debug_peek(DebugRegion region, uint32_t index) const {
    if (!profile_.debug_interface) throw DebugDisabled();
    std::vector<uint8_t> out;
    switch (region) {
        case DebugRegion::SramCounter:
            out.resize(4);
            write_be32(out.data(), sram_counter_);
            break;
        case DebugRegion::WriteCounter:
            out.resize(4);
            write_be32(out.data(), write_counter_);
            break;
        case DebugRegion::RpmbBlock: {
            auto block = rpmb_block(index);
            out.assign(block.begin(), block.end());
            break;
        }
        case DebugRegion::UserSector: {
            auto sector = read_user_sector(index);
            out.assign(sector.begin(), sector.end());
            break;
        }
        case DebugRegion::ExtCsdHead:
            out.assign(ext_csd_head_.begin(), ext_csd_head_.end());
            break;
    }
    return out;
}

MicroOpTimeline RpmbDevice::preview_timeline() const {
    return MicroOpTimeline::for_write(profile_.timings, profile_.check_variant, nullptr);
}

// ---------------------------------------------------------------------------
// Snapshot blob: "RPMBSNP1" | profile text | volatile + persistent state.

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    size_t off = out.size();
    out.resize(off + 4);
    write_be32(out.data() + off, v);
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    put_u32(out, static_cast<uint32_t>(v >> 32));
    put_u32(out, static_cast<uint32_t>(v));
}

struct Reader {
    std::span<const uint8_t> data;
    size_t pos = 0;

    void need(size_t n) {
        if (pos + n > data.size()) throw SnapshotError("snapshot truncated");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = read_be32(data.data() + pos);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        uint64_t hi = u32();
        return hi << 32 | u32();
    }
    uint8_t u8() {
        need(1);
        return data[pos++];
    }
    std::span<const uint8_t> bytes(size_t n) {
        need(n);
        auto s = data.subspan(pos, n);
        pos += n;
        return s;
    }
};

constexpr char kSnapshotMagic[8] = {'R', 'P', 'M', 'B', 'S', 'N', 'P', '1'};

}  // namespace

std::vector<uint8_t> RpmbDevice::export_snapshot() const {
    std::vector<uint8_t> out;
    out.insert(out.end(), kSnapshotMagic, kSnapshotMagic + 8);

    std::string ptext = profile_.serialize();
    put_u32(out, static_cast<uint32_t>(ptext.size()));
    out.insert(out.end(), ptext.begin(), ptext.end());

    out.push_back(key_programmed_ ? 1 : 0);
    out.insert(out.end(), key_.bytes.begin(), key_.bytes.end());
    put_u32(out, write_counter_);
    put_u32(out, sram_counter_);
    out.push_back(counter_expired_ ? 1 : 0);
    out.push_back(crashed_ ? 1 : 0);
    out.push_back(fill_);
    put_u32(out, stored_result_raw_);
    out.insert(out.end(), ext_csd_head_.begin(), ext_csd_head_.end());
    for (uint64_t w : rng_.state()) put_u64(out, w);

    put_u32(out, static_cast<uint32_t>(rpmb_.size()));
    for (const auto& b : rpmb_) out.insert(out.end(), b.begin(), b.end());
    put_u32(out, static_cast<uint32_t>(user_.size()));
    for (const auto& s : user_) out.insert(out.end(), s.begin(), s.end());
    return out;
}

RpmbDevice RpmbDevice::import_snapshot(std::span<const uint8_t> blob) {
    Reader r{blob};
    auto magic = r.bytes(8);
    if (!std::equal(magic.begin(), magic.end(), kSnapshotMagic)) {
        throw SnapshotError("bad snapshot magic");
    }
    uint32_t plen = r.u32();
    auto pbytes = r.bytes(plen);
    DeviceProfile profile =
        DeviceProfile::parse(std::string_view(reinterpret_cast<const char*>(pbytes.data()), plen));

    RpmbDevice dev(profile, 0);
    dev.key_programmed_ = r.u8() != 0;
    auto key = r.bytes(32);
    std::copy(key.begin(), key.end(), dev.key_.bytes.begin());
    dev.write_counter_ = r.u32();
    dev.sram_counter_ = r.u32();
    dev.counter_expired_ = r.u8() != 0;
    dev.crashed_ = r.u8() != 0;
    dev.fill_ = r.u8();
    dev.stored_result_raw_ = static_cast<uint16_t>(r.u32());
    auto head = r.bytes(8);
    std::copy(head.begin(), head.end(), dev.ext_csd_head_.begin());
    std::array<uint64_t, 4> rng_state;
    for (auto& w : rng_state) w = r.u64();
    dev.rng_ = Rng::from_state(rng_state);

    uint32_t nblocks = r.u32();
    if (nblocks != profile.rpmb_blocks) throw SnapshotError("rpmb size mismatch");
    for (auto& b : dev.rpmb_) {
        auto bytes = r.bytes(256);
        std::copy(bytes.begin(), bytes.end(), b.begin());
    }
    uint32_t nsectors = r.u32();
    if (nsectors != profile.user_sectors) throw SnapshotError("user area size mismatch");
    for (auto& s : dev.user_) {
        auto bytes = r.bytes(512);
        std::copy(bytes.begin(), bytes.end(), s.begin());
    }
    return dev;
}

}  // namespace rpmbfi::device
