// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include "rpmbfi/host/session.hpp"

#include <cstring>

namespace rpmbfi::host {

using protocol::HmacKey;
using protocol::RequestType;
using protocol::ResponseType;
using protocol::ResultCode;
using protocol::RpmbFrame;

const char* name(HostError e) {
    switch (e) {
        case HostError::None: return "none";
        case HostError::NonceMismatch: return "nonce-mismatch";
        case HostError::MacMismatch: return "mac-mismatch";
        case HostError::NoResponse: return "no-response";
        case HostError::DeviceCrashed: return "device-crashed";
    }
    return "?";
}

HostSession::HostSession(Transport& transport, uint64_t nonce_seed)
    : transport_(transport), rng_(nonce_seed) {}

std::array<uint8_t, 16> HostSession::fresh_nonce() {
    std::array<uint8_t, 16> n;
    for (int i = 0; i < 16; i += 4) {
        uint32_t w = rng_.next_u32();
        std::memcpy(n.data() + i, &w, 4);
    }
    return n;
}

ResultCode HostSession::read_result_register(std::optional<uint32_t>* counter_out) {
    RpmbFrame req;
    req.req_resp = protocol::code(RequestType::ResultRead);
    auto r1 = transport_.send_command(Command::write({req}));
    if (!r1.responsive()) return ResultCode::make(ResultCode::Kind::Unknown);
    auto resp = transport_.send_command(Command::read(1));
    if (!resp.responsive() || resp.frames.empty()) {
        return ResultCode::make(ResultCode::Kind::Unknown);
    }
    const RpmbFrame& f = resp.frames.front();
    if (counter_out) *counter_out = f.write_counter;
    counter_cache_ = f.write_counter;
    return f.result_code();
}

ResultCode HostSession::program_key(const HmacKey& key) {
    RpmbFrame req;
    req.req_resp = protocol::code(RequestType::ProgramKey);
    std::memcpy(req.key_mac.data(), key.bytes.data(), 32);
    transport_.send_command(Command::write({req}));
    ResultCode result = read_result_register();
    if (result.ok()) key_ = key;
    return result;
}

CounterRead HostSession::read_counter() {
    CounterRead out;
    RpmbFrame req;
    req.req_resp = protocol::code(RequestType::ReadCounter);
    req.nonce = fresh_nonce();
    auto r1 = transport_.send_command(Command::write({req}));
    if (!r1.responsive()) {
        out.error = HostError::DeviceCrashed;
        return out;
    }
    auto resp = transport_.send_command(Command::read(1));
    if (!resp.responsive()) {
        out.error = HostError::DeviceCrashed;
        return out;
    }
    if (resp.frames.empty()) {
        out.error = HostError::NoResponse;
        return out;
    }
    const RpmbFrame& f = resp.frames.front();
    out.counter = f.write_counter;
    out.result = f.result_code();
    counter_cache_ = f.write_counter;
    if (f.nonce != req.nonce) {
        out.error = HostError::NonceMismatch;
        return out;
    }
    if (key_) {
        // The MAC field itself sits outside the covered region; verify in place.
        std::vector<RpmbFrame> one{f};
        auto mac = protocol::compute_mac(*key_, one);
        if (mac != f.key_mac) {
            out.error = HostError::MacMismatch;
            return out;
        }
        out.verified = true;
    }
    return out;
}

ResultCode HostSession::write_authenticated(uint16_t address, std::span<const uint8_t> data) {
    if (!key_) throw std::logic_error("write_authenticated requires a session key");
    if (!counter_cache_) {
        auto cr = read_counter();
        counter_cache_ = cr.counter;
    }
    auto frames = protocol::build_auth_write(*key_, *counter_cache_, address, data);
    transport_.send_command(Command::write(std::move(frames)));
    return read_result_register();
}

ReadResult HostSession::read_authenticated(uint16_t address, uint16_t block_count) {
    ReadResult out;
    RpmbFrame req;
    req.req_resp = protocol::code(RequestType::AuthRead);
    req.address = address;
    req.block_count = block_count;
    req.nonce = fresh_nonce();
    auto r1 = transport_.send_command(Command::write({req}));
    if (!r1.responsive()) {
        out.error = HostError::DeviceCrashed;
        return out;
    }
    auto resp = transport_.send_command(Command::read(block_count));
    if (!resp.responsive()) {
        out.error = HostError::DeviceCrashed;
        return out;
    }
    if (resp.frames.empty()) {
        out.error = HostError::NoResponse;
        return out;
    }
    out.result = resp.frames.back().result_code();
    if (!out.result.ok()) return out;
    if (resp.frames.size() != block_count) {
        out.error = HostError::NoResponse;
        return out;
    }

    for (const RpmbFrame& f : resp.frames) {
        if (f.nonce != req.nonce) {
            out.error = HostError::NonceMismatch;
            return out;
        }
    }
    if (key_) {
        auto mac = protocol::compute_mac(*key_, resp.frames);
        if (mac != resp.frames.back().key_mac) {
            out.error = HostError::MacMismatch;
            return out;
        }
        out.verified = true;
    }
    out.data.reserve(size_t(block_count) * protocol::kBlockSize);
    for (const RpmbFrame& f : resp.frames) {
        out.data.insert(out.data.end(), f.data.begin(), f.data.end());
    }
    return out;
}

AttackResult HostSession::attack_write(uint16_t address, std::span<const uint8_t> data,
                                       uint64_t delay_ns, const fault::PulseSpec& pulse,
                                       fault::Injector& injector) {
    AttackResult out;
    if (data.empty() || data.size() % protocol::kBlockSize != 0) {
        throw protocol::BadBlockSize(data.size());
    }
    if (!counter_cache_) {
        auto cr = read_counter();
        counter_cache_ = cr.counter;
    }

    // Build the write with a random MAC; the attacker never sees the key.
    const size_t blocks = data.size() / protocol::kBlockSize;
    std::vector<RpmbFrame> frames(blocks);
    for (size_t i = 0; i < blocks; ++i) {
        RpmbFrame& f = frames[i];
        std::memcpy(f.data.data(), data.data() + i * protocol::kBlockSize, protocol::kBlockSize);
        f.write_counter = *counter_cache_;
        f.address = address;
        f.block_count = static_cast<uint16_t>(blocks);
        f.req_resp = protocol::code(RequestType::AuthWrite);
    }
    for (auto& b : frames.back().key_mac) b = static_cast<uint8_t>(rng_.next_u32());

    injector.arm(pulse.with_delay(delay_ns));
    auto write_resp = transport_.send_command(Command::write(std::move(frames)));
    if (!write_resp.responsive()) {
        out.outcome = campaign::Outcome::Crash;
        out.result_value = static_cast<uint16_t>(uint16_t(write_resp.fill) << 8 | write_resp.fill);
        out.result = ResultCode::make(ResultCode::Kind::Unknown);
        return out;
    }

    RpmbFrame req;
    req.req_resp = protocol::code(RequestType::ResultRead);
    auto r1 = transport_.send_command(Command::write({req}));
    device::CommandResponse result_resp =
        r1.responsive() ? transport_.send_command(Command::read(1)) : r1;

    auto cls = campaign::classify_rpmb(result_resp);
    out.outcome = cls.outcome;
    out.result_value = cls.result_value;
    out.device_counter = cls.counter;
    if (cls.counter) counter_cache_ = *cls.counter;
    out.result = result_resp.responsive() && !result_resp.frames.empty()
                     ? result_resp.frames.front().result_code()
                     : ResultCode::make(ResultCode::Kind::Unknown);
    return out;
}

}  // namespace rpmbfi::host
