// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include "rpmbfi/host/wire.hpp"

#include <cstring>

#include "rpmbfi/bytes.hpp"

namespace rpmbfi::host::wire {

using device::CommandResponse;
using protocol::RpmbFrame;

namespace {

uint8_t opcode_of(Command::Kind kind) {
    switch (kind) {
        case Command::Kind::WriteFrames: return kOpWriteFrames;
        case Command::Kind::ReadFrames: return kOpReadFrames;
        case Command::Kind::ReadExtCsd: return kOpReadExtCsd;
        case Command::Kind::HardReset: return kOpHardReset;
    }
    return 0xff;
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    size_t off = out.size();
    out.resize(off + 4);
    write_be32(out.data() + off, v);
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    put_u32(out, static_cast<uint32_t>(v >> 32));
    put_u32(out, static_cast<uint32_t>(v));
}

std::vector<uint8_t> finish(std::vector<uint8_t> body) {
    std::vector<uint8_t> out;
    put_u32(out, static_cast<uint32_t>(body.size()));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

std::span<const uint8_t> unwrap(std::span<const uint8_t> bytes) {
    if (bytes.size() < 4) throw WireError("short wire message");
    uint32_t len = read_be32(bytes.data());
    if (bytes.size() != size_t(len) + 4) throw WireError("wire length mismatch");
    return bytes.subspan(4);
}

}  // namespace

std::vector<uint8_t> encode_request(const Command& cmd) {
    std::vector<uint8_t> body;
    body.push_back(opcode_of(cmd.kind));
    put_u32(body, cmd.argument);
    for (const RpmbFrame& f : cmd.frames) {
        auto image = f.serialize();
        body.insert(body.end(), image.begin(), image.end());
    }
    return finish(std::move(body));
}

Command decode_request(std::span<const uint8_t> bytes) {
    auto body = unwrap(bytes);
    if (body.size() < 5) throw WireError("truncated request header");
    uint8_t opcode = body[0];
    uint32_t argument = read_be32(body.data() + 1);
    auto payload = body.subspan(5);
    if (payload.size() % protocol::kFrameSize != 0) throw WireError("ragged frame payload");

    Command cmd;
    cmd.argument = argument;
    switch (opcode) {
        case kOpWriteFrames: cmd.kind = Command::Kind::WriteFrames; break;
        case kOpReadFrames: cmd.kind = Command::Kind::ReadFrames; break;
        case kOpReadExtCsd: cmd.kind = Command::Kind::ReadExtCsd; break;
        case kOpHardReset: cmd.kind = Command::Kind::HardReset; break;
        default: throw WireError("unknown opcode " + std::to_string(opcode));
    }
    for (size_t off = 0; off < payload.size(); off += protocol::kFrameSize) {
        cmd.frames.push_back(RpmbFrame::parse(payload.subspan(off, protocol::kFrameSize)));
    }
    return cmd;
}

std::vector<uint8_t> encode_response(const CommandResponse& resp) {
    std::vector<uint8_t> body;
    switch (resp.kind) {
        case CommandResponse::Kind::R1Status:
            body.push_back(kStatusR1);
            put_u64(body, resp.busy_duration_ns);
            break;
        case CommandResponse::Kind::DataFrames:
            body.push_back(kStatusDataFrames);
            put_u64(body, resp.busy_duration_ns);
            for (const RpmbFrame& f : resp.frames) {
                auto image = f.serialize();
                body.insert(body.end(), image.begin(), image.end());
            }
            break;
        case CommandResponse::Kind::ExtCsd:
            body.push_back(kStatusExtCsd);
            put_u64(body, resp.busy_duration_ns);
            body.insert(body.end(), resp.ext_csd.begin(), resp.ext_csd.end());
            break;
        case CommandResponse::Kind::Unresponsive:
            body.push_back(kStatusUnresponsive);
            put_u64(body, 0);
            body.push_back(resp.fill);
            break;
    }
    return finish(std::move(body));
}

CommandResponse decode_response(std::span<const uint8_t> bytes) {
    auto body = unwrap(bytes);
    if (body.size() < 9) throw WireError("truncated response header");
    uint8_t status = body[0];
    uint64_t busy = uint64_t(read_be32(body.data() + 1)) << 32 | read_be32(body.data() + 5);
    auto payload = body.subspan(9);

    switch (status) {
        case kStatusR1:
            return CommandResponse::r1(busy);
        case kStatusDataFrames: {
            if (payload.size() % protocol::kFrameSize != 0) throw WireError("ragged frames");
            std::vector<RpmbFrame> frames;
            for (size_t off = 0; off < payload.size(); off += protocol::kFrameSize) {
                frames.push_back(RpmbFrame::parse(payload.subspan(off, protocol::kFrameSize)));
            }
            auto resp = CommandResponse::data(std::move(frames));
            resp.busy_duration_ns = busy;
            return resp;
        }
        case kStatusExtCsd: {
            if (payload.size() != 512) throw WireError("ext_csd payload must be 512 bytes");
            std::array<uint8_t, 512> image;
            std::memcpy(image.data(), payload.data(), 512);
            auto resp = CommandResponse::ext(image);
            resp.busy_duration_ns = busy;
            return resp;
        }
        case kStatusUnresponsive: {
            if (payload.size() != 1) throw WireError("unresponsive payload must be 1 byte");
            return CommandResponse::unresponsive(payload[0]);
        }
        default:
            throw WireError("unknown response status " + std::to_string(status));
    }
}

std::vector<uint8_t> serve_request(device::RpmbDevice& dev, std::span<const uint8_t> request) {
    auto body = unwrap(request);
    if (body.size() < 5) throw WireError("truncated request header");
    uint8_t opcode = body[0];

    // Vendor debug opcodes bypass the standard command set.
    if (opcode == kOpDebugPokeCounter || opcode == kOpDebugPeekCounter) {
        uint32_t argument = read_be32(body.data() + 1);
        std::vector<uint8_t> resp;
        try {
            if (opcode == kOpDebugPokeCounter) {
                dev.debug_poke_counter(argument);
                resp.push_back(kStatusRaw);
            } else {
                auto bytes = dev.debug_peek(device::DebugRegion::SramCounter);
                resp.push_back(kStatusRaw);
                resp.insert(resp.end(), bytes.begin(), bytes.end());
            }
        } catch (const device::DebugDisabled&) {
            resp.clear();
            resp.push_back(kStatusError);
        }
        return finish(std::move(resp));
    }

    Command cmd = decode_request(request);
    switch (cmd.kind) {
        case Command::Kind::WriteFrames:
            return encode_response(dev.write_frames(cmd.frames));
        case Command::Kind::ReadFrames:
            return encode_response(dev.read_frames(static_cast<uint16_t>(cmd.argument)));
        case Command::Kind::ReadExtCsd:
            return encode_response(dev.read_ext_csd());
        case Command::Kind::HardReset:
            dev.hard_reset();
            return encode_response(CommandResponse::r1(0));
    }
    throw WireError("unreachable opcode");
}

device::CommandResponse LoopbackTransport::send_command(const Command& cmd) {
    if (cmd.kind == Command::Kind::WriteFrames) fire_trigger();
    auto reply = serve_request(*dev_, encode_request(cmd));
    return decode_response(reply);
}

}  // namespace rpmbfi::host::wire
