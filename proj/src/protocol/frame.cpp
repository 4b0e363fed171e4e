// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include "rpmbfi/protocol/frame.hpp"

#include <algorithm>
#include <cstring>

#include "rpmbfi/bytes.hpp"

namespace rpmbfi::protocol {

std::optional<RequestType> parse_request_type(uint16_t raw) {
    switch (raw) {
        case 0x0001: return RequestType::ProgramKey;
        case 0x0002: return RequestType::ReadCounter;
        case 0x0003: return RequestType::AuthWrite;
        case 0x0004: return RequestType::AuthRead;
        case 0x0005: return RequestType::ResultRead;
        default: return std::nullopt;
    }
}

std::optional<ResponseType> parse_response_type(uint16_t raw) {
    switch (raw) {
        case 0x0100: return ResponseType::ProgramKey;
        case 0x0200: return ResponseType::ReadCounter;
        case 0x0300: return ResponseType::AuthWrite;
        case 0x0400: return ResponseType::AuthRead;
        case 0x0500: return ResponseType::ResultRead;
        default: return std::nullopt;
    }
}

const char* name(RequestType t) {
    switch (t) {
        case RequestType::ProgramKey: return "ProgramKey";
        case RequestType::ReadCounter: return "ReadCounter";
        case RequestType::AuthWrite: return "AuthWrite";
        case RequestType::AuthRead: return "AuthRead";
        case RequestType::ResultRead: return "ResultRead";
    }
    return "?";
}

const char* name(ResultCode::Kind k) {
    switch (k) {
        case ResultCode::Kind::OperationOk: return "OperationOk";
        case ResultCode::Kind::GeneralFailure: return "GeneralFailure";
        case ResultCode::Kind::AuthFailure: return "AuthFailure";
        case ResultCode::Kind::CounterFailure: return "CounterFailure";
        case ResultCode::Kind::AddressFailure: return "AddressFailure";
        case ResultCode::Kind::NoKey: return "NoKey";
        case ResultCode::Kind::Unknown: return "Unknown";
    }
    return "?";
}

ResultCode ResultCode::from_raw(uint16_t raw) {
    ResultCode rc;
    rc.raw = raw;
    rc.counter_expired = (raw & 0x0080) != 0;
    switch (raw & ~uint16_t(0x0080)) {
        case 0x00: rc.kind = Kind::OperationOk; break;
        case 0x01: rc.kind = Kind::GeneralFailure; break;
        case 0x02: rc.kind = Kind::AuthFailure; break;
        case 0x03: rc.kind = Kind::CounterFailure; break;
        case 0x04: rc.kind = Kind::AddressFailure; break;
        case 0x07: rc.kind = Kind::NoKey; break;
        default: rc.kind = Kind::Unknown; break;
    }
    return rc;
}

ResultCode ResultCode::make(Kind kind, bool expired) {
    ResultCode rc;
    rc.kind = kind;
    rc.counter_expired = expired;
    rc.raw = static_cast<uint16_t>(kind);
    if (expired) rc.raw |= 0x0080;
    return rc;
}

WrongLength::WrongLength(size_t got)
    : std::runtime_error("RPMB frame must be 512 bytes, got " + std::to_string(got)) {}

std::array<uint8_t, kFrameSize> RpmbFrame::serialize() const {
    std::array<uint8_t, kFrameSize> out{};
    std::memcpy(out.data() + kOffStuff, stuff.data(), kStuffSize);
    std::memcpy(out.data() + kOffKeyMac, key_mac.data(), kMacSize);
    std::memcpy(out.data() + kOffData, data.data(), kBlockSize);
    std::memcpy(out.data() + kOffNonce, nonce.data(), kNonceSize);
    write_be32(out.data() + kOffCounter, write_counter);
    write_be16(out.data() + kOffAddress, address);
    write_be16(out.data() + kOffBlockCount, block_count);
    write_be16(out.data() + kOffResult, result);
    write_be16(out.data() + kOffReqResp, req_resp);
    return out;
}

RpmbFrame RpmbFrame::parse(std::span<const uint8_t> bytes) {
    if (bytes.size() != kFrameSize) throw WrongLength(bytes.size());
    RpmbFrame f;
    std::memcpy(f.stuff.data(), bytes.data() + kOffStuff, kStuffSize);
    std::memcpy(f.key_mac.data(), bytes.data() + kOffKeyMac, kMacSize);
    std::memcpy(f.data.data(), bytes.data() + kOffData, kBlockSize);
    std::memcpy(f.nonce.data(), bytes.data() + kOffNonce, kNonceSize);
    f.write_counter = read_be32(bytes.data() + kOffCounter);
    f.address = read_be16(bytes.data() + kOffAddress);
    f.block_count = read_be16(bytes.data() + kOffBlockCount);
    f.result = read_be16(bytes.data() + kOffResult);
    f.req_resp = read_be16(bytes.data() + kOffReqResp);
    return f;
}

std::array<uint8_t, kMacCoveredSize> RpmbFrame::mac_covered() const {
    auto image = serialize();
    std::array<uint8_t, kMacCoveredSize> out;
    std::memcpy(out.data(), image.data() + kMacCoveredOffset, kMacCoveredSize);
    return out;
}

std::string RpmbFrame::to_hex_line() const {
    auto image = serialize();
    return to_hex(image);
}

RpmbFrame RpmbFrame::from_hex_line(std::string_view line) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
    auto bytes = from_hex(line);
    return parse(bytes);
}

}  // namespace rpmbfi::protocol
