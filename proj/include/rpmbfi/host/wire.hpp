// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rpmbfi/host/transport.hpp"

namespace rpmbfi::host::wire {

// Length-prefixed framing so a host process can drive a device over any
// byte pipe:
//   request:  u32 length | u8 opcode | u32 argument | payload
//   response: u32 length | u8 status | u64 busy_ns  | payload
// Opcodes reuse the eMMC command indices (25 write, 18 read, 8 ext_csd,
// 0 reset) plus vendor debug opcodes 0xD0/0xD1. Integers big-endian;
// payloads are whole 512-byte frame images.

inline constexpr uint8_t kOpWriteFrames = 25;
inline constexpr uint8_t kOpReadFrames = 18;
inline constexpr uint8_t kOpReadExtCsd = 8;
inline constexpr uint8_t kOpHardReset = 0;
inline constexpr uint8_t kOpDebugPokeCounter = 0xD0;
inline constexpr uint8_t kOpDebugPeekCounter = 0xD1;

inline constexpr uint8_t kStatusR1 = 0;
inline constexpr uint8_t kStatusDataFrames = 1;
inline constexpr uint8_t kStatusExtCsd = 2;
inline constexpr uint8_t kStatusUnresponsive = 3;
inline constexpr uint8_t kStatusRaw = 4;
inline constexpr uint8_t kStatusError = 5;

struct WireError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<uint8_t> encode_request(const Command& cmd);
Command decode_request(std::span<const uint8_t> bytes);

std::vector<uint8_t> encode_response(const device::CommandResponse& resp);
device::CommandResponse decode_response(std::span<const uint8_t> bytes);

/// Device-side endpoint: decodes one request, runs it against the device,
/// returns the encoded response. Debug opcodes answer kStatusRaw/kStatusError.
std::vector<uint8_t> serve_request(device::RpmbDevice& dev, std::span<const uint8_t> request);

/// Transport that routes every command through the wire encoding and the
/// serve endpoint; exercises exactly what a remote driver would see.
class LoopbackTransport final : public Transport {
public:
    explicit LoopbackTransport(device::RpmbDevice* dev) : dev_(dev) {}

    device::CommandResponse send_command(const Command& cmd) override;

private:
    device::RpmbDevice* dev_;
};

}  // namespace rpmbfi::host::wire
