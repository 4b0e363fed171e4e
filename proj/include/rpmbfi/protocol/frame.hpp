// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rpmbfi::protocol {

inline constexpr size_t kFrameSize = 512;
inline constexpr size_t kStuffSize = 196;
inline constexpr size_t kMacSize = 32;
inline constexpr size_t kBlockSize = 256;
inline constexpr size_t kNonceSize = 16;

// Byte offsets inside the 512-byte frame image. All integers big-endian.
inline constexpr size_t kOffStuff = 0;
inline constexpr size_t kOffKeyMac = 196;
inline constexpr size_t kOffData = 228;
inline constexpr size_t kOffNonce = 484;
inline constexpr size_t kOffCounter = 500;
inline constexpr size_t kOffAddress = 504;
inline constexpr size_t kOffBlockCount = 506;
inline constexpr size_t kOffResult = 508;
inline constexpr size_t kOffReqResp = 510;

// The MAC covers data..req_resp (284 bytes), concatenated over all frames
// of a multi-block request, with the single MAC carried in the last frame.
inline constexpr size_t kMacCoveredOffset = kOffData;
inline constexpr size_t kMacCoveredSize = kFrameSize - kOffData;

enum class RequestType : uint16_t {
    ProgramKey = 0x0001,
    ReadCounter = 0x0002,
    AuthWrite = 0x0003,
    AuthRead = 0x0004,
    ResultRead = 0x0005,
};

enum class ResponseType : uint16_t {
    ProgramKey = 0x0100,
    ReadCounter = 0x0200,
    AuthWrite = 0x0300,
    AuthRead = 0x0400,
    ResultRead = 0x0500,
};

constexpr uint16_t code(RequestType t) { return static_cast<uint16_t>(t); }
constexpr uint16_t code(ResponseType t) { return static_cast<uint16_t>(t); }
constexpr ResponseType response_for(RequestType t) {
    return static_cast<ResponseType>(static_cast<uint16_t>(t) << 8);
}

std::optional<RequestType> parse_request_type(uint16_t raw);
std::optional<ResponseType> parse_response_type(uint16_t raw);
const char* name(RequestType t);

/// 16-bit RPMB result register. Bit 7 flags write-counter expiry; the low
/// bits carry the status code. Codes outside the modeled set survive as
/// Unknown with the raw value preserved, so round-trips stay exact.
struct ResultCode {
    enum class Kind : uint16_t {
        OperationOk = 0x00,
        GeneralFailure = 0x01,
        AuthFailure = 0x02,
        CounterFailure = 0x03,
        AddressFailure = 0x04,
        NoKey = 0x07,
        Unknown = 0xffff,
    };

    Kind kind = Kind::OperationOk;
    bool counter_expired = false;
    uint16_t raw = 0;

    static ResultCode from_raw(uint16_t raw);
    static ResultCode make(Kind kind, bool expired = false);

    uint16_t to_raw() const { return raw; }
    bool ok() const { return kind == Kind::OperationOk; }

    friend bool operator==(const ResultCode& a, const ResultCode& b) { return a.raw == b.raw; }
};

const char* name(ResultCode::Kind k);

/// Thrown by parse() when the input is not exactly 512 bytes.
struct WrongLength : std::runtime_error {
    explicit WrongLength(size_t got);
};

/// One JEDEC-style RPMB data frame with typed fields.
struct RpmbFrame {
    std::array<uint8_t, kStuffSize> stuff{};
    std::array<uint8_t, kMacSize> key_mac{};
    std::array<uint8_t, kBlockSize> data{};
    std::array<uint8_t, kNonceSize> nonce{};
    uint32_t write_counter = 0;
    uint16_t address = 0;
    uint16_t block_count = 0;
    uint16_t result = 0;
    uint16_t req_resp = 0;

    std::array<uint8_t, kFrameSize> serialize() const;
    static RpmbFrame parse(std::span<const uint8_t> bytes);

    std::optional<RequestType> request_type() const { return parse_request_type(req_resp); }
    std::optional<ResponseType> response_type() const { return parse_response_type(req_resp); }
    ResultCode result_code() const { return ResultCode::from_raw(result); }

    /// The 284 MAC-covered bytes (data through req_resp) of this frame.
    std::array<uint8_t, kMacCoveredSize> mac_covered() const;

    /// Hex-dump text form: 1024 lowercase hex digits, one frame per line.
    std::string to_hex_line() const;
    static RpmbFrame from_hex_line(std::string_view line);

    bool operator==(const RpmbFrame&) const = default;
};

}  // namespace rpmbfi::protocol
