// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "rpmbfi/protocol/frame.hpp"

namespace rpmbfi::protocol {

using Mac = std::array<uint8_t, kMacSize>;
using Digest = std::array<uint8_t, 32>;

/// 32-byte pre-shared authentication key. Write-once enforcement lives in
/// the device model; this is just the value.
struct HmacKey {
    std::array<uint8_t, 32> bytes{};

    static HmacKey from_hex(std::string_view hex);
    bool operator==(const HmacKey&) const = default;
};

Digest sha256(std::span<const uint8_t> message);
Mac hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> message);

/// Single HMAC-SHA256 over the concatenated MAC-covered regions of the
/// frames, in order. Not a MAC of MACs.
Mac compute_mac(const HmacKey& key, std::span<const RpmbFrame> frames);

struct BadBlockSize : std::runtime_error {
    explicit BadBlockSize(size_t got);
};

/// Builds the frames of an authenticated write request: one frame per
/// 256-byte block, shared counter/address/block_count, MAC in the last
/// frame. Throws BadBlockSize unless data is a non-zero multiple of 256.
std::vector<RpmbFrame> build_auth_write(const HmacKey& key, uint32_t write_counter,
                                        uint16_t address, std::span<const uint8_t> data);

}  // namespace rpmbfi::protocol
