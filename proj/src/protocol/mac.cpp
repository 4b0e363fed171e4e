// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include "rpmbfi/protocol/mac.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <cstring>

#include "rpmbfi/bytes.hpp"

namespace rpmbfi::protocol {

HmacKey HmacKey::from_hex(std::string_view hex) {
    auto raw = rpmbfi::from_hex(hex);
    if (raw.size() != 32) throw std::invalid_argument("HMAC key must be 32 bytes");
    HmacKey k;
    std::memcpy(k.bytes.data(), raw.data(), 32);
    return k;
}

Digest sha256(std::span<const uint8_t> message) {
    Digest out{};
    SHA256(message.data(), message.size(), out.data());
    return out;
}

Mac hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> message) {
    Mac out{};
    unsigned int len = 0;
    HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(), message.size(),
         out.data(), &len);
    return out;
}

Mac compute_mac(const HmacKey& key, std::span<const RpmbFrame> frames) {
    if (frames.empty()) throw std::invalid_argument("compute_mac needs at least one frame");
    std::vector<uint8_t> covered;
    covered.reserve(frames.size() * kMacCoveredSize);
    for (const auto& f : frames) {
        auto region = f.mac_covered();
        covered.insert(covered.end(), region.begin(), region.end());
    }
    return hmac_sha256(key.bytes, covered);
}

BadBlockSize::BadBlockSize(size_t got)
    : std::runtime_error("write data must be a non-zero multiple of 256 bytes, got " +
                         std::to_string(got)) {}

std::vector<RpmbFrame> build_auth_write(const HmacKey& key, uint32_t write_counter,
                                        uint16_t address, std::span<const uint8_t> data) {
    if (data.empty() || data.size() % kBlockSize != 0) throw BadBlockSize(data.size());
    const size_t blocks = data.size() / kBlockSize;
    std::vector<RpmbFrame> frames(blocks);
    for (size_t i = 0; i < blocks; ++i) {
        RpmbFrame& f = frames[i];
        std::memcpy(f.data.data(), data.data() + i * kBlockSize, kBlockSize);
        f.write_counter = write_counter;
        f.address = address;
        f.block_count = static_cast<uint16_t>(blocks);
        f.req_resp = code(RequestType::AuthWrite);
    }
    Mac mac = compute_mac(key, frames);
    frames.back().key_mac = mac;
    return frames;
}

}  // namespace rpmbfi::protocol
