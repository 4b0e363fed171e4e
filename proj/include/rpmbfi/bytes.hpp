// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rpmbfi {

inline uint16_t read_be16(const uint8_t* p) {
    return static_cast<uint16_t>(uint16_t(p[0]) << 8 | uint16_t(p[1]));
}

inline uint32_t read_be32(const uint8_t* p) {
    return uint32_t(p[0]) << 24 | uint32_t(p[1]) << 16 | uint32_t(p[2]) << 8 | uint32_t(p[3]);
}

inline void write_be16(uint8_t* p, uint16_t v) {
    p[0] = uint8_t(v >> 8);
    p[1] = uint8_t(v);
}

inline void write_be32(uint8_t* p, uint32_t v) {
    p[0] = uint8_t(v >> 24);
    p[1] = uint8_t(v >> 16);
    p[2] = uint8_t(v >> 8);
    p[3] = uint8_t(v);
}

std::string to_hex(std::span<const uint8_t> bytes);

// Throws std::invalid_argument on odd length or non-hex characters.
std::vector<uint8_t> from_hex(std::string_view hex);

}  // namespace rpmbfi
