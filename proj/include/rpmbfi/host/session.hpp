// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rpmbfi/campaign/outcome.hpp"
#include "rpmbfi/fault/injector.hpp"
#include "rpmbfi/host/transport.hpp"
#include "rpmbfi/protocol/mac.hpp"
#include "rpmbfi/rng.hpp"

namespace rpmbfi::host {

enum class HostError : uint8_t {
    None,
    NonceMismatch,
    MacMismatch,
    NoResponse,     // device returned no/short data where frames were due
    DeviceCrashed,  // unresponsive fill pattern
};

const char* name(HostError e);

struct CounterRead {
    uint32_t counter = 0;
    bool verified = false;
    HostError error = HostError::None;
    protocol::ResultCode result;
};

struct ReadResult {
    std::vector<uint8_t> data;
    bool verified = false;
    HostError error = HostError::None;
    protocol::ResultCode result;
};

struct AttackResult {
    protocol::ResultCode result;       // meaningful unless the device crashed
    campaign::Outcome outcome = campaign::Outcome::Normal;
    uint16_t result_value = 0;         // raw register value or crash fill pattern
    std::optional<uint32_t> device_counter;
};

/// Host-side RPMB client for one device. Keeps the write-counter cache
/// and the seedable nonce/wrong-MAC source; refreshes the counter from
/// the device after every write attempt, and follows every write with
/// exactly one result read.
class HostSession {
public:
    HostSession(Transport& transport, uint64_t nonce_seed);

    void set_key(const protocol::HmacKey& key) { key_ = key; }
    bool has_key() const { return key_.has_value(); }

    protocol::ResultCode program_key(const protocol::HmacKey& key);
    CounterRead read_counter();
    protocol::ResultCode write_authenticated(uint16_t address, std::span<const uint8_t> data);
    ReadResult read_authenticated(uint16_t address, uint16_t block_count);

    /// The attacker primitive: a full write sequence carrying a random
    /// (wrong) MAC, with a pulse armed to fire at delay_ns after the last
    /// data bit. Reads the result register and classifies the outcome.
    AttackResult attack_write(uint16_t address, std::span<const uint8_t> data, uint64_t delay_ns,
                              const fault::PulseSpec& pulse, fault::Injector& injector);

    std::optional<uint32_t> cached_counter() const { return counter_cache_; }

private:
    protocol::ResultCode read_result_register(std::optional<uint32_t>* counter_out = nullptr);
    std::array<uint8_t, 16> fresh_nonce();

    Transport& transport_;
    Rng rng_;
    std::optional<protocol::HmacKey> key_;
    std::optional<uint32_t> counter_cache_;
};

}  // namespace rpmbfi::host
