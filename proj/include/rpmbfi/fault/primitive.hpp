// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace rpmbfi::fault {

/// Concrete effect of one injected pulse on execution. Primitives are
/// fully resolved at sampling time (corruption values included), so
/// applying one is deterministic.
struct FaultPrimitive {
    enum class Kind : uint8_t {
        None,
        SkipMicroOp,      // the micro-op hit by the pulse does not execute
        SkipCall,         // the HMAC-check invocation is skipped entirely
        CorruptRegister,  // a live register takes a new value
        CorruptMemory,    // SRAM / flash content is modified
        Crash,            // chip hangs until hard reset
    };

    enum class Reg : uint8_t { Return, Length, LoopIndex, Accumulator, Generic };
    enum class Apply : uint8_t { Set, Xor };
    enum class Mem : uint8_t { SramCounter, UserSector };

    Kind kind = Kind::None;

    // CorruptRegister
    Reg reg = Reg::Generic;
    Apply apply = Apply::Set;
    uint32_t operand = 0;

    // CorruptMemory
    Mem mem = Mem::SramCounter;
    uint32_t mem_value = 0;
    uint32_t sector_index = 0;

    // Crash
    uint8_t crash_fill = 0xff;

    static FaultPrimitive none() { return {}; }
    static FaultPrimitive skip_micro_op() { return {.kind = Kind::SkipMicroOp}; }
    static FaultPrimitive skip_call() { return {.kind = Kind::SkipCall}; }
    static FaultPrimitive corrupt_register(Reg reg, uint32_t value, Apply apply = Apply::Set) {
        return {.kind = Kind::CorruptRegister, .reg = reg, .apply = apply, .operand = value};
    }
    static FaultPrimitive corrupt_sram_counter(uint32_t value) {
        return {.kind = Kind::CorruptMemory, .mem = Mem::SramCounter, .mem_value = value};
    }
    static FaultPrimitive corrupt_user_sector(uint32_t sector, uint32_t xor_mask) {
        return {.kind = Kind::CorruptMemory,
                .mem = Mem::UserSector,
                .mem_value = xor_mask,
                .sector_index = sector};
    }
    static FaultPrimitive crash(uint8_t fill) { return {.kind = Kind::Crash, .crash_fill = fill}; }

    uint32_t apply_to(uint32_t value) const {
        return apply == Apply::Set ? operand : (value ^ operand);
    }
};

inline const char* name(FaultPrimitive::Kind k) {
    switch (k) {
        case FaultPrimitive::Kind::None: return "none";
        case FaultPrimitive::Kind::SkipMicroOp: return "skip-micro-op";
        case FaultPrimitive::Kind::SkipCall: return "skip-call";
        case FaultPrimitive::Kind::CorruptRegister: return "corrupt-register";
        case FaultPrimitive::Kind::CorruptMemory: return "corrupt-memory";
        case FaultPrimitive::Kind::Crash: return "crash";
    }
    return "?";
}

}  // namespace rpmbfi::fault
