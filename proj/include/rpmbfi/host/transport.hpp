// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "rpmbfi/device/device.hpp"

namespace rpmbfi::host {

/// Bus command, eMMC-flavored: WriteFrames is the CMD23+CMD25 pair,
/// ReadFrames CMD23+CMD18, ReadExtCsd CMD8, HardReset CMD0.
struct Command {
    enum class Kind : uint8_t { WriteFrames, ReadFrames, ReadExtCsd, HardReset };

    Kind kind = Kind::WriteFrames;
    uint32_t argument = 0;  // ReadFrames: block count
    std::vector<protocol::RpmbFrame> frames;

    static Command write(std::vector<protocol::RpmbFrame> frames);
    static Command read(uint16_t count);
    static Command ext_csd();
    static Command reset();
};

/// Delivers commands to a device, in order, one at a time. The trigger
/// hook fires exactly once per data-bearing command, at the last data bit
/// (time zero for pulse delays).
class Transport {
public:
    virtual ~Transport() = default;

    virtual device::CommandResponse send_command(const Command& cmd) = 0;

    void set_trigger_hook(std::function<void()> hook) { trigger_hook_ = std::move(hook); }

protected:
    void fire_trigger() {
        if (trigger_hook_) trigger_hook_();
    }

private:
    std::function<void()> trigger_hook_;
};

/// Direct in-process binding to a device instance.
class InProcessTransport final : public Transport {
public:
    explicit InProcessTransport(device::RpmbDevice* dev) : dev_(dev) {}

    device::CommandResponse send_command(const Command& cmd) override;

    device::RpmbDevice* device() { return dev_; }

private:
    device::RpmbDevice* dev_;
};

}  // namespace rpmbfi::host
