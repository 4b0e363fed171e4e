// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include "rpmbfi/host/transport.hpp"

namespace rpmbfi::host {

Command Command::write(std::vector<protocol::RpmbFrame> frames) {
    Command c;
    c.kind = Kind::WriteFrames;
    c.frames = std::move(frames);
    return c;
}

Command Command::read(uint16_t count) {
    Command c;
    c.kind = Kind::ReadFrames;
    c.argument = count;
    return c;
}

Command Command::ext_csd() {
    Command c;
    c.kind = Kind::ReadExtCsd;
    return c;
}

Command Command::reset() {
    Command c;
    c.kind = Kind::HardReset;
    return c;
}

device::CommandResponse InProcessTransport::send_command(const Command& cmd) {
    switch (cmd.kind) {
        case Command::Kind::WriteFrames:
            // Last data bit on the wire: pulse delays count from here.
            fire_trigger();
            return dev_->write_frames(cmd.frames);
        case Command::Kind::ReadFrames:
            return dev_->read_frames(static_cast<uint16_t>(cmd.argument));
        case Command::Kind::ReadExtCsd:
            return dev_->read_ext_csd();
        case Command::Kind::HardReset:
            dev_->hard_reset();
            return device::CommandResponse::r1(0);
    }
    return device::CommandResponse::r1(0);
}

}  // namespace rpmbfi::host
