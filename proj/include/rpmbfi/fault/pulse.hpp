// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace rpmbfi::fault {

/// One EM pulse: probe position on the 1 mm grid, amplitude, length, and
/// the firing delay measured from the trigger (last data bit sent).
struct PulseSpec {
    double x_mm = 0.0;
    double y_mm = 0.0;
    double z_mm = -25.7;  // probe height, metadata only
    double voltage_v = 200.0;
    double duration_ns = 100.0;
    uint64_t delay_ns = 0;

    PulseSpec with_delay(uint64_t d) const {
        PulseSpec p = *this;
        p.delay_ns = d;
        return p;
    }
};

}  // namespace rpmbfi::fault
