// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include "rpmbfi/fault/injector.hpp"

namespace rpmbfi::fault {

SimulatedInjector::SimulatedInjector(std::shared_ptr<const SusceptibilityProfile> profile,
                                     device::RpmbDevice* device, uint64_t seed)
    : profile_(std::move(profile)), device_(device), rng_(seed) {
    if (!profile_) throw InjectorUnavailable();
}

FaultPrimitive SimulatedInjector::sample_and_schedule(const PulseSpec& pulse) {
    if (!device_) throw InjectorUnavailable();
    if (pulse.voltage_v < profile_->voltage_min || pulse.voltage_v > profile_->voltage_max ||
        pulse.duration_ns < profile_->duration_min_ns ||
        pulse.duration_ns > profile_->duration_max_ns) {
        throw PulseOutOfRange(pulse.voltage_v, pulse.duration_ns);
    }
    FaultPrimitive primitive = sample_fault(*profile_, pulse, rng_);
    last_primitive_ = primitive;
    // Every pulse stresses the flash dies, whatever else it does.
    device_->apply_pulse_wear(rng_);
    if (primitive.kind != FaultPrimitive::Kind::None) {
        device_->pend_fault({pulse.delay_ns, primitive});
    }
    return primitive;
}

FaultPrimitive SimulatedInjector::fire(const PulseSpec& pulse) {
    return sample_and_schedule(pulse);
}

void SimulatedInjector::arm(const PulseSpec& pulse) { armed_pulse_ = pulse; }

void SimulatedInjector::on_trigger() {
    if (!armed_pulse_) return;
    PulseSpec pulse = *armed_pulse_;
    armed_pulse_.reset();
    sample_and_schedule(pulse);
}

}  // namespace rpmbfi::fault
