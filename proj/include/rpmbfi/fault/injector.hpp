// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <stdexcept>

#include "rpmbfi/device/device.hpp"
#include "rpmbfi/fault/pulse.hpp"
#include "rpmbfi/fault/susceptibility.hpp"

namespace rpmbfi::fault {

struct InjectorUnavailable : std::runtime_error {
    InjectorUnavailable() : std::runtime_error("no injector backend attached") {}
};

/// Pulse source. The simulated backend is the only one shipped; the
/// interface is the seam where real glitching hardware would plug in.
class Injector {
public:
    virtual ~Injector() = default;

    /// Fires a pulse right now. Returns the primitive that was produced
    /// (an acknowledgement; hardware would return a status instead).
    virtual FaultPrimitive fire(const PulseSpec& pulse) = 0;

    /// Arms a one-shot pulse released at the next transport trigger
    /// (the last data bit of a data-bearing command).
    virtual void arm(const PulseSpec& pulse) = 0;

    virtual bool armed() const = 0;

    /// Trigger hook; called by the transport at time zero of the
    /// in-flight command.
    virtual void on_trigger() = 0;
};

/// Samples outcomes from a susceptibility profile and schedules them on
/// the attached device. Owns its RNG stream: identical seeds replay
/// identical pulse outcomes.
class SimulatedInjector final : public Injector {
public:
    SimulatedInjector(std::shared_ptr<const SusceptibilityProfile> profile,
                      device::RpmbDevice* device, uint64_t seed);

    FaultPrimitive fire(const PulseSpec& pulse) override;
    void arm(const PulseSpec& pulse) override;
    bool armed() const override { return armed_pulse_.has_value(); }
    void on_trigger() override;

    const SusceptibilityProfile& profile() const { return *profile_; }
    /// Primitive produced by the most recent pulse (None if none fired yet).
    const FaultPrimitive& last_primitive() const { return last_primitive_; }

private:
    FaultPrimitive sample_and_schedule(const PulseSpec& pulse);

    std::shared_ptr<const SusceptibilityProfile> profile_;
    device::RpmbDevice* device_;
    Rng rng_;
    std::optional<PulseSpec> armed_pulse_;
    FaultPrimitive last_primitive_{};
};

/// Micro-op whose interval contains the delay; nullptr past BusyRelease.
inline const device::TimelineEntry* map_delay_to_microop(const device::MicroOpTimeline& timeline,
                                                         uint64_t delay_ns) {
    return timeline.at_delay(delay_ns);
}

}  // namespace rpmbfi::fault
