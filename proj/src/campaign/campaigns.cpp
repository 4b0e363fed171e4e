// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include "rpmbfi/campaign/campaigns.hpp"

#include <algorithm>
#include <cstring>
#include <thread>

#include "rpmbfi/bytes.hpp"
#include "rpmbfi/host/session.hpp"
#include "rpmbfi/protocol/mac.hpp"

namespace rpmbfi::campaign {

using device::DeviceProfile;
using device::RpmbDevice;
using fault::PulseSpec;
using fault::SimulatedInjector;
using fault::SusceptibilityProfile;

namespace {

// Seed-stream salts; fixed so reports replay byte-identically.
enum : uint64_t {
    kSaltDevice = 1,
    kSaltInjector = 2,
    kSaltAttackerNonce = 3,
    kSaltVictim = 4,
    kSaltData = 5,
    kSaltDelays = 6,
    kSaltUserFill = 7,
};

PulseSpec pulse_at_cell(const CampaignConfig& config, int x, int y) {
    PulseSpec p;
    p.x_mm = x + 0.5;
    p.y_mm = y + 0.5;
    p.voltage_v = config.pulse_voltage;
    p.duration_ns = config.pulse_duration_ns;
    return p;
}

std::pair<int, int> resolve_cell(const CampaignConfig& config,
                                 const SusceptibilityProfile& profile) {
    return config.cell ? *config.cell : profile.best_cell();
}

std::pair<uint64_t, uint64_t> resolve_attack_window(const CampaignConfig& config,
                                                    const DeviceProfile& dev_profile) {
    if (config.window_ns) return *config.window_ns;
    return {dev_profile.timings.compare_start_ns, dev_profile.timings.compare_end_ns};
}

DeviceProfile apply_variant(const CampaignConfig& config, DeviceProfile profile) {
    if (config.variant_override) profile.check_variant = *config.variant_override;
    return profile;
}

std::array<uint8_t, 256> random_block(Rng& rng) {
    std::array<uint8_t, 256> out;
    for (size_t i = 0; i < out.size(); i += 4) {
        uint32_t w = rng.next_u32();
        std::memcpy(out.data() + i, &w, 4);
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Profiling

namespace {

void profile_cell(const CampaignConfig& config, RpmbDevice& dev,
                  std::shared_ptr<const SusceptibilityProfile> fprofile, uint64_t cell_seed,
                  HeatmapCell& out) {
    SimulatedInjector injector(fprofile, &dev, cell_seed);
    Rng delays(cell_seed ^ 0x5eedde1a75ULL);
    PulseSpec pulse = pulse_at_cell(config, out.x, out.y);

    dev.hard_reset();
    for (uint32_t i = 0; i < config.iterations_per_cell; ++i) {
        pulse.delay_ns = delays.below(device::kObserverDurationNs);
        injector.fire(pulse);
        auto response = dev.read_ext_csd();
        switch (classify_observer(response)) {
            case Outcome::Normal: out.normal++; break;
            case Outcome::Glitch: out.glitch++; break;
            default:
                out.crash++;
                dev.hard_reset();
                break;
        }
        out.iterations++;
    }
}

}  // namespace

ProfilingResult run_profiling(const CampaignConfig& config, const DeviceProfile& dev_profile,
                              std::shared_ptr<const SusceptibilityProfile> fprofile) {
    const int width = fprofile->width;
    const int height = fprofile->height;

    ProfilingResult result;
    result.cells.resize(size_t(width) * height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            result.cells[size_t(y) * width + x].x = x;
            result.cells[size_t(y) * width + x].y = y;
        }
    }

    // Per-cell seeds derive from the campaign seed alone, so cells can be
    // farmed to any number of workers without changing the report.
    Rng master(config.seed);
    std::vector<uint64_t> cell_seeds(result.cells.size());
    for (auto& s : cell_seeds) s = master.next_u64();

    int workers = std::max(1, config.workers);
    if (workers == 1) {
        RpmbDevice dev(apply_variant(config, dev_profile), Rng(config.seed).fork(kSaltDevice).next_u64());
        for (size_t i = 0; i < result.cells.size(); ++i) {
            profile_cell(config, dev, fprofile, cell_seeds[i], result.cells[i]);
        }
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                RpmbDevice dev(apply_variant(config, dev_profile),
                               Rng(config.seed ^ uint64_t(w)).next_u64());
                for (size_t i = w; i < result.cells.size(); i += size_t(workers)) {
                    profile_cell(config, dev, fprofile, cell_seeds[i], result.cells[i]);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    return result;
}

// ---------------------------------------------------------------------------
// Parameter search

SearchResult run_parameter_search(const CampaignConfig& config, const DeviceProfile& dev_profile,
                                  std::shared_ptr<const SusceptibilityProfile> fprofile) {
    SearchResult result;
    result.trials.reserve(config.trials);

    Rng master(config.seed);
    RpmbDevice dev(apply_variant(config, dev_profile), master.fork(kSaltDevice).next_u64());
    SimulatedInjector injector(fprofile, &dev, master.fork(kSaltInjector).next_u64());
    Rng params = master.fork(kSaltDelays);

    auto [cx, cy] = resolve_cell(config, *fprofile);
    constexpr int kSearchVoltageMax = 250;
    const int vmin = static_cast<int>(fprofile->voltage_min);
    const int vspan = kSearchVoltageMax - vmin + 1;
    const int dmin = static_cast<int>(fprofile->duration_min_ns);
    const int dspan = static_cast<int>(fprofile->duration_max_ns - fprofile->duration_min_ns) + 1;

    for (uint32_t t = 0; t < config.trials; ++t) {
        SearchTrial trial;
        trial.trial = t;
        trial.voltage_v = vmin + static_cast<int>(params.below(vspan));
        trial.duration_ns = dmin + static_cast<int>(params.below(dspan));

        PulseSpec pulse = pulse_at_cell(config, cx, cy);
        pulse.voltage_v = trial.voltage_v;
        pulse.duration_ns = trial.duration_ns;
        pulse.delay_ns = params.below(device::kObserverDurationNs);

        injector.fire(pulse);
        auto response = dev.read_ext_csd();
        trial.outcome = classify_observer(response);
        if (trial.outcome == Outcome::Crash) dev.hard_reset();
        result.trials.push_back(trial);

        bool above = trial.voltage_v > fprofile->threshold_v;
        (above ? result.above_count : result.below_count)++;
        if (trial.outcome == Outcome::Crash) (above ? result.above_crash : result.below_crash)++;

        int decile = std::min(9, (trial.duration_ns - dmin) * 10 / dspan);
        int cls = trial.outcome == Outcome::Normal ? 0 : trial.outcome == Outcome::Glitch ? 1 : 2;
        result.duration_deciles[decile][cls]++;
    }

    // Pearson chi-square of outcome class against duration decile.
    std::array<double, 10> row_totals{};
    std::array<double, 3> col_totals{};
    double total = 0;
    for (int d = 0; d < 10; ++d) {
        for (int c = 0; c < 3; ++c) {
            row_totals[d] += result.duration_deciles[d][c];
            col_totals[c] += result.duration_deciles[d][c];
            total += result.duration_deciles[d][c];
        }
    }
    double chi2 = 0;
    for (int d = 0; d < 10; ++d) {
        for (int c = 0; c < 3; ++c) {
            double expected = row_totals[d] * col_totals[c] / total;
            if (expected > 0) {
                double diff = result.duration_deciles[d][c] - expected;
                chi2 += diff * diff / expected;
            }
        }
    }
    result.duration_chi_square = chi2;
    return result;
}

// ---------------------------------------------------------------------------
// RPMB attack bench shared by sweep / attack / integrity

namespace {

struct RpmbBench {
    RpmbDevice dev;
    host::InProcessTransport transport;
    SimulatedInjector injector;
    host::HostSession attacker;
    protocol::HmacKey victim_key;
    std::array<uint8_t, 256> attacker_data;
    Rng delays;

    RpmbBench(const CampaignConfig& config, const DeviceProfile& dev_profile,
              std::shared_ptr<const SusceptibilityProfile> fprofile, uint64_t seed)
        : dev(apply_variant(config, dev_profile), Rng(seed).fork(kSaltDevice).next_u64()),
          transport(&dev),
          injector(std::move(fprofile), &dev, Rng(seed).fork(kSaltInjector).next_u64()),
          attacker(transport, Rng(seed).fork(kSaltAttackerNonce).next_u64()),
          delays(Rng(seed).fork(kSaltDelays).next_u64()) {
        transport.set_trigger_hook([this] { injector.on_trigger(); });

        // Victim provisioning: program a key the attacker never learns and
        // store an initial random block at the target address.
        Rng victim_rng = Rng(seed).fork(kSaltVictim);
        for (auto& b : victim_key.bytes) b = static_cast<uint8_t>(victim_rng.next_u32());
        host::HostSession victim(transport, victim_rng.next_u64());
        auto prog = victim.program_key(victim_key);
        if (!prog.ok()) throw InvariantViolation("victim key programming failed");
        auto block = random_block(victim_rng);
        auto wr = victim.write_authenticated(config.target_address, block);
        if (!wr.ok()) throw InvariantViolation("victim initial write failed");

        Rng data_rng = Rng(seed).fork(kSaltData);
        attacker_data = random_block(data_rng);

        attacker.read_counter();  // prime the attacker's counter cache
    }

    host::AttackResult attack_at(const CampaignConfig& config, uint64_t delay_ns) {
        if (dev.crashed()) throw InvariantViolation("attempt against a crashed device");
        auto [cx, cy] = resolve_cell(config, injector.profile());
        PulseSpec pulse = pulse_at_cell(config, cx, cy);
        return attacker.attack_write(config.target_address, attacker_data, delay_ns, pulse,
                                     injector);
    }

    void recover_from_crash() {
        dev.hard_reset();
        attacker.read_counter();  // resync the counter cache
    }
};

}  // namespace

std::vector<SuccessWindow> detect_success_windows(const std::vector<TimingTracePoint>& points) {
    std::vector<uint64_t> hits;
    for (const auto& p : points) {
        if (p.outcome == Outcome::Success) hits.push_back(p.delay_ns);
    }
    std::sort(hits.begin(), hits.end());
    std::vector<SuccessWindow> windows;
    for (uint64_t d : hits) {
        if (!windows.empty() && d < windows.back().end_ns + 50) {
            windows.back().end_ns = d;
        } else {
            windows.push_back({d, d});
        }
    }
    return windows;
}

SweepResult run_timing_sweep(const CampaignConfig& config, const DeviceProfile& dev_profile,
                             std::shared_ptr<const SusceptibilityProfile> fprofile) {
    SweepResult result;
    auto window = config.window_ns.value_or(std::pair<uint64_t, uint64_t>{110'000, 125'000});

    for (uint32_t sweep = 0; sweep < config.sweeps; ++sweep) {
        RpmbBench bench(config, dev_profile, fprofile, config.seed + sweep);
        for (uint64_t delay = window.first; delay <= window.second; delay += config.step_ns) {
            if (bench.dev.crashed()) bench.recover_from_crash();

            uint32_t counter_before = bench.dev.sram_counter();
            auto attack = bench.attack_at(config, delay);

            TimingTracePoint point;
            point.delay_ns = delay;
            point.result_value = attack.result_value;
            point.outcome = attack.outcome;
            point.compare_ops = bench.dev.last_write_trace().compare_word_count();
            point.check_invoked =
                attack.outcome != Outcome::Crash &&
                bench.dev.last_write_trace().contains(device::MicroOp::HmacCompute) &&
                bench.injector.last_primitive().kind != fault::FaultPrimitive::Kind::SkipCall;
            point.fault_kind = bench.injector.last_primitive().kind;
            result.points.push_back(point);

            if (attack.outcome == Outcome::Success) {
                result.successes++;
                // Cross-check the per-record success guarantees.
                if (bench.dev.sram_counter() != counter_before + 1) {
                    throw InvariantViolation("success without counter increment of exactly 1");
                }
                auto block = bench.dev.rpmb_block(config.target_address);
                if (!std::equal(block.begin(), block.end(), bench.attacker_data.begin())) {
                    throw InvariantViolation("success without attacker data stored");
                }
            }
        }
    }
    result.windows = detect_success_windows(result.points);
    return result;
}

// ---------------------------------------------------------------------------
// Attack / integrity

namespace {

struct AttackLoopStats {
    bool success = false;
    uint32_t attempts = 0;
    uint64_t success_delay_ns = 0;
    uint32_t crashes = 0;
    uint32_t counter_corruptions = 0;
};

// Repeats wrong-MAC writes at random in-window delays until bypass or the
// attempt cap, resetting after crashes and restoring the write counter via
// the vendor interface when a pulse corrupts it.
AttackLoopStats attack_until_success(RpmbBench& bench, const CampaignConfig& config,
                                     std::pair<uint64_t, uint64_t> window) {
    AttackLoopStats stats;
    uint32_t expected_counter = bench.dev.write_counter();
    // Delays stay inside [begin, end): the end timestamp already belongs
    // to the next micro-op.
    const uint64_t steps = std::max<uint64_t>(1, (window.second - window.first) / config.step_ns);

    for (uint32_t attempt = 0; attempt < config.max_attempts; ++attempt) {
        uint64_t delay = window.first + config.step_ns * bench.delays.below(steps);
        auto attack = bench.attack_at(config, delay);
        stats.attempts++;

        if (attack.outcome == Outcome::Crash) {
            stats.crashes++;
            bench.recover_from_crash();
        }

        // A corrupted SRAM counter shows up in the result-read echo (or in
        // the post-reset counter read); put it back before carrying on.
        uint32_t now = bench.dev.sram_counter();
        if (attack.outcome == Outcome::Success) {
            if (now != expected_counter + 1) {
                throw InvariantViolation("success without counter increment of exactly 1");
            }
            expected_counter = now;
            stats.success = true;
            stats.success_delay_ns = delay;
            return stats;
        }
        if (now != expected_counter) {
            stats.counter_corruptions++;
            bench.dev.debug_poke_counter(expected_counter);
            bench.attacker.read_counter();
        }
    }
    return stats;
}

}  // namespace

AttackCampaignResult run_attack(const CampaignConfig& config, const DeviceProfile& dev_profile,
                                std::shared_ptr<const SusceptibilityProfile> fprofile) {
    RpmbBench bench(config, dev_profile, fprofile, config.seed);
    auto window = resolve_attack_window(config, dev_profile);
    auto stats = attack_until_success(bench, config, window);

    AttackCampaignResult result;
    result.success = stats.success;
    result.attempts = stats.attempts;
    result.success_delay_ns = stats.success_delay_ns;
    result.crashes = stats.crashes;
    result.counter_corruption_events = stats.counter_corruptions;

    if (result.success) {
        auto block = bench.dev.rpmb_block(config.target_address);
        if (!std::equal(block.begin(), block.end(), bench.attacker_data.begin())) {
            throw InvariantViolation("success without attacker data stored");
        }
    }
    return result;
}

IntegrityReport run_integrity_campaign(const CampaignConfig& config,
                                       const DeviceProfile& dev_profile,
                                       std::shared_ptr<const SusceptibilityProfile> fprofile) {
    IntegrityReport report;
    RpmbBench bench(config, dev_profile, fprofile, config.seed);
    auto window = resolve_attack_window(config, dev_profile);

    // Pre-fill the user area with known data and image it (the dd step).
    Rng fill_master = Rng(config.seed).fork(kSaltUserFill);
    std::vector<uint64_t> sector_seeds(bench.dev.user_sector_count());
    for (auto& s : sector_seeds) s = fill_master.next_u64();

    auto sector_content = [&](uint32_t index) {
        std::array<uint8_t, 512> sector;
        Rng r(sector_seeds[index]);
        for (size_t i = 0; i < sector.size(); i += 8) {
            uint64_t w = r.next_u64();
            std::memcpy(sector.data() + i, &w, 8);
        }
        return sector;
    };

    for (uint32_t s = 0; s < bench.dev.user_sector_count(); ++s) {
        bench.dev.write_user_sector(s, sector_content(s));
    }

    auto digest_user_area = [&] {
        std::vector<uint8_t> image;
        image.reserve(size_t(bench.dev.user_sector_count()) * 512);
        for (uint32_t s = 0; s < bench.dev.user_sector_count(); ++s) {
            auto sector = bench.dev.read_user_sector(s);
            image.insert(image.end(), sector.begin(), sector.end());
        }
        return to_hex(protocol::sha256(image));
    };
    report.user_digest_before = digest_user_area();

    // Baseline RPMB image and counter.
    std::vector<std::array<uint8_t, 256>> rpmb_before(bench.dev.rpmb_block_count());
    for (uint32_t b = 0; b < bench.dev.rpmb_block_count(); ++b) {
        auto block = bench.dev.rpmb_block(b);
        std::copy(block.begin(), block.end(), rpmb_before[b].begin());
    }
    report.counter_before = bench.dev.write_counter();
    report.attacked_blocks = {config.target_address};

    auto stats = attack_until_success(bench, config, window);
    report.success = stats.success;
    report.attempts = stats.attempts;
    report.success_delay_ns = stats.success_delay_ns;
    report.crashes = stats.crashes;
    report.counter_corruption_events = stats.counter_corruptions;
    report.counter_after = bench.dev.write_counter();

    // RPMB diff against the baseline image.
    for (uint32_t b = 0; b < bench.dev.rpmb_block_count(); ++b) {
        auto block = bench.dev.rpmb_block(b);
        if (!std::equal(block.begin(), block.end(), rpmb_before[b].begin())) {
            report.rpmb_diff_blocks.push_back(b);
        }
    }

    // Re-image the user area; wear corruption is repaired by rewriting the
    // affected sectors and noted in the report.
    for (uint32_t s = 0; s < bench.dev.user_sector_count(); ++s) {
        auto expect = sector_content(s);
        auto got = bench.dev.read_user_sector(s);
        if (got != expect) {
            report.corrupted_repaired_sectors.push_back(s);
            bench.dev.write_user_sector(s, expect);
        }
    }
    report.user_digest_after = digest_user_area();
    report.digests_match = report.user_digest_before == report.user_digest_after;

    report.pass = report.success && report.digests_match &&
                  report.rpmb_diff_blocks == report.attacked_blocks &&
                  report.counter_after == report.counter_before + 1;

    if (report.success) {
        auto block = bench.dev.rpmb_block(config.target_address);
        if (!std::equal(block.begin(), block.end(), bench.attacker_data.begin())) {
            throw InvariantViolation("success without attacker data stored");
        }
    }
    return report;
}

}  // namespace rpmbfi::campaign
