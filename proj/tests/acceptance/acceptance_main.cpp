// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: end-to-end checks of the emulator against its
// documented behavior, one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rpmbfi/bytes.hpp"
#include "rpmbfi/campaign/campaigns.hpp"
#include "rpmbfi/campaign/reports.hpp"
#include "rpmbfi/cli/cli.hpp"
#include "rpmbfi/device/device.hpp"
#include "rpmbfi/fault/injector.hpp"
#include "rpmbfi/host/session.hpp"
#include "rpmbfi/protocol/mac.hpp"
#include "rpmbfi/rng.hpp"

using namespace rpmbfi;
using namespace std::chrono;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    std::string label;
    std::function<void(std::vector<std::string>&)> run;
    double budget_s = 0.0;  // 0 = no stated budget
};

void expect(std::vector<std::string>& failures, bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
}

protocol::RpmbFrame random_frame(Rng& rng) {
    protocol::RpmbFrame f;
    for (auto& b : f.stuff) b = uint8_t(rng.next_u32());
    for (auto& b : f.key_mac) b = uint8_t(rng.next_u32());
    for (auto& b : f.data) b = uint8_t(rng.next_u32());
    for (auto& b : f.nonce) b = uint8_t(rng.next_u32());
    f.write_counter = rng.next_u32();
    f.address = uint16_t(rng.next_u32());
    f.block_count = uint16_t(rng.next_u32());
    f.result = uint16_t(rng.next_u32());
    f.req_resp = uint16_t(rng.next_u32());
    return f;
}

protocol::ResultCode device_result(device::RpmbDevice& dev, uint32_t* counter = nullptr) {
    protocol::RpmbFrame req;
    req.req_resp = protocol::code(protocol::RequestType::ResultRead);
    dev.write_frames({{req}});
    auto resp = dev.read_frames(1);
    if (!resp.responsive() || resp.frames.empty()) {
        return protocol::ResultCode::make(protocol::ResultCode::Kind::Unknown);
    }
    if (counter) *counter = resp.frames[0].write_counter;
    return resp.frames[0].result_code();
}

protocol::HmacKey fixed_key(uint8_t seed) {
    protocol::HmacKey k;
    for (int i = 0; i < 32; ++i) k.bytes[i] = uint8_t(seed + i);
    return k;
}

void program_key(device::RpmbDevice& dev, const protocol::HmacKey& key) {
    protocol::RpmbFrame req;
    req.req_resp = protocol::code(protocol::RequestType::ProgramKey);
    std::memcpy(req.key_mac.data(), key.bytes.data(), 32);
    dev.write_frames({{req}});
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

int run_cli(std::vector<std::string> args) {
    std::vector<const char*> argv{"rpmbfi"};
    for (auto& a : args) argv.push_back(a.c_str());
    std::ostringstream sink;
    return cli::run(int(argv.size()), argv.data(), sink, sink);
}

// ---------------------------------------------------------------------------

void criterion_protocol(std::vector<std::string>& failures) {
    Rng rng(0xACC1);
    for (int i = 0; i < 100'000; ++i) {
        auto f = random_frame(rng);
        auto image = f.serialize();
        if (!(protocol::RpmbFrame::parse(image) == f)) {
            failures.push_back("frame round-trip failed at iteration " + std::to_string(i));
            return;
        }
        if (i % 2 == 0) {
            // image-side round trip on the same bytes
            auto reparsed = protocol::RpmbFrame::parse(image).serialize();
            if (reparsed != image) {
                failures.push_back("byte-image round-trip failed at iteration " +
                                   std::to_string(i));
                return;
            }
        }
    }

    // Published keyed HMAC-SHA256 vectors (RFC 4231), bit-exact.
    struct Vector {
        const char* key;
        const char* msg;
        const char* mac;
    };
    const Vector vectors[] = {
        {"0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b", "4869205468657265",
         "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7"},
        {"4a656665", "7768617420646f2079612077616e7420666f72206e6f7468696e673f",
         "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"},
        {"aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa",
         "dddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddd"
         "dddddddddddddddddddddddddddddddddddd",
         "773ea91e36800e46854db8ebd09181a72959098b3ef8c122d9635514ced565fe"},
        {"0102030405060708090a0b0c0d0e0f10111213141516171819",
         "cdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcd"
         "cdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcd",
         "82558a389a443c0ea4cc819899f2083a85f0faa3e578f8077a2e3ff46729665b"},
    };
    for (const auto& v : vectors) {
        auto mac = protocol::hmac_sha256(from_hex(v.key), from_hex(v.msg));
        expect(failures, to_hex(mac) == v.mac, std::string("HMAC vector mismatch for key ") + v.key);
    }
}

void criterion_soundness(std::vector<std::string>& failures) {
    auto profile = device::DeviceProfile::builtin("target1");
    device::RpmbDevice dev(profile, 0x50C1);
    auto key = fixed_key(0x20);
    program_key(dev, key);

    std::vector<uint8_t> block(256, 0x5A);
    auto seed_frames = protocol::build_auth_write(key, 0, 0, block);
    dev.write_frames(seed_frames);
    if (!device_result(dev).ok()) {
        failures.push_back("setup write failed");
        return;
    }

    auto rpmb_digest = [&dev] {
        std::vector<uint8_t> image;
        for (uint32_t b = 0; b < dev.rpmb_block_count(); ++b) {
            auto blk = dev.rpmb_block(b);
            image.insert(image.end(), blk.begin(), blk.end());
        }
        return protocol::sha256(image);
    };
    auto baseline = rpmb_digest();
    auto counter0 = dev.write_counter();

    Rng rng(0xACC2);
    for (int seq = 0; seq < 10'000; ++seq) {
        // one hostile operation per sequence step, none validly MAC'd
        switch (rng.below(3)) {
            case 0: {
                protocol::HmacKey wrong;
                for (auto& b : wrong.bytes) b = uint8_t(rng.next_u32());
                auto frames =
                    protocol::build_auth_write(wrong, dev.sram_counter(),
                                               uint16_t(rng.below(1024)), block);
                dev.write_frames(frames);
                break;
            }
            case 1: {
                auto frames = protocol::build_auth_write(key, dev.sram_counter(),
                                                         uint16_t(rng.below(1024)), block);
                // valid MAC destroyed by one bit flip in a covered field
                frames.back().data[rng.below(256)] ^= uint8_t(1 + rng.below(255));
                dev.write_frames(frames);
                break;
            }
            default: {
                auto f = random_frame(rng);
                f.req_resp = protocol::code(protocol::RequestType::AuthWrite);
                f.block_count = 1;
                dev.write_frames({{f}});
                break;
            }
        }
    }
    expect(failures, rpmb_digest() == baseline, "RPMB contents changed without a valid MAC");
    expect(failures, dev.write_counter() == counter0, "counter moved without a valid MAC");

    // Valid writes always succeed with a counter delta of exactly 1.
    for (int i = 0; i < 500; ++i) {
        uint32_t before = dev.write_counter();
        std::vector<uint8_t> data(256, uint8_t(i));
        auto frames = protocol::build_auth_write(key, dev.sram_counter(),
                                                 uint16_t(rng.below(1024)), data);
        dev.write_frames(frames);
        auto rc = device_result(dev);
        if (!rc.ok() || dev.write_counter() != before + 1) {
            failures.push_back("valid write " + std::to_string(i) + " did not succeed cleanly");
            return;
        }
    }
}

void criterion_scenarios(std::vector<std::string>& failures) {
    using fault::FaultPrimitive;
    const std::pair<const char*, FaultPrimitive> scenarios[] = {
        {"length->0", FaultPrimitive::corrupt_register(FaultPrimitive::Reg::Length, 0)},
        {"return->non-zero",
         FaultPrimitive::corrupt_register(FaultPrimitive::Reg::Return, 0xCAFE0001)},
        {"skip-call", FaultPrimitive::skip_call()},
    };
    for (const auto& [label, primitive] : scenarios) {
        device::RpmbDevice dev(device::DeviceProfile::builtin("target1"), 3);
        auto key = fixed_key(0x40);
        program_key(dev, key);

        std::vector<uint8_t> payload(256, 0xD7);
        protocol::HmacKey wrong = fixed_key(0x99);
        auto frames = protocol::build_auth_write(wrong, dev.sram_counter(), 0, payload);
        frames.back().key_mac[0] ^= 0x80;

        dev.write_frames(frames, {{118'000, primitive}});
        uint32_t counter = 0;
        auto rc = device_result(dev, &counter);

        expect(failures, rc.to_raw() == 0x0000,
               std::string(label) + ": result register is not 0x00");
        expect(failures, counter == 1, std::string(label) + ": counter delta is not 1");
        auto stored = dev.rpmb_block(0);
        expect(failures, std::equal(stored.begin(), stored.end(), payload.begin()),
               std::string(label) + ": attacker data not stored");
    }
}

void criterion_timing_windows(std::vector<std::string>& failures) {
    struct Target {
        const char* name;
        uint64_t window_begin, window_end;
    };
    const Target targets[] = {
        {"target1", 117'720, 118'300},
        {"target3", 112'300, 112'500},
    };
    for (const auto& t : targets) {
        auto fprofile = std::make_shared<const fault::SusceptibilityProfile>(
            fault::SusceptibilityProfile::builtin(t.name));
        campaign::CampaignConfig config;
        config.experiment = "sweep";
        config.device_profile = t.name;
        config.fault_profile = t.name;
        config.window_ns = {{110'000, 125'000}};
        config.step_ns = 10;
        config.sweeps = 20;
        config.seed = 0xACC4;

        auto result =
            campaign::run_timing_sweep(config, device::DeviceProfile::builtin(t.name), fprofile);
        uint32_t in_window = 0, out_of_window = 0;
        for (const auto& p : result.points) {
            if (p.outcome != campaign::Outcome::Success) continue;
            if (p.delay_ns >= t.window_begin && p.delay_ns < t.window_end) {
                ++in_window;
            } else {
                ++out_of_window;
            }
        }
        expect(failures, in_window >= 1,
               std::string(t.name) + ": no in-window success over 20 sweeps");
        expect(failures, out_of_window == 0,
               std::string(t.name) + ": " + std::to_string(out_of_window) +
                   " success(es) outside the window");
    }
}

void criterion_profiling_stats(std::vector<std::string>& failures) {
    auto t1 = fault::SusceptibilityProfile::builtin("target1");
    auto t3 = fault::SusceptibilityProfile::builtin("target3");

    fault::PulseSpec hotspot1;
    hotspot1.x_mm = 6.5;
    hotspot1.y_mm = 4.5;
    Rng rng(0xACC5);
    int glitch1 = 0;
    for (int i = 0; i < 10'000; ++i) {
        if (t1.sample_class(hotspot1, rng) == fault::OutcomeClass::Glitch) ++glitch1;
    }
    double f1 = glitch1 / 10'000.0;
    expect(failures, f1 >= 0.27 && f1 <= 0.33,
           "target1 hotspot glitch fraction " + std::to_string(f1) + " outside 0.30 +- 0.03");

    fault::PulseSpec hotspot3;
    hotspot3.x_mm = 10.5;
    hotspot3.y_mm = 1.5;
    int glitch3 = 0;
    for (int i = 0; i < 10'000; ++i) {
        if (t3.sample_class(hotspot3, rng) == fault::OutcomeClass::Glitch) ++glitch3;
    }
    double f3 = glitch3 / 10'000.0;
    expect(failures, f3 < 0.10,
           "target3 hotspot glitch fraction " + std::to_string(f3) + " not below 0.10");

    // Duration invariance: outcome class vs duration decile, alpha = 0.01.
    uint32_t counts[10][3] = {};
    Rng durations(0xACC5D);
    const int n = 30'000;
    for (int i = 0; i < n; ++i) {
        double d = 40.0 + double(durations.below(961));
        auto pulse = hotspot1;
        pulse.duration_ns = d;
        auto cls = t1.sample_class(pulse, rng);
        int decile = std::min(9, int((d - 40.0) * 10.0 / 961.0));
        counts[decile][cls == fault::OutcomeClass::None     ? 0
                       : cls == fault::OutcomeClass::Glitch ? 1
                                                            : 2]++;
    }
    double row[10] = {}, col[3] = {}, total = 0, chi2 = 0;
    for (int d = 0; d < 10; ++d) {
        for (int c = 0; c < 3; ++c) {
            row[d] += counts[d][c];
            col[c] += counts[d][c];
            total += counts[d][c];
        }
    }
    for (int d = 0; d < 10; ++d) {
        for (int c = 0; c < 3; ++c) {
            double e = row[d] * col[c] / total;
            if (e > 0) {
                double diff = counts[d][c] - e;
                chi2 += diff * diff / e;
            }
        }
    }
    // chi-square critical value at alpha = 0.01 for df = (10-1)(3-1) = 18
    expect(failures, chi2 < 34.805,
           "duration chi-square " + std::to_string(chi2) + " significant at alpha=0.01");
}

void criterion_integrity(std::vector<std::string>& failures) {
    auto fprofile = std::make_shared<const fault::SusceptibilityProfile>(
        fault::SusceptibilityProfile::builtin("target1"));
    auto dev_profile = device::DeviceProfile::builtin("target1");

    std::vector<uint32_t> attempts;
    for (uint64_t seed = 1; seed <= 50; ++seed) {
        campaign::CampaignConfig config;
        config.experiment = "integrity";
        config.device_profile = "target1";
        config.fault_profile = "target1";
        config.seed = 0xACC60000 + seed;
        config.max_attempts = 200;

        auto report = campaign::run_integrity_campaign(config, dev_profile, fprofile);
        if (!report.success) {
            failures.push_back("seed " + std::to_string(seed) + ": no bypass within the cap");
            continue;
        }
        attempts.push_back(report.attempts);
        expect(failures, report.digests_match,
               "seed " + std::to_string(seed) + ": user-area digest changed");
        expect(failures, report.rpmb_diff_blocks == report.attacked_blocks,
               "seed " + std::to_string(seed) + ": RPMB diff is not exactly the attacked block");
        expect(failures, report.counter_after == report.counter_before + 1,
               "seed " + std::to_string(seed) + ": counter delta is not 1");
        expect(failures, report.pass, "seed " + std::to_string(seed) + ": report did not pass");
    }
    std::sort(attempts.begin(), attempts.end());
    if (attempts.size() < 50) {
        failures.push_back("not all 50 seeds reached a bypass");
    } else {
        uint32_t median = (attempts[24] + attempts[25] + 1) / 2;
        expect(failures, median <= 10,
               "median attempts " + std::to_string(median) + " exceeds 10");
    }
}

void criterion_mitigations(std::vector<std::string>& failures) {
    auto fprofile = std::make_shared<const fault::SusceptibilityProfile>(
        fault::SusceptibilityProfile::builtin("target1"));
    auto dev_profile = device::DeviceProfile::builtin("target1");

    campaign::CampaignConfig config;
    config.experiment = "sweep";
    config.device_profile = "target1";
    config.fault_profile = "target1";
    config.window_ns = {{110'000, 125'000}};
    config.step_ns = 10;
    config.sweeps = 2;
    config.seed = 0xACC7;

    // DoubleCheck: the full sweep yields no successes under single faults.
    config.variant_override = device::CheckVariant::DoubleCheck;
    auto dc = campaign::run_timing_sweep(config, dev_profile, fprofile);
    expect(failures, dc.successes == 0,
           "DoubleCheck sweep produced " + std::to_string(dc.successes) + " success(es)");

    // ConstantTime: every executed check compares all 8 words.
    config.variant_override = device::CheckVariant::ConstantTime;
    auto ct = campaign::run_timing_sweep(config, dev_profile, fprofile);
    int checked = 0;
    for (const auto& p : ct.points) {
        if (!p.check_invoked) continue;
        ++checked;
        if (p.compare_ops != 8) {
            failures.push_back("ConstantTime executed " + std::to_string(p.compare_ops) +
                               " compares at delay " + std::to_string(p.delay_ns));
            break;
        }
    }
    expect(failures, checked > 1000, "ConstantTime sweep exercised too few checks");

    // NaiveEarlyExit: compare count equals matching-prefix words + 1 (cap 8).
    device::RpmbDevice dev(dev_profile, 5);
    auto key = fixed_key(0x60);
    program_key(dev, key);
    std::vector<uint8_t> payload(256, 0x11);
    for (int prefix = 0; prefix <= 8; ++prefix) {
        auto frames = protocol::build_auth_write(key, dev.sram_counter(), 0, payload);
        if (prefix < 8) frames.back().key_mac[size_t(prefix) * 4] ^= 0xFF;
        dev.write_frames(frames);
        device_result(dev);
        int want = prefix >= 8 ? 8 : prefix + 1;
        int got = dev.last_write_trace().compare_word_count();
        expect(failures, got == want,
               "naive compare count for prefix " + std::to_string(prefix) + ": got " +
                   std::to_string(got) + ", want " + std::to_string(want));
    }
}

void criterion_reproducibility(std::vector<std::string>& failures) {
    fs::path tmp = fs::temp_directory_path() / "rpmbfi_acceptance_repro";
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    auto run_a = tmp / "a";
    auto run_b = tmp / "b";
    int rc1 = run_cli({"sweep", "--profile", "target3", "--fault-profile", "target3", "--seed",
                       "20260809", "--window", "110000:120000", "--step", "10", "--out",
                       run_a.string()});
    expect(failures, rc1 == 0, "first sweep run failed");
    int rc2 = run_cli({"replay", "--manifest", (run_a / "manifest.json").string(), "--out",
                       run_b.string()});
    expect(failures, rc2 == 0, "replay run failed");
    expect(failures, slurp(run_a / "timing.csv") == slurp(run_b / "timing.csv"),
           "timing.csv differs between a run and its replay");
    expect(failures, slurp(run_a / "manifest.json") == slurp(run_b / "manifest.json"),
           "manifest.json differs between a run and its replay");

    auto integ_a = tmp / "ia";
    auto integ_b = tmp / "ib";
    int rc3 = run_cli({"integrity", "--profile", "target1", "--fault-profile", "target1",
                       "--seed", "99", "--out", integ_a.string()});
    int rc4 = run_cli({"replay", "--manifest", (integ_a / "manifest.json").string(), "--out",
                       integ_b.string()});
    expect(failures, rc3 == 0 && rc4 == 0, "integrity runs failed");
    expect(failures, slurp(integ_a / "integrity.json") == slurp(integ_b / "integrity.json"),
           "integrity.json differs between a run and its replay");

    fs::remove_all(tmp);
}

}  // namespace

int main() {
    std::vector<Criterion> criteria = {
        {"1. protocol correctness: 1e5 frame round-trips + HMAC-SHA256 known answers",
         criterion_protocol, 10.0},
        {"2. fault-free soundness: 1e4 hostile sequences mutate nothing; valid writes land",
         criterion_soundness, 60.0},
        {"3. scenario fidelity: length->0, return->non-zero, skip-call all bypass",
         criterion_scenarios, 0.0},
        {"4. timing windows: successes confined to 117.72-118.30us / 112.30-112.50us",
         criterion_timing_windows, 300.0},
        {"5. profiling statistics: 30% +- 3% and <10% hotspots, duration-invariant",
         criterion_profiling_stats, 0.0},
        {"6. integrity: median <= 10 attempts over 50 seeds, digests/diff/counter exact",
         criterion_integrity, 0.0},
        {"7. mitigations: DoubleCheck blocks, ConstantTime fixes the timing channel",
         criterion_mitigations, 0.0},
        {"8. reproducibility: byte-identical replays from the manifest",
         criterion_reproducibility, 0.0},
    };

    int failed = 0;
    for (auto& c : criteria) {
        std::vector<std::string> failures;
        auto t0 = steady_clock::now();
        try {
            c.run(failures);
        } catch (const std::exception& e) {
            failures.push_back(std::string("exception: ") + e.what());
        }
        double elapsed = duration_cast<duration<double>>(steady_clock::now() - t0).count();
        if (c.budget_s > 0 && elapsed > c.budget_s) {
            failures.push_back("runtime " + std::to_string(elapsed) + "s exceeds budget " +
                               std::to_string(c.budget_s) + "s");
        }
        bool ok = failures.empty();
        failed += ok ? 0 : 1;
        std::printf("%s  %s (%.2f s)\n", ok ? "PASS" : "FAIL", c.label.c_str(), elapsed);
        for (const auto& f : failures) std::printf("      - %s\n", f.c_str());
    }
    std::printf("ACCEPTANCE: %zu/%zu criteria passed\n", criteria.size() - size_t(failed),
                criteria.size());
    return failed == 0 ? 0 : 1;
}
