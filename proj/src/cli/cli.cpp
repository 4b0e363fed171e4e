// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include "rpmbfi/cli/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "rpmbfi/bytes.hpp"
#include "rpmbfi/campaign/campaigns.hpp"
#include "rpmbfi/campaign/reports.hpp"
#include "rpmbfi/host/session.hpp"
#include "rpmbfi/host/wire.hpp"

namespace rpmbfi::cli {

namespace fs = std::filesystem;
using campaign::CampaignConfig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;

std::string us(uint64_t ns) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", double(ns) / 1000.0);
    return buf;
}

struct CommonOpts {
    std::string device_profile = "target1";
    std::string fault_profile = "target1";
    std::string out_dir;
    std::string variant;
    std::string window;
    std::string cell;
    uint64_t seed = 0;
    bool seed_set = false;
    uint64_t step = 10;
    uint32_t iterations = 25;
    uint32_t trials = 1500;
    uint32_t sweeps = 1;
    uint32_t max_attempts = 50;
    uint16_t address = 0;
    int workers = 1;
};

void add_common_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--profile", o.device_profile, "device profile (target1/target2/target3 or a file)");
    cmd->add_option("--fault-profile", o.fault_profile, "fault profile (target1/target2/target3/inert or a file)");
    cmd->add_option("--seed", o.seed, "campaign seed (generated and printed when omitted)")
        ->each([&o](const std::string&) { o.seed_set = true; });
    cmd->add_option("--out", o.out_dir, "output directory (default $RPMBFI_OUT or ./rpmbfi-out)");
    cmd->add_option("--variant", o.variant,
                    "check variant override: naive, hardened-constant, double-check, constant-time");
}

CampaignConfig build_config(const CommonOpts& o, const std::string& experiment) {
    CampaignConfig c;
    c.experiment = experiment;
    c.device_profile = o.device_profile;
    c.fault_profile = o.fault_profile;
    c.iterations_per_cell = o.iterations;
    c.trials = o.trials;
    c.step_ns = o.step;
    c.sweeps = o.sweeps;
    c.max_attempts = o.max_attempts;
    c.target_address = o.address;
    c.workers = o.workers;

    if (o.seed_set) {
        c.seed = o.seed;
    } else {
        std::random_device rd;
        c.seed = uint64_t(rd()) << 32 | rd();
    }
    if (!o.variant.empty()) {
        auto v = device::parse_check_variant(o.variant);
        if (!v) throw campaign::ConfigError("unknown check variant: " + o.variant);
        c.variant_override = v;
    }
    if (!o.window.empty()) {
        auto colon = o.window.find(':');
        if (colon == std::string::npos) {
            throw campaign::ConfigError("--window expects 'begin:end' in ns");
        }
        try {
            c.window_ns = {std::stoull(o.window.substr(0, colon)),
                           std::stoull(o.window.substr(colon + 1))};
        } catch (const std::exception&) {
            throw campaign::ConfigError("bad --window value: " + o.window);
        }
        if (c.window_ns->second <= c.window_ns->first) {
            throw campaign::ConfigError("empty --window");
        }
    }
    if (!o.cell.empty()) {
        std::istringstream cs(o.cell);
        int x, y;
        char comma;
        if (!(cs >> x >> comma >> y) || comma != ',') {
            throw campaign::ConfigError("--cell expects 'x,y'");
        }
        c.cell = {x, y};
    }
    return c;
}

fs::path resolve_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("RPMBFI_OUT"); env && *env) return env;
    return "rpmbfi-out";
}

int run_campaign(const CampaignConfig& config, const fs::path& out_dir, std::ostream& out) {
    auto dev_profile = device::DeviceProfile::resolve(config.device_profile);
    auto fprofile = std::make_shared<const fault::SusceptibilityProfile>(
        fault::SusceptibilityProfile::resolve(config.fault_profile));

    fs::create_directories(out_dir);
    campaign::write_text_file(out_dir / "manifest.json",
                              campaign::manifest_json(config, dev_profile, *fprofile));

    std::ostringstream log;
    log << "experiment = " << config.experiment << "\n";
    log << "device_profile = " << dev_profile.name << "\n";
    log << "fault_profile = " << fprofile->name << "\n";
    log << "seed = " << config.seed << "\n";
    out << "seed = " << config.seed << "\n";

    int exit_code = kExitOk;

    if (config.experiment == "profile") {
        auto result = campaign::run_profiling(config, dev_profile, fprofile);
        campaign::write_text_file(out_dir / "heatmap.csv", campaign::heatmap_csv(result));
        uint32_t total_glitch = 0, total_crash = 0, total = 0;
        for (const auto& c : result.cells) {
            total_glitch += c.glitch;
            total_crash += c.crash;
            total += c.iterations;
        }
        log << "cells = " << result.cells.size() << "\n";
        log << "iterations = " << total << "\n";
        log << "glitches = " << total_glitch << "\n";
        log << "crashes = " << total_crash << "\n";
        out << "profiled " << result.cells.size() << " cells, " << total_glitch << " glitches, "
            << total_crash << " crashes\n";
    } else if (config.experiment == "search") {
        auto result = campaign::run_parameter_search(config, dev_profile, fprofile);
        campaign::write_text_file(out_dir / "search.csv", campaign::search_csv(result));
        log << "trials = " << result.trials.size() << "\n";
        auto rate = [](uint32_t crash, uint32_t n) { return n ? double(crash) / n : 0.0; };
        char buf[128];
        std::snprintf(buf, sizeof buf, "crash_rate_le_threshold = %.4f\n",
                      rate(result.below_crash, result.below_count));
        log << buf;
        std::snprintf(buf, sizeof buf, "crash_rate_gt_threshold = %.4f\n",
                      rate(result.above_crash, result.above_count));
        log << buf;
        std::snprintf(buf, sizeof buf, "duration_chi_square = %.3f\n", result.duration_chi_square);
        log << buf;
        out << "search finished: " << result.trials.size() << " trials\n";
    } else if (config.experiment == "sweep") {
        auto result = campaign::run_timing_sweep(config, dev_profile, fprofile);
        campaign::write_text_file(out_dir / "timing.csv", campaign::timing_csv(result));
        log << "points = " << result.points.size() << "\n";
        log << "successes = " << result.successes << "\n";
        for (const auto& w : result.windows) {
            log << "success_window = " << w.begin_ns << ":" << w.end_ns << " ns (" << us(w.begin_ns)
                << ":" << us(w.end_ns) << " us)\n";
        }
        out << "sweep finished: " << result.successes << " successes, " << result.windows.size()
            << " window(s)\n";
        for (const auto& w : result.windows) {
            out << "  success window " << w.begin_ns << ".." << w.end_ns << " ns (" << us(w.begin_ns)
                << ".." << us(w.end_ns) << " us)\n";
        }
    } else if (config.experiment == "attack") {
        auto result = campaign::run_attack(config, dev_profile, fprofile);
        log << "success = " << (result.success ? "yes" : "no") << "\n";
        log << "attempts = " << result.attempts << "\n";
        log << "crashes = " << result.crashes << "\n";
        log << "counter_corruptions = " << result.counter_corruption_events << "\n";
        if (result.success) {
            log << "success_delay_ns = " << result.success_delay_ns << " ("
                << us(result.success_delay_ns) << " us)\n";
            out << "authentication bypassed after " << result.attempts << " attempt(s) at "
                << result.success_delay_ns << " ns (" << us(result.success_delay_ns) << " us)\n";
        } else {
            out << "attack failed after " << result.attempts << " attempt(s)\n";
            exit_code = kExitFailed;
        }
    } else if (config.experiment == "integrity") {
        auto report = campaign::run_integrity_campaign(config, dev_profile, fprofile);
        campaign::write_text_file(out_dir / "integrity.json", campaign::integrity_json(report));
        log << "success = " << (report.success ? "yes" : "no") << "\n";
        log << "attempts = " << report.attempts << "\n";
        log << "digests_match = " << (report.digests_match ? "yes" : "no") << "\n";
        log << "pass = " << (report.pass ? "yes" : "no") << "\n";
        out << "integrity campaign: " << (report.pass ? "pass" : "fail") << " after "
            << report.attempts << " attempt(s)\n";
        if (!report.pass) exit_code = kExitFailed;
    } else {
        throw campaign::ConfigError("unknown experiment: " + config.experiment);
    }

    campaign::write_text_file(out_dir / "run.log", log.str());
    out << "reports written to " << out_dir.string() << "\n";
    return exit_code;
}

// ---------------------------------------------------------------------------
// rpmb host subcommands against a persistent device snapshot

struct RpmbOpts {
    std::string state_file = "rpmb-device.bin";
    std::string device_profile = "target1";
    std::string key_hex;
    std::string data;  // hex string or @file
    uint32_t address = 0;
    uint32_t count = 1;
    uint64_t seed = 1;
};

std::vector<uint8_t> read_data_arg(const std::string& arg) {
    if (!arg.empty() && arg.front() == '@') {
        std::ifstream f(arg.substr(1), std::ios::binary);
        if (!f) throw campaign::ConfigError("cannot open data file: " + arg.substr(1));
        return std::vector<uint8_t>(std::istreambuf_iterator<char>(f), {});
    }
    return from_hex(arg);
}

device::RpmbDevice load_or_create_device(const RpmbOpts& o) {
    if (fs::exists(o.state_file)) {
        std::ifstream f(o.state_file, std::ios::binary);
        std::vector<uint8_t> blob(std::istreambuf_iterator<char>(f), {});
        return device::RpmbDevice::import_snapshot(blob);
    }
    return device::RpmbDevice(device::DeviceProfile::resolve(o.device_profile), o.seed);
}

void save_device(const device::RpmbDevice& dev, const RpmbOpts& o) {
    auto blob = dev.export_snapshot();
    std::ofstream f(o.state_file, std::ios::binary | std::ios::trunc);
    if (!f) throw campaign::ConfigError("cannot write state file: " + o.state_file);
    f.write(reinterpret_cast<const char*>(blob.data()), std::streamsize(blob.size()));
}

int print_result(std::ostream& out, const protocol::ResultCode& rc) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%02x", rc.to_raw());
    out << "result: " << protocol::name(rc.kind) << " (" << buf << ")\n";
    return rc.ok() ? kExitOk : kExitFailed;
}

int run_rpmb(const std::string& op, const RpmbOpts& o, std::ostream& out) {
    auto dev = load_or_create_device(o);
    // Drive the device through the wire loopback; the CLI sees exactly
    // what a remote process would.
    host::wire::LoopbackTransport transport(&dev);
    host::HostSession session(transport, o.seed);
    if (!o.key_hex.empty()) session.set_key(protocol::HmacKey::from_hex(o.key_hex));

    int code = kExitOk;
    if (op == "program-key") {
        if (o.key_hex.empty()) throw campaign::ConfigError("program-key requires --key");
        auto rc = session.program_key(protocol::HmacKey::from_hex(o.key_hex));
        code = print_result(out, rc);
    } else if (op == "counter") {
        auto cr = session.read_counter();
        out << "counter: " << cr.counter << "\n";
        out << "verified: " << (cr.verified ? "yes" : "no") << "\n";
        code = cr.error == host::HostError::None ? kExitOk : kExitFailed;
    } else if (op == "write") {
        if (o.key_hex.empty()) throw campaign::ConfigError("write requires --key");
        auto data = read_data_arg(o.data);
        auto rc = session.write_authenticated(static_cast<uint16_t>(o.address), data);
        code = print_result(out, rc);
        auto cr = session.cached_counter();
        if (cr) out << "counter: " << *cr << "\n";
    } else if (op == "read") {
        auto rr = session.read_authenticated(static_cast<uint16_t>(o.address),
                                             static_cast<uint16_t>(o.count));
        if (rr.error != host::HostError::None) {
            out << "error: " << host::name(rr.error) << "\n";
            code = kExitFailed;
        } else {
            for (size_t off = 0; off < rr.data.size(); off += protocol::kBlockSize) {
                out << to_hex(std::span(rr.data).subspan(off, protocol::kBlockSize)) << "\n";
            }
            code = print_result(out, rr.result);
            out << "verified: " << (rr.verified ? "yes" : "no") << "\n";
        }
    } else {
        throw campaign::ConfigError("unknown rpmb op: " + op);
    }
    save_device(dev, o);
    return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"RPMB authenticated-storage emulator with an EM fault-injection attack bench"};
    app.set_version_flag("--version", std::string(campaign::kArtifactVersion));
    app.require_subcommand(1);

    CommonOpts o;

    auto* profile_cmd = app.add_subcommand("profile", "spatial susceptibility profiling (fault observer)");
    add_common_flags(profile_cmd, o);
    profile_cmd->add_option("--iterations", o.iterations, "pulses per grid cell");
    profile_cmd->add_option("--workers", o.workers, "parallel workers (cells are independent)");

    auto* search_cmd = app.add_subcommand("search", "random voltage/duration search at the best cell");
    add_common_flags(search_cmd, o);
    search_cmd->add_option("--trials", o.trials, "number of random-parameter trials");
    search_cmd->add_option("--cell", o.cell, "grid cell 'x,y' (default: best glitch cell)");

    auto* sweep_cmd = app.add_subcommand("sweep", "timing sweep with wrong-HMAC writes");
    add_common_flags(sweep_cmd, o);
    sweep_cmd->add_option("--window", o.window, "delay window 'begin:end' in ns");
    sweep_cmd->add_option("--step", o.step, "delay step in ns");
    sweep_cmd->add_option("--sweeps", o.sweeps, "number of seeded sweep repetitions");
    sweep_cmd->add_option("--cell", o.cell, "grid cell 'x,y' (default: best glitch cell)");

    auto* attack_cmd = app.add_subcommand("attack", "repeat in-window attacks until bypass or cap");
    add_common_flags(attack_cmd, o);
    attack_cmd->add_option("--window", o.window, "delay window 'begin:end' in ns (default: compare window)");
    attack_cmd->add_option("--step", o.step, "delay step in ns");
    attack_cmd->add_option("--max-attempts", o.max_attempts, "attempt cap");
    attack_cmd->add_option("--address", o.address, "RPMB half-sector address to overwrite");
    attack_cmd->add_option("--cell", o.cell, "grid cell 'x,y' (default: best glitch cell)");

    auto* integrity_cmd = app.add_subcommand("integrity", "attack once and verify nothing else changed");
    add_common_flags(integrity_cmd, o);
    integrity_cmd->add_option("--window", o.window, "delay window 'begin:end' in ns (default: compare window)");
    integrity_cmd->add_option("--step", o.step, "delay step in ns");
    integrity_cmd->add_option("--max-attempts", o.max_attempts, "attempt cap");
    integrity_cmd->add_option("--address", o.address, "RPMB half-sector address to overwrite");

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "run a campaign from a config file");
    run_cmd->add_option("--config", config_path, "campaign config file")->required();
    run_cmd->add_option("--out", o.out_dir, "output directory");

    std::string manifest_path;
    auto* replay_cmd = app.add_subcommand("replay", "re-run a campaign from its manifest");
    replay_cmd->add_option("--manifest", manifest_path, "manifest.json from a previous run")->required();
    replay_cmd->add_option("--out", o.out_dir, "output directory");

    RpmbOpts ro;
    auto* rpmb_cmd = app.add_subcommand("rpmb", "host-side RPMB operations against a device snapshot");
    rpmb_cmd->require_subcommand(1);
    for (const char* opname : {"program-key", "write", "read", "counter"}) {
        auto* sub = rpmb_cmd->add_subcommand(opname);
        sub->add_option("--state", ro.state_file, "device snapshot file");
        sub->add_option("--profile", ro.device_profile, "device profile for a fresh device");
        sub->add_option("--key", ro.key_hex, "32-byte key, hex");
        sub->add_option("--address", ro.address, "RPMB half-sector address");
        sub->add_option("--count", ro.count, "block count for reads");
        sub->add_option("--data", ro.data, "write data: hex string or @file");
        sub->add_option("--seed", ro.seed, "nonce source seed");
    }

    std::string dump_dir = "profiles";
    auto* dump_cmd = app.add_subcommand("dump-profiles", "write the builtin profiles as text files");
    dump_cmd->add_option("--out", dump_dir, "directory for the profile files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            // --help / --version path
            std::ostringstream help;
            int rc = app.exit(e, help, help);
            out << help.str();
            return rc;
        }
        err << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (dump_cmd->parsed()) {
            fs::create_directories(dump_dir);
            for (const char* name : {"target1", "target2", "target3"}) {
                device::DeviceProfile::builtin(name).save(fs::path(dump_dir) /
                                                          (std::string(name) + ".device"));
                fault::SusceptibilityProfile::builtin(name).save(fs::path(dump_dir) /
                                                                 (std::string(name) + ".profile"));
            }
            out << "profiles written to " << dump_dir << "\n";
            return kExitOk;
        }
        if (rpmb_cmd->parsed()) {
            return run_rpmb(rpmb_cmd->get_subcommands().front()->get_name(), ro, out);
        }
        if (run_cmd->parsed()) {
            auto config = CampaignConfig::load(config_path);
            return run_campaign(config, resolve_out_dir(o.out_dir), out);
        }
        if (replay_cmd->parsed()) {
            auto config = campaign::config_from_manifest(manifest_path);
            return run_campaign(config, resolve_out_dir(o.out_dir), out);
        }
        for (auto* cmd : {profile_cmd, search_cmd, sweep_cmd, attack_cmd, integrity_cmd}) {
            if (cmd->parsed()) {
                auto config = build_config(o, cmd->get_name());
                return run_campaign(config, resolve_out_dir(o.out_dir), out);
            }
        }
        err << "no subcommand\n";
        return kExitConfig;
    } catch (const campaign::InvariantViolation& e) {
        err << "invariant violation: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const campaign::ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const device::ProfileError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const fault::ProfileError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}

}  // namespace rpmbfi::cli
