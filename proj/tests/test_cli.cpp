// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "rpmbfi/cli/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args) {
    std::vector<const char*> argv{"rpmbfi"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = rpmbfi::cli::run(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("rpmbfi_cli_" + std::to_string(uint64_t(::getpid())) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string str(const char* name) const { return (path / name).string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("sweep subcommand writes a confined timing CSV") {
    TempDir tmp;
    auto r = cli({"sweep", "--profile", "target1", "--fault-profile", "target1", "--seed", "7",
                  "--window", "110000:125000", "--step", "10", "--out", tmp.str("sweep")});
    CHECK(r.code == 0);
    CHECK(r.out.find("seed = 7") != std::string::npos);

    auto csv = slurp(tmp.path / "sweep" / "timing.csv");
    CHECK(csv.substr(0, csv.find('\n')) == "delay_ns,result_value,outcome");

    // every success row within the target1 compare window
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);  // header
    int successes = 0;
    while (std::getline(lines, line)) {
        auto first_comma = line.find(',');
        uint64_t delay = std::stoull(line.substr(0, first_comma));
        if (line.find(",success") != std::string::npos) {
            ++successes;
            CHECK(delay >= 117'720);
            CHECK(delay < 118'300);
        }
    }
    CHECK(successes > 0);

    SUBCASE("manifest + run.log are written") {
        CHECK(fs::exists(tmp.path / "sweep" / "manifest.json"));
        auto log = slurp(tmp.path / "sweep" / "run.log");
        CHECK(log.find("experiment = sweep") != std::string::npos);
        CHECK(log.find("success_window") != std::string::npos);
        CHECK(log.find("us)") != std::string::npos);  // both ns and us are echoed
    }
    SUBCASE("replay from the manifest is byte-identical") {
        auto r2 = cli({"replay", "--manifest", (tmp.path / "sweep" / "manifest.json").string(),
                       "--out", tmp.str("replayed")});
        CHECK(r2.code == 0);
        CHECK(slurp(tmp.path / "replayed" / "timing.csv") == csv);
        CHECK(slurp(tmp.path / "replayed" / "manifest.json") ==
              slurp(tmp.path / "sweep" / "manifest.json"));
        CHECK(slurp(tmp.path / "replayed" / "run.log") == slurp(tmp.path / "sweep" / "run.log"));
    }
}

TEST_CASE("attack with double-check variant fails and reports exit 1") {
    TempDir tmp;
    auto r = cli({"attack", "--profile", "target1", "--fault-profile", "target1", "--seed", "3",
                  "--variant", "double-check", "--max-attempts", "40", "--out", tmp.str("atk")});
    CHECK(r.code == 1);
    CHECK(r.out.find("attack failed") != std::string::npos);

    SUBCASE("the naive baseline succeeds") {
        auto ok = cli({"attack", "--profile", "target1", "--fault-profile", "target1", "--seed",
                       "3", "--out", tmp.str("atk2")});
        CHECK(ok.code == 0);
        CHECK(ok.out.find("authentication bypassed") != std::string::npos);
    }
}

TEST_CASE("malformed profile file exits 2 with a diagnostic") {
    TempDir tmp;
    auto bad = tmp.path / "broken.profile";
    std::ofstream(bad) << "kind = fault-profile\ngrid = oops\n";
    auto r = cli({"profile", "--fault-profile", bad.string(), "--seed", "1", "--out",
                  tmp.str("p")});
    CHECK(r.code == 2);
    CHECK(r.err.find("config error") != std::string::npos);

    SUBCASE("unknown builtin profile name") {
        auto r2 = cli({"sweep", "--profile", "target7", "--seed", "1", "--out", tmp.str("q")});
        CHECK(r2.code == 2);
    }
    SUBCASE("bad window flag") {
        auto r3 = cli({"sweep", "--window", "zz", "--seed", "1", "--out", tmp.str("r")});
        CHECK(r3.code == 2);
    }
    SUBCASE("unknown flag") {
        auto r4 = cli({"sweep", "--bogus", "1"});
        CHECK(r4.code == 2);
    }
}

TEST_CASE("integrity subcommand writes the report JSON") {
    TempDir tmp;
    auto r = cli({"integrity", "--profile", "target1", "--fault-profile", "target1", "--seed",
                  "11", "--out", tmp.str("integ")});
    CHECK(r.code == 0);
    auto json = slurp(tmp.path / "integ" / "integrity.json");
    CHECK(json.find("\"pass\": true") != std::string::npos);
    CHECK(json.find("\"counter_delta\": 1") != std::string::npos);
    CHECK(json.find("\"rpmb_diff_blocks\": [") != std::string::npos);
}

TEST_CASE("profile subcommand writes the heatmap CSV") {
    TempDir tmp;
    auto r = cli({"profile", "--fault-profile", "target1", "--seed", "5", "--iterations", "5",
                  "--out", tmp.str("heat")});
    CHECK(r.code == 0);
    auto csv = slurp(tmp.path / "heat" / "heatmap.csv");
    CHECK(csv.substr(0, csv.find('\n')) == "x,y,normal,glitch,crash");
    // 13x9 grid plus the header line
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 13 * 9 + 1);
}

TEST_CASE("search subcommand writes the trial CSV") {
    TempDir tmp;
    auto r = cli({"search", "--fault-profile", "target3", "--profile", "target3", "--seed", "5",
                  "--trials", "300", "--out", tmp.str("s")});
    CHECK(r.code == 0);
    auto csv = slurp(tmp.path / "s" / "search.csv");
    CHECK(csv.substr(0, csv.find('\n')) == "trial,voltage_v,duration_ns,outcome");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 301);
    auto log = slurp(tmp.path / "s" / "run.log");
    CHECK(log.find("crash_rate_le_threshold") != std::string::npos);
    CHECK(log.find("duration_chi_square") != std::string::npos);
}

TEST_CASE("a missing seed is generated and printed") {
    TempDir tmp;
    auto r = cli({"profile", "--fault-profile", "inert", "--iterations", "1", "--out",
                  tmp.str("g")});
    CHECK(r.code == 0);
    CHECK(r.out.find("seed = ") != std::string::npos);
    // ... and recorded in the manifest for replay
    auto manifest = slurp(tmp.path / "g" / "manifest.json");
    CHECK(manifest.find("\"seed\"") != std::string::npos);
}

TEST_CASE("run subcommand executes a campaign config file") {
    TempDir tmp;
    auto cfg = tmp.path / "sweep.cfg";
    std::ofstream(cfg) << "kind = campaign\n"
                          "experiment = sweep\n"
                          "device_profile = target3\n"
                          "fault_profile = target3\n"
                          "seed = 9\n"
                          "window = 112000:113500\n"
                          "step_ns = 10\n";
    auto r = cli({"run", "--config", cfg.string(), "--out", tmp.str("out")});
    CHECK(r.code == 0);
    CHECK(fs::exists(tmp.path / "out" / "timing.csv"));

    SUBCASE("missing config file") {
        auto r2 = cli({"run", "--config", tmp.str("nope.cfg")});
        CHECK(r2.code == 2);
    }
}

TEST_CASE("rpmb subcommands against a snapshot file") {
    TempDir tmp;
    std::string state = tmp.str("dev.bin");
    std::string key = "000102030405060708090a0b0c0d0e0f"
                      "101112131415161718191a1b1c1d1e1f";
    std::string wrong_key = "ff0102030405060708090a0b0c0d0e0f"
                            "101112131415161718191a1b1c1d1e1f";

    auto pk = cli({"rpmb", "program-key", "--state", state, "--key", key});
    CHECK(pk.code == 0);
    CHECK(pk.out.find("OperationOk (0x00)") != std::string::npos);

    auto ctr = cli({"rpmb", "counter", "--state", state, "--key", key});
    CHECK(ctr.code == 0);
    CHECK(ctr.out.find("counter: 0") != std::string::npos);
    CHECK(ctr.out.find("verified: yes") != std::string::npos);

    std::string data(512, 'a');  // 256 bytes of 0xaa
    auto wr = cli({"rpmb", "write", "--state", state, "--key", key, "--address", "3", "--data",
                   data});
    CHECK(wr.code == 0);
    CHECK(wr.out.find("OperationOk (0x00)") != std::string::npos);
    CHECK(wr.out.find("counter: 1") != std::string::npos);

    SUBCASE("write with the wrong key prints AuthFailure (0x02)") {
        auto bad = cli({"rpmb", "write", "--state", state, "--key", wrong_key, "--address", "3",
                        "--data", data});
        CHECK(bad.code == 1);
        CHECK(bad.out.find("AuthFailure (0x02)") != std::string::npos);
    }
    SUBCASE("read prints the stored data as hex") {
        auto rd = cli({"rpmb", "read", "--state", state, "--key", key, "--address", "3",
                       "--count", "1"});
        CHECK(rd.code == 0);
        CHECK(rd.out.find(data) != std::string::npos);
        CHECK(rd.out.find("verified: yes") != std::string::npos);
    }
    SUBCASE("state persists across invocations") {
        auto wr2 = cli({"rpmb", "write", "--state", state, "--key", key, "--address", "4",
                        "--data", data});
        CHECK(wr2.out.find("counter: 2") != std::string::npos);
    }
    SUBCASE("program-key without --key is a config error") {
        auto r = cli({"rpmb", "program-key", "--state", state});
        CHECK(r.code == 2);
    }
}

TEST_CASE("dump-profiles writes parseable files") {
    TempDir tmp;
    auto r = cli({"dump-profiles", "--out", tmp.str("profiles")});
    CHECK(r.code == 0);
    for (const char* name : {"target1", "target2", "target3"}) {
        CHECK(fs::exists(tmp.path / "profiles" / (std::string(name) + ".profile")));
        CHECK(fs::exists(tmp.path / "profiles" / (std::string(name) + ".device")));
    }
}

TEST_CASE("RPMBFI_OUT provides the default output directory") {
    TempDir tmp;
    auto def = tmp.path / "envout";
    ::setenv("RPMBFI_OUT", def.string().c_str(), 1);
    auto r = cli({"profile", "--fault-profile", "inert", "--iterations", "1", "--seed", "1"});
    ::unsetenv("RPMBFI_OUT");
    CHECK(r.code == 0);
    CHECK(fs::exists(def / "heatmap.csv"));
    CHECK(fs::exists(def / "manifest.json"));
}

TEST_CASE("version flag") {
    auto r = cli({"--version"});
    CHECK(r.code == 0);
    CHECK(r.out.find("0.1.0") != std::string::npos);
}
