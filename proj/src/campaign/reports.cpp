// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include "rpmbfi/campaign/reports.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rpmbfi/bytes.hpp"
#include "rpmbfi/protocol/mac.hpp"

namespace rpmbfi::campaign {

using nlohmann::json;

std::string sha256_hex_of(std::string_view text) {
    auto digest = protocol::sha256(
        std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
    return to_hex(digest);
}

std::string heatmap_csv(const ProfilingResult& result) {
    std::ostringstream out;
    out << "x,y,normal,glitch,crash\n";
    for (const auto& c : result.cells) {
        out << c.x << "," << c.y << "," << c.normal << "," << c.glitch << "," << c.crash << "\n";
    }
    return out.str();
}

std::string timing_csv(const SweepResult& result) {
    std::ostringstream out;
    out << "delay_ns,result_value,outcome\n";
    char value[8];
    for (const auto& p : result.points) {
        std::snprintf(value, sizeof value, "0x%04x", p.result_value);
        out << p.delay_ns << "," << value << "," << name(p.outcome) << "\n";
    }
    return out.str();
}

std::string search_csv(const SearchResult& result) {
    std::ostringstream out;
    out << "trial,voltage_v,duration_ns,outcome\n";
    for (const auto& t : result.trials) {
        out << t.trial << "," << t.voltage_v << "," << t.duration_ns << "," << name(t.outcome)
            << "\n";
    }
    return out.str();
}

std::string integrity_json(const IntegrityReport& r) {
    json j;
    j["success"] = r.success;
    j["attempts"] = r.attempts;
    j["success_delay_ns"] = r.success_delay_ns;
    j["counter_before"] = r.counter_before;
    j["counter_after"] = r.counter_after;
    j["counter_delta"] = int64_t(r.counter_after) - int64_t(r.counter_before);
    j["user_digest_before"] = r.user_digest_before;
    j["user_digest_after"] = r.user_digest_after;
    j["digests_match"] = r.digests_match;
    j["rpmb_diff_blocks"] = r.rpmb_diff_blocks;
    j["attacked_blocks"] = r.attacked_blocks;
    j["corrupted_repaired_sectors"] = r.corrupted_repaired_sectors;
    j["counter_corruption_events"] = r.counter_corruption_events;
    j["crashes"] = r.crashes;
    j["pass"] = r.pass;
    return j.dump(2) + "\n";
}

std::string manifest_json(const CampaignConfig& config, const device::DeviceProfile& dev_profile,
                          const fault::SusceptibilityProfile& fprofile) {
    json j;
    j["artifact_version"] = std::string(kArtifactVersion);
    j["experiment"] = config.experiment;
    j["seed"] = config.seed;
    j["config_text"] = config.serialize();
    j["device_profile"]["name"] = dev_profile.name;
    j["device_profile"]["sha256"] = sha256_hex_of(dev_profile.serialize());
    j["fault_profile"]["name"] = fprofile.name;
    j["fault_profile"]["sha256"] = fprofile.sha256_hex();
    return j.dump(2) + "\n";
}

CampaignConfig config_from_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream f(manifest_path);
    if (!f) throw ConfigError("cannot open manifest: " + manifest_path.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError("bad manifest JSON: " + std::string(e.what()));
    }
    if (!j.contains("config_text") || !j["config_text"].is_string()) {
        throw ConfigError("manifest has no config_text");
    }
    return CampaignConfig::parse(j["config_text"].get<std::string>());
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + path.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace rpmbfi::campaign
