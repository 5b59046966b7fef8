#pragma once

#include <ctime>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "palign/io.hpp"

namespace palign {

inline constexpr std::string_view kToolVersion = "0.1.0";

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// One manifest per pipeline output directory. The resolved config must never
// contain secrets; API keys stay in the environment.
struct RunManifest {
  std::string command;
  json resolved_config = json::object();
  std::map<std::string, std::string> input_checksums;
  std::uint64_t seed = 0;
  std::string oracle_identity;
  std::string prompt_version;
  std::string started_at;
  std::string finished_at;
  std::size_t oracle_calls = 0;
  std::size_t cache_hits = 0;
  json extra = json::object();  // per-stage result summary
};

inline json to_json(const RunManifest& m) {
  return json{{"kind", "run_manifest"},
              {"command", m.command},
              {"tool_version", kToolVersion},
              {"resolved_config", m.resolved_config},
              {"input_checksums", m.input_checksums},
              {"seed", m.seed},
              {"oracle", m.oracle_identity},
              {"prompt_version", m.prompt_version},
              {"started_at", m.started_at},
              {"finished_at", m.finished_at},
              {"oracle_calls", m.oracle_calls},
              {"cache_hits", m.cache_hits},
              {"summary", m.extra}};
}

inline void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  write_file(dir / "manifest.json", to_json(m).dump(2) + "\n");
}

}  // namespace palign
