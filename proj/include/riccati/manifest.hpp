#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace riccati {

/// Reproducibility record written next to every CLI output: the resolved
/// configuration, digests of the inputs, per-stage wall times and any
/// warnings. Serialization round-trips losslessly.
struct RunManifest {
  std::string subcommand;
  std::string version;
  nlohmann::json config;
  std::map<std::string, std::string> input_digests;  // path -> fnv1a-64 hex
  std::map<std::string, double> timings_ms;
  std::vector<std::string> warnings;
  nlohmann::json results;  // small derived numbers (speeds, counts, ...)

  nlohmann::json to_json() const {
    return nlohmann::json{{"subcommand", subcommand},
                          {"version", version},
                          {"config", config},
                          {"input_digests", input_digests},
                          {"timings_ms", timings_ms},
                          {"warnings", warnings},
                          {"results", results}};
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    m.subcommand = j.at("subcommand").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.config = j.at("config");
    m.input_digests =
        j.at("input_digests").get<std::map<std::string, std::string>>();
    m.timings_ms = j.at("timings_ms").get<std::map<std::string, double>>();
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    m.results = j.at("results");
    return m;
  }

  bool operator==(const RunManifest&) const = default;
};

inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace riccati
