#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "toolreflect/perturb.hpp"
#include "toolreflect/reward.hpp"
#include "toolreflect/rlkernel.hpp"

namespace toolreflect {

/// Where an out-of-process helper lives: a command line or an HTTP URL.
struct EndpointConfig {
  std::vector<std::string> command;
  std::string url;
  std::chrono::milliseconds timeout{10000};

  bool configured() const noexcept { return !command.empty() || !url.empty(); }
  /// Throws Error(config_invalid) when neither or both targets are set.
  std::shared_ptr<JsonChannel> open() const;
};

/// Every knob of a run. Numeric knobs come only from the JSON file.
struct RunConfig {
  RewardConfig reward;
  RlConfig rl;
  PipelineConfig perturb;
  std::optional<EndpointConfig> similarity_endpoint;
  std::optional<EndpointConfig> reflection_endpoint;
  ParseOptions parse;
  std::size_t workers = 1;

  /// Parses and validates. Unknown keys at any level raise
  /// Error(config_invalid); so do sub-config invariant failures.
  static RunConfig from_json(const Json& value);
  /// Throws Error(io_error) when the file is unreadable.
  static RunConfig load(const std::filesystem::path& path);

  void validate() const;
  Json to_json() const;
};

}  // namespace toolreflect
