#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "toolreflect/perturb.hpp"

#include "toolreflect/schema.hpp"
#include "toolreflect/trajectory.hpp"

namespace fixtures {

/// Twelve tools; every one has at least one required parameter.
toolreflect::Json schema_json();
toolreflect::ToolRegistry registry();

/// A clean trajectory of 2 to 5 call steps whose calls all validate,
/// followed by a final answer. Deterministic in (seed, index).
toolreflect::Trajectory trajectory(std::uint64_t seed, std::size_t index);

std::vector<toolreflect::Trajectory> corpus(std::size_t count, std::uint64_t seed = 7);

/// A random valid call of `tool`.
toolreflect::ToolCall random_call(const toolreflect::ToolRegistry& reg,
                                  const std::string& tool, std::uint64_t seed);

/// Score inputs {"id", "completion", "ground_truth"} built from corpus call
/// steps: exact repairs, wrong arguments, missing or extra parts, shuffles.
std::vector<toolreflect::Json> score_records(std::size_t count, std::uint64_t seed = 7);

/// Rollout groups of size 8 with per-token log-probabilities. Roughly one in
/// six has identical rewards.
std::vector<toolreflect::Json> rollout_groups(std::size_t count, std::uint64_t seed = 7);

/// Five candidate repairs of an item; only the first one succeeds.
std::vector<std::string> candidates(const toolreflect::BenchItem& item);

/// `n` attempts drawn uniformly from candidates(item).
std::vector<std::string> scripted_attempts(const toolreflect::BenchItem& item, std::size_t n,
                                           std::mt19937_64& rng);

}  // namespace fixtures
