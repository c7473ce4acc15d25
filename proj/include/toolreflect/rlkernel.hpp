#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace toolreflect {

/// G rollouts for one prompt: scalar rewards plus per-token log-probs under
/// the current and behavior policies.
struct RolloutGroup {
  std::string group_id;
  std::vector<double> rewards;
  std::vector<std::vector<double>> logp_new;
  std::vector<std::vector<double>> logp_old;

  /// Throws Error(invalid_argument), Error(length_mismatch) or
  /// Error(non_finite) when the group invariants fail.
  void validate() const;
  std::size_t size() const noexcept { return rewards.size(); }
};

struct RlConfig {
  double eps_low = 0.2;
  double eps_high = 0.28;
  double tau_adv = 0.5;
  double tau_var = 1e-6;
  unsigned max_resample = 0;  // K; resampling itself happens in the host

  /// Throws Error(config_invalid).
  void validate() const;
};

enum class GroupStatus {
  accepted,
  rejected_variance,
  rejected_degenerate,
  rejected_all_or_none,
};

std::string_view group_status_name(GroupStatus status) noexcept;

struct GroupDecision {
  std::vector<double> advantages;     // empty when the std is zero
  std::vector<std::size_t> accepted;  // 0-based, ascending
  GroupStatus status = GroupStatus::rejected_variance;
  double variance = 0.0;
};

struct GroupObjective {
  double value = 0.0;
  GroupDecision decision;
  std::vector<double> ratios;      // sequence ratio of every rollout
  std::vector<double> per_sample;  // clipped term of each accepted index
};

/// Population variance; exactly 0 when all values are equal.
double population_variance(std::span<const double> values);

/// z-scored rewards with the population std. Throws Error(degenerate_group)
/// when all rewards coincide, Error(invalid_argument) for fewer than two.
std::vector<double> normalized_advantages(std::span<const double> rewards);

/// Checks variance, then std degeneracy, then 0 < |accepted| < G.
GroupDecision group_filter(const RolloutGroup& group, const RlConfig& config);

/// exp(mean_t(logp_new[t] - logp_old[t])). Throws Error(length_mismatch) for
/// unequal or empty sequences and Error(non_finite) for NaN/inf input.
double sequence_ratio(std::span<const double> logp_new,
                      std::span<const double> logp_old);

/// min(r * adv, clip(r, 1 - eps_low, 1 + eps_high) * adv)
double clipped_term(double ratio, double advantage, const RlConfig& config);

/// (1/G) * sum over `indices` of clipped_term(ratio_i, adv_i). The full G
/// normalizes regardless of how many indices contribute.
double subset_objective(std::span<const double> ratios,
                        std::span<const double> advantages,
                        std::span<const std::size_t> indices,
                        const RlConfig& config);

/// Filtered clipped surrogate of one group; 0 for rejected groups.
GroupObjective group_objective(const RolloutGroup& group, const RlConfig& config);

RolloutGroup rollout_group_from_json(const nlohmann::json& value);
nlohmann::json to_json(const RolloutGroup& group);

}  // namespace toolreflect
