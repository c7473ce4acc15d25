#pragma once

#include <string>
#include <string_view>

#include "toolreflect/similarity.hpp"
#include "toolreflect/trajectory.hpp"

namespace toolreflect {

/// Knobs of the tool-call reward. Two weight triples: (w_r, w_c, w_f)
/// normalize the component scores, (w_ref, w_calls, w_final) weight the
/// format penalties.
struct RewardConfig {
  double w_r = 1.0 / 3.0;
  double w_c = 1.0 / 3.0;
  double w_f = 1.0 / 3.0;
  double w_ref = 0.25;
  double w_calls = 0.5;
  double w_final = 0.25;
  double beta_extra = 0.5;
  double gamma_count = 1.0;
  double lambda_m = 1.0;
  double r_reduce = 0.5;
  double epsilon_backoff = 0.05;
  double w_b = 0.3;
  Similarity similarity;
  ParseOptions parse;

  /// Throws Error(config_invalid) when an invariant fails.
  void validate() const;
};

struct ComponentScores {
  double s_ref = 0.0;
  double s_call = 0.0;
  double s_final = 0.0;
};

struct Aggregate {
  double S = 0.0;
  int I_r = 0;
  int I_c = 0;
  int I_f = 0;
  double W_act = 0.0;
};

struct Penalties {
  double P_miss = 0.0;
  double P_extra = 0.0;
  double P_count = 0.0;
};

struct FormatFactor {
  double F = 1.0;
  double r_fmt = 1.0;
  double P_total = 0.0;
};

enum class RewardBranch { core, backoff };

std::string_view branch_name(RewardBranch branch) noexcept;

struct RewardBreakdown {
  double s_ref = 0.0;
  double s_call = 0.0;
  double s_final = 0.0;
  int I_r = 0;
  int I_c = 0;
  int I_f = 0;
  double W_act = 0.0;
  double S = 0.0;
  std::size_t n = 0;  // ground-truth call count
  std::size_t m = 0;  // completion call count
  double P_miss = 0.0;
  double P_extra = 0.0;
  double P_count = 0.0;
  double r_fmt = 1.0;
  double P_total = 0.0;
  double F = 1.0;
  double R_core = 0.0;
  double R_total = 0.0;
  RewardBranch branch = RewardBranch::core;
  bool calls_equal = false;
  double backoff_similarity = 0.0;  // only computed on the backoff branch

  Json to_json() const;
};

/// Presence-masked component scores; a masked-off slot is recorded as 0.
ComponentScores component_scores(const ParsedCompletion& completion,
                                 const ParsedCompletion& truth,
                                 const RewardConfig& config);

/// Renormalizes over the parts present in the ground truth. Throws
/// Error(no_active_part) when no part is present or the active weights sum
/// to zero.
Aggregate aggregate_score(const ComponentScores& scores,
                          const ParsedCompletion& truth,
                          const RewardConfig& config);

Penalties penalty_components(const ParsedCompletion& completion,
                             const ParsedCompletion& truth,
                             const RewardConfig& config);

FormatFactor format_factor(const Penalties& penalties, bool calls_equal,
                           const RewardConfig& config);

/// reflection, canonical calls (sorted), final; present parts joined by a
/// single space.
std::string linearize(const ParsedCompletion& completion);

RewardBreakdown score_parsed(const ParsedCompletion& completion,
                             const ParsedCompletion& truth,
                             const RewardConfig& config);

/// Parses both texts and scores them. Parse errors and NoActivePart
/// propagate.
RewardBreakdown total_reward(std::string_view completion,
                             std::string_view ground_truth,
                             const RewardConfig& config);

}  // namespace toolreflect
