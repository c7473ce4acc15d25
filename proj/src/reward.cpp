#include "toolreflect/reward.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "toolreflect/error.hpp"

namespace toolreflect {

namespace {

double clip01(double x) { return std::max(0.0, std::min(1.0, x)); }

[[noreturn]] void invalid(const std::string& what) {
  throw Error(Errc::config_invalid, "reward config: " + what);
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

void RewardConfig::validate() const {
  const std::pair<const char*, double> weights[] = {
      {"w_r", w_r},           {"w_c", w_c},
      {"w_f", w_f},           {"w_ref", w_ref},
      {"w_calls", w_calls},   {"w_final", w_final},
      {"beta_extra", beta_extra}, {"gamma_count", gamma_count},
      {"lambda_m", lambda_m},
  };
  for (const auto& [name, value] : weights) {
    if (!finite_nonneg(value)) invalid(std::string(name) + " must be >= 0");
  }
  if (!(w_r + w_c + w_f > 0.0)) invalid("w_r + w_c + w_f must be > 0");
  if (!(r_reduce > 0.0 && r_reduce <= 1.0)) invalid("r_reduce must be in (0,1]");
  if (!(w_b > 0.0 && w_b <= 1.0)) invalid("w_b must be in (0,1]");
  if (!(epsilon_backoff > 0.0 && epsilon_backoff < 1.0)) {
    invalid("epsilon_backoff must be in (0,1)");
  }
  if (similarity.kind == SimilarityKind::external && !similarity.external) {
    invalid("external similarity requires a scorer");
  }
}

std::string_view branch_name(RewardBranch branch) noexcept {
  return branch == RewardBranch::core ? "core" : "backoff";
}

Json RewardBreakdown::to_json() const {
  return Json{
      {"s_ref", s_ref},
      {"s_call", s_call},
      {"s_final", s_final},
      {"I_r", I_r},
      {"I_c", I_c},
      {"I_f", I_f},
      {"W_act", W_act},
      {"S", S},
      {"n", n},
      {"m", m},
      {"P_miss", P_miss},
      {"P_extra", P_extra},
      {"P_count", P_count},
      {"r_fmt", r_fmt},
      {"P_total", P_total},
      {"F", F},
      {"R_core", R_core},
      {"R_total", R_total},
      {"branch", branch_name(branch)},
      {"calls_equal", calls_equal},
      {"backoff_similarity", backoff_similarity},
  };
}

ComponentScores component_scores(const ParsedCompletion& completion,
                                 const ParsedCompletion& truth,
                                 const RewardConfig& config) {
  ComponentScores out;
  if (truth.reflection) {
    out.s_ref = sim(completion.reflection.value_or(""), *truth.reflection,
                    config.similarity);
  }
  if (!truth.calls.empty()) {
    out.s_call = equal_calls(completion.calls, truth.calls) ? 1.0 : 0.0;
  }
  if (truth.final_answer) {
    out.s_final = sim(completion.final_answer.value_or(""), *truth.final_answer,
                      config.similarity);
  }
  return out;
}

Aggregate aggregate_score(const ComponentScores& scores,
                          const ParsedCompletion& truth,
                          const RewardConfig& config) {
  Aggregate out;
  out.I_r = truth.reflection ? 1 : 0;
  out.I_c = truth.calls.empty() ? 0 : 1;
  out.I_f = truth.final_answer ? 1 : 0;

  double numerator = 0.0;
  double active = 0.0;
  double lo = 1.0;
  double hi = 0.0;
  auto add = [&](double weight, double score) {
    numerator += weight * score;
    active += weight;
    if (weight > 0.0) {
      lo = std::min(lo, score);
      hi = std::max(hi, score);
    }
  };
  if (out.I_r) add(config.w_r, scores.s_ref);
  if (out.I_c) add(config.w_c, scores.s_call);
  if (out.I_f) add(config.w_f, scores.s_final);
  out.W_act = active;
  if (!(active > 0.0)) {
    throw Error(Errc::no_active_part,
                out.I_r + out.I_c + out.I_f == 0
                    ? "ground truth specifies no reflection, calls or final"
                    : "active parts carry zero total weight");
  }
  out.S = std::clamp(numerator / active, lo, hi);
  return out;
}

Penalties penalty_components(const ParsedCompletion& completion,
                             const ParsedCompletion& truth,
                             const RewardConfig& config) {
  const auto n = truth.calls.size();
  const auto m = completion.calls.size();
  const bool g_ref = truth.reflection.has_value();
  const bool c_ref = completion.reflection.has_value();
  const bool g_fin = truth.final_answer.has_value();
  const bool c_fin = completion.final_answer.has_value();

  Penalties out;
  if (g_ref && !c_ref) out.P_miss += config.w_ref;
  if (g_fin && !c_fin) out.P_miss += config.w_final;
  if (n > 0 && m == 0) out.P_miss += config.w_calls;

  if (c_ref && !g_ref) out.P_extra += config.w_ref;
  if (c_fin && !g_fin) out.P_extra += config.w_final;
  if (m > 0 && n == 0) out.P_extra += config.w_calls;

  if (n > 0 && m > 0 && n != m) {
    const double gap = n > m ? static_cast<double>(n - m) : static_cast<double>(m - n);
    out.P_count = config.w_calls * gap / static_cast<double>(std::max(n, m));
  }
  return out;
}

FormatFactor format_factor(const Penalties& penalties, bool calls_equal,
                           const RewardConfig& config) {
  FormatFactor out;
  out.r_fmt = calls_equal ? config.r_reduce : 1.0;
  out.P_total = penalties.P_miss + config.beta_extra * penalties.P_extra +
                config.gamma_count * penalties.P_count;
  if (penalties.P_miss == 0.0 && penalties.P_extra == 0.0 &&
      penalties.P_count == 0.0) {
    out.F = 1.0;
  } else {
    out.F = clip01(1.0 - config.lambda_m * out.P_total * out.r_fmt);
  }
  return out;
}

std::string linearize(const ParsedCompletion& completion) {
  std::vector<std::string> parts;
  if (completion.reflection) parts.push_back(*completion.reflection);
  std::vector<std::string> calls;
  for (const auto& call : completion.calls) calls.push_back(canonicalize_call(call));
  std::sort(calls.begin(), calls.end());
  for (auto& c : calls) parts.push_back(std::move(c));
  if (completion.final_answer) parts.push_back(*completion.final_answer);

  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ' ';
    out += parts[i];
  }
  return out;
}

RewardBreakdown score_parsed(const ParsedCompletion& completion,
                             const ParsedCompletion& truth,
                             const RewardConfig& config) {
  RewardBreakdown out;
  const auto scores = component_scores(completion, truth, config);
  const auto agg = aggregate_score(scores, truth, config);
  const auto pens = penalty_components(completion, truth, config);
  out.calls_equal = equal_calls(completion.calls, truth.calls);
  const auto fmt = format_factor(pens, out.calls_equal, config);

  out.s_ref = scores.s_ref;
  out.s_call = scores.s_call;
  out.s_final = scores.s_final;
  out.I_r = agg.I_r;
  out.I_c = agg.I_c;
  out.I_f = agg.I_f;
  out.W_act = agg.W_act;
  out.S = agg.S;
  out.n = truth.calls.size();
  out.m = completion.calls.size();
  out.P_miss = pens.P_miss;
  out.P_extra = pens.P_extra;
  out.P_count = pens.P_count;
  out.r_fmt = fmt.r_fmt;
  out.P_total = fmt.P_total;
  out.F = fmt.F;
  out.R_core = out.S * out.F;

  if (out.R_core >= config.epsilon_backoff) {
    out.branch = RewardBranch::core;
    out.R_total = clip01(out.R_core);
  } else {
    out.branch = RewardBranch::backoff;
    out.backoff_similarity =
        sim(linearize(completion), linearize(truth), config.similarity);
    out.R_total = clip01(config.w_b * out.backoff_similarity);
  }
  return out;
}

RewardBreakdown total_reward(std::string_view completion,
                             std::string_view ground_truth,
                             const RewardConfig& config) {
  const auto c = parse_completion(completion, config.parse);
  const auto g = parse_completion(ground_truth, config.parse);
  return score_parsed(c, g, config);
}

}  // namespace toolreflect
