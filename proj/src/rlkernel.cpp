#include "toolreflect/rlkernel.hpp"

#include <algorithm>
#include <cmath>

#include "toolreflect/error.hpp"

namespace toolreflect {

namespace {

bool all_equal(std::span<const double> values) {
  return std::adjacent_find(values.begin(), values.end(),
                            std::not_equal_to<>()) == values.end();
}

double mean_of(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

void RolloutGroup::validate() const {
  const auto g = rewards.size();
  if (g < 2) {
    throw Error(Errc::invalid_argument,
                "group " + group_id + " needs at least two rollouts");
  }
  for (double r : rewards) {
    if (!std::isfinite(r)) {
      throw Error(Errc::non_finite, "group " + group_id + " has a non-finite reward");
    }
    if (r < 0.0 || r > 1.0) {
      throw Error(Errc::invalid_argument,
                  "group " + group_id + " has a reward outside [0,1]");
    }
  }
  if (logp_new.size() != g || logp_old.size() != g) {
    throw Error(Errc::length_mismatch,
                "group " + group_id + " needs one log-prob sequence per reward");
  }
  for (std::size_t i = 0; i < g; ++i) {
    if (logp_new[i].empty() || logp_new[i].size() != logp_old[i].size()) {
      throw Error(Errc::length_mismatch,
                  "group " + group_id + " rollout " + std::to_string(i) +
                      " has empty or unequal log-prob sequences");
    }
    for (const auto* seq : {&logp_new[i], &logp_old[i]}) {
      for (double lp : *seq) {
        if (!std::isfinite(lp)) {
          throw Error(Errc::non_finite,
                      "group " + group_id + " has a non-finite log-prob");
        }
        if (lp > 0.0) {
          throw Error(Errc::invalid_argument,
                      "group " + group_id + " has a positive log-prob");
        }
      }
    }
  }
}

void RlConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(Errc::config_invalid, "rl config: " + what);
  };
  if (!(eps_low > 0.0 && eps_low < 1.0)) fail("eps_low must be in (0,1)");
  if (!(eps_high > 0.0) || !std::isfinite(eps_high)) fail("eps_high must be > 0");
  if (!(tau_adv >= 0.0) || !std::isfinite(tau_adv)) fail("tau_adv must be >= 0");
  if (!(tau_var >= 0.0) || !std::isfinite(tau_var)) fail("tau_var must be >= 0");
}

std::string_view group_status_name(GroupStatus status) noexcept {
  switch (status) {
    case GroupStatus::accepted: return "accepted";
    case GroupStatus::rejected_variance: return "rejected_variance";
    case GroupStatus::rejected_degenerate: return "rejected_degenerate";
    case GroupStatus::rejected_all_or_none: return "rejected_all_or_none";
  }
  return "rejected_variance";
}

double population_variance(std::span<const double> values) {
  if (values.empty() || all_equal(values)) return 0.0;
  const double mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size());
}

std::vector<double> normalized_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) {
    throw Error(Errc::invalid_argument, "advantages need at least two rewards");
  }
  if (all_equal(rewards)) {
    throw Error(Errc::degenerate_group, "all rewards are equal");
  }
  const double mean = mean_of(rewards);
  const double sd = std::sqrt(population_variance(rewards));
  if (!(sd > 0.0) || !std::isfinite(sd)) {
    throw Error(Errc::degenerate_group, "reward std is zero");
  }
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mean) / sd);
  return out;
}

GroupDecision group_filter(const RolloutGroup& group, const RlConfig& config) {
  group.validate();
  GroupDecision out;
  out.variance = population_variance(group.rewards);
  try {
    out.advantages = normalized_advantages(group.rewards);
  } catch (const Error& e) {
    if (e.code() != Errc::degenerate_group) throw;
  }
  if (!(out.variance > config.tau_var)) {
    out.status = GroupStatus::rejected_variance;
    return out;
  }
  if (out.advantages.empty()) {
    out.status = GroupStatus::rejected_degenerate;
    return out;
  }
  std::vector<std::size_t> accepted;
  for (std::size_t i = 0; i < out.advantages.size(); ++i) {
    if (std::abs(out.advantages[i]) > config.tau_adv) accepted.push_back(i);
  }
  if (accepted.empty() || accepted.size() == group.size()) {
    out.status = GroupStatus::rejected_all_or_none;
    return out;
  }
  out.accepted = std::move(accepted);
  out.status = GroupStatus::accepted;
  return out;
}

double sequence_ratio(std::span<const double> logp_new,
                      std::span<const double> logp_old) {
  if (logp_new.size() != logp_old.size()) {
    throw Error(Errc::length_mismatch, "log-prob sequences differ in length");
  }
  if (logp_new.empty()) {
    throw Error(Errc::length_mismatch, "log-prob sequences are empty");
  }
  double sum = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t t = 0; t < logp_new.size(); ++t) {
    const double d = logp_new[t] - logp_old[t];
    if (!std::isfinite(logp_new[t]) || !std::isfinite(logp_old[t]) ||
        !std::isfinite(d)) {
      throw Error(Errc::non_finite, "non-finite log-prob at token " +
                                        std::to_string(t));
    }
    lo = t == 0 ? d : std::min(lo, d);
    hi = t == 0 ? d : std::max(hi, d);
    sum += d;
  }
  // The true mean lies in [lo, hi]; clamping removes rounding overshoot.
  const double mean =
      std::clamp(sum / static_cast<double>(logp_new.size()), lo, hi);
  return std::exp(mean);
}

double clipped_term(double ratio, double advantage, const RlConfig& config) {
  const double clipped =
      std::min(1.0 + config.eps_high, std::max(1.0 - config.eps_low, ratio));
  return std::min(ratio * advantage, clipped * advantage);
}

double subset_objective(std::span<const double> ratios,
                        std::span<const double> advantages,
                        std::span<const std::size_t> indices,
                        const RlConfig& config) {
  if (ratios.size() != advantages.size()) {
    throw Error(Errc::length_mismatch, "ratios and advantages differ in length");
  }
  double sum = 0.0;
  for (std::size_t i : indices) {
    if (i >= ratios.size()) {
      throw Error(Errc::invalid_argument, "rollout index out of range");
    }
    sum += clipped_term(ratios[i], advantages[i], config);
  }
  return sum / static_cast<double>(ratios.size());
}

GroupObjective group_objective(const RolloutGroup& group, const RlConfig& config) {
  GroupObjective out;
  out.decision = group_filter(group, config);
  out.ratios.reserve(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    out.ratios.push_back(sequence_ratio(group.logp_new[i], group.logp_old[i]));
  }
  if (out.decision.status != GroupStatus::accepted) return out;

  for (std::size_t i : out.decision.accepted) {
    out.per_sample.push_back(
        clipped_term(out.ratios[i], out.decision.advantages[i], config));
  }
  out.value = subset_objective(out.ratios, out.decision.advantages,
                               out.decision.accepted, config);
  return out;
}

RolloutGroup rollout_group_from_json(const nlohmann::json& value) {
  auto fail = [](const std::string& what) {
    throw Error(Errc::invalid_argument, "rollout group: " + what);
  };
  if (!value.is_object()) fail("record is not an object");
  for (const char* key : {"group_id", "rewards", "logp_new", "logp_old"}) {
    if (!value.contains(key)) fail(std::string("missing ") + key);
  }
  RolloutGroup g;
  const auto& id = value.at("group_id");
  if (id.is_string()) {
    g.group_id = id.get<std::string>();
  } else if (id.is_number_integer()) {
    g.group_id = id.dump();
  } else {
    fail("group_id must be a string or integer");
  }
  auto numbers = [&](const nlohmann::json& arr, const char* what) {
    if (!arr.is_array()) fail(std::string(what) + " must be an array");
    std::vector<double> out;
    for (const auto& x : arr) {
      if (!x.is_number()) fail(std::string(what) + " must hold numbers");
      out.push_back(x.get<double>());
    }
    return out;
  };
  g.rewards = numbers(value.at("rewards"), "rewards");
  for (const char* key : {"logp_new", "logp_old"}) {
    const auto& seqs = value.at(key);
    if (!seqs.is_array()) fail(std::string(key) + " must be an array of arrays");
    auto& target = std::string_view(key) == "logp_new" ? g.logp_new : g.logp_old;
    for (const auto& seq : seqs) target.push_back(numbers(seq, key));
  }
  return g;
}

nlohmann::json to_json(const RolloutGroup& group) {
  return nlohmann::json{{"group_id", group.group_id},
                        {"rewards", group.rewards},
                        {"logp_new", group.logp_new},
                        {"logp_old", group.logp_old}};
}

}  // namespace toolreflect
