#include "toolreflect/config.hpp"

#include <fstream>
#include <set>

#include "toolreflect/error.hpp"

namespace toolreflect {

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(Errc::config_invalid, what);
}

void only_keys(const Json& obj, const std::string& where,
               std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) invalid(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.contains(key)) invalid("unknown key '" + key + "' in " + where);
  }
}

void read_number(const Json& obj, const char* key, const std::string& where,
                 double& target) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number()) invalid(where + "." + key + " must be a number");
  target = it->get<double>();
}

template <typename Unsigned>
void read_unsigned(const Json& obj, const char* key, const std::string& where,
                   Unsigned& target) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number_unsigned()) {
    invalid(where + "." + key + " must be a non-negative integer");
  }
  target = it->get<Unsigned>();
}

std::vector<std::string> read_strings(const Json& value, const std::string& where) {
  if (!value.is_array()) invalid(where + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& s : value) {
    if (!s.is_string()) invalid(where + " must be an array of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

EndpointConfig read_endpoint(const Json& obj, const std::string& where) {
  EndpointConfig out;
  if (auto it = obj.find("command"); it != obj.end()) {
    out.command = read_strings(*it, where + ".command");
  }
  if (auto it = obj.find("url"); it != obj.end()) {
    if (!it->is_string()) invalid(where + ".url must be a string");
    out.url = it->get<std::string>();
  }
  std::uint64_t timeout_ms = 10000;
  read_unsigned(obj, "timeout_ms", where, timeout_ms);
  if (timeout_ms == 0) invalid(where + ".timeout_ms must be positive");
  out.timeout = std::chrono::milliseconds(timeout_ms);
  if (out.command.empty() == out.url.empty()) {
    invalid(where + " needs exactly one of command or url");
  }
  return out;
}

Json endpoint_json(const EndpointConfig& e) {
  Json out{{"timeout_ms", e.timeout.count()}};
  if (!e.command.empty()) out["command"] = e.command;
  if (!e.url.empty()) out["url"] = e.url;
  return out;
}

}  // namespace

std::shared_ptr<JsonChannel> EndpointConfig::open() const {
  if (!command.empty() && url.empty()) {
    return std::make_shared<ProcessChannel>(command, timeout);
  }
  if (command.empty() && !url.empty()) {
    return std::make_shared<HttpChannel>(url, timeout);
  }
  invalid("endpoint needs exactly one of command or url");
}

RunConfig RunConfig::from_json(const Json& value) {
  only_keys(value, "config",
            {"reward", "similarity", "rl", "perturb", "call_tags", "workers"});
  RunConfig cfg;

  if (auto it = value.find("reward"); it != value.end()) {
    const std::string where = "reward";
    only_keys(*it, where,
              {"w_r", "w_c", "w_f", "w_ref", "w_calls", "w_final", "beta_extra",
               "gamma_count", "lambda_m", "r_reduce", "epsilon_backoff", "w_b"});
    auto& r = cfg.reward;
    read_number(*it, "w_r", where, r.w_r);
    read_number(*it, "w_c", where, r.w_c);
    read_number(*it, "w_f", where, r.w_f);
    read_number(*it, "w_ref", where, r.w_ref);
    read_number(*it, "w_calls", where, r.w_calls);
    read_number(*it, "w_final", where, r.w_final);
    read_number(*it, "beta_extra", where, r.beta_extra);
    read_number(*it, "gamma_count", where, r.gamma_count);
    read_number(*it, "lambda_m", where, r.lambda_m);
    read_number(*it, "r_reduce", where, r.r_reduce);
    read_number(*it, "epsilon_backoff", where, r.epsilon_backoff);
    read_number(*it, "w_b", where, r.w_b);
  }

  if (auto it = value.find("similarity"); it != value.end()) {
    only_keys(*it, "similarity", {"kind", "command", "url", "timeout_ms"});
    if (auto k = it->find("kind"); k != it->end()) {
      if (!k->is_string()) invalid("similarity.kind must be a string");
      cfg.reward.similarity.kind = parse_similarity_kind(k->get<std::string>());
    }
    if (cfg.reward.similarity.kind == SimilarityKind::external) {
      cfg.similarity_endpoint = read_endpoint(*it, "similarity");
    } else if (it->contains("command") || it->contains("url")) {
      invalid("similarity endpoint given for a non-external kind");
    }
  }

  if (auto it = value.find("rl"); it != value.end()) {
    only_keys(*it, "rl", {"eps_low", "eps_high", "tau_adv", "tau_var", "max_resample"});
    read_number(*it, "eps_low", "rl", cfg.rl.eps_low);
    read_number(*it, "eps_high", "rl", cfg.rl.eps_high);
    read_number(*it, "tau_adv", "rl", cfg.rl.tau_adv);
    read_number(*it, "tau_var", "rl", cfg.rl.tau_var);
    read_unsigned(*it, "max_resample", "rl", cfg.rl.max_resample);
  }

  if (auto it = value.find("perturb"); it != value.end()) {
    only_keys(*it, "perturb",
              {"operator_mix", "seed", "split_ratio", "passthrough_fraction",
               "items_per_trajectory", "reflection_writer"});
    auto& p = cfg.perturb;
    if (auto mix = it->find("operator_mix"); mix != it->end()) {
      if (!mix->is_object()) invalid("perturb.operator_mix must be an object");
      p.operator_mix = {0.0, 0.0, 0.0, 0.0};
      for (const auto& [name, weight] : mix->items()) {
        Operator op;
        try {
          op = parse_operator(name);
        } catch (const Error&) {
          invalid("unknown operator '" + name + "' in perturb.operator_mix");
        }
        if (!weight.is_number()) invalid("operator weights must be numbers");
        p.operator_mix[static_cast<std::size_t>(op)] = weight.get<double>();
      }
    }
    read_unsigned(*it, "seed", "perturb", p.seed);
    read_number(*it, "split_ratio", "perturb", p.split_ratio);
    read_number(*it, "passthrough_fraction", "perturb", p.passthrough_fraction);
    read_unsigned(*it, "items_per_trajectory", "perturb", p.items_per_trajectory);
    if (auto w = it->find("reflection_writer"); w != it->end()) {
      only_keys(*w, "perturb.reflection_writer", {"command", "url", "timeout_ms"});
      cfg.reflection_endpoint = read_endpoint(*w, "perturb.reflection_writer");
    }
  }

  if (auto it = value.find("call_tags"); it != value.end()) {
    cfg.parse.call_tags = read_strings(*it, "call_tags");
  }
  read_unsigned(value, "workers", "config", cfg.workers);

  if (cfg.similarity_endpoint) {
    cfg.reward.similarity.external =
        std::make_shared<ChannelScorer>(cfg.similarity_endpoint->open());
  }
  cfg.reward.parse = cfg.parse;
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read config " + path.string());
  Json value = Json::parse(in, nullptr, false);
  if (value.is_discarded()) invalid("config " + path.string() + " is not valid JSON");
  return from_json(value);
}

void RunConfig::validate() const {
  reward.validate();
  rl.validate();
  perturb.validate();
  if (workers == 0) invalid("workers must be >= 1");
  if (parse.call_tags.empty()) invalid("call_tags must not be empty");
  for (const auto& tag : parse.call_tags) {
    if (tag.empty() || tag == "reflect" || tag == "final" ||
        tag.find_first_of("<>/") != std::string::npos) {
      invalid("call tag '" + tag + "' is not usable");
    }
  }
}

Json RunConfig::to_json() const {
  Json mix = Json::object();
  for (auto op : kOperators) {
    mix[std::string(operator_name(op))] = perturb.operator_mix[static_cast<std::size_t>(op)];
  }
  Json similarity{{"kind", similarity_kind_name(reward.similarity.kind)}};
  if (similarity_endpoint) similarity.update(endpoint_json(*similarity_endpoint));
  Json p{{"operator_mix", mix},
         {"seed", perturb.seed},
         {"split_ratio", perturb.split_ratio},
         {"passthrough_fraction", perturb.passthrough_fraction},
         {"items_per_trajectory", perturb.items_per_trajectory}};
  if (reflection_endpoint) p["reflection_writer"] = endpoint_json(*reflection_endpoint);
  return Json{
      {"reward",
       {{"w_r", reward.w_r},
        {"w_c", reward.w_c},
        {"w_f", reward.w_f},
        {"w_ref", reward.w_ref},
        {"w_calls", reward.w_calls},
        {"w_final", reward.w_final},
        {"beta_extra", reward.beta_extra},
        {"gamma_count", reward.gamma_count},
        {"lambda_m", reward.lambda_m},
        {"r_reduce", reward.r_reduce},
        {"epsilon_backoff", reward.epsilon_backoff},
        {"w_b", reward.w_b}}},
      {"similarity", similarity},
      {"rl",
       {{"eps_low", rl.eps_low},
        {"eps_high", rl.eps_high},
        {"tau_adv", rl.tau_adv},
        {"tau_var", rl.tau_var},
        {"max_resample", rl.max_resample}}},
      {"perturb", p},
      {"call_tags", parse.call_tags},
      {"workers", workers}};
}

}  // namespace toolreflect
