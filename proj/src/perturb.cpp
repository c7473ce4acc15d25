#include "toolreflect/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "toolreflect/error.hpp"
#include "toolreflect/rng.hpp"

namespace toolreflect {

namespace {

using OrderedJson = nlohmann::ordered_json;

constexpr std::string_view kSchemaWarning =
    "The called function executed but returned partial/mismatched data because "
    "the arguments did not match the expected schema for this call.";
constexpr std::string_view kRedundantMessage =
    "This item duplicates a previous result.";
constexpr std::string_view kMissingArguments =
    "Missing required arguments. The function call failed because necessary "
    "parameters were not provided.";

[[noreturn]] void invalid_target(const std::string& what) {
  throw Error(Errc::invalid_target, what);
}

std::string dump_ordered(const OrderedJson& value) {
  return value.dump(-1, ' ', false, OrderedJson::error_handler_t::replace);
}

Message call_message(std::span<const ToolCall> calls) {
  return Message{Role::assistant, "<call>" + render_calls(calls) + "</call>"};
}

std::string joined_names(std::span<const ToolCall> calls) {
  std::vector<std::string> names;
  for (const auto& c : calls) {
    if (std::find(names.begin(), names.end(), c.name()) == names.end()) {
      names.push_back(c.name());
    }
  }
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += i + 1 == names.size() ? " and " : ", ";
    out += names[i];
  }
  return out;
}

std::vector<std::string> distinct_names(std::span<const ToolCall> calls) {
  std::vector<std::string> names;
  for (const auto& c : calls) names.push_back(c.name());
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

const std::string& next_round_name(const std::vector<CallStep>& steps,
                                   std::size_t k) {
  for (std::size_t j = k + 1; j < steps.size(); ++j) {
    if (!steps[j].calls.empty()) return steps[j].calls.front().name();
  }
  for (std::size_t j = steps.size(); j-- > 0;) {
    if (!steps[j].calls.empty()) return steps[j].calls.back().name();
  }
  invalid_target("trajectory has no calls to reorder");
}

Json wrong_type_value(const Json& value) {
  switch (value.type()) {
    case Json::value_t::string: return 999999;
    case Json::value_t::number_integer:
    case Json::value_t::number_unsigned:
    case Json::value_t::number_float: return "many";
    case Json::value_t::boolean: return "yes";
    case Json::value_t::null: return 0;
    default: return "none";
  }
}

Json out_of_range_value(const Json& value, const ParamSpec* spec) {
  if (spec && spec->range) {
    const double high = spec->range->second;
    const double bumped = high + std::max(1000.0, std::abs(high));
    if (spec->type == ParamType::integer || value.is_number_integer()) {
      return static_cast<std::int64_t>(std::floor(bumped));
    }
    return bumped;
  }
  if (value.is_number_integer()) return -999999;
  return -999999.5;
}

enum class Corruption { wrong_type, out_of_range, empty_string, unknown_key };

Json corrupt_arguments(const ToolCall& call, std::mt19937_64& rng,
                       const ToolRegistry* registry) {
  const Json& args = call.arguments();
  std::vector<std::string> keys;
  for (const auto& [key, value] : args.items()) keys.push_back(key);

  const ToolSchema* schema = registry ? registry->find(call.name()) : nullptr;
  const std::size_t count = 1 + uniform_index(rng, keys.size());
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(keys[i], keys[i + uniform_index(rng, keys.size() - i)]);
  }
  keys.resize(count);
  std::sort(keys.begin(), keys.end());

  Json out = args;
  for (const auto& key : keys) {
    const Json& value = args.at(key);
    const ParamSpec* spec = nullptr;
    if (schema) {
      auto it = schema->params.find(key);
      if (it != schema->params.end()) spec = &it->second;
    }
    std::vector<Corruption> kinds{Corruption::wrong_type};
    if (value.is_number() && (!registry || (spec && spec->range))) {
      kinds.push_back(Corruption::out_of_range);
    }
    if (value.is_string() && !value.get_ref<const std::string&>().empty() &&
        (!registry || (spec && spec->nonempty))) {
      kinds.push_back(Corruption::empty_string);
    }
    kinds.push_back(Corruption::unknown_key);

    switch (kinds[uniform_index(rng, kinds.size())]) {
      case Corruption::wrong_type:
        out[key] = wrong_type_value(value);
        break;
      case Corruption::out_of_range:
        out[key] = out_of_range_value(value, spec);
        break;
      case Corruption::empty_string:
        out[key] = "";
        break;
      case Corruption::unknown_key: {
        std::string alias = key + "_alias";
        while (out.contains(alias) || args.contains(alias)) alias += "_alias";
        out.erase(key);
        out[alias] = value;
        break;
      }
    }
  }
  return out;
}

OrderedJson redundant_reply(const std::string& content) {
  OrderedJson marker{{"status", "redundant"}, {"message", kRedundantMessage}};
  OrderedJson parsed = OrderedJson::parse(content, nullptr, false);
  if (parsed.is_discarded()) {
    marker["result"] = content;
    return OrderedJson::array({content, marker});
  }
  auto mark = [&](const OrderedJson& item) {
    if (!item.is_object()) {
      OrderedJson copy = marker;
      copy["result"] = item;
      return copy;
    }
    OrderedJson copy = item;
    copy["status"] = "redundant";
    copy["message"] = kRedundantMessage;
    return copy;
  };
  if (parsed.is_array()) {
    if (parsed.empty()) return OrderedJson::array({marker});
    parsed.push_back(mark(parsed.front()));
    return parsed;
  }
  return OrderedJson::array({parsed, mark(parsed)});
}

struct Located {
  std::vector<CallStep> steps;
  std::size_t k;
};

Located locate(const Trajectory& clean, const PerturbationSpec& spec,
               const ParseOptions& parse) {
  Located loc{call_steps(clean.messages, parse), spec.target};
  const auto K = loc.steps.size();
  if (spec.target >= K) {
    invalid_target("step " + std::to_string(spec.target) + " does not exist (" +
                   std::to_string(K) + " call steps)");
  }
  if (spec.op == Operator::redundant && spec.target == 0) {
    invalid_target("redundant-call target must not be the first step");
  }
  if (spec.op == Operator::missing && spec.target + 1 >= K) {
    invalid_target("missing-call target must not be the last step");
  }
  return loc;
}

ReflectionRequest reflection_request(const Trajectory& clean,
                                     const PerturbationSpec& spec,
                                     const BrokenStep& broken,
                                     const PerturbOptions& options) {
  const auto loc = locate(clean, spec, options.parse);
  const auto& step = loc.steps[loc.k];
  ReflectionRequest req;
  req.op = spec.op;
  req.clean_calls = step.calls;
  req.clean_reply = clean.messages[step.reply_index];
  req.broken_calls = parse_completion(broken.call.content, options.parse).calls;
  req.broken_reply = broken.reply;
  return req;
}

std::string describe(const Json* value) {
  return value ? dump_compact(*value) : std::string("missing");
}

}  // namespace

std::string_view operator_name(Operator op) noexcept {
  switch (op) {
    case Operator::order_swap: return "P1_order_swap";
    case Operator::redundant: return "P2_redundant";
    case Operator::missing: return "P3_missing";
    case Operator::argument: return "P4_argument";
  }
  return "P4_argument";
}

Operator parse_operator(std::string_view name) {
  for (auto op : kOperators) {
    if (operator_name(op) == name) return op;
  }
  throw Error(Errc::invalid_argument, "unknown operator '" + std::string(name) + "'");
}

Json PerturbationSpec::to_json() const {
  return Json{{"operator", operator_name(op)}, {"target_index", target}, {"seed", seed}};
}

PerturbationSpec PerturbationSpec::from_json(const Json& value) {
  if (!value.is_object() || !value.contains("operator") ||
      !value.at("operator").is_string() || !value.contains("target_index") ||
      !value.at("target_index").is_number_unsigned()) {
    throw Error(Errc::invalid_argument,
                "provenance needs operator and a non-negative target_index");
  }
  PerturbationSpec spec;
  spec.op = parse_operator(value.at("operator").get<std::string>());
  spec.target = value.at("target_index").get<std::size_t>();
  if (auto it = value.find("seed"); it != value.end()) {
    if (!it->is_number_unsigned()) {
      throw Error(Errc::invalid_argument, "provenance seed must be unsigned");
    }
    spec.seed = it->get<std::uint64_t>();
  }
  return spec;
}

BrokenStep apply_perturbation(const Trajectory& clean, const PerturbationSpec& spec,
                              const PerturbOptions& options) {
  const auto loc = locate(clean, spec, options.parse);
  const auto& step = loc.steps[loc.k];

  switch (spec.op) {
    case Operator::order_swap: {
      const std::string name = next_round_name(loc.steps, loc.k);
      const ToolCall premature(name, Json::object());
      OrderedJson reply{{"tool", name},
                        {"status", "warning"},
                        {"message", kSchemaWarning},
                        {"result", nullptr}};
      return BrokenStep{call_message(std::span(&premature, 1)),
                        Message{Role::tool, dump_ordered(reply)}};
    }
    case Operator::redundant: {
      if (step.calls.empty()) invalid_target("target step has no calls to repeat");
      std::vector<ToolCall> calls = step.calls;
      calls.push_back(step.calls.front());
      const auto& original = clean.messages[step.reply_index].content;
      return BrokenStep{call_message(calls),
                        Message{Role::tool, dump_ordered(redundant_reply(original))}};
    }
    case Operator::missing: {
      const auto& next = loc.steps[loc.k + 1];
      if (step.calls.empty() || next.calls.empty()) {
        invalid_target("missing-call target and its successor need calls");
      }
      std::vector<ToolCall> degraded;
      for (const auto& c : next.calls) degraded.emplace_back(c.name(), Json::object());
      OrderedJson reply = OrderedJson::array({OrderedJson{
          {"status", "error"}, {"message", kMissingArguments}, {"result", nullptr}}});
      return BrokenStep{call_message(degraded), Message{Role::tool, dump_ordered(reply)}};
    }
    case Operator::argument: {
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < step.calls.size(); ++i) {
        if (!step.calls[i].arguments().empty()) candidates.push_back(i);
      }
      if (candidates.empty()) {
        throw Error(Errc::no_corruptible_args,
                    "step " + std::to_string(loc.k) + " has no arguments to corrupt");
      }
      std::mt19937_64 rng(spec.seed);
      const auto victim = candidates[uniform_index(rng, candidates.size())];
      std::vector<ToolCall> calls = step.calls;
      calls[victim] = ToolCall(calls[victim].name(),
                               corrupt_arguments(calls[victim], rng, options.registry));
      const auto& name = calls[victim].name();
      OrderedJson reply = OrderedJson::array({OrderedJson{
          {"status", "error"},
          {"message", "Parameter validation failed for " + name +
                          ". One or more arguments are invalid."},
          {"result", nullptr},
          {"error_code", "INVALID_PARAMETERS"}}});
      return BrokenStep{call_message(calls), Message{Role::tool, dump_ordered(reply)}};
    }
  }
  invalid_target("unknown operator");
}

Trajectory build_negative(const Trajectory& clean, const PerturbationSpec& spec,
                          const PerturbOptions& options) {
  auto broken = apply_perturbation(clean, spec, options);
  const auto loc = locate(clean, spec, options.parse);
  Trajectory out;
  out.id = clean.id;
  const auto cut = loc.steps[loc.k].call_index;
  out.messages.assign(clean.messages.begin(),
                      clean.messages.begin() + static_cast<std::ptrdiff_t>(cut));
  out.messages.push_back(std::move(broken.call));
  out.messages.push_back(std::move(broken.reply));
  return out;
}

Json ReflectionRequest::to_json() const {
  auto calls_json = [](const std::vector<ToolCall>& calls) {
    Json arr = Json::array();
    for (const auto& c : calls) arr.push_back(c.to_json());
    return arr;
  };
  return Json{{"operator", operator_name(op)},
              {"clean", {{"calls", calls_json(clean_calls)},
                         {"reply", clean_reply.content}}},
              {"broken", {{"calls", calls_json(broken_calls)},
                          {"reply", broken_reply.content}}}};
}

std::vector<std::string> differing_keys(std::span<const ToolCall> clean,
                                        std::span<const ToolCall> broken) {
  std::set<std::string> keys;
  const auto n = std::min(clean.size(), broken.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = clean[i].arguments();
    const auto& b = broken[i].arguments();
    for (const auto& [key, value] : a.items()) {
      if (!b.contains(key) || normalize_json(b.at(key)) != normalize_json(value)) {
        keys.insert(key);
      }
    }
    for (const auto& [key, value] : b.items()) {
      if (!a.contains(key)) keys.insert(key);
    }
  }
  return {keys.begin(), keys.end()};
}

std::string synth_reflection(const ReflectionRequest& req) {
  const std::string correct = joined_names(req.clean_calls);
  const std::string broken = joined_names(req.broken_calls);
  switch (req.op) {
    case Operator::order_swap:
      if (broken == correct) {
        return "The call to " + broken +
               " failed because it was issued with empty arguments, so the tool "
               "returned partial/mismatched data. Retry " + correct +
               " with the arguments the request specifies.";
      }
      return "The call to " + broken +
             " was premature: it was issued with empty arguments before " +
             correct + " had run, and the tool returned partial/mismatched data. "
             "Call " + correct +
             " first with the arguments the request specifies, then continue "
             "with " + broken + ".";
    case Operator::redundant:
      return "The call list repeats " + broken +
             " with identical arguments, so the tool returned a redundant "
             "duplicate of a previous result. Drop the duplicated call and "
             "issue " + correct + " only once.";
    case Operator::missing:
      return "The agent missed the prerequisite call to " + correct +
             "; without its result, " + broken +
             " was issued with empty arguments and failed with missing required "
             "arguments. Reinstate " + correct +
             " with its correct arguments first, then retry " + broken + ".";
    case Operator::argument: {
      std::string details;
      const auto n = std::min(req.clean_calls.size(), req.broken_calls.size());
      for (std::size_t i = 0; i < n; ++i) {
        const auto& a = req.clean_calls[i].arguments();
        const auto& b = req.broken_calls[i].arguments();
        for (const auto& key : differing_keys(std::span(&req.clean_calls[i], 1),
                                              std::span(&req.broken_calls[i], 1))) {
          const Json* got = b.contains(key) ? &b.at(key) : nullptr;
          const Json* want = a.contains(key) ? &a.at(key) : nullptr;
          if (!details.empty()) details += "; ";
          if (!want) {
            details += key + " is not a parameter of " + req.broken_calls[i].name();
          } else {
            details += key + " was " + describe(got) + " but should be " +
                       describe(want);
          }
        }
      }
      return "Parameter validation failed for " + broken + ": " + details +
             ". Retry " + correct + " with the corrected arguments.";
    }
  }
  return {};
}

std::string ChannelReflectionWriter::write(const ReflectionRequest& request) {
  const auto response = channel_->request(request.to_json());
  if (!response.is_object() || !response.contains("reflection") ||
      !response.at("reflection").is_string()) {
    throw Error(Errc::external_scorer_unavailable,
                "generator response lacks a reflection string");
  }
  return response.at("reflection").get<std::string>();
}

Message BenchItem::repair_message() const {
  return Message{Role::assistant, repair_completion()};
}

std::string BenchItem::repair_completion() const {
  ParsedCompletion repair;
  repair.reflection = reflection;
  repair.calls = corrected_call;
  repair.has_call_block = true;
  return render_completion(repair);
}

std::vector<Message> BenchItem::render() const {
  std::vector<Message> out = negative_prefix.messages;
  out.push_back(repair_message());
  out.push_back(corrected_reply);
  out.insert(out.end(), suffix.begin(), suffix.end());
  return out;
}

namespace {

Json calls_to_json(std::span<const ToolCall> calls) {
  Json arr = Json::array();
  for (const auto& c : calls) arr.push_back(c.to_json());
  return arr;
}

std::vector<ToolCall> calls_from_json(const Json& value) {
  if (!value.is_array()) {
    throw Error(Errc::invalid_argument, "corrected_call must be an array");
  }
  std::vector<ToolCall> out;
  for (const auto& c : value) {
    if (!c.is_object() || !c.contains("name") || !c.at("name").is_string() ||
        !c.contains("arguments")) {
      throw Error(Errc::invalid_argument, "corrected_call entries need name and arguments");
    }
    out.emplace_back(c.at("name").get<std::string>(), c.at("arguments"));
  }
  return out;
}

const Json& require(const Json& value, const char* key) {
  if (!value.is_object() || !value.contains(key)) {
    throw Error(Errc::invalid_argument, std::string("item record lacks ") + key);
  }
  return value.at(key);
}

std::string require_string(const Json& value, const char* key) {
  const auto& v = require(value, key);
  if (!v.is_string()) {
    throw Error(Errc::invalid_argument, std::string(key) + " must be a string");
  }
  return v.get<std::string>();
}

void read_answer_fields(const Json& value, BenchItem& item) {
  item.item_id = require_string(value, "item_id");
  item.source_id = value.contains("source_id") && value.at("source_id").is_string()
                       ? value.at("source_id").get<std::string>()
                       : std::string();
  item.reflection = require_string(value, "reflection");
  item.corrected_call = calls_from_json(require(value, "corrected_call"));
  item.corrected_reply = message_from_json(require(value, "corrected_reply"));
  item.suffix = messages_from_json(require(value, "suffix"));
  item.provenance = PerturbationSpec::from_json(require(value, "provenance"));
}

}  // namespace

Json BenchItem::answer_record() const {
  return Json{{"item_id", item_id},
              {"source_id", source_id},
              {"reflection", reflection},
              {"corrected_call", calls_to_json(corrected_call)},
              {"corrected_reply", toolreflect::to_json(corrected_reply)},
              {"suffix", toolreflect::to_json(std::span<const Message>(suffix))},
              {"provenance", provenance.to_json()}};
}

Json BenchItem::test_record() const {
  return Json{{"item_id", item_id},
              {"messages", toolreflect::to_json(
                               std::span<const Message>(negative_prefix.messages))}};
}

Json BenchItem::to_json() const {
  Json out = answer_record();
  out["negative_prefix"] =
      toolreflect::to_json(std::span<const Message>(negative_prefix.messages));
  return out;
}

BenchItem BenchItem::from_json(const Json& value) {
  BenchItem item;
  read_answer_fields(value, item);
  item.negative_prefix.id = item.source_id;
  item.negative_prefix.messages = messages_from_json(require(value, "negative_prefix"));
  return item;
}

BenchItem BenchItem::from_split(const Json& test_record, const Json& answer_record) {
  BenchItem item;
  read_answer_fields(answer_record, item);
  if (require_string(test_record, "item_id") != item.item_id) {
    throw Error(Errc::invalid_argument, "test and answer records disagree on item_id");
  }
  item.negative_prefix.id = item.source_id;
  item.negative_prefix.messages = messages_from_json(require(test_record, "messages"));
  return item;
}

BenchItem package_item(const Trajectory& clean, const PerturbationSpec& spec,
                       const PackageOptions& options) {
  const auto loc = locate(clean, spec, options.perturb.parse);
  const auto& step = loc.steps[loc.k];
  auto negative = build_negative(clean, spec, options.perturb);

  BrokenStep broken{negative.messages[negative.messages.size() - 2],
                    negative.messages.back()};
  auto request = reflection_request(clean, spec, broken, options.perturb);

  BenchItem item;
  item.source_id = clean.id;
  item.item_id = clean.id + ":" + std::string(operator_name(spec.op)) + ":" +
                 std::to_string(spec.target);
  item.negative_prefix = std::move(negative);
  if (options.writer) {
    item.reflection = options.writer->write(request);
  } else {
    item.reflection = synth_reflection(request);
  }
  item.corrected_call = step.calls;
  item.corrected_reply = clean.messages[step.reply_index];
  item.suffix.assign(clean.messages.begin() + static_cast<std::ptrdiff_t>(step.reply_index + 1),
                     clean.messages.end());
  item.provenance = spec;
  return item;
}

namespace {

std::vector<ToolCall> broken_calls_of(const BenchItem& item, const ParseOptions& parse) {
  const auto& msgs = item.negative_prefix.messages;
  if (msgs.size() < 2) return {};
  return parse_completion(msgs[msgs.size() - 2].content, parse).calls;
}

}  // namespace

ItemVerdict validate_item(const BenchItem& item, const ToolRegistry& registry,
                          const ParseOptions& parse) {
  ItemVerdict verdict;
  auto reject = [&](const char* reason) {
    verdict.retained = false;
    if (std::find(verdict.reasons.begin(), verdict.reasons.end(), reason) ==
        verdict.reasons.end()) {
      verdict.reasons.emplace_back(reason);
    }
  };

  // (i) every tagged region reparses; the error reply is JSON; the repair
  // turn reparses to exactly the stored reflection and calls.
  std::vector<ToolCall> broken;
  try {
    const auto& msgs = item.negative_prefix.messages;
    if (msgs.size() < 2 || msgs[msgs.size() - 2].role != Role::assistant ||
        msgs.back().role != Role::tool) {
      reject("malformed");
    } else {
      const auto parsed = parse_completion(msgs[msgs.size() - 2].content, parse);
      if (!parsed.has_call_block) reject("malformed");
      broken = parsed.calls;
      if (Json::parse(msgs.back().content, nullptr, false).is_discarded()) {
        reject("malformed");
      }
    }
    for (const auto& m : item.render()) {
      if (m.role == Role::assistant) (void)parse_completion(m.content, parse);
    }
    const auto repair = parse_completion(item.repair_completion(), parse);
    if (repair.reflection != item.reflection ||
        !equal_calls(repair.calls, item.corrected_call)) {
      reject("malformed");
    }
  } catch (const Error&) {
    reject("malformed");
  }

  // (ii) the corrected call executes.
  if (item.corrected_call.empty()) reject("not_executable");
  for (const auto& call : item.corrected_call) {
    if (!validate_call(call, registry).ok()) reject("not_executable");
  }

  // (iii) the reflection cites the contrast.
  if (broken.empty()) {
    reject("missing_citation");
  } else {
    for (const auto& name : distinct_names(broken)) {
      if (item.reflection.find(name) == std::string::npos) reject("missing_citation");
    }
    if (item.provenance.op == Operator::argument) {
      const auto keys = differing_keys(item.corrected_call, broken);
      const bool cited = std::any_of(keys.begin(), keys.end(), [&](const auto& k) {
        return item.reflection.find(k) != std::string::npos;
      });
      if (!cited) reject("missing_citation");
    }
  }
  return verdict;
}

bool is_negative(const BenchItem& item, const ToolRegistry& registry,
                 const ParseOptions& parse) {
  std::vector<ToolCall> broken;
  try {
    broken = broken_calls_of(item, parse);
  } catch (const Error&) {
    return false;
  }
  if (item.provenance.op == Operator::redundant) {
    std::vector<std::string> keys;
    for (const auto& c : broken) keys.push_back(canonicalize_call(c));
    std::sort(keys.begin(), keys.end());
    return std::adjacent_find(keys.begin(), keys.end()) != keys.end();
  }
  return std::any_of(broken.begin(), broken.end(), [&](const ToolCall& c) {
    return !validate_call(c, registry).ok();
  });
}

std::vector<std::pair<Operator, std::size_t>> eligible_targets(
    const Trajectory& clean, const ToolRegistry& registry, const ParseOptions& parse) {
  const auto steps = call_steps(clean.messages, parse);
  const auto K = steps.size();
  auto fails_empty = [&](const std::string& name) {
    return !validate_call(ToolCall(name, Json::object()), registry).ok();
  };

  std::vector<std::pair<Operator, std::size_t>> out;
  for (std::size_t k = 0; k < K; ++k) {
    if (steps[k].calls.empty()) continue;
    if (fails_empty(next_round_name(steps, k))) out.emplace_back(Operator::order_swap, k);
    if (k > 0) out.emplace_back(Operator::redundant, k);
    if (k + 1 < K && !steps[k + 1].calls.empty() &&
        std::any_of(steps[k + 1].calls.begin(), steps[k + 1].calls.end(),
                    [&](const ToolCall& c) { return fails_empty(c.name()); })) {
      out.emplace_back(Operator::missing, k);
    }
    if (std::any_of(steps[k].calls.begin(), steps[k].calls.end(),
                    [](const ToolCall& c) { return !c.arguments().empty(); })) {
      out.emplace_back(Operator::argument, k);
    }
  }
  return out;
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(Errc::config_invalid, "perturb config: " + what);
  };
  double total = 0.0;
  for (double w : operator_mix) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail("operator_mix weights must be >= 0");
    total += w;
  }
  if (!(total > 0.0)) fail("operator_mix must have a positive weight");
  if (!(split_ratio >= 0.0 && split_ratio <= 1.0)) fail("split_ratio must be in [0,1]");
  if (!(passthrough_fraction >= 0.0 && passthrough_fraction <= 1.0)) {
    fail("passthrough_fraction must be in [0,1]");
  }
  if (items_per_trajectory == 0) fail("items_per_trajectory must be >= 1");
}

Json PipelineReject::to_json() const {
  Json out{{"source_id", source_id}, {"reasons", reasons}};
  if (!item_id.empty()) out["item_id"] = item_id;
  if (!message.empty()) out["message"] = message;
  return out;
}

PipelineOutput run_pipeline(const Trajectory& clean, const PipelineConfig& config,
                            const ToolRegistry& registry, ReflectionWriter* writer,
                            const ParseOptions& parse) {
  PipelineOutput out;
  const std::string& source = clean.id;
  const std::uint64_t source_seed = mix_seed(config.seed, fnv1a(source));

  if (uniform01(mix_seed(source_seed, fnv1a("passthrough"))) <
      config.passthrough_fraction) {
    out.passthrough = clean;
  }

  std::vector<std::pair<Operator, std::size_t>> targets;
  try {
    targets = eligible_targets(clean, registry, parse);
  } catch (const Error& e) {
    out.rejects.push_back({source, "", {"invalid_trajectory"}, e.what()});
    return out;
  }
  std::erase_if(targets, [&](const auto& t) {
    return !(config.operator_mix[static_cast<std::size_t>(t.first)] > 0.0);
  });
  if (targets.empty()) {
    out.rejects.push_back({source, "", {"no_eligible_target"}, ""});
    return out;
  }

  std::mt19937_64 rng(source_seed);
  std::vector<std::pair<Operator, std::size_t>> chosen;
  while (chosen.size() < config.items_per_trajectory && !targets.empty()) {
    double total = 0.0;
    for (const auto& t : targets) total += config.operator_mix[static_cast<std::size_t>(t.first)];
    double u = uniform01(rng) * total;
    std::size_t pick = targets.size() - 1;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      u -= config.operator_mix[static_cast<std::size_t>(targets[i].first)];
      if (u < 0.0) {
        pick = i;
        break;
      }
    }
    chosen.push_back(targets[pick]);
    targets.erase(targets.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  std::sort(chosen.begin(), chosen.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });

  PackageOptions options;
  options.perturb.registry = &registry;
  options.perturb.parse = parse;
  options.writer = writer;
  for (const auto& [op, k] : chosen) {
    PerturbationSpec spec{op, k, mix_seed(source_seed, static_cast<std::uint64_t>(k))};
    const std::string item_id =
        source + ":" + std::string(operator_name(op)) + ":" + std::to_string(k);
    try {
      auto item = package_item(clean, spec, options);
      auto verdict = validate_item(item, registry, parse);
      if (!is_negative(item, registry, parse)) verdict.reasons.push_back("not_negative");
      if (!verdict.reasons.empty()) {
        out.rejects.push_back({source, item_id, verdict.reasons, ""});
        continue;
      }
      const bool to_test =
          uniform01(mix_seed(config.seed ^ 0x73706c6974ULL, fnv1a(item_id))) <
          config.split_ratio;
      (to_test ? out.test : out.train).push_back(std::move(item));
    } catch (const Error& e) {
      out.rejects.push_back({source, item_id, {std::string(errc_name(e.code()))}, e.what()});
    }
  }
  return out;
}

}  // namespace toolreflect
