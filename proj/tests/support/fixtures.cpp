#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "toolreflect/rng.hpp"

namespace fixtures {

using toolreflect::Json;
using toolreflect::ToolCall;
using toolreflect::uniform_index;

Json schema_json() {
  return Json::parse(R"([
    {"name": "search_flights", "params": [
      {"name": "origin", "type": "string", "required": true},
      {"name": "destination", "type": "string", "required": true},
      {"name": "date", "type": "string", "required": true},
      {"name": "max_stops", "type": "integer", "range": [0, 3]}]},
    {"name": "book_flight", "params": [
      {"name": "flight_id", "type": "string", "required": true},
      {"name": "passengers", "type": "integer", "required": true, "range": [1, 9]},
      {"name": "cabin", "type": "string", "enum": ["economy", "business", "first"]}]},
    {"name": "get_weather", "params": [
      {"name": "city", "type": "string", "required": true},
      {"name": "units", "type": "string", "enum": ["metric", "imperial"]}]},
    {"name": "convert_currency", "params": [
      {"name": "amount", "type": "number", "required": true, "range": [0, 1000000]},
      {"name": "from", "type": "string", "required": true},
      {"name": "to", "type": "string", "required": true}]},
    {"name": "get_user", "params": [
      {"name": "user_id", "type": "integer", "required": true, "range": [1, 100000]}]},
    {"name": "send_email", "params": [
      {"name": "to", "type": "string", "required": true},
      {"name": "subject", "type": "string", "required": true},
      {"name": "body", "type": "string", "required": true},
      {"name": "cc", "type": "array"}]},
    {"name": "create_event", "params": [
      {"name": "title", "type": "string", "required": true},
      {"name": "start", "type": "string", "required": true},
      {"name": "duration_min", "type": "integer", "required": true, "range": [5, 600]},
      {"name": "attendees", "type": "array"}]},
    {"name": "lookup_stock", "params": [
      {"name": "symbol", "type": "string", "required": true},
      {"name": "exchange", "type": "string", "enum": ["NYSE", "NASDAQ", "LSE"]}]},
    {"name": "translate", "params": [
      {"name": "text", "type": "string", "required": true},
      {"name": "target_lang", "type": "string", "required": true,
       "enum": ["en", "fr", "de", "es", "zh"]}]},
    {"name": "search_restaurants", "params": [
      {"name": "city", "type": "string", "required": true},
      {"name": "cuisine", "type": "string"},
      {"name": "max_price", "type": "integer", "range": [1, 4]},
      {"name": "open_now", "type": "boolean"}]},
    {"name": "set_reminder", "params": [
      {"name": "text", "type": "string", "required": true},
      {"name": "minutes", "type": "integer", "required": true, "range": [1, 10080]},
      {"name": "repeat", "type": "boolean"}]},
    {"name": "get_route", "params": [
      {"name": "start", "type": "string", "required": true},
      {"name": "end", "type": "string", "required": true},
      {"name": "mode", "type": "string", "enum": ["driving", "walking", "transit"]},
      {"name": "avoid", "type": "object"}]}
  ])");
}

toolreflect::ToolRegistry registry() {
  return toolreflect::ToolRegistry::from_json(schema_json());
}

namespace {

const std::vector<std::string> kWords = {
    "Paris", "Berlin", "Tokyo", "Lima", "Oslo", "Cairo", "Denver", "Quito",
    "status report", "quarterly review", "team lunch", "dentist", "hello world",
    "alice@example.com", "bob@example.com", "AAPL", "MSFT", "USD", "EUR", "JPY"};

Json random_value(const toolreflect::ParamSpec& spec, std::mt19937_64& rng) {
  using toolreflect::ParamType;
  if (spec.enum_values) {
    return (*spec.enum_values)[uniform_index(rng, spec.enum_values->size())];
  }
  switch (spec.type) {
    case ParamType::string: return kWords[uniform_index(rng, kWords.size())];
    case ParamType::integer: {
      const auto lo = static_cast<std::int64_t>(spec.range ? spec.range->first : 0);
      const auto hi = static_cast<std::int64_t>(spec.range ? spec.range->second : 1000);
      return lo + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
    }
    case ParamType::number: {
      const double hi = spec.range ? std::min(spec.range->second, 5000.0) : 5000.0;
      return std::round(toolreflect::uniform01(rng) * hi * 100.0) / 100.0;
    }
    case ParamType::boolean: return uniform_index(rng, 2) == 1;
    case ParamType::array: return Json::array({kWords[uniform_index(rng, kWords.size())]});
    case ParamType::object: return Json{{"tolls", uniform_index(rng, 2) == 1}};
  }
  return nullptr;
}

}  // namespace

ToolCall random_call(const toolreflect::ToolRegistry& reg, const std::string& tool,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto* schema = reg.find(tool);
  Json args = Json::object();
  for (const auto& [name, spec] : schema->params) {
    if (spec.required || uniform_index(rng, 2) == 0) args[name] = random_value(spec, rng);
  }
  return ToolCall(tool, args);
}

toolreflect::Trajectory trajectory(std::uint64_t seed, std::size_t index) {
  using toolreflect::Message;
  using toolreflect::Role;
  static const toolreflect::ToolRegistry reg = registry();
  std::vector<std::string> names;
  for (const auto& [name, schema] : reg.tools()) names.push_back(name);

  const std::uint64_t base = toolreflect::mix_seed(seed, index);
  std::mt19937_64 rng(base);
  toolreflect::Trajectory t;
  char id[32];
  std::snprintf(id, sizeof id, "traj-%04zu", index);
  t.id = id;
  t.messages.push_back({Role::system, "You are a helpful assistant with tool access."});
  t.messages.push_back({Role::user, "Please help me plan task number " + std::to_string(index) + "."});

  const std::size_t steps = 2 + uniform_index(rng, 4);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t count = 1 + uniform_index(rng, 2);
    std::vector<ToolCall> calls;
    std::vector<std::string> pool = names;
    for (std::size_t c = 0; c < count; ++c) {
      const auto pick = uniform_index(rng, pool.size());
      calls.push_back(random_call(reg, pool[pick], rng()));
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    std::string prefix = uniform_index(rng, 3) == 0 ? "Let me check that. " : "";
    t.messages.push_back({Role::assistant,
                          prefix + "<call>" + toolreflect::render_calls(calls) + "</call>"});
    Json reply;
    if (calls.size() == 1) {
      reply = Json{{"status", "ok"}, {"result", {{"value", uniform_index(rng, 1000)}}}};
    } else {
      reply = Json::array();
      for (const auto& c : calls) {
        reply.push_back(Json{{"tool", c.name()}, {"status", "ok"},
                             {"result", {{"value", uniform_index(rng, 1000)}}}});
      }
    }
    t.messages.push_back({Role::tool, toolreflect::dump_compact(reply)});
  }
  t.messages.push_back({Role::assistant, "<final>All " + std::to_string(steps) +
                                             " steps completed for task " +
                                             std::to_string(index) + ".</final>"});
  return t;
}

std::vector<toolreflect::Trajectory> corpus(std::size_t count, std::uint64_t seed) {
  std::vector<toolreflect::Trajectory> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(trajectory(seed, i));
  return out;
}

std::vector<Json> score_records(std::size_t count, std::uint64_t seed) {
  using toolreflect::ParsedCompletion;
  using toolreflect::render_completion;
  std::mt19937_64 rng(toolreflect::mix_seed(seed, 0x73636f7265));
  const auto traj = corpus(count / 3 + 1, seed);
  std::vector<Json> out;
  const std::vector<std::string> notes = {"the date was malformed", "wrong tool was called first",
                                          "a required argument was missing", ""};
  for (std::size_t i = 0; out.size() < count; ++i) {
    const auto& t = traj[i % traj.size()];
    const auto steps = toolreflect::call_steps(t.messages);
    const auto& step = steps[uniform_index(rng, steps.size())];

    ParsedCompletion gt;
    gt.reflection = notes[uniform_index(rng, notes.size() - 1)];
    gt.calls = step.calls;
    gt.has_call_block = true;
    if (uniform_index(rng, 4) == 0) gt.final_answer = "Done with task " + std::to_string(i) + ".";

    ParsedCompletion c = gt;
    switch (uniform_index(rng, 7)) {
      case 0: break;
      case 1: std::reverse(c.calls.begin(), c.calls.end()); break;
      case 2: {
        Json args = c.calls[0].arguments();
        args["unexpected"] = 1;
        c.calls[0] = ToolCall(c.calls[0].name(), args);
        break;
      }
      case 3: c.reflection.reset(); break;
      case 4: c.final_answer = "Something else entirely."; break;
      case 5: c.calls.push_back(c.calls.front()); break;
      case 6:
        c.calls.clear();
        c.has_call_block = false;
        c.reflection = notes[uniform_index(rng, notes.size())];
        break;
    }
    out.push_back(Json{{"id", "s" + std::to_string(out.size())},
                       {"completion", render_completion(c)},
                       {"ground_truth", render_completion(gt)}});
  }
  return out;
}

std::vector<Json> rollout_groups(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(toolreflect::mix_seed(seed, 0x67726f7570));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Json> out;
  for (std::size_t g = 0; g < count; ++g) {
    const bool flat = uniform_index(rng, 6) == 0;
    Json rewards = Json::array(), logp_new = Json::array(), logp_old = Json::array();
    for (int i = 0; i < 8; ++i) {
      rewards.push_back(flat ? 0.5 : std::round(unit(rng) * 1000) / 1000);
      Json n = Json::array(), o = Json::array();
      for (std::size_t t = 1 + uniform_index(rng, 24); t > 0; --t) {
        const double old = -3.0 * unit(rng);
        o.push_back(old);
        n.push_back(std::min(0.0, old + 0.6 * unit(rng) - 0.3));
      }
      logp_new.push_back(std::move(n));
      logp_old.push_back(std::move(o));
    }
    out.push_back(Json{{"group_id", "g" + std::to_string(g)},
                       {"rewards", std::move(rewards)},
                       {"logp_new", std::move(logp_new)},
                       {"logp_old", std::move(logp_old)}});
  }
  return out;
}

std::vector<std::string> candidates(const toolreflect::BenchItem& item) {
  using toolreflect::ParsedCompletion;
  using toolreflect::render_completion;
  ParsedCompletion good;
  good.reflection = item.reflection;
  good.calls = item.corrected_call;
  good.has_call_block = true;

  ParsedCompletion renamed = good;
  renamed.calls[0] = ToolCall(renamed.calls[0].name() + "_v2", renamed.calls[0].arguments());
  ParsedCompletion extra_arg = good;
  Json args = extra_arg.calls[0].arguments();
  args["__bogus"] = true;
  extra_arg.calls[0] = ToolCall(extra_arg.calls[0].name(), args);
  ParsedCompletion silent = good;
  silent.reflection.reset();
  ParsedCompletion dropped = good;
  dropped.calls.pop_back();
  if (dropped.calls.empty()) dropped.has_call_block = false;

  return {render_completion(good), render_completion(renamed), render_completion(extra_arg),
          render_completion(silent), render_completion(dropped)};
}

std::vector<std::string> scripted_attempts(const toolreflect::BenchItem& item, std::size_t n,
                                           std::mt19937_64& rng) {
  const auto pool = candidates(item);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(pool[uniform_index(rng, pool.size())]);
  return out;
}

}  // namespace fixtures
