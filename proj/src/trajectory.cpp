#include "toolreflect/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "toolreflect/error.hpp"

namespace toolreflect {

namespace {

enum class TagKind { reflect, call, final_answer };

struct TagMatch {
  TagKind kind;
  std::string_view name;
  bool closing;
  std::size_t length;
};

bool starts_with_at(std::string_view text, std::size_t pos,
                    std::string_view prefix) {
  return text.size() - pos >= prefix.size() &&
         text.compare(pos, prefix.size(), prefix) == 0;
}

std::optional<TagMatch> match_tag(std::string_view text, std::size_t pos,
                                  TagKind kind, std::string_view name) {
  // text[pos] == '<'
  std::size_t cursor = pos + 1;
  bool closing = false;
  if (cursor < text.size() && text[cursor] == '/') {
    closing = true;
    ++cursor;
  }
  if (!starts_with_at(text, cursor, name)) return std::nullopt;
  cursor += name.size();
  if (cursor >= text.size() || text[cursor] != '>') return std::nullopt;
  return TagMatch{kind, name, closing, cursor + 1 - pos};
}

std::optional<TagMatch> find_tag(std::string_view text, std::size_t pos,
                                 const ParseOptions& options) {
  if (auto m = match_tag(text, pos, TagKind::reflect, "reflect")) return m;
  if (auto m = match_tag(text, pos, TagKind::final_answer, "final")) return m;
  for (const auto& alias : options.call_tags) {
    if (alias.empty()) continue;
    if (auto m = match_tag(text, pos, TagKind::call, alias)) return m;
  }
  return std::nullopt;
}

[[noreturn]] void malformed_tag(const std::string& what, std::size_t pos) {
  throw Error(Errc::malformed_tag,
              what + " at offset " + std::to_string(pos));
}

[[noreturn]] void malformed_calls(const std::string& what) {
  throw Error(Errc::malformed_call_json, "call block: " + what);
}

void append_calls(std::string_view body, std::vector<ToolCall>& out) {
  Json parsed = Json::parse(body.begin(), body.end(), nullptr,
                            /*allow_exceptions=*/false);
  if (parsed.is_discarded()) malformed_calls("body is not valid JSON");
  if (!parsed.is_array()) malformed_calls("body is not a JSON array");
  for (const auto& entry : parsed) {
    if (!entry.is_object()) malformed_calls("entry is not an object");
    if (entry.size() != 2 || !entry.contains("name") ||
        !entry.contains("arguments")) {
      malformed_calls("entry must have exactly the keys name and arguments");
    }
    const auto& name = entry.at("name");
    const auto& arguments = entry.at("arguments");
    if (!name.is_string() || name.get_ref<const std::string&>().empty()) {
      malformed_calls("name must be a non-empty string");
    }
    if (!arguments.is_object()) malformed_calls("arguments must be an object");
    out.emplace_back(name.get<std::string>(), arguments);
  }
}

}  // namespace

std::string_view role_name(Role role) noexcept {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::tool: return "tool";
  }
  return "user";
}

Role parse_role(std::string_view name) {
  if (name == "system") return Role::system;
  if (name == "user") return Role::user;
  if (name == "assistant") return Role::assistant;
  if (name == "tool") return Role::tool;
  throw Error(Errc::invalid_argument,
              "unknown message role '" + std::string(name) + "'");
}

ToolCall::ToolCall(std::string name, Json arguments)
    : name_(std::move(name)), arguments_(std::move(arguments)) {
  if (name_.empty()) {
    throw Error(Errc::invalid_argument, "tool call name is empty");
  }
  if (!arguments_.is_object()) {
    throw Error(Errc::invalid_argument,
                "tool call arguments must be a JSON object");
  }
}

Json ToolCall::to_json() const {
  return Json{{"name", name_}, {"arguments", arguments_}};
}

ParsedCompletion parse_completion(std::string_view text,
                                  const ParseOptions& options) {
  ParsedCompletion out;
  std::optional<TagMatch> open;
  std::size_t content_start = 0;
  std::size_t open_pos = 0;

  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] != '<') {
      ++pos;
      continue;
    }
    auto tag = find_tag(text, pos, options);
    if (!tag) {
      ++pos;
      continue;
    }
    if (!tag->closing) {
      if (open) malformed_tag("nested <" + std::string(tag->name) + ">", pos);
      open = tag;
      open_pos = pos;
      content_start = pos + tag->length;
    } else {
      if (!open) {
        malformed_tag("unmatched </" + std::string(tag->name) + ">", pos);
      }
      if (open->kind != tag->kind || open->name != tag->name) {
        malformed_tag("</" + std::string(tag->name) + "> closes <" +
                          std::string(open->name) + ">",
                      pos);
      }
      std::string_view body = text.substr(content_start, pos - content_start);
      switch (tag->kind) {
        case TagKind::reflect:
          if (out.reflection) malformed_tag("duplicate <reflect>", open_pos);
          out.reflection = std::string(body);
          break;
        case TagKind::final_answer:
          if (out.final_answer) malformed_tag("duplicate <final>", open_pos);
          out.final_answer = std::string(body);
          break;
        case TagKind::call:
          append_calls(body, out.calls);
          out.has_call_block = true;
          break;
      }
      open.reset();
    }
    pos += tag->length;
  }
  if (open) malformed_tag("unclosed <" + std::string(open->name) + ">", open_pos);
  return out;
}

std::string render_calls(std::span<const ToolCall> calls) {
  Json list = Json::array();
  for (const auto& call : calls) list.push_back(call.to_json());
  return dump_compact(list);
}

std::string render_completion(const ParsedCompletion& completion) {
  std::string out;
  if (completion.reflection) {
    out += "<reflect>" + *completion.reflection + "</reflect>";
  }
  if (completion.has_call_block || !completion.calls.empty()) {
    out += "<call>" + render_calls(completion.calls) + "</call>";
  }
  if (completion.final_answer) {
    out += "<final>" + *completion.final_answer + "</final>";
  }
  return out;
}

Json normalize_json(const Json& value) {
  switch (value.type()) {
    case Json::value_t::object: {
      Json out = Json::object();
      for (const auto& [key, item] : value.items()) {
        out[key] = normalize_json(item);
      }
      return out;
    }
    case Json::value_t::array: {
      Json out = Json::array();
      for (const auto& item : value) out.push_back(normalize_json(item));
      return out;
    }
    case Json::value_t::number_float: {
      const double x = value.get<double>();
      if (!std::isfinite(x) || std::trunc(x) != x) return value;
      // 2^63 and 2^64 are exact in binary64.
      constexpr double two63 = 9223372036854775808.0;
      constexpr double two64 = 18446744073709551616.0;
      if (x >= -two63 && x < two63) return Json(static_cast<std::int64_t>(x));
      if (x >= two63 && x < two64) return Json(static_cast<std::uint64_t>(x));
      return value;
    }
    case Json::value_t::number_unsigned: {
      const auto u = value.get<std::uint64_t>();
      if (u <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        return Json(static_cast<std::int64_t>(u));
      }
      return value;
    }
    default:
      return value;
  }
}

std::string canonicalize_call(const ToolCall& call) {
  Json canonical{{"name", call.name()},
                 {"arguments", normalize_json(call.arguments())}};
  return dump_compact(canonical);
}

bool equal_calls(std::span<const ToolCall> lhs, std::span<const ToolCall> rhs) {
  if (lhs.size() != rhs.size()) return false;
  auto canonical = [](std::span<const ToolCall> calls) {
    std::vector<std::string> keys;
    keys.reserve(calls.size());
    for (const auto& call : calls) keys.push_back(canonicalize_call(call));
    std::sort(keys.begin(), keys.end());
    return keys;
  };
  return canonical(lhs) == canonical(rhs);
}

std::string dump_compact(const Json& value) {
  return value.dump(-1, ' ', false, Json::error_handler_t::replace);
}

Json to_json(const Message& message) {
  return Json{{"role", role_name(message.role)}, {"content", message.content}};
}

Message message_from_json(const Json& value) {
  if (!value.is_object() || !value.contains("role") ||
      !value.contains("content")) {
    throw Error(Errc::invalid_argument,
                "message must be an object with role and content");
  }
  const auto& role = value.at("role");
  const auto& content = value.at("content");
  if (!role.is_string()) {
    throw Error(Errc::invalid_argument, "message role must be a string");
  }
  if (!content.is_string()) {
    throw Error(Errc::invalid_argument, "message content must be a string");
  }
  return Message{parse_role(role.get_ref<const std::string&>()),
                 content.get<std::string>()};
}

Json to_json(std::span<const Message> messages) {
  Json out = Json::array();
  for (const auto& m : messages) out.push_back(to_json(m));
  return out;
}

std::vector<Message> messages_from_json(const Json& value) {
  if (!value.is_array()) {
    throw Error(Errc::invalid_argument, "messages must be an array");
  }
  std::vector<Message> out;
  out.reserve(value.size());
  for (const auto& m : value) out.push_back(message_from_json(m));
  return out;
}

Json to_json(const Trajectory& trajectory) {
  Json out{{"messages", to_json(std::span<const Message>(trajectory.messages))}};
  if (!trajectory.id.empty()) out["id"] = trajectory.id;
  return out;
}

Trajectory trajectory_from_json(const Json& value, const ParseOptions& options) {
  if (!value.is_object() || !value.contains("messages")) {
    throw Error(Errc::invalid_argument, "trajectory must have a messages array");
  }
  Trajectory out;
  if (auto it = value.find("id"); it != value.end()) {
    if (it->is_string()) {
      out.id = it->get<std::string>();
    } else if (it->is_number_integer()) {
      out.id = it->dump();
    } else {
      throw Error(Errc::invalid_argument, "trajectory id must be a string");
    }
  }
  out.messages = messages_from_json(value.at("messages"));
  check_trajectory(out, options);
  return out;
}

void check_trajectory(const Trajectory& trajectory,
                      const ParseOptions& options) {
  const auto& msgs = trajectory.messages;
  if (!msgs.empty() && msgs[0].role != Role::system) {
    throw Error(Errc::invalid_argument, "first message must be system");
  }
  if (msgs.size() >= 2 && msgs[1].role != Role::user) {
    throw Error(Errc::invalid_argument, "second message must be user");
  }
  for (std::size_t i = 0; i < msgs.size(); ++i) {
    if (msgs[i].role != Role::tool) continue;
    const bool ok = i > 0 && msgs[i - 1].role == Role::assistant &&
                    parse_completion(msgs[i - 1].content, options).has_call_block;
    if (!ok) {
      throw Error(Errc::invalid_argument,
                  "tool message " + std::to_string(i) +
                      " does not follow an assistant call");
    }
  }
}

std::vector<CallStep> call_steps(std::span<const Message> messages,
                                 const ParseOptions& options) {
  std::vector<CallStep> steps;
  for (std::size_t i = 0; i + 1 < messages.size(); ++i) {
    if (messages[i].role != Role::assistant ||
        messages[i + 1].role != Role::tool) {
      continue;
    }
    auto parsed = parse_completion(messages[i].content, options);
    if (!parsed.has_call_block) continue;
    steps.push_back(CallStep{i, i + 1, std::move(parsed.calls)});
  }
  return steps;
}

std::vector<ToolCall> collect_calls(std::span<const Message> messages,
                                    const ParseOptions& options) {
  std::vector<ToolCall> out;
  for (const auto& m : messages) {
    if (m.role != Role::assistant) continue;
    auto parsed = parse_completion(m.content, options);
    for (auto& call : parsed.calls) out.push_back(std::move(call));
  }
  return out;
}

}  // namespace toolreflect
