#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace toolreflect {

using Json = nlohmann::json;

enum class Role { system, user, assistant, tool };

std::string_view role_name(Role role) noexcept;
/// Throws Error(invalid_argument) for anything but the four role names.
Role parse_role(std::string_view name);

struct Message {
  Role role = Role::user;
  std::string content;

  friend bool operator==(const Message&, const Message&) = default;
};

/// A multi-turn dialog: system, user, then alternating assistant calls and
/// tool replies, usually closing with an assistant final answer.
struct Trajectory {
  std::string id;  // empty when the source record carries none
  std::vector<Message> messages;
};

class ToolCall {
 public:
  /// Throws Error(invalid_argument) when name is empty or arguments is not
  /// a JSON object.
  ToolCall(std::string name, Json arguments);

  const std::string& name() const noexcept { return name_; }
  const Json& arguments() const noexcept { return arguments_; }

  /// {"arguments": ..., "name": ...}
  Json to_json() const;

  friend bool operator==(const ToolCall& a, const ToolCall& b) {
    return a.name_ == b.name_ && a.arguments_ == b.arguments_;
  }

 private:
  std::string name_;
  Json arguments_;
};

/// Decomposition of an assistant completion into reflection, calls and final
/// answer. An absent part (no tag pair) is distinct from a present empty one.
struct ParsedCompletion {
  std::optional<std::string> reflection;
  std::vector<ToolCall> calls;  // concatenation of every call block, in order
  std::optional<std::string> final_answer;
  bool has_call_block = false;

  friend bool operator==(const ParsedCompletion&,
                         const ParsedCompletion&) = default;
};

struct ParseOptions {
  /// Tag names accepted for call blocks, e.g. {"call", "tool_call"}.
  std::vector<std::string> call_tags{"call"};
};

/// Strict tag parser. Throws Error(malformed_tag) on unbalanced, nested,
/// mismatched or duplicated reflect/final tags, and Error(malformed_call_json)
/// when a call block is not a JSON array of {name, arguments} objects.
ParsedCompletion parse_completion(std::string_view text,
                                  const ParseOptions& options = {});

/// Inverse of parse_completion for well-formed parts: reflect, call, final.
std::string render_completion(const ParsedCompletion& completion);

/// Renders a call list the way it appears inside a call block.
std::string render_calls(std::span<const ToolCall> calls);

/// Recursively normalizes a JSON value: integral floats become integers and
/// -0.0 becomes 0. Object keys are already ordered by the JSON type.
Json normalize_json(const Json& value);

/// Deterministic compact serialization with sorted keys and normalized
/// numbers. Two calls are deep-equal iff their canonical strings match.
std::string canonicalize_call(const ToolCall& call);

/// Order-invariant multiset equality on calls (identical names, deep-equal
/// arguments under a one-to-one matching).
bool equal_calls(std::span<const ToolCall> lhs, std::span<const ToolCall> rhs);

/// Serialization for dumping to JSONL; never throws on invalid UTF-8.
std::string dump_compact(const Json& value);

Json to_json(const Message& message);
Message message_from_json(const Json& value);
Json to_json(std::span<const Message> messages);
std::vector<Message> messages_from_json(const Json& value);

Json to_json(const Trajectory& trajectory);
/// Parses {"id"?: ..., "messages": [...]} and checks the trajectory
/// invariants. Throws Error(invalid_argument).
Trajectory trajectory_from_json(const Json& value,
                                const ParseOptions& options = {});

/// Throws Error(invalid_argument) unless the first message is system, the
/// second user, and every tool message follows an assistant message holding
/// at least one call block.
void check_trajectory(const Trajectory& trajectory,
                      const ParseOptions& options = {});

/// One assistant call and the tool reply that immediately follows it.
struct CallStep {
  std::size_t call_index = 0;   // index of the assistant message
  std::size_t reply_index = 0;  // index of the tool message
  std::vector<ToolCall> calls;
};

/// Locates every call step in message order. Assistant messages with a call
/// block that are not followed by a tool reply are not steps.
std::vector<CallStep> call_steps(std::span<const Message> messages,
                                 const ParseOptions& options = {});

/// All calls issued by assistant messages, in order.
std::vector<ToolCall> collect_calls(std::span<const Message> messages,
                                    const ParseOptions& options = {});

}  // namespace toolreflect
