#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "toolreflect/trajectory.hpp"

namespace toolreflect {

enum class ParamType { string, number, integer, boolean, object, array };

std::string_view param_type_name(ParamType type) noexcept;

struct ParamSpec {
  ParamType type = ParamType::string;
  bool required = false;
  std::optional<std::vector<Json>> enum_values;
  std::optional<std::pair<double, double>> range;  // inclusive
  /// Strings only; defaults to true for required string params.
  bool nonempty = false;
};

struct ToolSchema {
  std::string name;
  std::map<std::string, ParamSpec> params;
};

enum class ExecStatus { ok, error };

enum class ExecCode {
  missing_required,
  invalid_parameters,
  unknown_tool,
  unknown_parameter,
};

std::string_view exec_code_name(ExecCode code) noexcept;

struct ExecReport {
  ExecStatus status = ExecStatus::ok;
  std::optional<ExecCode> code;
  std::string message;

  bool ok() const noexcept { return status == ExecStatus::ok; }
  /// Tool-reply style payload, e.g. {"status":"error","error_code":...}.
  Json to_json() const;
};

/// Immutable set of tool schemas keyed by name.
class ToolRegistry {
 public:
  ToolRegistry() = default;
  /// Throws Error(invalid_argument) on empty or duplicate names.
  explicit ToolRegistry(std::vector<ToolSchema> tools);

  /// Parses a JSON array of
  /// {"name", "params":[{"name","type","required"?,"enum"?,"range"?,"nonempty"?}]}.
  static ToolRegistry from_json(const Json& value);
  /// Throws Error(io_error) when the file cannot be read.
  static ToolRegistry load(const std::filesystem::path& path);

  const ToolSchema* find(std::string_view name) const;
  bool empty() const noexcept { return tools_.empty(); }
  std::size_t size() const noexcept { return tools_.size(); }
  const std::map<std::string, ToolSchema, std::less<>>& tools() const noexcept {
    return tools_;
  }

  Json to_json() const;

 private:
  std::map<std::string, ToolSchema, std::less<>> tools_;
};

/// Does `value` satisfy type, enum, range and nonempty constraints?
bool value_matches(const Json& value, const ParamSpec& spec);

/// Mock execution: checks, in order, unknown tool, missing required params,
/// unknown params, then per-value constraints.
ExecReport validate_call(const ToolCall& call, const ToolRegistry& registry);

}  // namespace toolreflect
