#include "toolreflect/schema.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "toolreflect/error.hpp"

namespace toolreflect {

namespace {

[[noreturn]] void bad_schema(const std::string& what) {
  throw Error(Errc::invalid_argument, "tool schema: " + what);
}

ParamType parse_param_type(const Json& value) {
  if (!value.is_string()) bad_schema("param type must be a string");
  const auto& s = value.get_ref<const std::string&>();
  if (s == "string") return ParamType::string;
  if (s == "number") return ParamType::number;
  if (s == "integer") return ParamType::integer;
  if (s == "boolean") return ParamType::boolean;
  if (s == "object") return ParamType::object;
  if (s == "array") return ParamType::array;
  bad_schema("unknown param type '" + s + "'");
}

bool type_matches(const Json& value, ParamType type) {
  switch (type) {
    case ParamType::string: return value.is_string();
    case ParamType::number: return value.is_number();
    case ParamType::integer:
      if (value.is_number_integer()) return true;
      if (value.is_number_float()) {
        const double x = value.get<double>();
        return std::isfinite(x) && std::trunc(x) == x;
      }
      return false;
    case ParamType::boolean: return value.is_boolean();
    case ParamType::object: return value.is_object();
    case ParamType::array: return value.is_array();
  }
  return false;
}

ExecReport failure(ExecCode code, std::string message) {
  return ExecReport{ExecStatus::error, code, std::move(message)};
}

}  // namespace

std::string_view param_type_name(ParamType type) noexcept {
  switch (type) {
    case ParamType::string: return "string";
    case ParamType::number: return "number";
    case ParamType::integer: return "integer";
    case ParamType::boolean: return "boolean";
    case ParamType::object: return "object";
    case ParamType::array: return "array";
  }
  return "string";
}

std::string_view exec_code_name(ExecCode code) noexcept {
  switch (code) {
    case ExecCode::missing_required: return "MISSING_REQUIRED";
    case ExecCode::invalid_parameters: return "INVALID_PARAMETERS";
    case ExecCode::unknown_tool: return "UNKNOWN_TOOL";
    case ExecCode::unknown_parameter: return "UNKNOWN_PARAMETER";
  }
  return "INVALID_PARAMETERS";
}

Json ExecReport::to_json() const {
  Json out{{"status", ok() ? "ok" : "error"}, {"message", message}};
  if (code) out["error_code"] = exec_code_name(*code);
  return out;
}

ToolRegistry::ToolRegistry(std::vector<ToolSchema> tools) {
  for (auto& tool : tools) {
    if (tool.name.empty()) bad_schema("tool name is empty");
    auto name = tool.name;
    if (!tools_.emplace(name, std::move(tool)).second) {
      bad_schema("duplicate tool '" + name + "'");
    }
  }
}

ToolRegistry ToolRegistry::from_json(const Json& value) {
  if (!value.is_array()) bad_schema("file must hold a JSON array");
  std::vector<ToolSchema> tools;
  for (const auto& entry : value) {
    if (!entry.is_object() || !entry.contains("name") ||
        !entry.at("name").is_string()) {
      bad_schema("each tool needs a string name");
    }
    ToolSchema tool;
    tool.name = entry.at("name").get<std::string>();
    const Json params = entry.value("params", Json::array());
    if (!params.is_array()) bad_schema(tool.name + ": params must be an array");
    for (const auto& p : params) {
      if (!p.is_object() || !p.contains("name") || !p.at("name").is_string() ||
          !p.contains("type")) {
        bad_schema(tool.name + ": each param needs a name and a type");
      }
      const auto pname = p.at("name").get<std::string>();
      if (pname.empty()) bad_schema(tool.name + ": empty param name");
      ParamSpec spec;
      spec.type = parse_param_type(p.at("type"));
      if (auto it = p.find("required"); it != p.end()) {
        if (!it->is_boolean()) bad_schema(pname + ": required must be boolean");
        spec.required = it->get<bool>();
      }
      if (auto it = p.find("enum"); it != p.end()) {
        if (!it->is_array() || it->empty()) {
          bad_schema(pname + ": enum must be a non-empty array");
        }
        spec.enum_values = it->get<std::vector<Json>>();
      }
      if (auto it = p.find("range"); it != p.end()) {
        if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() ||
            !(*it)[1].is_number() ||
            (*it)[0].get<double>() > (*it)[1].get<double>()) {
          bad_schema(pname + ": range must be [min, max]");
        }
        spec.range = std::make_pair((*it)[0].get<double>(), (*it)[1].get<double>());
      }
      spec.nonempty = spec.required && spec.type == ParamType::string;
      if (auto it = p.find("nonempty"); it != p.end()) {
        if (!it->is_boolean()) bad_schema(pname + ": nonempty must be boolean");
        spec.nonempty = it->get<bool>();
      }
      if (!tool.params.emplace(pname, std::move(spec)).second) {
        bad_schema(tool.name + ": duplicate param '" + pname + "'");
      }
    }
    tools.push_back(std::move(tool));
  }
  return ToolRegistry(std::move(tools));
}

ToolRegistry ToolRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read schema " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  Json parsed = Json::parse(buffer.str(), nullptr, false);
  if (parsed.is_discarded()) {
    throw Error(Errc::invalid_argument, "schema " + path.string() + " is not JSON");
  }
  return from_json(parsed);
}

const ToolSchema* ToolRegistry::find(std::string_view name) const {
  auto it = tools_.find(name);
  return it == tools_.end() ? nullptr : &it->second;
}

Json ToolRegistry::to_json() const {
  Json out = Json::array();
  for (const auto& [name, tool] : tools_) {
    Json params = Json::array();
    for (const auto& [pname, spec] : tool.params) {
      Json p{{"name", pname},
             {"type", param_type_name(spec.type)},
             {"required", spec.required},
             {"nonempty", spec.nonempty}};
      if (spec.enum_values) p["enum"] = *spec.enum_values;
      if (spec.range) p["range"] = {spec.range->first, spec.range->second};
      params.push_back(std::move(p));
    }
    out.push_back(Json{{"name", name}, {"params", std::move(params)}});
  }
  return out;
}

bool value_matches(const Json& value, const ParamSpec& spec) {
  if (!type_matches(value, spec.type)) return false;
  if (spec.enum_values) {
    bool found = false;
    for (const auto& allowed : *spec.enum_values) found = found || allowed == value;
    if (!found) return false;
  }
  if (spec.range && value.is_number()) {
    const double x = value.get<double>();
    if (x < spec.range->first || x > spec.range->second) return false;
  }
  if (spec.nonempty && value.is_string() &&
      value.get_ref<const std::string&>().empty()) {
    return false;
  }
  return true;
}

ExecReport validate_call(const ToolCall& call, const ToolRegistry& registry) {
  const ToolSchema* tool = registry.find(call.name());
  if (!tool) {
    return failure(ExecCode::unknown_tool, "Unknown tool " + call.name() + ".");
  }
  const auto& args = call.arguments();

  std::string missing;
  for (const auto& [name, spec] : tool->params) {
    if (spec.required && !args.contains(name)) {
      missing += (missing.empty() ? "" : ", ") + name;
    }
  }
  if (!missing.empty()) {
    return failure(ExecCode::missing_required,
                   "Missing required arguments for " + call.name() + ": " +
                       missing + ".");
  }

  for (const auto& [key, value] : args.items()) {
    if (!tool->params.count(key)) {
      return failure(ExecCode::unknown_parameter,
                     "Unknown parameter " + key + " for " + call.name() + ".");
    }
  }

  for (const auto& [key, value] : args.items()) {
    if (!value_matches(value, tool->params.at(key))) {
      return failure(ExecCode::invalid_parameters,
                     "Parameter validation failed for " + call.name() +
                         ". One or more arguments are invalid.");
    }
  }
  return ExecReport{ExecStatus::ok, std::nullopt, "ok"};
}

}  // namespace toolreflect
