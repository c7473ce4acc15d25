#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "support/fixtures.hpp"
#include "toolreflect/error.hpp"
#include "toolreflect/schema.hpp"

using namespace toolreflect;

namespace {

ToolRegistry flights() {
  return ToolRegistry::from_json(Json::parse(R"([
    {"name": "bookFlight", "params": [
      {"name": "from", "type": "string", "required": true},
      {"name": "to", "type": "string", "required": true},
      {"name": "date", "type": "string", "required": true},
      {"name": "passengers", "type": "integer", "required": true, "range": [1, 9]},
      {"name": "cabin", "type": "string", "enum": ["economy", "business"]},
      {"name": "note", "type": "string"}]}
  ])"));
}

std::optional<ExecCode> code(const char* name, const char* args, const ToolRegistry& reg) {
  return validate_call(ToolCall(name, Json::parse(args)), reg).code;
}

}  // namespace

TEST_CASE("correct booking executes") {
  const auto reg = flights();
  auto report = validate_call(
      ToolCall("bookFlight", Json::parse(R"({"from":"SFO","to":"JFK","date":"2025-11-02","passengers":1})")),
      reg);
  CHECK(report.ok());
  CHECK_FALSE(report.code.has_value());
}

TEST_CASE("corrupted booking is rejected with the validation message") {
  const auto reg = flights();
  auto report = validate_call(
      ToolCall("bookFlight", Json::parse(R"({"from":999999,"to":"","date":null,"passengers":"many"})")),
      reg);
  CHECK(report.status == ExecStatus::error);
  CHECK(report.code == ExecCode::invalid_parameters);
  CHECK(report.message ==
        "Parameter validation failed for bookFlight. One or more arguments are invalid.");
  CHECK(report.to_json()["error_code"] == "INVALID_PARAMETERS");
}

TEST_CASE("check order") {
  const auto reg = flights();
  CHECK(code("bookTrain", "{}", reg) == ExecCode::unknown_tool);
  CHECK(code("bookFlight", "{}", reg) == ExecCode::missing_required);
  CHECK(code("bookFlight", R"({"from":"A","to":"B","date":"d","passengers":1,"x":1})", reg) ==
        ExecCode::unknown_parameter);
  // Missing required wins over unknown and invalid.
  CHECK(code("bookFlight", R"({"from":1,"x":1})", reg) == ExecCode::missing_required);
  // Unknown wins over invalid.
  CHECK(code("bookFlight", R"({"from":1,"to":"B","date":"d","passengers":1,"x":1})", reg) ==
        ExecCode::unknown_parameter);
}

TEST_CASE("value constraints without coercion") {
  const auto reg = flights();
  auto with = [&](const char* key, Json value) {
    Json args = Json::parse(R"({"from":"A","to":"B","date":"d","passengers":2})");
    args[key] = std::move(value);
    return validate_call(ToolCall("bookFlight", args), reg).ok();
  };
  CHECK_FALSE(with("passengers", "1"));
  CHECK(with("passengers", 3.0));
  CHECK_FALSE(with("passengers", 2.5));
  CHECK_FALSE(with("passengers", 0));
  CHECK_FALSE(with("passengers", 10));
  CHECK(with("passengers", 9));
  CHECK_FALSE(with("to", ""));
  CHECK(with("note", ""));
  CHECK(with("cabin", "business"));
  CHECK_FALSE(with("cabin", "first"));
  CHECK_FALSE(with("from", true));
  CHECK_FALSE(with("from", nullptr));
}

TEST_CASE("key order does not matter") {
  const auto reg = flights();
  auto a = ToolCall("bookFlight", Json::parse(R"({"from":"A","to":"B","date":"d","passengers":2})"));
  auto b = ToolCall("bookFlight", Json::parse(R"({"passengers":2,"date":"d","to":"B","from":"A"})"));
  CHECK(validate_call(a, reg).ok() == validate_call(b, reg).ok());
}

TEST_CASE("param types") {
  ParamSpec s;
  s.type = ParamType::number;
  CHECK(value_matches(1, s));
  CHECK(value_matches(1.5, s));
  CHECK_FALSE(value_matches("1", s));
  s.type = ParamType::object;
  CHECK(value_matches(Json::object(), s));
  CHECK_FALSE(value_matches(Json::array(), s));
  s.type = ParamType::array;
  CHECK(value_matches(Json::array(), s));
  s.type = ParamType::boolean;
  CHECK(value_matches(false, s));
  CHECK_FALSE(value_matches(0, s));
}

TEST_CASE("schema file errors") {
  auto bad = [](const char* text) {
    try {
      ToolRegistry::from_json(Json::parse(text));
      FAIL("expected rejection");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::invalid_argument);
    }
  };
  bad(R"({"name":"x"})");
  bad(R"([{"name":""}])");
  bad(R"([{"name":"a"},{"name":"a"}])");
  bad(R"([{"name":"a","params":[{"name":"p","type":"date"}]}])");
  bad(R"([{"name":"a","params":[{"name":"p","type":"string"},{"name":"p","type":"string"}]}])");
  bad(R"([{"name":"a","params":[{"name":"p","type":"number","range":[3,1]}]}])");
  CHECK_THROWS_AS(ToolRegistry::load("/nonexistent/schema.json"), Error);
}

TEST_CASE("registry survives a JSON round trip") {
  const auto reg = fixtures::registry();
  CHECK(reg.size() == 12);
  const auto again = ToolRegistry::from_json(reg.to_json());
  CHECK(again.to_json() == reg.to_json());
  for (const auto& [name, tool] : reg.tools()) {
    bool any_required = false;
    for (const auto& [p, spec] : tool.params) any_required = any_required || spec.required;
    CHECK(any_required);
    CHECK(validate_call(ToolCall(name, Json::object()), reg).code == ExecCode::missing_required);
  }
  const auto path = std::filesystem::temp_directory_path() / "toolreflect_schema_test.json";
  std::ofstream(path) << reg.to_json().dump();
  CHECK(ToolRegistry::load(path).size() == 12);
  std::filesystem::remove(path);
}
