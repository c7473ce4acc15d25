#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "support/fixtures.hpp"
#include "toolreflect/error.hpp"
#include "toolreflect/reward.hpp"
#include "toolreflect/trajectory.hpp"

using namespace toolreflect;

namespace {

const std::vector<std::string> kPieces = {
    "<reflect>", "</reflect>", "<call>", "</call>", "<final>", "</final>", "<tool_call>",
    "</tool_call>", "[", "]", "{", "}", "\"name\"", ":", ",", "\"arguments\"", "\"f\"", "1",
    "text ", " ", "\n", "<", ">", "/", "<Reflect>", "null", "[]", "{}", "\"x\"", "é"};

std::string random_text(std::mt19937_64& rng) {
  std::string s;
  for (auto n = rng() % 14; n > 0; --n) s += kPieces[rng() % kPieces.size()];
  return s;
}

}  // namespace

TEST_CASE("arbitrary text either parses or raises a tag or call error") {
  std::mt19937_64 rng(5);
  std::size_t parsed = 0;
  for (int i = 0; i < 200000; ++i) {
    const auto text = random_text(rng);
    try {
      auto c = parse_completion(text);
      ++parsed;
      auto again = parse_completion(render_completion(c));
      CHECK(again.reflection == c.reflection);
      CHECK(again.final_answer == c.final_answer);
      CHECK(equal_calls(again.calls, c.calls));
    } catch (const Error& e) {
      const bool known = e.code() == Errc::malformed_tag || e.code() == Errc::malformed_call_json;
      CHECK_MESSAGE(known, text);
    }
  }
  CHECK(parsed > 1000);
}

TEST_CASE("scoring arbitrary pairs stays within the unit interval") {
  std::mt19937_64 rng(6);
  RewardConfig cfg;
  for (int i = 0; i < 50000; ++i) {
    const auto a = random_text(rng);
    const auto b = random_text(rng);
    try {
      const auto r = total_reward(a, b, cfg);
      CHECK(r.R_total >= 0.0);
      CHECK(r.R_total <= 1.0);
    } catch (const Error& e) {
      const bool known = e.code() == Errc::malformed_tag || e.code() == Errc::malformed_call_json ||
                         e.code() == Errc::no_active_part;
      CHECK(known);
    }
  }
}

TEST_CASE("fixture trajectories parse and check") {
  for (const auto& t : fixtures::corpus(100)) {
    CHECK_NOTHROW(check_trajectory(t));
    auto back = trajectory_from_json(to_json(t));
    CHECK(back.id == t.id);
    CHECK(back.messages == t.messages);
  }
}
