// Line-delimited JSON peer for channel tests.
//   fake_scorer score    {"a","b"} -> {"score": 1 if a == b else 0.5}
//   fake_scorer bad      always {"score": 2.0}
//   fake_scorer silent   reads requests, never answers
//   fake_scorer exit     exits on the first request
//   fake_scorer reflect  {"operator",...} -> {"reflection": "..."}
#include <iostream>
#include <string>

#include "json.hpp"

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "score";
  std::string line;
  while (std::getline(std::cin, line)) {
    auto req = nlohmann::json::parse(line, nullptr, false);
    nlohmann::json resp;
    if (mode == "exit") return 0;
    if (mode == "silent") continue;
    if (mode == "bad") {
      resp = {{"score", 2.0}};
    } else if (mode == "reflect") {
      std::string names;
      for (const auto& c : req["broken"]["calls"]) names += c["name"].get<std::string>() + " ";
      resp = {{"reflection", "External note on " + names + "for " +
                                 req["operator"].get<std::string>()}};
    } else {
      resp = {{"score", req["a"] == req["b"] ? 1.0 : 0.5}};
    }
    std::cout << resp.dump() << std::endl;
  }
  return 0;
}
