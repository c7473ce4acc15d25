#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "support/fixtures.hpp"
#include "toolreflect/jsonl.hpp"
#include "toolreflect/perturb.hpp"

namespace fs = std::filesystem;
using toolreflect::Json;

namespace {

void write_lines(const fs::path& path, const std::vector<Json>& records) {
  std::ofstream out(path);
  for (const auto& r : records) out << toolreflect::dump_compact(r) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Writes a synthetic schema, trajectory corpus and scoring inputs"};
  std::string out_dir = "data/sample";
  std::size_t count = 50;
  std::uint64_t seed = 7;
  std::string answers;
  std::size_t attempts = 5;
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--count", count, "number of trajectories, score records and groups");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--answers", answers,
                 "answers.jsonl from `toolreflect perturb`; writes scripted attempts.jsonl");
  app.add_option("--attempts", attempts, "attempts per item when --answers is given");
  CLI11_PARSE(app, argc, argv);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  if (!answers.empty()) {
    std::ifstream in(answers);
    if (!in) {
      std::cerr << "cannot read " << answers << '\n';
      return 2;
    }
    std::mt19937_64 rng(seed);
    std::vector<Json> records;
    for (const auto& [line_no, line] : toolreflect::read_lines(in)) {
      if (toolreflect::is_blank(line)) continue;
      const Json answer = Json::parse(line);
      auto item = toolreflect::BenchItem::from_split(
          Json{{"item_id", answer.at("item_id")}, {"messages", Json::array()}}, answer);
      records.push_back(Json{{"item_id", item.item_id},
                             {"attempts", fixtures::scripted_attempts(item, attempts, rng)}});
    }
    write_lines(dir / "attempts.jsonl", records);
    return 0;
  }

  {
    std::ofstream schema(dir / "schema.json");
    schema << fixtures::schema_json().dump(2) << '\n';
  }
  std::vector<Json> trajectories;
  for (const auto& t : fixtures::corpus(count, seed)) trajectories.push_back(toolreflect::to_json(t));
  write_lines(dir / "trajectories.jsonl", trajectories);
  write_lines(dir / "score.jsonl", fixtures::score_records(count, seed));
  write_lines(dir / "groups.jsonl", fixtures::rollout_groups(count, seed));
  return 0;
}
