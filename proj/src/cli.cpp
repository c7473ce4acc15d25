#include "toolreflect/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>

#include "CLI11.hpp"
#include "toolreflect/config.hpp"
#include "toolreflect/error.hpp"
#include "toolreflect/evalmetrics.hpp"
#include "toolreflect/jsonl.hpp"
#include "toolreflect/perturb.hpp"
#include "toolreflect/reward.hpp"
#include "toolreflect/rlkernel.hpp"
#include "toolreflect/schema.hpp"

namespace toolreflect {

namespace fs = std::filesystem;

namespace {

constexpr int kMeta = -1;
constexpr int kMain = 0;
constexpr int kRejects = 1;
constexpr int kTest = 2;
constexpr int kAnswers = 3;

class Outputs {
 public:
  Outputs(std::string dir, std::ostream& out, std::ostream& err)
      : dir_(std::move(dir)), out_(out), err_(err) {}

  bool to_files() const noexcept { return !dir_.empty(); }

  /// The named file under --out, or `fallback` when writing to the console.
  std::ostream& open(const std::string& file, bool to_err = false) {
    if (dir_.empty()) return to_err ? err_ : out_;
    std::error_code ec;
    fs::create_directories(dir_, ec);
    auto path = fs::path(dir_) / file;
    auto stream = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*stream) throw Error(Errc::io_error, "cannot write " + path.string());
    files_.emplace_back(path.string(), std::move(stream));
    return *files_.back().second;
  }

  void finish() {
    for (auto& [path, stream] : files_) {
      stream->flush();
      if (!*stream) throw Error(Errc::io_error, "failed writing " + path);
    }
    out_.flush();
  }

 private:
  std::string dir_;
  std::ostream& out_;
  std::ostream& err_;
  std::vector<std::pair<std::string, std::unique_ptr<std::ofstream>>> files_;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot read " + path);
  return in;
}

Json parse_line(const std::string& line) {
  Json value = Json::parse(line, nullptr, false);
  if (value.is_discarded()) throw Error(Errc::invalid_argument, "line is not valid JSON");
  return value;
}

bool is_fatal(const Error& e) {
  return e.code() == Errc::external_scorer_unavailable || e.code() == Errc::io_error ||
         e.code() == Errc::config_invalid;
}

Json reject_record(std::size_t line_no, const Error& e) {
  return Json{{"line", line_no},
              {"reasons", Json::array({errc_name(e.code())})},
              {"message", e.what()}};
}

/// Runs `body`; soft errors become one reject line.
template <typename Body>
LineOutcome soft(std::size_t line_no, Body&& body) {
  LineOutcome outcome;
  try {
    body(outcome);
  } catch (const Error& e) {
    if (is_fatal(e)) throw;
    outcome.lines.clear();
    outcome.emit(kRejects, dump_compact(reject_record(line_no, e)));
  } catch (const nlohmann::json::exception& e) {
    outcome.lines.clear();
    outcome.emit(kRejects, dump_compact(Json{{"line", line_no},
                                             {"reasons", Json::array({"InvalidArgument"})},
                                             {"message", e.what()}}));
  }
  return outcome;
}

struct Common {
  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

RunConfig load_config(const Common& common) {
  RunConfig cfg = common.config.empty() ? RunConfig{} : RunConfig::load(common.config);
  if (common.seed_opt && common.seed_opt->count() > 0) cfg.perturb.seed = common.seed;
  cfg.validate();
  return cfg;
}

void cmd_perturb(const Common& common, const std::string& trajectories,
                 const std::string& schema, std::ostream& out, std::ostream& err) {
  if (common.out_dir.empty()) {
    throw Error(Errc::config_invalid, "perturb writes several files and needs --out");
  }
  const RunConfig cfg = load_config(common);
  const ToolRegistry registry = ToolRegistry::load(schema);
  std::unique_ptr<ReflectionWriter> writer;
  if (cfg.reflection_endpoint) {
    writer = std::make_unique<ChannelReflectionWriter>(cfg.reflection_endpoint->open());
  }
  auto in = open_input(trajectories);

  Outputs outs(common.out_dir, out, err);
  std::ostream* streams[4] = {&outs.open("train.jsonl"), &outs.open("rejects.jsonl"),
                              &outs.open("test.jsonl"), &outs.open("answers.jsonl")};

  auto fn = [&](const std::string& line, std::size_t line_no) {
    return soft(line_no, [&](LineOutcome& o) {
      Trajectory clean = trajectory_from_json(parse_line(line), cfg.parse);
      if (clean.id.empty()) clean.id = "line-" + std::to_string(line_no);
      o.emit(kMeta, clean.id);
      auto result = run_pipeline(clean, cfg.perturb, registry, writer.get(), cfg.parse);
      if (result.passthrough) {
        o.emit(kMain, dump_compact(Json{
                          {"source_id", clean.id},
                          {"passthrough", true},
                          {"messages", to_json(std::span<const Message>(
                                           result.passthrough->messages))}}));
      }
      for (const auto& item : result.train) {
        Json record = item.to_json();
        const auto rendered = item.render();
        record["messages"] = to_json(std::span<const Message>(rendered));
        o.emit(kMain, dump_compact(record));
      }
      for (const auto& item : result.test) {
        o.emit(kTest, dump_compact(item.test_record()));
        o.emit(kAnswers, dump_compact(item.answer_record()));
      }
      for (const auto& reject : result.rejects) {
        Json record = reject.to_json();
        record["line"] = line_no;
        o.emit(kRejects, dump_compact(record));
      }
    });
  };

  std::set<std::string> seen;
  auto emit = [&](std::size_t line_no, LineOutcome&& outcome) {
    if (!outcome.lines.empty() && outcome.lines.front().first == kMeta) {
      const auto& id = outcome.lines.front().second;
      if (!seen.insert(id).second) {
        *streams[kRejects] << dump_compact(Json{{"line", line_no},
                                                {"source_id", id},
                                                {"reasons", {"duplicate_id"}}})
                           << '\n';
        return;
      }
    }
    for (const auto& [stream, text] : outcome.lines) {
      if (stream != kMeta) *streams[stream] << text << '\n';
    }
  };
  stream_ordered(in, cfg.workers, fn, emit);
  outs.finish();
}

void cmd_score(const Common& common, const std::string& input, std::ostream& out,
               std::ostream& err) {
  const RunConfig cfg = load_config(common);
  auto in = open_input(input);
  Outputs outs(common.out_dir, out, err);
  std::ostream* streams[2] = {&outs.open("scores.jsonl"), &outs.open("rejects.jsonl", true)};

  auto fn = [&](const std::string& line, std::size_t line_no) {
    return soft(line_no, [&](LineOutcome& o) {
      const Json record = parse_line(line);
      if (!record.is_object() || !record.contains("completion") ||
          !record.at("completion").is_string() || !record.contains("ground_truth") ||
          !record.at("ground_truth").is_string()) {
        throw Error(Errc::invalid_argument,
                    "score record needs string completion and ground_truth");
      }
      const auto breakdown =
          total_reward(record.at("completion").get_ref<const std::string&>(),
                       record.at("ground_truth").get_ref<const std::string&>(), cfg.reward);
      Json result = breakdown.to_json();
      result["line"] = line_no;
      if (auto it = record.find("id"); it != record.end()) result["id"] = *it;
      o.emit(kMain, dump_compact(result));
    });
  };
  auto emit = [&](std::size_t, LineOutcome&& outcome) {
    for (const auto& [stream, text] : outcome.lines) *streams[stream] << text << '\n';
  };
  stream_ordered(in, cfg.workers, fn, emit);
  outs.finish();
}

void cmd_rl_eval(const Common& common, const std::string& input, std::ostream& out,
                 std::ostream& err) {
  const RunConfig cfg = load_config(common);
  auto in = open_input(input);
  Outputs outs(common.out_dir, out, err);
  std::ostream* streams[2] = {&outs.open("rl_eval.jsonl"), &outs.open("rejects.jsonl", true)};

  auto fn = [&](const std::string& line, std::size_t line_no) {
    return soft(line_no, [&](LineOutcome& o) {
      const RolloutGroup group = rollout_group_from_json(parse_line(line));
      const GroupObjective obj = group_objective(group, cfg.rl);
      o.emit(kMain, dump_compact(Json{{"group_id", group.group_id},
                                      {"value", obj.value},
                                      {"status", group_status_name(obj.decision.status)},
                                      {"advantages", obj.decision.advantages},
                                      {"accepted", obj.decision.accepted},
                                      {"ratios", obj.ratios},
                                      {"per_sample", obj.per_sample},
                                      {"variance", obj.decision.variance}}));
    });
  };
  auto emit = [&](std::size_t, LineOutcome&& outcome) {
    for (const auto& [stream, text] : outcome.lines) *streams[stream] << text << '\n';
  };
  stream_ordered(in, cfg.workers, fn, emit);
  outs.finish();
}

void cmd_validate(const Common& common, const std::string& items, const std::string& schema,
                  std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_config(common);
  const ToolRegistry registry = ToolRegistry::load(schema);
  auto in = open_input(items);
  Outputs outs(common.out_dir, out, err);
  std::ostream* streams[2] = {&outs.open("validation.jsonl"),
                              &outs.open("rejects.jsonl", true)};

  auto fn = [&](const std::string& line, std::size_t line_no) {
    return soft(line_no, [&](LineOutcome& o) {
      const Json record = parse_line(line);
      if (record.is_object() && record.value("passthrough", false)) {
        o.emit(kMain, dump_compact(Json{{"line", line_no},
                                        {"source_id", record.value("source_id", "")},
                                        {"passthrough", true}}));
        return;
      }
      BenchItem item;
      try {
        item = BenchItem::from_json(record);
      } catch (const Error& e) {
        o.emit(kRejects, dump_compact(Json{{"line", line_no},
                                           {"item_id", record.value("item_id", "")},
                                           {"reasons", {"malformed"}},
                                           {"message", e.what()}}));
        return;
      }
      auto verdict = validate_item(item, registry, cfg.parse);
      if (!is_negative(item, registry, cfg.parse)) {
        verdict.retained = false;
        verdict.reasons.push_back("not_negative");
      }
      o.emit(kMain, dump_compact(Json{{"line", line_no},
                                      {"item_id", item.item_id},
                                      {"retained", verdict.retained},
                                      {"reasons", verdict.reasons}}));
      if (!verdict.retained) {
        o.emit(kRejects, dump_compact(Json{{"line", line_no},
                                           {"item_id", item.item_id},
                                           {"reasons", verdict.reasons}}));
      }
    });
  };
  auto emit = [&](std::size_t, LineOutcome&& outcome) {
    for (const auto& [stream, text] : outcome.lines) *streams[stream] << text << '\n';
  };
  stream_ordered(in, cfg.workers, fn, emit);
  outs.finish();
}

ItemIndex load_items(const std::string& items, const std::string& test,
                     const std::string& answers) {
  ItemIndex index;
  auto add = [&](BenchItem item) {
    const std::string id = item.item_id;
    if (!index.emplace(id, std::move(item)).second) {
      throw Error(Errc::invalid_argument, "duplicate test item " + id);
    }
  };
  if (!items.empty()) {
    auto in = open_input(items);
    for (const auto& [n, line] : read_lines(in)) {
      const Json record = parse_line(line);
      if (record.is_object() && record.value("passthrough", false)) continue;
      add(BenchItem::from_json(record));
    }
    return index;
  }
  if (test.empty() || answers.empty()) {
    throw Error(Errc::config_invalid, "eval needs --items or both --test and --answers");
  }
  std::map<std::string, Json> visible;
  auto test_in = open_input(test);
  for (const auto& [n, line] : read_lines(test_in)) {
    Json record = parse_line(line);
    if (!record.is_object() || !record.contains("item_id") || !record.at("item_id").is_string()) {
      throw Error(Errc::invalid_argument, test + " line " + std::to_string(n) + " lacks item_id");
    }
    std::string id = record.at("item_id").get<std::string>();
    visible[std::move(id)] = std::move(record);
  }
  auto answers_in = open_input(answers);
  for (const auto& [n, line] : read_lines(answers_in)) {
    const Json record = parse_line(line);
    const std::string id = record.is_object() ? record.value("item_id", "") : "";
    auto it = visible.find(id);
    if (it == visible.end()) {
      throw Error(Errc::unknown_item, "answer for unknown test item '" + id + "'");
    }
    add(BenchItem::from_split(it->second, record));
  }
  return index;
}

void cmd_eval(const Common& common, const std::string& attempts, const std::string& items,
              const std::string& test, const std::string& answers,
              std::vector<std::size_t> ns, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_config(common);
  if (ns.empty()) ns.push_back(1);
  std::size_t n_max = 0;
  for (auto n : ns) {
    if (n == 0) throw Error(Errc::config_invalid, "--n must be positive");
    n_max = std::max(n_max, n);
  }
  const ItemIndex index = load_items(items, test, answers);
  auto in = open_input(attempts);
  Outputs outs(common.out_dir, out, err);
  std::ostream& rejects = outs.open("rejects.jsonl", true);

  auto fn = [&](const std::string& line, std::size_t line_no) {
    return soft(line_no, [&](LineOutcome& o) {
      const AttemptRecord record = AttemptRecord::from_json(parse_line(line));
      if (record.attempts.size() < n_max) {
        throw Error(Errc::insufficient_attempts,
                    "item " + record.item_id + " has " +
                        std::to_string(record.attempts.size()) + " attempts, need " +
                        std::to_string(n_max));
      }
      auto it = index.find(record.item_id);
      if (it == index.end()) {
        throw Error(Errc::unknown_item, "no test item with id '" + record.item_id + "'");
      }
      const auto v = score_record(record, it->second, cfg.parse);
      o.emit(kMain, dump_compact(Json{{"item_id", v.item_id}, {"success", v.success}}));
    });
  };

  std::vector<AttemptVerdicts> verdicts;
  std::set<std::string> seen;
  std::size_t rejected = 0;
  auto emit = [&](std::size_t line_no, LineOutcome&& outcome) {
    for (const auto& [stream, text] : outcome.lines) {
      if (stream == kRejects) {
        ++rejected;
        rejects << text << '\n';
        continue;
      }
      const Json j = parse_line(text);
      AttemptVerdicts v;
      v.item_id = j.at("item_id").get<std::string>();
      v.success = j.at("success").get<std::vector<bool>>();
      if (!seen.insert(v.item_id).second) {
        ++rejected;
        rejects << dump_compact(Json{{"line", line_no},
                                     {"item_id", v.item_id},
                                     {"reasons", {"duplicate_id"}}})
                << '\n';
        continue;
      }
      for (std::size_t i = 0; i < v.success.size(); ++i) {
        if (v.success[i]) {
          v.first_success = i;
          break;
        }
      }
      verdicts.push_back(std::move(v));
    }
  };
  stream_ordered(in, cfg.workers, fn, emit);

  Json report = summarize(std::move(verdicts), ns).to_json();
  report["rejected"] = rejected;
  outs.open("report.json") << report.dump(2) << '\n';
  outs.finish();
}

void read_json_lines(const std::vector<std::string>& paths,
                     const std::function<void(const Json&)>& sink) {
  for (const auto& path : paths) {
    auto in = open_input(path);
    for (const auto& [n, line] : read_lines(in)) {
      Json value = Json::parse(line, nullptr, false);
      if (value.is_discarded() || !value.is_object()) {
        throw Error(Errc::invalid_argument,
                    path + " line " + std::to_string(n) + " is not a JSON object");
      }
      sink(value);
    }
  }
}

void cmd_stats(const Common& common, const std::vector<std::string>& items,
               const std::vector<std::string>& rejects, const std::vector<std::string>& scores,
               const std::vector<std::string>& groups, std::ostream& out, std::ostream& err) {
  StatsAccumulator acc;
  read_json_lines(items, [&](const Json& j) { acc.add_item(j); });
  read_json_lines(rejects, [&](const Json& j) { acc.add_reject(j); });
  read_json_lines(scores, [&](const Json& j) { acc.add_score(j); });
  read_json_lines(groups, [&](const Json& j) { acc.add_group(j); });
  Outputs outs(common.out_dir, out, err);
  outs.open("stats.json") << acc.report().dump(2) << '\n';
  outs.finish();
}

}  // namespace

void StatsAccumulator::add_item(const Json& record) {
  if (record.value("passthrough", false)) {
    ++passthrough_;
    return;
  }
  ++items_;
  auto it = record.find("provenance");
  if (it != record.end() && it->is_object() && it->contains("operator") &&
      it->at("operator").is_string()) {
    ++operators_[it->at("operator").get<std::string>()];
  } else {
    ++unlabeled_;
  }
}

void StatsAccumulator::add_reject(const Json& record) {
  ++rejects_;
  if (auto it = record.find("reasons"); it != record.end() && it->is_array()) {
    for (const auto& r : *it) {
      if (r.is_string()) ++reasons_[r.get<std::string>()];
    }
  } else if (auto r = record.find("reason"); r != record.end() && r->is_string()) {
    ++reasons_[r->get<std::string>()];
  }
}

void StatsAccumulator::add_score(const Json& record) {
  ++scores_;
  auto it = record.find("R_total");
  if (it == record.end() || !it->is_number()) {
    ++out_of_range_;
    return;
  }
  const double v = it->get<double>();
  if (!(v >= 0.0 && v <= 1.0)) {
    ++out_of_range_;
  } else {
    const auto bin = std::min<std::size_t>(kBins - 1, static_cast<std::size_t>(v * kBins));
    ++histogram_[bin];
  }
  if (auto b = record.find("branch"); b != record.end() && b->is_string()) {
    ++branches_[b->get<std::string>()];
  }
}

void StatsAccumulator::add_group(const Json& record) {
  ++groups_;
  if (auto s = record.find("status"); s != record.end() && s->is_string()) {
    ++statuses_[s->get<std::string>()];
  }
}

Json StatsAccumulator::report() const {
  Json operators = Json::object();
  for (auto op : kOperators) operators[std::string(operator_name(op))] = 0;
  for (const auto& [k, v] : operators_) operators[k] = v;

  Json statuses = Json::object();
  for (auto s : {GroupStatus::accepted, GroupStatus::rejected_variance,
                 GroupStatus::rejected_degenerate, GroupStatus::rejected_all_or_none}) {
    statuses[std::string(group_status_name(s))] = 0;
  }
  for (const auto& [k, v] : statuses_) statuses[k] = v;

  Json branches{{"core", 0}, {"backoff", 0}};
  for (const auto& [k, v] : branches_) branches[k] = v;

  Json reasons = Json::object();
  for (const auto& [k, v] : reasons_) reasons[k] = v;

  return Json{
      {"items",
       {{"total", items_},
        {"operators", operators},
        {"unlabeled", unlabeled_},
        {"passthrough", passthrough_}}},
      {"rejections", {{"total", rejects_}, {"reasons", reasons}}},
      {"rewards",
       {{"total", scores_},
        {"histogram",
         {{"edges", {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}},
          {"counts", histogram_}}},
        {"out_of_range", out_of_range_},
        {"branches", branches}}},
      {"groups", {{"total", groups_}, {"status", statuses}}}};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structured-reflection toolkit for tool-calling agents", "toolreflect"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON run config")->envname("TOOLREFLECT_CONFIG");
    sub->add_option("--out", common.out_dir, "output directory")->envname("TOOLREFLECT_OUT");
    common.seed_opt = sub->add_option("--seed", common.seed, "overrides perturb.seed");
  };

  std::string trajectories, schema, input, attempts, items, test, answers;
  std::vector<std::size_t> ns;
  std::vector<std::string> stat_items, stat_rejects, stat_scores, stat_groups;
  std::vector<CLI::Option*> seed_opts;

  auto* perturb = app.add_subcommand("perturb", "build train/test repair items");
  add_common(perturb);
  seed_opts.push_back(common.seed_opt);
  perturb->add_option("--trajectories", trajectories, "clean trajectory JSONL")
      ->required()
      ->envname("TOOLREFLECT_TRAJECTORIES");
  perturb->add_option("--schema", schema, "tool schema JSON")
      ->required()
      ->envname("TOOLREFLECT_SCHEMA");

  auto* score = app.add_subcommand("score", "reward completions against ground truth");
  add_common(score);
  seed_opts.push_back(common.seed_opt);
  score->add_option("--input", input, "JSONL of {completion, ground_truth}")->required();

  auto* rl = app.add_subcommand("rl-eval", "group filtering and clipped objective");
  add_common(rl);
  seed_opts.push_back(common.seed_opt);
  rl->add_option("--input", input, "JSONL of rollout groups")->required();

  auto* eval = app.add_subcommand("eval", "Repair@n over model attempts");
  add_common(eval);
  seed_opts.push_back(common.seed_opt);
  eval->add_option("--attempts", attempts, "JSONL of {item_id, attempts}")->required();
  eval->add_option("--items", items, "full item JSONL (train format)");
  eval->add_option("--test", test, "test JSONL")->envname("TOOLREFLECT_TEST");
  eval->add_option("--answers", answers, "hidden answer JSONL")->envname("TOOLREFLECT_ANSWERS");
  eval->add_option("--n", ns, "attempt budget; repeatable")->take_all();
  eval->add_option("--schema", schema, "tool schema JSON; loaded and checked, not scored")
      ->envname("TOOLREFLECT_SCHEMA");

  auto* validate = app.add_subcommand("validate", "re-check packaged items");
  add_common(validate);
  seed_opts.push_back(common.seed_opt);
  validate->add_option("--items", items, "item JSONL")->required();
  validate->add_option("--schema", schema, "tool schema JSON")
      ->required()
      ->envname("TOOLREFLECT_SCHEMA");

  auto* stats = app.add_subcommand("stats", "summarize pipeline outputs");
  add_common(stats);
  seed_opts.push_back(common.seed_opt);
  stats->add_option("--items", stat_items, "item JSONL files");
  stats->add_option("--rejects", stat_rejects, "reject JSONL files");
  stats->add_option("--scores", stat_scores, "score JSONL files");
  stats->add_option("--groups", stat_groups, "rl-eval JSONL files");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  for (auto* opt : seed_opts) {
    if (opt->count() > 0) common.seed_opt = opt;
  }

  try {
    if (*perturb) {
      cmd_perturb(common, trajectories, schema, out, err);
    } else if (*score) {
      cmd_score(common, input, out, err);
    } else if (*rl) {
      cmd_rl_eval(common, input, out, err);
    } else if (*eval) {
      if (!schema.empty()) ToolRegistry::load(schema);
      cmd_eval(common, attempts, items, test, answers, ns, out, err);
    } else if (*validate) {
      cmd_validate(common, items, schema, out, err);
    } else if (*stats) {
      cmd_stats(common, stat_items, stat_rejects, stat_scores, stat_groups, out, err);
    }
  } catch (const Error& e) {
    err << dump_compact(Json{{"error", errc_name(e.code())}, {"message", e.what()}}) << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << dump_compact(Json{{"error", "Internal"}, {"message", e.what()}}) << '\n';
    return 2;
  }
  return 0;
}

}  // namespace toolreflect
