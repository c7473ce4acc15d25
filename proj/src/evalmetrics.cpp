#include "toolreflect/evalmetrics.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "toolreflect/error.hpp"

namespace toolreflect {

namespace {

const BenchItem& lookup(const ItemIndex& items, const std::string& id) {
  auto it = items.find(id);
  if (it == items.end()) {
    throw Error(Errc::unknown_item, "no test item with id '" + id + "'");
  }
  return it->second;
}

void require_attempts(const AttemptRecord& record, std::size_t n) {
  if (n == 0) throw Error(Errc::invalid_argument, "n must be positive");
  if (record.attempts.size() < n) {
    throw Error(Errc::insufficient_attempts,
                "item " + record.item_id + " has " +
                    std::to_string(record.attempts.size()) + " attempts, need " +
                    std::to_string(n));
  }
}

}  // namespace

AttemptRecord AttemptRecord::from_json(const Json& value) {
  if (!value.is_object() || !value.contains("item_id") ||
      !value.at("item_id").is_string() || !value.contains("attempts") ||
      !value.at("attempts").is_array()) {
    throw Error(Errc::invalid_argument,
                "attempt record needs a string item_id and an attempts array");
  }
  AttemptRecord out;
  out.item_id = value.at("item_id").get<std::string>();
  for (const auto& a : value.at("attempts")) {
    if (!a.is_string()) {
      throw Error(Errc::invalid_argument, "attempts must be strings");
    }
    out.attempts.push_back(a.get<std::string>());
  }
  if (out.attempts.empty()) {
    throw Error(Errc::insufficient_attempts,
                "item " + out.item_id + " has no attempts");
  }
  return out;
}

Json AttemptRecord::to_json() const {
  return Json{{"item_id", item_id}, {"attempts", attempts}};
}

bool attempt_success(std::string_view attempt, const BenchItem& item,
                     const ParseOptions& parse) {
  ParsedCompletion parsed;
  try {
    parsed = parse_completion(attempt, parse);
  } catch (const Error&) {
    return false;
  }
  if (!parsed.reflection ||
      std::all_of(parsed.reflection->begin(), parsed.reflection->end(),
                  [](unsigned char ch) { return std::isspace(ch) != 0; })) {
    return false;
  }
  return equal_calls(parsed.calls, item.corrected_call);
}

double repair_at_n(std::span<const AttemptRecord> records, std::size_t n,
                   const ItemIndex& items, const ParseOptions& parse) {
  if (n == 0) throw Error(Errc::invalid_argument, "n must be positive");
  if (records.empty()) return 0.0;
  std::size_t solved = 0;
  for (const auto& record : records) {
    require_attempts(record, n);
    const auto& item = lookup(items, record.item_id);
    for (std::size_t i = 0; i < n; ++i) {
      if (attempt_success(record.attempts[i], item, parse)) {
        ++solved;
        break;
      }
    }
  }
  return static_cast<double>(solved) / static_cast<double>(records.size());
}

AttemptVerdicts score_record(const AttemptRecord& record, const BenchItem& item,
                             const ParseOptions& parse) {
  AttemptVerdicts v;
  v.item_id = record.item_id;
  for (std::size_t i = 0; i < record.attempts.size(); ++i) {
    const bool ok = attempt_success(record.attempts[i], item, parse);
    v.success.push_back(ok);
    if (ok && !v.first_success) v.first_success = i;
  }
  return v;
}

EvalReport summarize(std::vector<AttemptVerdicts> verdicts,
                     std::span<const std::size_t> ns) {
  EvalReport report;
  std::set<std::size_t> unique(ns.begin(), ns.end());
  if (unique.empty()) unique.insert(1);
  if (unique.contains(0)) throw Error(Errc::invalid_argument, "n must be positive");
  report.ns.assign(unique.begin(), unique.end());
  for (const auto& v : verdicts) {
    if (v.success.size() < report.ns.back()) {
      throw Error(Errc::insufficient_attempts,
                  "item " + v.item_id + " has too few attempts");
    }
  }
  report.items = std::move(verdicts);
  for (std::size_t n : report.ns) {
    std::size_t solved = 0;
    for (const auto& v : report.items) {
      if (v.first_success && *v.first_success < n) ++solved;
    }
    report.repair_at[n] =
        report.items.empty()
            ? 0.0
            : static_cast<double>(solved) / static_cast<double>(report.items.size());
  }
  return report;
}

EvalReport evaluate(std::span<const AttemptRecord> records,
                    std::span<const std::size_t> ns, const ItemIndex& items,
                    const ParseOptions& parse) {
  std::size_t n_max = 1;
  for (std::size_t n : ns) n_max = std::max(n_max, n);
  std::set<std::string> seen;
  std::vector<AttemptVerdicts> verdicts;
  for (const auto& record : records) {
    if (!seen.insert(record.item_id).second) {
      throw Error(Errc::invalid_argument,
                  "duplicate attempt record for item " + record.item_id);
    }
    require_attempts(record, n_max);
    verdicts.push_back(score_record(record, lookup(items, record.item_id), parse));
  }
  return summarize(std::move(verdicts), ns);
}

Json EvalReport::to_json() const {
  Json rates = Json::object();
  for (const auto& [n, rate] : repair_at) rates[std::to_string(n)] = rate;
  Json per_item = Json::array();
  for (const auto& v : items) {
    Json entry{{"item_id", v.item_id}, {"success", v.success}};
    entry["first_success"] =
        v.first_success ? Json(*v.first_success) : Json(nullptr);
    per_item.push_back(std::move(entry));
  }
  return Json{{"predicate", kSuccessPredicate},
              {"records", items.size()},
              {"repair_at", std::move(rates)},
              {"items", std::move(per_item)}};
}

}  // namespace toolreflect
