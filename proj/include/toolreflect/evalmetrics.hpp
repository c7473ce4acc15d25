#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toolreflect/perturb.hpp"
#include "toolreflect/trajectory.hpp"

namespace toolreflect {

/// Raw completions a model produced for one test item, in attempt order.
struct AttemptRecord {
  std::string item_id;
  std::vector<std::string> attempts;

  static AttemptRecord from_json(const Json& value);
  Json to_json() const;
};

using ItemIndex = std::map<std::string, BenchItem, std::less<>>;

/// Human-readable statement of the success predicate, echoed in reports.
inline constexpr std::string_view kSuccessPredicate =
    "completion parses, carries a non-blank <reflect> part, and its calls "
    "equal the hidden corrected calls as a multiset";

/// Parses cleanly, has a non-empty reflection and the corrected call
/// multiset. Parse failures count as false.
bool attempt_success(std::string_view attempt, const BenchItem& item,
                     const ParseOptions& parse = {});

/// Fraction of records with a success among their first n attempts.
/// Throws Error(insufficient_attempts) when a record has fewer than n
/// attempts and Error(unknown_item) for an item id missing from `items`.
/// An empty record set scores 0.
double repair_at_n(std::span<const AttemptRecord> records, std::size_t n,
                   const ItemIndex& items, const ParseOptions& parse = {});

struct AttemptVerdicts {
  std::string item_id;
  std::vector<bool> success;              // one per attempt
  std::optional<std::size_t> first_success;
};

struct EvalReport {
  std::vector<std::size_t> ns;
  std::map<std::size_t, double> repair_at;
  std::vector<AttemptVerdicts> items;

  /// {"predicate", "records", "repair_at": {"1": rate, ...}, "items": [...]}
  Json to_json() const;
};

/// Checks every attempt of one record.
AttemptVerdicts score_record(const AttemptRecord& record, const BenchItem& item,
                             const ParseOptions& parse = {});

/// Repair@n for each n over already scored records. Every record must hold
/// at least max(ns) attempts.
EvalReport summarize(std::vector<AttemptVerdicts> verdicts,
                     std::span<const std::size_t> ns);

/// Scores each attempt once and derives Repair@n for every requested n.
EvalReport evaluate(std::span<const AttemptRecord> records,
                    std::span<const std::size_t> ns, const ItemIndex& items,
                    const ParseOptions& parse = {});

}  // namespace toolreflect
