#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "toolreflect/external.hpp"
#include "toolreflect/schema.hpp"
#include "toolreflect/trajectory.hpp"

namespace toolreflect {

/// The four ways a correct call is broken.
enum class Operator { order_swap, redundant, missing, argument };

inline constexpr std::array<Operator, 4> kOperators{
    Operator::order_swap, Operator::redundant, Operator::missing,
    Operator::argument};

/// "P1_order_swap", "P2_redundant", "P3_missing", "P4_argument"
std::string_view operator_name(Operator op) noexcept;
Operator parse_operator(std::string_view name);

struct PerturbationSpec {
  Operator op = Operator::argument;
  std::size_t target = 0;  // 0-based call-step index k
  std::uint64_t seed = 0;

  Json to_json() const;
  static PerturbationSpec from_json(const Json& value);
  friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

struct BrokenStep {
  Message call;   // assistant message with the broken call block
  Message reply;  // tool message carrying the error feedback
};

struct PerturbOptions {
  /// When set, argument corruption only draws kinds the schema can detect.
  const ToolRegistry* registry = nullptr;
  ParseOptions parse;
};

/// Breaks step `spec.target` of `clean`. Deterministic in (clean, spec).
/// Throws Error(invalid_target) when the step does not exist or violates the
/// operator's position constraint (redundant: not the first step; missing:
/// not the last), Error(no_corruptible_args) for argument corruption of a
/// step without arguments.
BrokenStep apply_perturbation(const Trajectory& clean, const PerturbationSpec& spec,
                              const PerturbOptions& options = {});

/// Messages before the perturbed step followed by the broken pair.
Trajectory build_negative(const Trajectory& clean, const PerturbationSpec& spec,
                          const PerturbOptions& options = {});

/// Evidence handed to a reflection writer. For `missing`, the clean side is
/// the omitted step and the broken side the degraded step that followed it.
struct ReflectionRequest {
  Operator op = Operator::argument;
  std::vector<ToolCall> clean_calls;
  Message clean_reply;
  std::vector<ToolCall> broken_calls;
  Message broken_reply;

  Json to_json() const;
};

/// Keys whose values differ between matching positions of two call lists,
/// including keys present on only one side. Sorted, unique.
std::vector<std::string> differing_keys(std::span<const ToolCall> clean,
                                        std::span<const ToolCall> broken);

/// Deterministic template reflection naming the failure cause, the tools
/// involved and the corrective action.
std::string synth_reflection(const ReflectionRequest& request);

class ReflectionWriter {
 public:
  virtual ~ReflectionWriter() = default;
  virtual std::string write(const ReflectionRequest& request) = 0;
};

class TemplateReflectionWriter final : public ReflectionWriter {
 public:
  std::string write(const ReflectionRequest& request) override {
    return synth_reflection(request);
  }
};

/// Sends ReflectionRequest JSON over a channel and expects
/// {"reflection": "..."} back.
class ChannelReflectionWriter final : public ReflectionWriter {
 public:
  explicit ChannelReflectionWriter(std::shared_ptr<JsonChannel> channel)
      : channel_(std::move(channel)) {}
  std::string write(const ReflectionRequest& request) override;

 private:
  std::shared_ptr<JsonChannel> channel_;
};

/// A packaged repair instance: broken prefix, reflection, corrected call,
/// the original reply to that call and the untouched remainder.
struct BenchItem {
  std::string item_id;
  std::string source_id;
  Trajectory negative_prefix;
  std::string reflection;
  std::vector<ToolCall> corrected_call;
  Message corrected_reply;
  std::vector<Message> suffix;
  PerturbationSpec provenance;

  /// Assistant message holding the reflection and the corrected call.
  Message repair_message() const;
  /// Ground-truth completion text for the repair turn.
  std::string repair_completion() const;
  /// negative prefix, repair message, corrected reply, suffix
  std::vector<Message> render() const;

  Json to_json() const;
  static BenchItem from_json(const Json& value);

  /// The visible part of a test item: {"item_id", "messages"}.
  Json test_record() const;
  /// Everything but the negative prefix.
  Json answer_record() const;
  static BenchItem from_split(const Json& test_record, const Json& answer_record);
};

struct PackageOptions {
  PerturbOptions perturb;
  ReflectionWriter* writer = nullptr;  // template writer when null
};

BenchItem package_item(const Trajectory& clean, const PerturbationSpec& spec,
                       const PackageOptions& options = {});

struct ItemVerdict {
  bool retained = true;
  std::vector<std::string> reasons;  // malformed, not_executable, missing_citation
};

/// Retention checks: tags and JSON well-formed, corrected calls executable,
/// reflection names the broken tool (and a corrupted key for argument
/// errors).
ItemVerdict validate_item(const BenchItem& item, const ToolRegistry& registry,
                          const ParseOptions& parse = {});

/// Is the broken call a genuine failure? Schema-invalid for order_swap,
/// missing and argument; a verbatim duplicate for redundant.
bool is_negative(const BenchItem& item, const ToolRegistry& registry,
                 const ParseOptions& parse = {});

/// (operator, k) pairs that satisfy the position constraints and, given the
/// registry, yield a call the schema rejects.
std::vector<std::pair<Operator, std::size_t>> eligible_targets(
    const Trajectory& clean, const ToolRegistry& registry,
    const ParseOptions& parse = {});

struct PipelineConfig {
  std::array<double, 4> operator_mix{1.0, 1.0, 1.0, 1.0};
  std::uint64_t seed = 0;
  double split_ratio = 0.2;           // fraction of items routed to test
  double passthrough_fraction = 0.0;  // clean trajectories copied to train
  std::size_t items_per_trajectory = 1;

  void validate() const;
};

struct PipelineReject {
  std::string source_id;
  std::string item_id;  // empty for trajectory-level rejects
  std::vector<std::string> reasons;
  std::string message;

  Json to_json() const;
};

struct PipelineOutput {
  std::vector<BenchItem> train;
  std::vector<BenchItem> test;
  std::optional<Trajectory> passthrough;
  std::vector<PipelineReject> rejects;
};

/// Samples targets for one clean trajectory, packages, validates and splits.
/// Randomness derives from (seed, source id, k) only.
PipelineOutput run_pipeline(const Trajectory& clean, const PipelineConfig& config,
                            const ToolRegistry& registry,
                            ReflectionWriter* writer = nullptr,
                            const ParseOptions& parse = {});

}  // namespace toolreflect
