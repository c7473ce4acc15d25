#pragma once

#include <array>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "toolreflect/trajectory.hpp"

namespace toolreflect {

/// Runs the `toolreflect` command line. `args` excludes the program name.
/// Returns 0 on success; on a fatal error writes one JSON record
/// {"error", "message"} to `err` and returns 2. Usage errors return CLI11's
/// exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Running tallies behind the `stats` subcommand.
class StatsAccumulator {
 public:
  static constexpr std::size_t kBins = 10;

  /// A train/test/answer record or a pass-through line.
  void add_item(const Json& record);
  /// A rejection record with "reasons" (array) or "reason" (string).
  void add_reject(const Json& record);
  /// A score record carrying R_total.
  void add_score(const Json& record);
  /// An rl-eval record carrying status.
  void add_group(const Json& record);

  Json report() const;

 private:
  std::size_t items_ = 0;
  std::size_t passthrough_ = 0;
  std::size_t unlabeled_ = 0;
  std::map<std::string, std::size_t> operators_;
  std::map<std::string, std::size_t> reasons_;
  std::size_t rejects_ = 0;
  std::array<std::size_t, kBins> histogram_{};
  std::size_t scores_ = 0;
  std::size_t out_of_range_ = 0;
  std::map<std::string, std::size_t> branches_;
  std::map<std::string, std::size_t> statuses_;
  std::size_t groups_ = 0;
};

}  // namespace toolreflect
