#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace toolreflect {

enum class Errc {
  malformed_tag,
  malformed_call_json,
  external_scorer_unavailable,
  no_active_part,
  degenerate_group,
  length_mismatch,
  non_finite,
  invalid_target,
  no_corruptible_args,
  insufficient_attempts,
  unknown_item,
  config_invalid,
  io_error,
  invalid_argument,
};

/// Stable, machine-readable name of an error code ("MalformedTag", ...).
std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace toolreflect
