#include "toolreflect/error.hpp"

namespace toolreflect {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::malformed_tag: return "MalformedTag";
    case Errc::malformed_call_json: return "MalformedCallJson";
    case Errc::external_scorer_unavailable: return "ExternalScorerUnavailable";
    case Errc::no_active_part: return "NoActivePart";
    case Errc::degenerate_group: return "DegenerateGroup";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::non_finite: return "NonFinite";
    case Errc::invalid_target: return "InvalidTarget";
    case Errc::no_corruptible_args: return "NoCorruptibleArgs";
    case Errc::insufficient_attempts: return "InsufficientAttempts";
    case Errc::unknown_item: return "UnknownItem";
    case Errc::config_invalid: return "ConfigInvalid";
    case Errc::io_error: return "IoError";
    case Errc::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace toolreflect
