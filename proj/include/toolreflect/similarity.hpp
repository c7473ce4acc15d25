#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "toolreflect/external.hpp"

namespace toolreflect {

enum class SimilarityKind { token_f1, normalized_edit, external };

std::string_view similarity_kind_name(SimilarityKind kind) noexcept;
SimilarityKind parse_similarity_kind(std::string_view name);

/// Pluggable scorer behind the external similarity kind. Must return a value
/// in [0,1]; may be called from several threads.
class ExternalScorer {
 public:
  virtual ~ExternalScorer() = default;
  virtual double score(std::string_view a, std::string_view b) = 0;
};

/// Speaks the {"a":..,"b":..} -> {"score":..} protocol over a channel.
class ChannelScorer final : public ExternalScorer {
 public:
  explicit ChannelScorer(std::shared_ptr<JsonChannel> channel)
      : channel_(std::move(channel)) {}
  double score(std::string_view a, std::string_view b) override;

 private:
  std::shared_ptr<JsonChannel> channel_;
};

struct Similarity {
  SimilarityKind kind = SimilarityKind::token_f1;
  std::shared_ptr<ExternalScorer> external;  // required for kind == external
};

/// Lowercased tokens split on ASCII whitespace and punctuation.
std::vector<std::string> tokenize(std::string_view text);

/// Multiset token F1.
double token_f1(std::string_view a, std::string_view b);

/// 1 - Levenshtein(a, b) / max(|a|, |b|) over lowercased bytes.
double normalized_edit(std::string_view a, std::string_view b);

/// Similarity in [0,1]. sim("", "") = 1 and sim("", x) = 0 for non-empty x,
/// for every kind. Throws Error(external_scorer_unavailable) when the
/// external scorer is missing, fails, or returns a value outside [0,1].
double sim(std::string_view a, std::string_view b, const Similarity& similarity);

}  // namespace toolreflect
