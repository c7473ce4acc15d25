#include "toolreflect/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "toolreflect/error.hpp"

namespace toolreflect {

namespace {

bool is_separator(unsigned char c) {
  return c < 0x80 && (std::isspace(c) || std::ispunct(c) || std::iscntrl(c));
}

char lower(unsigned char c) {
  return static_cast<char>(c < 0x80 ? std::tolower(c) : c);
}

}  // namespace

std::string_view similarity_kind_name(SimilarityKind kind) noexcept {
  switch (kind) {
    case SimilarityKind::token_f1: return "token_f1";
    case SimilarityKind::normalized_edit: return "normalized_edit";
    case SimilarityKind::external: return "external";
  }
  return "token_f1";
}

SimilarityKind parse_similarity_kind(std::string_view name) {
  if (name == "token_f1") return SimilarityKind::token_f1;
  if (name == "normalized_edit") return SimilarityKind::normalized_edit;
  if (name == "external") return SimilarityKind::external;
  throw Error(Errc::config_invalid,
              "unknown similarity kind '" + std::string(name) + "'");
}

double ChannelScorer::score(std::string_view a, std::string_view b) {
  const auto response =
      channel_->request(nlohmann::json{{"a", std::string(a)}, {"b", std::string(b)}});
  if (!response.is_object() || !response.contains("score") ||
      !response.at("score").is_number()) {
    throw Error(Errc::external_scorer_unavailable,
                "scorer response lacks a numeric score");
  }
  return response.at("score").get<double>();
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_separator(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(lower(c));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

double token_f1(std::string_view a, std::string_view b) {
  const auto ta = tokenize(a);
  const auto tb = tokenize(b);
  if (ta.empty() || tb.empty()) {
    // No lexical content on at least one side: identical strings agree.
    return (ta.empty() && tb.empty() && a == b) ? 1.0 : 0.0;
  }
  std::unordered_map<std::string_view, std::size_t> counts;
  for (const auto& t : ta) ++counts[t];
  std::size_t overlap = 0;
  for (const auto& t : tb) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return 2.0 * static_cast<double>(overlap) /
         static_cast<double>(ta.size() + tb.size());
}

double normalized_edit(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    const char ca = lower(static_cast<unsigned char>(a[i - 1]));
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const char cb = lower(static_cast<unsigned char>(b[j - 1]));
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (ca == cb ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  const auto longest = std::max(a.size(), b.size());
  return 1.0 - static_cast<double>(prev[b.size()]) / static_cast<double>(longest);
}

double sim(std::string_view a, std::string_view b, const Similarity& similarity) {
  if (a.empty() || b.empty()) return (a.empty() && b.empty()) ? 1.0 : 0.0;
  switch (similarity.kind) {
    case SimilarityKind::token_f1:
      return token_f1(a, b);
    case SimilarityKind::normalized_edit:
      return normalized_edit(a, b);
    case SimilarityKind::external: {
      if (!similarity.external) {
        throw Error(Errc::external_scorer_unavailable,
                    "external similarity selected without a scorer");
      }
      const double s = similarity.external->score(a, b);
      if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
        throw Error(Errc::external_scorer_unavailable,
                    "external scorer returned a score outside [0,1]");
      }
      return s;
    }
  }
  return 0.0;
}

}  // namespace toolreflect
