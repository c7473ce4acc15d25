#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace toolreflect {

/// Lines one input record produces, each tagged with an output stream id.
struct LineOutcome {
  std::vector<std::pair<int, std::string>> lines;

  void emit(int stream, std::string text) { lines.emplace_back(stream, std::move(text)); }
};

/// Maps a raw line (1-based number) to its outputs. May run concurrently.
using LineFn = std::function<LineOutcome(const std::string& line, std::size_t line_no)>;
/// Receives outcomes strictly in input order, on the calling thread.
using EmitFn = std::function<void(std::size_t line_no, LineOutcome&& outcome)>;

/// Reads `in` in bounded batches, applies `fn` on up to `workers` threads and
/// hands results to `emit` in input order. Blank lines are skipped. An
/// exception thrown by `fn` is rethrown after every earlier line is emitted.
void stream_ordered(std::istream& in, std::size_t workers, const LineFn& fn,
                    const EmitFn& emit, std::size_t batch_per_worker = 64);

/// Reads every non-blank line; for small side inputs such as item indexes.
std::vector<std::pair<std::size_t, std::string>> read_lines(std::istream& in);

bool is_blank(std::string_view line) noexcept;

}  // namespace toolreflect
