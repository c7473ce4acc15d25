#include "toolreflect/jsonl.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

namespace toolreflect {

bool is_blank(std::string_view line) noexcept {
  return std::all_of(line.begin(), line.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  });
}

namespace {

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

std::vector<std::pair<std::size_t, std::string>> read_lines(std::istream& in) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t n = 0;
  while (next_line(in, line)) {
    ++n;
    if (!is_blank(line)) out.emplace_back(n, line);
  }
  return out;
}

void stream_ordered(std::istream& in, std::size_t workers, const LineFn& fn,
                    const EmitFn& emit, std::size_t batch_per_worker) {
  workers = std::max<std::size_t>(1, workers);
  const std::size_t batch = workers * std::max<std::size_t>(1, batch_per_worker);

  struct Slot {
    std::size_t line_no = 0;
    std::string text;
    LineOutcome outcome;
    std::exception_ptr error;
  };
  std::vector<Slot> slots;
  slots.reserve(batch);

  std::size_t line_no = 0;
  bool more = true;
  while (more) {
    slots.clear();
    std::string line;
    while (slots.size() < batch) {
      if (!next_line(in, line)) {
        more = false;
        break;
      }
      ++line_no;
      if (is_blank(line)) continue;
      slots.push_back(Slot{line_no, std::move(line), {}, nullptr});
    }
    if (slots.empty()) break;

    auto work = [&](std::atomic<std::size_t>& next) {
      for (std::size_t i = next++; i < slots.size(); i = next++) {
        try {
          slots[i].outcome = fn(slots[i].text, slots[i].line_no);
        } catch (...) {
          slots[i].error = std::current_exception();
        }
      }
    };
    std::atomic<std::size_t> next{0};
    const std::size_t threads = std::min(workers, slots.size());
    if (threads <= 1) {
      work(next);
    } else {
      std::vector<std::jthread> pool;
      pool.reserve(threads - 1);
      for (std::size_t t = 1; t < threads; ++t) pool.emplace_back([&] { work(next); });
      work(next);
    }

    for (auto& slot : slots) {
      if (slot.error) std::rethrow_exception(slot.error);
      emit(slot.line_no, std::move(slot.outcome));
    }
  }
}

}  // namespace toolreflect
