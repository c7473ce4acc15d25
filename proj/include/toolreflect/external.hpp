#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

namespace toolreflect {

/// Request/response JSON exchange with an out-of-process helper (similarity
/// scorer, reflection generator). Failures raise
/// Error(external_scorer_unavailable). Implementations serialize requests.
class JsonChannel {
 public:
  virtual ~JsonChannel() = default;
  virtual nlohmann::json request(const nlohmann::json& payload) = 0;
};

/// Line-delimited JSON over a child process's stdin/stdout. The child is
/// spawned on first use and kept alive; one request line, one response line.
class ProcessChannel final : public JsonChannel {
 public:
  ProcessChannel(std::vector<std::string> argv,
                 std::chrono::milliseconds timeout);
  ~ProcessChannel() override;

  ProcessChannel(const ProcessChannel&) = delete;
  ProcessChannel& operator=(const ProcessChannel&) = delete;

  nlohmann::json request(const nlohmann::json& payload) override;

 private:
  void spawn();
  void shutdown() noexcept;

  std::vector<std::string> argv_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
  int fd_ = -1;
  int pid_ = -1;
  std::string pending_;
};

/// POSTs the JSON request to an HTTP endpoint and parses the JSON body.
class HttpChannel final : public JsonChannel {
 public:
  HttpChannel(std::string url, std::chrono::milliseconds timeout);
  nlohmann::json request(const nlohmann::json& payload) override;

 private:
  std::string origin_;
  std::string path_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
};

}  // namespace toolreflect
