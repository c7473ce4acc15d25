#include "toolreflect/external.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "httplib.h"
#include "toolreflect/error.hpp"

namespace toolreflect {

namespace {

[[noreturn]] void unavailable(const std::string& what) {
  throw Error(Errc::external_scorer_unavailable, what);
}

}  // namespace

ProcessChannel::ProcessChannel(std::vector<std::string> argv,
                               std::chrono::milliseconds timeout)
    : argv_(std::move(argv)), timeout_(timeout) {
  if (argv_.empty()) unavailable("external command is empty");
}

ProcessChannel::~ProcessChannel() { shutdown(); }

void ProcessChannel::spawn() {
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
    unavailable(std::string("socketpair: ") + std::strerror(errno));
  }
  std::vector<char*> args;
  for (auto& a : argv_) args.push_back(a.data());
  args.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(sv[0]);
    ::close(sv[1]);
    unavailable(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(sv[1], STDIN_FILENO);
    ::dup2(sv[1], STDOUT_FILENO);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(sv[1]);
  fd_ = sv[0];
  pid_ = pid;
  pending_.clear();
}

void ProcessChannel::shutdown() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    ::kill(pid_, SIGTERM);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
}

nlohmann::json ProcessChannel::request(const nlohmann::json& payload) {
  std::lock_guard lock(mutex_);
  if (fd_ < 0) spawn();

  const std::string line =
      payload.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) +
      "\n";
  std::size_t sent = 0;
  while (sent < line.size()) {
    const ssize_t n =
        ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      shutdown();
      unavailable("external process closed its input");
    }
    sent += static_cast<std::size_t>(n);
  }

  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  std::size_t newline;
  while ((newline = pending_.find('\n')) == std::string::npos) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      shutdown();
      unavailable("external process timed out");
    }
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) continue;
    char buf[4096];
    const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n <= 0) {
      shutdown();
      unavailable("external process exited");
    }
    pending_.append(buf, static_cast<std::size_t>(n));
  }
  const std::string response = pending_.substr(0, newline);
  pending_.erase(0, newline + 1);

  auto parsed = nlohmann::json::parse(response, nullptr, false);
  if (parsed.is_discarded()) unavailable("external process sent invalid JSON");
  return parsed;
}

HttpChannel::HttpChannel(std::string url, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) unavailable("endpoint URL lacks a scheme");
  const auto slash = url.find('/', scheme + 3);
  origin_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
}

nlohmann::json HttpChannel::request(const nlohmann::json& payload) {
  std::lock_guard lock(mutex_);
  httplib::Client client(origin_);
  if (!client.is_valid()) unavailable("unsupported endpoint " + origin_);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
      timeout_ - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  auto result = client.Post(
      path_,
      payload.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace),
      "application/json");
  if (!result) {
    unavailable("HTTP request failed: " + httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    unavailable("HTTP status " + std::to_string(result->status));
  }
  auto parsed = nlohmann::json::parse(result->body, nullptr, false);
  if (parsed.is_discarded()) unavailable("endpoint returned invalid JSON");
  return parsed;
}

}  // namespace toolreflect
