#pragma once

// Client side of the external-backend wire protocol: one JSON object per
// line over the child's stdin/stdout, strictly request/response.
//
//   -> {"op":"fit","features":[[...]],"labels":[0,1,...]}   <- {"ok":true}
//   -> {"op":"predict","features":[[...]]}                   <- {"ok":true,"scores":[...]}
//   -> {"op":"shutdown"}                                     <- {"ok":true}
//   any <- {"ok":false,"error":"..."} is a BackendFailure.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "imbalance/data.hpp"
#include "imbalance/errors.hpp"
#include "json.hpp"

namespace imbalance {

class SidecarProcess {
 public:
  SidecarProcess(std::vector<std::string> argv, std::chrono::milliseconds timeout)
      : argv_(std::move(argv)), timeout_(timeout) {
    if (argv_.empty()) throw BackendFailure("sidecar command is empty");
    spawn();
  }

  SidecarProcess(const SidecarProcess&) = delete;
  SidecarProcess& operator=(const SidecarProcess&) = delete;

  ~SidecarProcess() { terminate(); }

  void fit(const ContextSet& context) {
    nlohmann::json msg{{"op", "fit"}, {"features", rows_to_json(context.features())}, {"labels", context.labels()}};
    request(msg);
  }

  std::vector<double> predict(const Matrix& queries) {
    nlohmann::json msg{{"op", "predict"}, {"features", rows_to_json(queries)}};
    const auto reply = request(msg);
    if (!reply.contains("scores") || !reply["scores"].is_array()) fail("predict reply has no scores array");
    const auto& arr = reply["scores"];
    if (arr.size() != queries.rows())
      fail("predict returned " + std::to_string(arr.size()) + " scores for " + std::to_string(queries.rows()) +
           " queries");
    std::vector<double> scores;
    scores.reserve(arr.size());
    for (const auto& v : arr) {
      if (!v.is_number()) fail("non-numeric score in predict reply");
      const double s = v.get<double>();
      if (!(s >= 0.0 && s <= 1.0)) fail("score " + std::to_string(s) + " outside [0, 1]");
      scores.push_back(s);
    }
    return scores;
  }

  void shutdown() {
    if (pid_ <= 0) return;
    request(nlohmann::json{{"op", "shutdown"}});
    ::close(sock_);
    sock_ = -1;
    reap(std::chrono::milliseconds(2000));
  }

  /// Sends one message and returns the parsed reply; throws BackendFailure
  /// on timeout, closed stream, malformed JSON or an {"ok":false} reply.
  nlohmann::json request(const nlohmann::json& msg) {
    if (sock_ < 0) fail("sidecar is not running");
    send_line(msg.dump());
    const std::string line = read_line();
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(std::string("malformed reply: ") + e.what());
    }
    if (!reply.is_object() || !reply.contains("ok") || !reply["ok"].is_boolean()) fail("reply lacks boolean 'ok'");
    if (!reply["ok"].get<bool>()) {
      const std::string err = reply.contains("error") && reply["error"].is_string() ? reply["error"].get<std::string>()
                                                                                    : std::string("unspecified error");
      fail("sidecar error: " + err);
    }
    return reply;
  }

  /// Tail of everything the child wrote to stderr so far.
  std::string diagnostics() const {
    std::lock_guard lock(stderr_mutex_);
    return stderr_tail_;
  }

 private:
  static nlohmann::json rows_to_json(const Matrix& m) {
    auto rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
      auto row = m.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
  }

  [[noreturn]] void fail(const std::string& what) {
    // give the child a moment to flush stderr before collecting it
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    std::string msg = what;
    if (exit_status_) msg += " (exit status " + std::to_string(*exit_status_) + ")";
    const auto diag = diagnostics();
    if (!diag.empty()) msg += "; stderr: " + diag;
    throw BackendFailure(msg);
  }

  void spawn() {
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
      throw BackendFailure(std::string("socketpair: ") + std::strerror(errno));
    int err[2];
    if (::pipe2(err, O_CLOEXEC) != 0) {
      ::close(sv[0]);
      ::close(sv[1]);
      throw BackendFailure(std::string("pipe: ") + std::strerror(errno));
    }
    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) throw BackendFailure(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
      ::dup2(sv[1], STDIN_FILENO);
      ::dup2(sv[1], STDOUT_FILENO);
      ::dup2(err[1], STDERR_FILENO);
      ::execvp(args[0], args.data());
      const char msg[] = "exec failed\n";
      [[maybe_unused]] auto n = ::write(STDERR_FILENO, msg, sizeof msg - 1);
      ::_exit(127);
    }
    pid_ = pid;
    ::close(sv[1]);
    ::close(err[1]);
    sock_ = sv[0];
    stderr_thread_ = std::thread([this, fd = err[0]] { drain_stderr(fd); });
  }

  void drain_stderr(int fd) {
    char buf[512];
    for (;;) {
      const auto n = ::read(fd, buf, sizeof buf);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      std::lock_guard lock(stderr_mutex_);
      stderr_tail_.append(buf, static_cast<std::size_t>(n));
      if (stderr_tail_.size() > kStderrTail) stderr_tail_.erase(0, stderr_tail_.size() - kStderrTail);
    }
    ::close(fd);
  }

  void send_line(std::string line) {
    line.push_back('\n');
    std::size_t off = 0;
    while (off < line.size()) {
      const auto n = ::send(sock_, line.data() + off, line.size() - off, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        reap(std::chrono::milliseconds(200));
        fail("sidecar input closed");
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    for (;;) {
      if (auto pos = inbox_.find('\n'); pos != std::string::npos) {
        std::string line = inbox_.substr(0, pos);
        inbox_.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        kill_child();
        fail("no reply within " + std::to_string(timeout_.count()) + " ms");
      }
      pollfd pfd{sock_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0 && errno == EINTR) continue;
      if (rc == 0) continue;
      char buf[4096];
      const auto n = ::recv(sock_, buf, sizeof buf, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        reap(std::chrono::milliseconds(500));
        fail("sidecar closed its output");
      }
      inbox_.append(buf, static_cast<std::size_t>(n));
    }
  }

  void reap(std::chrono::milliseconds grace) {
    if (pid_ <= 0) return;
    const auto deadline = std::chrono::steady_clock::now() + grace;
    for (;;) {
      int status = 0;
      const pid_t r = ::waitpid(pid_, &status, WNOHANG);
      if (r == pid_) {
        exit_status_ = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
        pid_ = -1;
        return;
      }
      if (std::chrono::steady_clock::now() >= deadline) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }

  void kill_child() {
    if (pid_ <= 0) return;
    ::kill(pid_, SIGKILL);
    reap(std::chrono::milliseconds(2000));
  }

  void terminate() {
    if (sock_ >= 0) {
      ::close(sock_);
      sock_ = -1;
    }
    reap(std::chrono::milliseconds(500));
    kill_child();
    if (stderr_thread_.joinable()) stderr_thread_.join();
  }

  static constexpr std::size_t kStderrTail = 4096;

  std::vector<std::string> argv_;
  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int sock_ = -1;
  std::string inbox_;
  std::optional<int> exit_status_;
  std::thread stderr_thread_;
  mutable std::mutex stderr_mutex_;
  std::string stderr_tail_;
};

}  // namespace imbalance
