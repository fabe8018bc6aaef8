// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Framed request/reply channel to a classifier running in a child process.
//
// Request:  u32 big-endian byte length N, then N bytes of PNG image data.
// Reply:    u32 big-endian class count C (2 <= C <= kMaxOracleClasses), then
//           C IEEE-754 doubles in little-endian byte order.
//
// A reply that does not arrive within the timeout, ends early, announces an
// out-of-range count, or carries non-finite logits raises OracleError. After
// any error the channel is considered broken and every later call fails.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "viewfool/error.hpp"

namespace viewfool {

inline constexpr std::uint32_t kMaxOracleClasses = 1u << 20;

inline std::string encode_oracle_request(std::string_view png) {
  std::string out;
  const auto n = static_cast<std::uint32_t>(png.size());
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((n >> (8 * i)) & 0xFF));
  out.append(png);
  return out;
}

inline std::string encode_oracle_reply(const std::vector<double>& logits) {
  std::string out;
  const auto c = static_cast<std::uint32_t>(logits.size());
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((c >> (8 * i)) & 0xFF));
  for (double v : logits) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
  return out;
}

inline std::uint32_t decode_oracle_count(std::string_view header) {
  if (header.size() != 4) throw OracleError("reply header must be 4 bytes");
  std::uint32_t c = 0;
  for (char ch : header) c = (c << 8) | static_cast<unsigned char>(ch);
  if (c < 2 || c > kMaxOracleClasses) throw OracleError("reply announces invalid class count " + std::to_string(c));
  return c;
}

inline std::vector<double> decode_oracle_logits(std::string_view body, std::uint32_t count) {
  if (body.size() != 8 * static_cast<std::size_t>(count)) throw OracleError("reply body has wrong length");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(body[8 * i + static_cast<std::size_t>(b)]);
    out[i] = std::bit_cast<double>(bits);
    if (!std::isfinite(out[i])) throw OracleError("reply contains a non-finite logit");
  }
  return out;
}

/// Whole-reply decoder (header + body) for in-memory frames.
inline std::vector<double> decode_oracle_reply(std::string_view frame) {
  if (frame.size() < 4) throw OracleError("reply shorter than its header");
  const std::uint32_t c = decode_oracle_count(frame.substr(0, 4));
  return decode_oracle_logits(frame.substr(4), c);
}

/// Long-lived child process spoken to over stdin/stdout. Calls are
/// serialized per instance; run several instances for parallel batches.
/// Constructing one sets SIGPIPE to ignored for the process so a dead child
/// surfaces as an OracleError instead of terminating the caller.
class ExternalOracle {
 public:
  ExternalOracle(std::string command, int timeout_ms = 10000) : command_(std::move(command)), timeout_ms_(timeout_ms) {
    ::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0) throw OracleError("pipe() failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw OracleError("pipe() failed");
    }
    pid_ = ::fork();
    if (pid_ < 0) throw OracleError("fork() failed");
    if (pid_ > 0) ::setpgid(pid_, pid_);
    if (pid_ == 0) {
      ::setpgid(0, 0);  // own group so teardown reaches any grandchildren
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    ::fcntl(write_fd_, F_SETFD, FD_CLOEXEC);
    ::fcntl(read_fd_, F_SETFD, FD_CLOEXEC);
  }

  ExternalOracle(const ExternalOracle&) = delete;
  ExternalOracle& operator=(const ExternalOracle&) = delete;

  ~ExternalOracle() {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (pid_ > 0) {
      int status = 0;
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
          ::kill(-pid_, SIGKILL);
          return;
        }
        ::usleep(2000);
      }
      ::kill(-pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
  }

  const std::string& command() const { return command_; }

  std::vector<double> query(std::string_view png) {
    std::lock_guard lock(mutex_);
    if (broken_) throw OracleError("oracle channel is broken: " + command_);
    try {
      write_all(encode_oracle_request(png));
      const std::uint32_t c = decode_oracle_count(read_exact(4));
      return decode_oracle_logits(read_exact(8 * static_cast<std::size_t>(c)), c);
    } catch (...) {
      broken_ = true;
      throw;
    }
  }

 private:
  void write_all(const std::string& bytes) {
    std::size_t done = 0;
    while (done < bytes.size()) {
      const ssize_t n = ::write(write_fd_, bytes.data() + done, bytes.size() - done);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw OracleError("failed writing request to oracle (" + std::string(std::strerror(errno)) + ")");
      done += static_cast<std::size_t>(n);
    }
  }

  std::string read_exact(std::size_t n) {
    std::string out(n, '\0');
    std::size_t done = 0;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms_);
    while (done < n) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw OracleError("oracle reply timed out after " + std::to_string(timeout_ms_) + " ms");
      pollfd p{read_fd_, POLLIN, 0};
      const int r = ::poll(&p, 1, static_cast<int>(left.count()));
      if (r < 0 && errno == EINTR) continue;
      if (r == 0) throw OracleError("oracle reply timed out after " + std::to_string(timeout_ms_) + " ms");
      if (r < 0) throw OracleError("poll() failed on oracle pipe");
      const ssize_t got = ::read(read_fd_, out.data() + done, n - done);
      if (got < 0 && errno == EINTR) continue;
      if (got <= 0) throw OracleError("oracle closed its output mid-frame");
      done += static_cast<std::size_t>(got);
    }
    return out;
  }

  std::string command_;
  int timeout_ms_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  bool broken_ = false;
  std::mutex mutex_;
};

}  // namespace viewfool
