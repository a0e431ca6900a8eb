#include "embeval/subprocess_encoder.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>

#include <json.hpp>

#include "embeval/error.hpp"

namespace embeval {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

void close_fd(int& fd) {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

int status_to_code(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

}  // namespace

SubprocessEncoder::SubprocessEncoder(std::string command, SubprocessOptions options)
    : command_(std::move(command)), options_(options) {
  // A child that dies mid-request must surface as an error, not kill us.
  ::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0 ||
      ::pipe2(err_pipe, O_CLOEXEC) != 0) {
    throw EncoderError("cannot create pipes for encoder: " + std::string(std::strerror(errno)));
  }
  pid_ = ::fork();
  if (pid_ < 0) throw EncoderError("cannot spawn encoder: " + std::string(std::strerror(errno)));
  if (pid_ == 0) {
    // Own process group, so a kill also reaches anything the shell spawned.
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid_, pid_);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  err_fd_ = err_pipe[0];

  stderr_thread_ = std::thread([this] {
    char buf[1024];
    for (;;) {
      const ssize_t n = ::read(err_fd_, buf, sizeof buf);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return;
      if (options_.forward_stderr) std::cerr.write(buf, n).flush();
      std::lock_guard lock(tail_mutex_);
      tail_.append(buf, static_cast<std::size_t>(n));
      if (tail_.size() > options_.stderr_tail_bytes) {
        tail_.erase(0, tail_.size() - options_.stderr_tail_bytes);
      }
    }
  });

  try {
    const std::string line = read_line("handshake");
    json hello;
    try {
      hello = json::parse(line);
    } catch (const json::exception&) {
      throw EncoderError("encoder protocol error: handshake is not JSON: " + line);
    }
    if (!hello.is_object() || hello.value("type", "") != "hello" || !hello.contains("dim") ||
        !hello["dim"].is_number_unsigned() || hello["dim"].get<std::size_t>() == 0) {
      throw EncoderError("encoder protocol error: expected {\"type\":\"hello\",\"dim\":D}, got " + line);
    }
    dim_ = hello["dim"].get<std::size_t>();
  } catch (...) {
    kill_child();
    throw;
  }
}

SubprocessEncoder::~SubprocessEncoder() {
  try {
    shutdown();
  } catch (...) {
    kill_child();
  }
}

std::string SubprocessEncoder::stderr_tail() const {
  std::lock_guard lock(tail_mutex_);
  return tail_;
}

void SubprocessEncoder::write_line(const std::string& line) {
  std::string data = line;
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail_child_exit("writing request");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string SubprocessEncoder::read_line(const char* waiting_for) {
  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(options_.timeout_s));
  for (;;) {
    const std::size_t nl = read_buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = read_buffer_.substr(0, nl);
      read_buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (remaining <= 0) {
      kill_child();
      throw EncoderError("encoder timed out after " + std::to_string(options_.timeout_s) +
                         " s waiting for " + waiting_for);
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining, 1000)));
    if (rc < 0 && errno != EINTR) throw EncoderError("poll failed: " + std::string(std::strerror(errno)));
    if (rc <= 0) continue;
    char buf[65536];
    const ssize_t n = ::read(from_child_, buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw EncoderError("read from encoder failed: " + std::string(std::strerror(errno)));
    }
    if (n == 0) fail_child_exit(std::string("waiting for ") + waiting_for);
    read_buffer_.append(buf, static_cast<std::size_t>(n));
  }
}

std::optional<int> SubprocessEncoder::reap(double wait_s) {
  if (exit_code_) return exit_code_;
  if (pid_ <= 0) return std::nullopt;
  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(wait_s));
  for (;;) {
    int status = 0;
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      exit_code_ = status_to_code(status);
      return exit_code_;
    }
    if (r < 0 && errno != EINTR) return std::nullopt;
    if (Clock::now() >= deadline) return std::nullopt;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

void SubprocessEncoder::kill_child() {
  if (pid_ > 0 && !exit_code_) {
    ::kill(-pid_, SIGKILL);
    ::kill(pid_, SIGKILL);
    reap(5.0);
  }
  close_fd(to_child_);
  close_fd(from_child_);
  if (stderr_thread_.joinable()) stderr_thread_.join();
  close_fd(err_fd_);
}

void SubprocessEncoder::fail_child_exit(const std::string& context) {
  close_fd(to_child_);
  std::string status = "closed its output";
  if (const auto code = reap(2.0)) {
    status = "exited with code " + std::to_string(*code);
  }
  if (stderr_thread_.joinable()) stderr_thread_.join();
  kill_child();
  std::string msg = "encoder process " + status + " while " + context;
  const std::string tail = stderr_tail();
  if (!tail.empty()) msg += "; stderr tail:\n" + tail;
  throw EncoderError(msg);
}

Matrix SubprocessEncoder::encode_batch(std::span<const Tokens> batch) {
  if (to_child_ < 0) throw EncoderError("encoder process is not running");
  const std::uint64_t id = ++next_id_;
  json request = {{"type", "encode"}, {"id", id}, {"sentences", json::array()}};
  for (const auto& sentence : batch) request["sentences"].push_back(sentence);
  write_line(request.dump());

  const std::string line = read_line("embeddings");
  json reply;
  try {
    reply = json::parse(line);
  } catch (const json::exception&) {
    throw EncoderError("encoder protocol error: reply is not JSON: " + line.substr(0, 200));
  }
  if (!reply.is_object() || reply.value("type", "") != "embeddings") {
    throw EncoderError("encoder protocol error: unexpected message " + line.substr(0, 200));
  }
  if (!reply.contains("id") || !reply["id"].is_number_unsigned() || reply["id"].get<std::uint64_t>() != id) {
    throw EncoderError("encoder protocol error: reply id does not match request id " + std::to_string(id));
  }
  const auto& vectors = reply["vectors"];
  if (!vectors.is_array() || vectors.size() != batch.size()) {
    throw EncoderError("encoder protocol error: expected " + std::to_string(batch.size()) +
                       " vectors in reply " + std::to_string(id));
  }
  Matrix out(batch.size(), dim_);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto& row = vectors[i];
    if (!row.is_array() || row.size() != dim_) {
      throw EncoderError("encoder dim mismatch: handshake declared " + std::to_string(dim_) +
                         ", row " + std::to_string(i) + " has " +
                         std::to_string(row.is_array() ? row.size() : 0));
    }
    for (std::size_t j = 0; j < dim_; ++j) {
      if (!row[j].is_number()) throw EncoderError("encoder protocol error: non-numeric vector entry");
      out(i, j) = row[j].get<double>();
    }
  }
  return out;
}

int SubprocessEncoder::shutdown() {
  if (exit_code_) return *exit_code_;
  if (pid_ <= 0) return -1;
  if (to_child_ >= 0) {
    const std::string msg = json{{"type", "shutdown"}}.dump() + "\n";
    [[maybe_unused]] const ssize_t n = ::write(to_child_, msg.data(), msg.size());
    close_fd(to_child_);
  }
  const auto code = reap(5.0);
  if (!code) {
    kill_child();
    return exit_code_.value_or(-1);
  }
  close_fd(from_child_);
  if (stderr_thread_.joinable()) stderr_thread_.join();
  close_fd(err_fd_);
  return *code;
}

}  // namespace embeval
