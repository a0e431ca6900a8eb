#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>

#include "embeval/encoders.hpp"

namespace embeval {

struct SubprocessOptions {
  double timeout_s = 120.0;
  std::size_t stderr_tail_bytes = 4096;
  /// Copy the child's stderr to our stderr as it arrives.
  bool forward_stderr = true;
};

/// Encoder living in a child process (`/bin/sh -c command`), spoken to with
/// newline-delimited JSON over its stdin/stdout:
///
///   child  -> {"type":"hello","dim":D}
///   parent -> {"type":"encode","id":N,"sentences":[["tok",...],...]}
///   child  -> {"type":"embeddings","id":N,"vectors":[[f,...],...]}
///   parent -> {"type":"shutdown"}            (child exits 0)
///
/// One request is in flight at a time. Any unexpected line, a wrong id,
/// row count or dimension, a timeout, or the child exiting raises
/// EncoderError; child-exit errors carry the tail of its stderr.
class SubprocessEncoder final : public Encoder {
 public:
  explicit SubprocessEncoder(std::string command, SubprocessOptions options = {});
  ~SubprocessEncoder() override;

  SubprocessEncoder(const SubprocessEncoder&) = delete;
  SubprocessEncoder& operator=(const SubprocessEncoder&) = delete;

  Matrix encode_batch(std::span<const Tokens> batch) override;
  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "subprocess:" + command_; }
  bool shareable() const override { return false; }

  std::uint64_t requests_sent() const noexcept { return next_id_; }

  /// Sends the shutdown message and waits for the child. Returns its exit
  /// code (128 + signal when killed). Idempotent.
  int shutdown();

  std::string stderr_tail() const;

 private:
  std::string read_line(const char* waiting_for);
  void write_line(const std::string& line);
  [[noreturn]] void fail_child_exit(const std::string& context);
  std::optional<int> reap(double wait_s);
  void kill_child();

  std::string command_;
  SubprocessOptions options_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  int err_fd_ = -1;
  std::size_t dim_ = 0;
  std::uint64_t next_id_ = 0;
  std::optional<int> exit_code_;
  std::string read_buffer_;
  std::thread stderr_thread_;
  mutable std::mutex tail_mutex_;
  std::string tail_;
};

}  // namespace embeval
