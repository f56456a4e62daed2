#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gymlink {

// Every failure the framework reports. The names travel over the wire inside
// error-kind messages, so they are part of the protocol.
enum class Errc {
  PayloadTooLarge,
  TruncatedFrame,
  MalformedBody,
  UnknownKind,
  UnknownService,
  DeadlineExceeded,
  ConnectionError,
  RemoteError,
  InvalidArgument,
  InvalidCommand,
  ModelMismatch,
  NotInitialized,
  InvalidState,
  RejectedCommand,
  ExecutionInterrupted,
  SpawnFailed,
  UnknownHandle,
  LayoutMismatch,
  ResetFailed,
  EpisodeAborted,
  Internal,
};

std::string_view to_string(Errc code);
Errc errc_from_string(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace gymlink
