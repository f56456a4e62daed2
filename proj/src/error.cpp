#include "gymlink/error.hpp"

#include <array>
#include <utility>

namespace gymlink {

namespace {

constexpr std::array<std::pair<Errc, std::string_view>, 21> kNames{{
    {Errc::PayloadTooLarge, "PayloadTooLarge"},
    {Errc::TruncatedFrame, "TruncatedFrame"},
    {Errc::MalformedBody, "MalformedBody"},
    {Errc::UnknownKind, "UnknownKind"},
    {Errc::UnknownService, "UnknownService"},
    {Errc::DeadlineExceeded, "DeadlineExceeded"},
    {Errc::ConnectionError, "ConnectionError"},
    {Errc::RemoteError, "RemoteError"},
    {Errc::InvalidArgument, "InvalidArgument"},
    {Errc::InvalidCommand, "InvalidCommand"},
    {Errc::ModelMismatch, "ModelMismatch"},
    {Errc::NotInitialized, "NotInitialized"},
    {Errc::InvalidState, "InvalidState"},
    {Errc::RejectedCommand, "RejectedCommand"},
    {Errc::ExecutionInterrupted, "ExecutionInterrupted"},
    {Errc::SpawnFailed, "SpawnFailed"},
    {Errc::UnknownHandle, "UnknownHandle"},
    {Errc::LayoutMismatch, "LayoutMismatch"},
    {Errc::ResetFailed, "ResetFailed"},
    {Errc::EpisodeAborted, "EpisodeAborted"},
    {Errc::Internal, "Internal"},
}};

}  // namespace

std::string_view to_string(Errc code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "Internal";
}

Errc errc_from_string(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  return Errc::RemoteError;
}

}  // namespace gymlink
