#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gymlink/error.hpp"

namespace gymlink {

// A payload value. Integers travel as doubles; non-finite numbers are written
// as null and read back as quiet NaN.
using Value = std::variant<bool, double, std::string, std::vector<double>>;
using Payload = std::map<std::string, Value>;

enum class MessageKind { Request, Response, Error };

std::string_view to_string(MessageKind kind);

struct Message {
  std::uint64_t id = 0;
  MessageKind kind = MessageKind::Request;
  std::string service;
  Payload payload;

  friend bool operator==(const Message&, const Message&) = default;
};

inline constexpr std::size_t kFrameHeaderSize = 4;
inline constexpr std::size_t kMaxBodySize = 16u * 1024u * 1024u;

// Canonical text form: sorted keys, no whitespace, shortest round-trip
// decimals. Shared by frame bodies, scene files and episode logs.
std::string to_canonical_text(const Payload& payload);
Payload payload_from_text(std::string_view text);
// Shortest round-trip decimal; non-finite values become "null".
std::string format_number(double v);

std::string encode_body(const Message& msg);
Message decode_body(std::string_view body);

std::string encode_frame(const Message& msg);

// Parses one frame from the front of `bytes`. `consumed` receives 4 + length.
Message decode_frame(std::string_view bytes, std::size_t* consumed = nullptr);

// Length announced by a 4-byte big-endian prefix.
std::uint32_t read_frame_length(std::string_view header);

// Typed accessors used by service handlers; they throw InvalidArgument when
// the key is missing or holds the wrong alternative.
double get_number(const Payload& p, const std::string& key);
const std::string& get_string(const Payload& p, const std::string& key);
bool get_bool(const Payload& p, const std::string& key);
const std::vector<double>& get_array(const Payload& p, const std::string& key);

}  // namespace gymlink
