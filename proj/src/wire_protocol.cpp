#include "gymlink/wire_protocol.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace gymlink {

namespace {

using json = nlohmann::json;

void append_number(std::string& out, double v) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  if (v == 0.0 && std::signbit(v)) {
    // "-0" would read back as the integer 0.
    out += "-0.0";
    return;
  }
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), end);
}

void append_string(std::string& out, const std::string& s) {
  try {
    out += json(s).dump();
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedBody, std::string("string is not valid UTF-8: ") + e.what());
  }
}

void append_value(std::string& out, const Value& value) {
  std::visit(
      [&out](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, bool>) {
          out += v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          append_number(out, v);
        } else if constexpr (std::is_same_v<T, std::string>) {
          append_string(out, v);
        } else {
          out += '[';
          for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ',';
            append_number(out, v[i]);
          }
          out += ']';
        }
      },
      value);
}

void append_payload(std::string& out, const Payload& payload) {
  out += '{';
  bool first = true;
  // std::map iterates in lexicographic key order.
  for (const auto& [key, value] : payload) {
    if (!first) out += ',';
    first = false;
    append_string(out, key);
    out += ':';
    append_value(out, value);
  }
  out += '}';
}

double number_from_json(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_number()) return j.get<double>();
  throw Error(Errc::MalformedBody, "expected a number, got " + std::string(j.type_name()));
}

Value value_from_json(const json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) {
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& e : j) out.push_back(number_from_json(e));
    return out;
  }
  return number_from_json(j);
}

Payload payload_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::MalformedBody, "payload is not an object");
  Payload out;
  for (const auto& [key, value] : j.items()) out.emplace(key, value_from_json(value));
  return out;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedBody, e.what());
  }
}

MessageKind kind_from_string(const std::string& s) {
  if (s == "request") return MessageKind::Request;
  if (s == "response") return MessageKind::Response;
  if (s == "error") return MessageKind::Error;
  throw Error(Errc::UnknownKind, "unknown message kind '" + s + "'");
}

}  // namespace

std::string format_number(double v) {
  std::string out;
  append_number(out, v);
  return out;
}

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::Request:
      return "request";
    case MessageKind::Response:
      return "response";
    case MessageKind::Error:
      return "error";
  }
  return "request";
}

std::string to_canonical_text(const Payload& payload) {
  std::string out;
  append_payload(out, payload);
  return out;
}

Payload payload_from_text(std::string_view text) { return payload_from_json(parse_json(text)); }

std::string encode_body(const Message& msg) {
  // Keys in lexicographic order: id, kind, payload, service.
  std::string out = "{\"id\":";
  std::array<char, 24> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), msg.id);
  out.append(buf.data(), end);
  out += ",\"kind\":\"";
  out += to_string(msg.kind);
  out += "\",\"payload\":";
  append_payload(out, msg.payload);
  out += ",\"service\":";
  append_string(out, msg.service);
  out += '}';
  return out;
}

Message decode_body(std::string_view body) {
  const json j = parse_json(body);
  if (!j.is_object()) throw Error(Errc::MalformedBody, "body is not an object");
  for (const char* key : {"id", "kind", "service", "payload"}) {
    if (!j.contains(key)) throw Error(Errc::MalformedBody, std::string("missing key '") + key + "'");
  }
  if (j.size() != 4) throw Error(Errc::MalformedBody, "body must have exactly four keys");

  const json& id = j["id"];
  if (!id.is_number_unsigned() && !(id.is_number_integer() && id.get<std::int64_t>() >= 0)) {
    throw Error(Errc::MalformedBody, "id must be an unsigned integer");
  }
  if (!j["kind"].is_string()) throw Error(Errc::MalformedBody, "kind must be a string");
  if (!j["service"].is_string()) throw Error(Errc::MalformedBody, "service must be a string");

  Message msg;
  msg.id = id.get<std::uint64_t>();
  msg.kind = kind_from_string(j["kind"].get<std::string>());
  msg.service = j["service"].get<std::string>();
  msg.payload = payload_from_json(j["payload"]);
  return msg;
}

std::string encode_frame(const Message& msg) {
  const std::string body = encode_body(msg);
  if (body.size() > kMaxBodySize) {
    throw Error(Errc::PayloadTooLarge, "body of " + std::to_string(body.size()) + " bytes");
  }
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(kFrameHeaderSize + body.size());
  out += static_cast<char>((n >> 24) & 0xff);
  out += static_cast<char>((n >> 16) & 0xff);
  out += static_cast<char>((n >> 8) & 0xff);
  out += static_cast<char>(n & 0xff);
  out += body;
  return out;
}

std::uint32_t read_frame_length(std::string_view header) {
  if (header.size() < kFrameHeaderSize) throw Error(Errc::TruncatedFrame, "incomplete length prefix");
  std::uint32_t n = 0;
  for (std::size_t i = 0; i < kFrameHeaderSize; ++i) {
    n = (n << 8) | static_cast<std::uint8_t>(header[i]);
  }
  if (n > kMaxBodySize) throw Error(Errc::PayloadTooLarge, "declared body of " + std::to_string(n) + " bytes");
  return n;
}

Message decode_frame(std::string_view bytes, std::size_t* consumed) {
  const std::uint32_t n = read_frame_length(bytes);
  if (bytes.size() - kFrameHeaderSize < n) {
    throw Error(Errc::TruncatedFrame, "declared " + std::to_string(n) + " bytes, have " +
                                          std::to_string(bytes.size() - kFrameHeaderSize));
  }
  Message msg = decode_body(bytes.substr(kFrameHeaderSize, n));
  if (consumed) *consumed = kFrameHeaderSize + n;
  return msg;
}

namespace {

const Value& lookup(const Payload& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) throw Error(Errc::InvalidArgument, "missing field '" + key + "'");
  return it->second;
}

template <typename T>
const T& lookup_as(const Payload& p, const std::string& key, const char* type) {
  const T* v = std::get_if<T>(&lookup(p, key));
  if (!v) throw Error(Errc::InvalidArgument, "field '" + key + "' is not " + type);
  return *v;
}

}  // namespace

double get_number(const Payload& p, const std::string& key) { return lookup_as<double>(p, key, "a number"); }

const std::string& get_string(const Payload& p, const std::string& key) {
  return lookup_as<std::string>(p, key, "a string");
}

bool get_bool(const Payload& p, const std::string& key) { return lookup_as<bool>(p, key, "a boolean"); }

const std::vector<double>& get_array(const Payload& p, const std::string& key) {
  return lookup_as<std::vector<double>>(p, key, "an array");
}

}  // namespace gymlink
