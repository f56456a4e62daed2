#include <cmath>
#include <random>

#include "doctest.h"
#include "generators.hpp"
#include "support.hpp"
#include "gymlink/wire_protocol.hpp"

using namespace gymlink;

namespace {

Errc decode_error(std::string_view bytes) {
  try {
    decode_frame(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode_frame accepted the input");
  return Errc::Internal;
}

std::string frame_of(const std::string& body) {
  std::string out(4, '\0');
  const auto n = static_cast<std::uint32_t>(body.size());
  out[0] = static_cast<char>(n >> 24);
  out[1] = static_cast<char>(n >> 16);
  out[2] = static_cast<char>(n >> 8);
  out[3] = static_cast<char>(n);
  return out + body;
}

}  // namespace

TEST_SUITE("wire_protocol") {
  TEST_CASE("canonical body text") {
    const Message m{7, MessageKind::Request, "set_state", {{"desired", std::vector<double>{1.5, -0.0, 2}}, {"a", true}}};
    CHECK(encode_body(m) ==
          R"({"id":7,"kind":"request","payload":{"a":true,"desired":[1.5,-0.0,2]},"service":"set_state"})");
    CHECK(encode_body({1, MessageKind::Response, "health", {}}) ==
          R"({"id":1,"kind":"response","payload":{},"service":"health"})");
  }

  TEST_CASE("frame header is big-endian body length") {
    const std::string f = encode_frame({3, MessageKind::Request, "x", {}});
    REQUIRE(f.size() > 4);
    CHECK(read_frame_length(f.substr(0, 4)) == f.size() - 4);
    CHECK(f[0] == 0);
    CHECK(static_cast<unsigned char>(f[3]) == f.size() - 4);
  }

  TEST_CASE("numbers round-trip bit for bit") {
    for (double d : {0.1, -0.0, 1e-310, 5e-324, 1.7976931348623157e308, 2.0 / 3.0}) {
      const Message back = decode_body(encode_body({1, MessageKind::Response, "s", {{"v", d}}}));
      CHECK(testing::same_bits(std::get<double>(back.payload.at("v")), d));
    }
  }

  TEST_CASE("non-finite numbers become null and read back as NaN") {
    const std::string body = encode_body({1, MessageKind::Response, "s", {{"v", std::nan("")}, {"w", INFINITY}}});
    CHECK(body.find(R"("v":null)") != std::string::npos);
    CHECK(body.find(R"("w":null)") != std::string::npos);
    const Message back = decode_body(body);
    CHECK(std::isnan(std::get<double>(back.payload.at("v"))));
    CHECK(std::isnan(std::get<double>(back.payload.at("w"))));
  }

  TEST_CASE("random messages survive encode/decode") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
      const Message m = testing::any_message(rng);
      std::size_t used = 0;
      const std::string f = encode_frame(m);
      CHECK(testing::same_message(decode_frame(f, &used), m));
      CHECK(used == f.size());
    }
  }

  TEST_CASE("decode_frame consumes one frame of a stream") {
    const std::string a = encode_frame({1, MessageKind::Request, "a", {}});
    const std::string b = encode_frame({2, MessageKind::Request, "b", {}});
    std::size_t used = 0;
    CHECK(decode_frame(a + b, &used).service == "a");
    CHECK(used == a.size());
  }

  TEST_CASE("framing errors") {
    const std::string good = encode_frame({1, MessageKind::Request, "get_state", {}});
    CHECK(decode_error(good.substr(0, 2)) == Errc::TruncatedFrame);
    CHECK(decode_error(good.substr(0, good.size() - 1)) == Errc::TruncatedFrame);
    CHECK(decode_error(std::string("\x01\x00\x00\x01", 4)) == Errc::PayloadTooLarge);
    CHECK(decode_error(frame_of("{not json")) == Errc::MalformedBody);
    CHECK(decode_error(frame_of("[]")) == Errc::MalformedBody);
    CHECK(decode_error(frame_of(R"({"id":1,"kind":"request","payload":{}})")) == Errc::MalformedBody);
    CHECK(decode_error(frame_of(R"({"id":1,"kind":"request","payload":{},"service":"s","x":1})")) ==
          Errc::MalformedBody);
    CHECK(decode_error(frame_of(R"({"id":-1,"kind":"request","payload":{},"service":"s"})")) == Errc::MalformedBody);
    CHECK(decode_error(frame_of(R"({"id":1,"kind":"request","payload":{"v":{}},"service":"s"})")) ==
          Errc::MalformedBody);
    CHECK(decode_error(frame_of(R"({"id":1,"kind":"notify","payload":{},"service":"s"})")) == Errc::UnknownKind);
    CHECK(decode_error(frame_of("\xff\xfe")) == Errc::MalformedBody);
  }

  TEST_CASE("oversized messages are refused on encode") {
    Message m{1, MessageKind::Request, "s", {{"v", std::string(kMaxBodySize, 'x')}}};
    CHECK_THROWS_AS(encode_frame(m), Error);
  }

  TEST_CASE("typed accessors") {
    const Payload p{{"n", 2.5}, {"s", std::string("x")}, {"b", false}, {"a", std::vector<double>{1}}};
    CHECK(get_number(p, "n") == 2.5);
    CHECK(get_string(p, "s") == "x");
    CHECK(get_bool(p, "b") == false);
    CHECK(get_array(p, "a").size() == 1);
    CHECK_THROWS_AS(get_number(p, "s"), Error);
    CHECK_THROWS_AS(get_number(p, "missing"), Error);
  }
}
