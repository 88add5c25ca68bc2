#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"
#include "zle.hpp"

using namespace poolforge;

namespace {

// independent decoder used as the round-trip oracle
std::vector<uint8_t> oracle_decode(const std::vector<uint8_t>& enc) {
  std::vector<uint8_t> out;
  size_t i = 0;
  while (i < enc.size()) {
    uint8_t t = enc[i++];
    if (t < 0x80) {
      size_t n = size_t(t) + 1;
      REQUIRE(i + n <= enc.size());
      out.insert(out.end(), enc.begin() + i, enc.begin() + i + n);
      i += n;
    } else {
      out.insert(out.end(), size_t(t) - 0x80 + 1, 0);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("empty input encodes to nothing") {
  CHECK(compress_zle(std::vector<uint8_t>{}).empty());
  CHECK(decompress_zle(std::vector<uint8_t>{}, 0).empty());
}

TEST_CASE("token forms") {
  // 3 literals: control byte 0x02 then the bytes
  std::vector<uint8_t> lit{5, 6, 7};
  CHECK(compress_zle(lit) == std::vector<uint8_t>{0x02, 5, 6, 7});
  // 4 zeros: control byte 0x83
  std::vector<uint8_t> z(4, 0);
  CHECK(compress_zle(z) == std::vector<uint8_t>{0x83});
  // runs cap at 128
  std::vector<uint8_t> z200(200, 0);
  CHECK(compress_zle(z200) == std::vector<uint8_t>{0xFF, 0x80 + 71});
}

TEST_CASE("canonical greedy form: every zero is in a zero token") {
  Rng rng(101);
  for (int trial = 0; trial < 200; trial++) {
    size_t n = rng.next() % 1024;
    std::vector<uint8_t> data(n);
    for (auto& b : data) b = rng.next() % 4 == 0 ? 0 : uint8_t(rng.next() | 1);
    auto enc = compress_zle(data);
    size_t i = 0;
    while (i < enc.size()) {
      uint8_t t = enc[i++];
      if (t < 0x80) {
        for (size_t k = 0; k < size_t(t) + 1; k++) CHECK(enc[i + k] != 0);
        i += size_t(t) + 1;
      }
    }
    CHECK(oracle_decode(enc) == data);
    CHECK(decompress_zle(enc, data.size()) == data);
  }
}

TEST_CASE("round trip on adversarial shapes") {
  std::vector<std::vector<uint8_t>> cases = {
      std::vector<uint8_t>(1, 0),
      std::vector<uint8_t>(1, 9),
      std::vector<uint8_t>(128, 0),
      std::vector<uint8_t>(129, 0),
      std::vector<uint8_t>(128, 7),
      std::vector<uint8_t>(129, 7),
  };
  std::vector<uint8_t> alt;
  for (int i = 0; i < 300; i++) alt.push_back(i % 2 ? 0 : uint8_t(i));
  cases.push_back(alt);
  for (const auto& data : cases) {
    auto enc = compress_zle(data);
    CHECK(decompress_zle(enc, data.size()) == data);
    CHECK(oracle_decode(enc) == data);
  }
}

TEST_CASE("trailing padding beyond the final token is ignored") {
  std::vector<uint8_t> data{1, 2, 3};
  auto enc = compress_zle(data);
  enc.resize(enc.size() + 100, 0xAA);  // sector padding junk
  CHECK(decompress_zle(enc, 3) == data);
}

TEST_CASE("truncation and overshoot are corrupt-stream errors") {
  std::vector<uint8_t> data(64, 42);
  auto enc = compress_zle(data);
  auto cut = enc;
  cut.resize(enc.size() / 2);
  CHECK_THROWS_AS(decompress_zle(cut, 64), Error);
  // token says more bytes than logical_size allows
  std::vector<uint8_t> over{0x85};  // 6 zeros
  CHECK_THROWS_AS(decompress_zle(over, 3), Error);
  // literal token promising bytes past end of input
  std::vector<uint8_t> shortlit{0x05, 1, 2};
  CHECK_THROWS_AS(decompress_zle(shortlit, 6), Error);
  try {
    decompress_zle(shortlit, 6);
  } catch (const Error& e) {
    CHECK(e.code == Errc::corrupt_stream);
  }
}

TEST_CASE("compression never helps on incompressible data") {
  Rng rng(77);
  std::vector<uint8_t> data(4096);
  for (auto& b : data) b = uint8_t(rng.next() | 1);  // no zeros at all
  auto enc = compress_zle(data);
  CHECK(enc.size() > data.size());  // pure literal overhead
}

TEST_CASE("sha256 standard test vectors") {
  CHECK(hex(sha256("", 0)) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(hex(sha256("abc", 3)) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const char* msg = "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq";
  CHECK(hex(sha256(msg, 56)) ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  std::vector<uint8_t> million(1000000, 'a');
  CHECK(hex(sha256(million)) ==
        "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}
