#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cml {

// Provenance of a generated stream: everything needed to regenerate it.
struct stream_origin {
  std::vector<std::pair<std::string, std::string>> fields;

  void set(std::string key, std::string value);
  // key=value lines, one field per line.
  std::string to_key_value() const;
};

// Packed bit sequence; bit 0 is emitted first and packs into the MSB of byte 0.
class bit_stream {
 public:
  void push_bit(int b);
  // Append the first `count` of the z bits of w (w_1 = bit z-1 of the word, i.e.
  // most significant fractional bit first).
  void append_block(std::uint64_t w, int z, std::uint64_t count);

  int bit(std::uint64_t i) const;
  std::uint64_t size() const { return n_bits_; }
  // Packed bytes, MSB-first; trailing bits of the last byte are zero.
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

  std::string to_ascii() const;  // '0'/'1' per bit, no separators
  static bit_stream from_ascii(std::string_view text);

  stream_origin origin;

 private:
  std::vector<std::uint8_t> bytes_;
  std::uint64_t n_bits_ = 0;
};

}  // namespace cml
