#include "cml/bitstream.hpp"

#include "cml/errors.hpp"

namespace cml {

void stream_origin::set(std::string key, std::string value) {
  fields.emplace_back(std::move(key), std::move(value));
}

std::string stream_origin::to_key_value() const {
  std::string out;
  for (const auto& [k, v] : fields) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

void bit_stream::push_bit(int b) {
  const unsigned off = static_cast<unsigned>(n_bits_ % 8);
  if (off == 0) bytes_.push_back(0);
  bytes_.back() = static_cast<std::uint8_t>(bytes_.back() | ((b & 1) << (7 - off)));
  ++n_bits_;
}

void bit_stream::append_block(std::uint64_t w, int z, std::uint64_t count) {
  if (z < 1 || z > 64) throw domain_error("append_block: z must be in [1,64]");
  if (count > static_cast<std::uint64_t>(z))
    throw domain_error("append_block: count exceeds block width");
  for (std::uint64_t i = 0; i < count; ++i)
    push_bit(static_cast<int>((w >> (static_cast<std::uint64_t>(z) - 1 - i)) & 1u));
}

int bit_stream::bit(std::uint64_t i) const {
  if (i >= n_bits_) throw domain_error("bit_stream: index out of range");
  return (bytes_[static_cast<std::size_t>(i / 8)] >> (7 - i % 8)) & 1;
}

std::string bit_stream::to_ascii() const {
  std::string out;
  out.resize(static_cast<std::size_t>(n_bits_));
  for (std::uint64_t i = 0; i < n_bits_; ++i)
    out[static_cast<std::size_t>(i)] = static_cast<char>('0' + bit(i));
  return out;
}

bit_stream bit_stream::from_ascii(std::string_view text) {
  bit_stream bs;
  for (char c : text) {
    if (c != '0' && c != '1') throw domain_error("from_ascii: expected only '0'/'1'");
    bs.push_bit(c - '0');
  }
  return bs;
}

}  // namespace cml
