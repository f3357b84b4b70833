#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cassandra {

// Append-only bit buffer, MSB-first within each byte. This bit order is
// normative for the .cass file format; trailing pad bits are zero.
class Bitstream {
 public:
  void push_bit(unsigned bit) {
    std::size_t byte = bit_len_ / 8;
    if (byte == bytes_.size()) bytes_.push_back(0);
    if (bit & 1u) bytes_[byte] |= static_cast<std::uint8_t>(0x80u >> (bit_len_ % 8));
    ++bit_len_;
  }

  // pushes the low `nbits` of `value`, most significant first
  void push_bits(std::uint32_t value, unsigned nbits) {
    for (unsigned i = nbits; i-- > 0;) push_bit((value >> i) & 1u);
  }

  std::size_t bit_size() const { return bit_len_; }
  std::size_t byte_size() const { return bytes_.size(); }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  bool empty() const { return bit_len_ == 0; }

  static Bitstream from_bytes(std::vector<std::uint8_t> bytes, std::size_t bit_len) {
    if (bit_len > bytes.size() * 8) throw std::invalid_argument("bit_len exceeds bytes");
    Bitstream s;
    s.bytes_ = std::move(bytes);
    s.bit_len_ = bit_len;
    return s;
  }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bit_len_ = 0;
};

// Sequential MSB-first reader over a byte buffer.
class BitReader {
 public:
  BitReader(const std::uint8_t* data, std::size_t bit_len)
      : data_(data), bit_len_(bit_len) {}

  explicit BitReader(const Bitstream& s) : BitReader(s.bytes().data(), s.bit_size()) {}

  unsigned read_bit() {
    if (pos_ >= bit_len_) throw std::out_of_range("truncated stream");
    unsigned bit = (data_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
    ++pos_;
    return bit;
  }

  std::uint32_t read_bits(unsigned nbits) {
    std::uint32_t v = 0;
    for (unsigned i = 0; i < nbits; ++i) v = (v << 1) | read_bit();
    return v;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bit_len_ - pos_; }

 private:
  const std::uint8_t* data_;
  std::size_t bit_len_;
  std::size_t pos_ = 0;
};

}  // namespace cassandra
