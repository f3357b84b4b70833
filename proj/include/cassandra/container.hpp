#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cassandra/bf16.hpp"
#include "cassandra/bitstream.hpp"
#include "cassandra/expcodec.hpp"
#include "cassandra/selection.hpp"

namespace cassandra {

// .cass format or stream corruption error; maps to CLI exit code 3.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// mode 1 = unary/lossless exponent coding, mode 2 = MX/lossy
struct DraftConfig {
  int mode = 1;
  double w_p = 0.4;   // weight prune fraction in [0, 1)
  double kv_p = 0.4;  // KV prune fraction in [0, 1)
  int w_t = 4;        // truncated weight mantissa bits in [0, 7]
  int kv_t = 4;       // truncated KV mantissa bits in [0, 7]
  int gamma = 4;      // draft length >= 1

  void validate() const;
};

// The encoded tensor: keep-bitmap plus speculation streams (signs, compressed
// exponents, high mantissa bits) and verification streams (low mantissa bits,
// untouched pruned values).
struct CassandraTensor {
  std::uint16_t version = 1;
  std::uint8_t mode = 1;
  std::vector<std::uint32_t> dims;
  std::uint64_t element_count = 0;  // N
  std::uint64_t kept_count = 0;     // K
  std::uint8_t spec_mantissa_bits = 7;  // m_s = 7 - trunc_bits
  UnaryCodebook codebook;               // mode 1 only
  std::uint16_t mx_block_size = kMxBlockSize;  // mode 2 only

  KeepBitmap bitmap;
  Bitstream spec_signs;          // K bits
  Bitstream spec_exponents;      // mode 1: unary stream
  std::vector<std::uint8_t> mx_shared_exponents;  // mode 2: ceil(K/32) bytes
  Bitstream spec_mantissa_high;  // K * m_s bits (mode 1) / K * (m_s+1) (mode 2)
  Bitstream verify_mantissa_low; // K * (7 - m_s) bits
  std::vector<std::uint8_t> verify_pruned;  // (N-K) raw LE BF16 values

  // bits stored in the high speculation slice per kept element
  unsigned high_bits_per_elem() const {
    return mode == 1 ? spec_mantissa_bits : spec_mantissa_bits + 1u;
  }
  unsigned low_bits_per_elem() const { return 7u - spec_mantissa_bits; }
};

// trunc_bits = mantissa bits moved to the verification side (t in [0,7]).
// Exponent compression runs before mantissa truncation. Denormal inputs are
// flushed to signed zero; Inf/NaN inputs are rejected.
CassandraTensor encode_tensor(std::span<const Bf16> values, const KeepBitmap& bitmap,
                              int mode, int trunc_bits,
                              std::vector<std::uint32_t> dims = {});

// Zero-padded reconstruction from the speculation streams only; pruned
// positions come back as +0.0.
std::vector<Bf16> decode_draft(const CassandraTensor& t);

// Full reconstruction. Mode 1 is bit-identical to the encoder input; mode 2
// carries only the MX shift loss on kept elements.
std::vector<Bf16> decode_target(const CassandraTensor& t);

struct CompressionStats {
  std::uint64_t spec_bits = 0;    // bitmap + signs + exponents + mantissa high
  std::uint64_t verify_bits = 0;  // mantissa low + pruned
  double spec_bits_per_elem = 0.0;
  double total_bits_per_elem = 0.0;
  double compression_ratio = 0.0;  // 16 / total_bits_per_elem
};

// Ratios come from actual stream lengths, excluding the header; the bitmap is
// counted as speculation cost since the draft pass must read it.
CompressionStats compression_stats(const CassandraTensor& t);

struct PackedSection;  // serialized superblocks, defined in superblock.hpp

void write_cass(std::ostream& os, const CassandraTensor& t,
                const std::vector<std::uint8_t>* packed_section = nullptr);
void write_cass_file(const std::string& path, const CassandraTensor& t,
                     const std::vector<std::uint8_t>* packed_section = nullptr);

struct CassFile {
  CassandraTensor tensor;
  std::optional<std::vector<std::uint8_t>> packed_section;
};

CassFile read_cass(std::istream& is);
CassFile read_cass_file(const std::string& path);

}  // namespace cassandra
