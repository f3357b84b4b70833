#pragma once

#include <cstdint>
#include <vector>

#include "cassandra/bitstream.hpp"
#include "cassandra/container.hpp"
#include "cassandra/expcodec.hpp"
#include "cassandra/superblock.hpp"

namespace cassandra {

// Output of the parallel zero counter for one 8-bit chunk: for every 1-bit,
// the count of zeros since the previous 1 within the chunk, plus the total
// number of ones and the final bit.
struct ChunkResult {
  std::vector<std::uint32_t> zero_run_outputs;
  unsigned num_ones = 0;
  unsigned last_bit = 0;
};

ChunkResult parallel_zero_count(std::uint8_t chunk);

// Chunked three-phase unary decode: per-chunk zero counting, reorganization
// carrying the running zero sum across chunk boundaries, then codebook
// lookup. Output equals unary_decode_sequential.
std::vector<std::uint8_t> parallel_unary_decode(const Bitstream& bits,
                                                const UnaryCodebook& codebook,
                                                std::size_t count);

struct MxNormalizeResult {
  unsigned shift = 0;              // leading-zero count
  std::uint8_t normalized = 0;     // (m << shift) low 7 bits
  bool is_zero = false;
};

MxNormalizeResult mx_normalize(std::uint8_t shifted_mantissa);

// Everything streaming_decode needs besides the block sequence itself.
struct StreamingHeader {
  std::uint8_t mode = 1;
  std::uint64_t element_count = 0;
  std::uint64_t kept_count = 0;
  std::uint8_t spec_mantissa_bits = 7;
  UnaryCodebook codebook;       // mode 1
  std::uint16_t mx_block_size = kMxBlockSize;  // mode 2
  View view = View::target;

  static StreamingHeader from_container(const CassandraTensor& t, View view);
};

struct StreamingResult {
  std::vector<Bf16> values;
  std::size_t max_buffered_bytes = 0;  // worst per-type leftover across the run
};

// Consumes typed 128-byte blocks strictly in packed order, keeping one
// leftover buffer per stream type; produces output identical to
// decode_draft / decode_target. Throws FormatError("out-of-order block") when
// the arrival order violates the consumption model.
StreamingResult streaming_decode(const std::vector<TaggedBlock>& blocks,
                                 const StreamingHeader& header);

StreamingResult streaming_decode(const std::vector<Superblock>& sbs,
                                 const StreamingHeader& header);

}  // namespace cassandra
