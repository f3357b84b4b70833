#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cassandra/container.hpp"

namespace cassandra {

enum class StreamType : std::uint8_t {
  bitmap = 0,
  signs = 1,
  exponent = 2,
  mantissa_high = 3,
  mantissa_low = 4,
  pruned = 5,
};

inline constexpr std::size_t kStreamTypes = 6;
inline constexpr std::size_t kCacheBlockBytes = 128;
inline constexpr std::size_t kBlocksPerSuperblock = 8;

const char* stream_type_name(StreamType t);

enum class View { draft, target };

// One 128-byte cache block tagged with the stream it carries. Partial final
// blocks are zero-padded to 128 bytes.
struct TaggedBlock {
  StreamType type;
  std::array<std::uint8_t, kCacheBlockBytes> data{};
};

struct Superblock {
  std::uint32_t index = 0;
  std::vector<TaggedBlock> blocks;
};

// Raw section bytes per stream type, in StreamType order. Draft view carries
// only the speculation streams.
using StreamBytes = std::array<std::vector<std::uint8_t>, kStreamTypes>;

StreamBytes container_streams(const CassandraTensor& t, View view);

// Bits each kept element's exponent occupies (mode 1: rank + 1; mode 2: 8 at
// each MX block start, 0 elsewhere).
std::vector<std::uint32_t> exponent_bits_per_kept(const CassandraTensor& t);

// Packs the streams into typed 128-byte blocks ordered by a simulated
// element-order consumption: one block per non-empty type up front, then the
// next block of type tau whenever the modeled decoder's buffer for tau would
// underflow.
std::vector<Superblock> pack(const CassandraTensor& t, View view,
                             std::size_t blocks_per_superblock = kBlocksPerSuperblock);

// Concatenates same-type blocks in arrival order; validates the superblock
// index sequence and trims tail padding using the per-type stream lengths.
StreamBytes unpack(const std::vector<Superblock>& sbs,
                   const std::array<std::size_t, kStreamTypes>& stream_lengths);

std::array<std::size_t, kStreamTypes> stream_lengths(const CassandraTensor& t,
                                                     View view);

// serialized form appended to .cass: u32 superblock count, then per block a
// 1-byte type tag preceding 128 data bytes
std::vector<std::uint8_t> serialize_superblocks(const std::vector<Superblock>& sbs,
                                                std::size_t blocks_per_superblock =
                                                    kBlocksPerSuperblock);
std::vector<Superblock> deserialize_superblocks(const std::vector<std::uint8_t>& bytes);

}  // namespace cassandra
