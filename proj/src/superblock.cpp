#include "cassandra/superblock.hpp"

#include <algorithm>
#include <stdexcept>

namespace cassandra {

const char* stream_type_name(StreamType t) {
  switch (t) {
    case StreamType::bitmap: return "bitmap";
    case StreamType::signs: return "signs";
    case StreamType::exponent: return "exponent";
    case StreamType::mantissa_high: return "mantissa_high";
    case StreamType::mantissa_low: return "mantissa_low";
    case StreamType::pruned: return "pruned";
  }
  return "?";
}

StreamBytes container_streams(const CassandraTensor& t, View view) {
  StreamBytes s;
  s[0] = t.bitmap.bytes();
  s[1] = t.spec_signs.bytes();
  s[2] = t.mode == 1 ? t.spec_exponents.bytes() : t.mx_shared_exponents;
  s[3] = t.spec_mantissa_high.bytes();
  if (view == View::target) {
    s[4] = t.verify_mantissa_low.bytes();
    s[5] = t.verify_pruned;
  }
  return s;
}

std::array<std::size_t, kStreamTypes> stream_lengths(const CassandraTensor& t,
                                                     View view) {
  auto s = container_streams(t, view);
  std::array<std::size_t, kStreamTypes> lens{};
  for (std::size_t i = 0; i < kStreamTypes; ++i) lens[i] = s[i].size();
  return lens;
}

std::vector<std::uint32_t> exponent_bits_per_kept(const CassandraTensor& t) {
  std::vector<std::uint32_t> bits(t.kept_count, 0);
  if (t.mode == 1) {
    BitReader r(t.spec_exponents);
    for (std::uint64_t i = 0; i < t.kept_count; ++i) {
      std::uint32_t n = 1;
      while (r.read_bit() == 0) ++n;
      bits[i] = n;
    }
  } else {
    for (std::uint64_t i = 0; i < t.kept_count; i += t.mx_block_size) bits[i] = 8;
  }
  return bits;
}

namespace {

struct PackState {
  const StreamBytes& streams;
  std::vector<TaggedBlock>& out;
  std::size_t delivered[kStreamTypes] = {};      // stream bytes handed to the decoder
  std::uint64_t consumed_bits[kStreamTypes] = {};

  void emit(std::size_t ti) {
    const auto& bytes = streams[ti];
    TaggedBlock b;
    b.type = static_cast<StreamType>(ti);
    std::size_t n = std::min(kCacheBlockBytes, bytes.size() - delivered[ti]);
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(delivered[ti]), n,
                b.data.begin());
    delivered[ti] += n;
    out.push_back(std::move(b));
  }

  void need(StreamType t, std::uint64_t nbits) {
    if (nbits == 0) return;
    std::size_t ti = static_cast<std::size_t>(t);
    while (consumed_bits[ti] + nbits > 8ull * delivered[ti]) {
      if (delivered[ti] >= streams[ti].size())
        throw std::logic_error("stream accounting underflow");
      emit(ti);
    }
    consumed_bits[ti] += nbits;
  }
};

}  // namespace

std::vector<Superblock> pack(const CassandraTensor& t, View view,
                             std::size_t blocks_per_superblock) {
  if (blocks_per_superblock == 0)
    throw std::invalid_argument("blocks_per_superblock must be >= 1");
  StreamBytes streams = container_streams(t, view);
  std::vector<std::uint32_t> ebits = exponent_bits_per_kept(t);

  std::vector<TaggedBlock> flat;
  PackState st{streams, flat};

  // warm-up: one block per non-empty type so the decoder starts primed
  for (std::size_t ti = 0; ti < kStreamTypes; ++ti)
    if (!streams[ti].empty()) st.emit(ti);

  unsigned high = t.high_bits_per_elem();
  unsigned low = t.low_bits_per_elem();
  std::size_t kidx = 0;
  for (std::uint64_t i = 0; i < t.element_count; ++i) {
    st.need(StreamType::bitmap, 1);
    if (t.bitmap.get(i)) {
      st.need(StreamType::signs, 1);
      st.need(StreamType::exponent, ebits[kidx]);
      st.need(StreamType::mantissa_high, high);
      if (view == View::target) st.need(StreamType::mantissa_low, low);
      ++kidx;
    } else if (view == View::target) {
      st.need(StreamType::pruned, 16);
    }
  }
  for (std::size_t ti = 0; ti < kStreamTypes; ++ti)
    if (st.delivered[ti] != streams[ti].size())
      throw std::logic_error("stream not fully consumed by pack simulation");

  std::vector<Superblock> sbs;
  for (std::size_t b = 0; b < flat.size(); b += blocks_per_superblock) {
    Superblock sb;
    sb.index = static_cast<std::uint32_t>(sbs.size());
    std::size_t n = std::min(blocks_per_superblock, flat.size() - b);
    sb.blocks.assign(flat.begin() + static_cast<std::ptrdiff_t>(b),
                     flat.begin() + static_cast<std::ptrdiff_t>(b + n));
    sbs.push_back(std::move(sb));
  }
  return sbs;
}

StreamBytes unpack(const std::vector<Superblock>& sbs,
                   const std::array<std::size_t, kStreamTypes>& lens) {
  StreamBytes out;
  for (std::size_t i = 0; i < sbs.size(); ++i) {
    if (sbs[i].index != i) throw FormatError("missing or duplicate superblock index");
    for (const TaggedBlock& b : sbs[i].blocks) {
      std::size_t ti = static_cast<std::size_t>(b.type);
      if (ti >= kStreamTypes) throw FormatError("bad block tag");
      out[ti].insert(out[ti].end(), b.data.begin(), b.data.end());
    }
  }
  for (std::size_t ti = 0; ti < kStreamTypes; ++ti) {
    if (out[ti].size() < lens[ti]) throw FormatError("missing superblock data");
    out[ti].resize(lens[ti]);
  }
  return out;
}

std::vector<std::uint8_t> serialize_superblocks(const std::vector<Superblock>& sbs,
                                                std::size_t blocks_per_superblock) {
  std::vector<std::uint8_t> out;
  auto put_u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put_u32(static_cast<std::uint32_t>(sbs.size()));
  put_u32(static_cast<std::uint32_t>(blocks_per_superblock));
  for (const Superblock& sb : sbs) {
    out.push_back(static_cast<std::uint8_t>(sb.blocks.size()));
    for (const TaggedBlock& b : sb.blocks) {
      out.push_back(static_cast<std::uint8_t>(b.type));
      out.insert(out.end(), b.data.begin(), b.data.end());
    }
  }
  return out;
}

std::vector<Superblock> deserialize_superblocks(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto get_u32 = [&]() {
    if (pos + 4 > bytes.size()) throw FormatError("truncated superblock section");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
    return v;
  };
  std::uint32_t count = get_u32();
  get_u32();  // blocks_per_superblock, informational
  std::vector<Superblock> sbs;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (pos >= bytes.size()) throw FormatError("truncated superblock section");
    Superblock sb;
    sb.index = i;
    std::uint8_t nblocks = bytes[pos++];
    for (std::uint8_t b = 0; b < nblocks; ++b) {
      if (pos + 1 + kCacheBlockBytes > bytes.size())
        throw FormatError("truncated superblock section");
      TaggedBlock blk;
      if (bytes[pos] >= kStreamTypes) throw FormatError("bad block tag");
      blk.type = static_cast<StreamType>(bytes[pos++]);
      std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), kCacheBlockBytes,
                  blk.data.begin());
      pos += kCacheBlockBytes;
      sb.blocks.push_back(blk);
    }
    sbs.push_back(std::move(sb));
  }
  return sbs;
}

}  // namespace cassandra
