#include "cassandra/decoder_sim.hpp"

#include <algorithm>
#include <stdexcept>

namespace cassandra {

ChunkResult parallel_zero_count(std::uint8_t chunk) {
  ChunkResult r;
  unsigned cnt = 0;
  for (int j = 0; j < 8; ++j) {
    unsigned bit = (chunk >> (7 - j)) & 1u;
    if (bit == 0) {
      ++cnt;
    } else {
      r.zero_run_outputs.push_back(cnt);
      cnt = 0;
      ++r.num_ones;
    }
  }
  r.last_bit = chunk & 1u;
  return r;
}

std::vector<std::uint8_t> parallel_unary_decode(const Bitstream& bits,
                                                const UnaryCodebook& codebook,
                                                std::size_t count) {
  // Phase 1: slice into 8-bit chunks, count zero runs per chunk. The final
  // partial chunk is zero-padded on the right (Bitstream pads with zeros).
  std::size_t num_chunks = (bits.bit_size() + 7) / 8;
  std::vector<ChunkResult> chunks(num_chunks);
  std::vector<std::uint32_t> trailing(num_chunks);
  for (std::size_t i = 0; i < num_chunks; ++i) {
    std::uint8_t c = bits.bytes()[i];
    chunks[i] = parallel_zero_count(c);
    unsigned t = 0;
    while (t < 8 && ((c >> t) & 1u) == 0) ++t;
    trailing[i] = std::min(t, 8u);
  }

  // Phase 2: reorganization. A run spanning chunk boundaries is carried
  // forward and added to the first output of the next chunk holding a one;
  // chunks with no ones contribute their full 8 zeros to the carry.
  std::uint32_t carry = 0;
  for (std::size_t k = 0; k < num_chunks; ++k) {
    if (chunks[k].num_ones == 0) {
      carry += 8;
    } else {
      chunks[k].zero_run_outputs[0] += carry;
      carry = trailing[k];
    }
  }

  // Phase 3: codebook lookup, terminated by the symbol count.
  std::vector<std::uint8_t> out;
  out.reserve(count);
  for (std::size_t l = 0; l < num_chunks && out.size() < count; ++l) {
    for (std::uint32_t run : chunks[l].zero_run_outputs) {
      if (run >= codebook.size()) throw std::runtime_error("rank outside codebook");
      out.push_back(codebook.symbol(run));
      if (out.size() == count) break;
    }
  }
  if (out.size() < count) throw std::runtime_error("truncated stream");
  return out;
}

MxNormalizeResult mx_normalize(std::uint8_t shifted_mantissa) {
  if (shifted_mantissa == 0) return {0, 0, true};
  unsigned z = 0;
  while (((shifted_mantissa << z) & 0x80u) == 0) ++z;
  return {z, static_cast<std::uint8_t>((shifted_mantissa << z) & 0x7fu), false};
}

StreamingHeader StreamingHeader::from_container(const CassandraTensor& t, View view) {
  StreamingHeader h;
  h.mode = t.mode;
  h.element_count = t.element_count;
  h.kept_count = t.kept_count;
  h.spec_mantissa_bits = t.spec_mantissa_bits;
  h.codebook = t.codebook;
  h.mx_block_size = t.mx_block_size;
  h.view = view;
  return h;
}

namespace {

// Per-type leftover buffers fed by typed cache blocks pulled strictly in
// arrival order. A pull happens only when the requested stream runs dry, which
// mirrors the emission rule in superblock::pack.
class BlockFeeder {
 public:
  explicit BlockFeeder(const std::vector<TaggedBlock>& blocks) : blocks_(blocks) {}

  void pull(StreamType want) {
    if (next_ >= blocks_.size()) throw FormatError("truncated block sequence");
    if (blocks_[next_].type != want) throw FormatError("out-of-order block");
    std::size_t ti = static_cast<std::size_t>(want);
    buf_[ti].insert(buf_[ti].end(), blocks_[next_].data.begin(),
                    blocks_[next_].data.end());
    ++next_;
    std::size_t leftover = buf_[ti].size() - bitpos_[ti] / 8;
    max_buffered_ = std::max(max_buffered_, leftover);
    if (leftover > 2 * kCacheBlockBytes)
      throw FormatError("decoder buffer overflow");
  }

  unsigned read_bit(StreamType t) {
    std::size_t ti = static_cast<std::size_t>(t);
    if (bitpos_[ti] == buf_[ti].size() * 8) pull(t);
    unsigned bit = (buf_[ti][bitpos_[ti] / 8] >> (7 - bitpos_[ti] % 8)) & 1u;
    ++bitpos_[ti];
    return bit;
  }

  std::uint32_t read_bits(StreamType t, unsigned nbits) {
    std::uint32_t v = 0;
    for (unsigned i = 0; i < nbits; ++i) v = (v << 1) | read_bit(t);
    return v;
  }

  bool drained() const { return next_ == blocks_.size(); }
  std::size_t max_buffered() const { return max_buffered_; }

 private:
  const std::vector<TaggedBlock>& blocks_;
  std::size_t next_ = 0;
  std::vector<std::uint8_t> buf_[kStreamTypes];
  std::size_t bitpos_[kStreamTypes] = {};
  std::size_t max_buffered_ = 0;
};

}  // namespace

StreamingResult streaming_decode(const std::vector<TaggedBlock>& blocks,
                                 const StreamingHeader& h) {
  if (h.element_count == 0 || h.kept_count == 0 || h.kept_count > h.element_count)
    throw FormatError("bad header counts");
  bool target = h.view == View::target;
  unsigned low = 7u - h.spec_mantissa_bits;
  unsigned high = h.mode == 1 ? h.spec_mantissa_bits : h.spec_mantissa_bits + 1u;

  BlockFeeder feeder(blocks);
  // warm-up blocks arrive first, one per non-empty type in type order
  feeder.pull(StreamType::bitmap);
  feeder.pull(StreamType::signs);
  feeder.pull(StreamType::exponent);
  if (high > 0) feeder.pull(StreamType::mantissa_high);
  if (target && low > 0) feeder.pull(StreamType::mantissa_low);
  if (target && h.kept_count < h.element_count) feeder.pull(StreamType::pruned);

  std::vector<Bf16> out(h.element_count, Bf16{0});
  std::uint64_t kidx = 0;
  std::uint8_t shared = 0;
  for (std::uint64_t i = 0; i < h.element_count; ++i) {
    if (feeder.read_bit(StreamType::bitmap)) {
      if (kidx >= h.kept_count) throw FormatError("bitmap exceeds kept count");
      std::uint8_t sign = static_cast<std::uint8_t>(feeder.read_bit(StreamType::signs));
      std::uint8_t exponent = 0;
      if (h.mode == 1) {
        std::size_t zeros = 0;
        while (feeder.read_bit(StreamType::exponent) == 0)
          if (++zeros > h.codebook.size()) throw FormatError("corrupt unary stream");
        if (zeros >= h.codebook.size()) throw FormatError("rank outside codebook");
        exponent = h.codebook.symbol(zeros);
      } else if (kidx % h.mx_block_size == 0) {
        shared = static_cast<std::uint8_t>(feeder.read_bits(StreamType::exponent, 8));
      }
      std::uint8_t high_bits =
          high > 0 ? static_cast<std::uint8_t>(feeder.read_bits(StreamType::mantissa_high, high))
                   : 0;
      std::uint8_t low_bits =
          target && low > 0
              ? static_cast<std::uint8_t>(feeder.read_bits(StreamType::mantissa_low, low))
              : 0;
      if (h.mode == 1) {
        out[i] = compose(sign, exponent,
                         static_cast<std::uint8_t>((high_bits << low) | low_bits));
      } else {
        std::uint8_t sm = static_cast<std::uint8_t>((high_bits << low) | low_bits);
        out[i] = mx_decode_element(shared, sign, sm).value;
      }
      ++kidx;
    } else if (target) {
      std::uint32_t b0 = feeder.read_bits(StreamType::pruned, 8);
      std::uint32_t b1 = feeder.read_bits(StreamType::pruned, 8);
      out[i] = Bf16{static_cast<std::uint16_t>(b0 | (b1 << 8))};
    }
  }
  if (kidx != h.kept_count) throw FormatError("bitmap does not match kept count");
  if (!feeder.drained()) throw FormatError("unconsumed blocks");
  return {std::move(out), feeder.max_buffered()};
}

StreamingResult streaming_decode(const std::vector<Superblock>& sbs,
                                 const StreamingHeader& h) {
  std::vector<TaggedBlock> flat;
  for (std::size_t i = 0; i < sbs.size(); ++i) {
    if (sbs[i].index != i) throw FormatError("missing or duplicate superblock index");
    flat.insert(flat.end(), sbs[i].blocks.begin(), sbs[i].blocks.end());
  }
  return streaming_decode(flat, h);
}

}  // namespace cassandra
