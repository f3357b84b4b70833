#include "cassandra/container.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace cassandra {

void DraftConfig::validate() const {
  if (mode != 1 && mode != 2) throw std::invalid_argument("mode must be 1 or 2");
  if (!(w_p >= 0.0 && w_p < 1.0)) throw std::invalid_argument("w_p must be in [0, 1)");
  if (!(kv_p >= 0.0 && kv_p < 1.0)) throw std::invalid_argument("kv_p must be in [0, 1)");
  if (w_t < 0 || w_t > 7) throw std::invalid_argument("w_t must be in [0, 7]");
  if (kv_t < 0 || kv_t > 7) throw std::invalid_argument("kv_t must be in [0, 7]");
  if (gamma < 1) throw std::invalid_argument("gamma must be >= 1");
}

CassandraTensor encode_tensor(std::span<const Bf16> values, const KeepBitmap& bitmap,
                              int mode, int trunc_bits,
                              std::vector<std::uint32_t> dims) {
  if (mode != 1 && mode != 2) throw std::invalid_argument("mode must be 1 or 2");
  if (trunc_bits < 0 || trunc_bits > 7)
    throw std::invalid_argument("trunc_bits must be in [0, 7]");
  if (bitmap.size() != values.size())
    throw std::invalid_argument("bitmap length does not match tensor");
  if (values.empty()) throw std::invalid_argument("empty tensor");
  if (bitmap.kept_count() == 0)
    throw std::invalid_argument("at least one element must be kept");

  CassandraTensor t;
  t.mode = static_cast<std::uint8_t>(mode);
  t.dims = dims.empty()
               ? std::vector<std::uint32_t>{static_cast<std::uint32_t>(values.size())}
               : std::move(dims);
  t.element_count = values.size();
  t.kept_count = bitmap.kept_count();
  t.spec_mantissa_bits = static_cast<std::uint8_t>(7 - trunc_bits);
  t.bitmap = bitmap;

  std::vector<Bf16> kept;
  kept.reserve(t.kept_count);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (is_inf_or_nan(values[i])) throw std::invalid_argument("non-finite");
    Bf16 v = flush_denormal(values[i]);
    if (bitmap.get(i)) {
      kept.push_back(v);
    } else {
      t.verify_pruned.push_back(static_cast<std::uint8_t>(v.bits & 0xff));
      t.verify_pruned.push_back(static_cast<std::uint8_t>(v.bits >> 8));
    }
  }

  unsigned low = t.low_bits_per_elem();
  std::uint8_t low_mask = static_cast<std::uint8_t>((1u << low) - 1u);

  if (mode == 1) {
    std::vector<std::uint8_t> exps;
    exps.reserve(kept.size());
    for (Bf16 v : kept) exps.push_back(decompose(v).exponent);
    t.codebook = UnaryCodebook::build(exps);
    t.spec_exponents = unary_encode(exps, t.codebook);
    for (Bf16 v : kept) {
      auto f = decompose(v);
      t.spec_signs.push_bit(f.sign);
      t.spec_mantissa_high.push_bits(f.mantissa >> low, t.spec_mantissa_bits);
      t.verify_mantissa_low.push_bits(f.mantissa & low_mask, low);
    }
  } else {
    for (std::size_t b = 0; b < kept.size(); b += t.mx_block_size) {
      std::size_t n = std::min<std::size_t>(t.mx_block_size, kept.size() - b);
      MxBlock block = mx_encode_block({kept.data() + b, n});
      t.mx_shared_exponents.push_back(block.shared_exponent);
      for (const MxElement& e : block.elements) {
        t.spec_signs.push_bit(e.sign);
        t.spec_mantissa_high.push_bits(e.shifted_mantissa >> low,
                                       t.high_bits_per_elem());
        t.verify_mantissa_low.push_bits(e.shifted_mantissa & low_mask, low);
      }
    }
  }
  return t;
}

namespace {

void check_container(const CassandraTensor& t) {
  if (t.mode != 1 && t.mode != 2) throw FormatError("bad mode");
  if (t.bitmap.size() != t.element_count || t.bitmap.kept_count() != t.kept_count)
    throw FormatError("bitmap does not match header counts");
  if (t.spec_signs.bit_size() != t.kept_count) throw FormatError("bad signs length");
}

std::vector<Bf16> decode_impl(const CassandraTensor& t, bool target_view) {
  check_container(t);
  unsigned low = t.low_bits_per_elem();
  unsigned high = t.high_bits_per_elem();

  std::vector<std::uint8_t> exps;
  if (t.mode == 1)
    exps = unary_decode_sequential(t.spec_exponents, t.codebook, t.kept_count);
  else if (t.mx_shared_exponents.size() !=
           (t.kept_count + t.mx_block_size - 1) / t.mx_block_size)
    throw FormatError("bad shared exponent count");

  BitReader signs(t.spec_signs);
  BitReader highs(t.spec_mantissa_high);
  BitReader lows(t.verify_mantissa_low);

  std::vector<Bf16> out(t.element_count, Bf16{0});
  std::size_t kidx = 0;
  std::size_t pidx = 0;
  for (std::size_t i = 0; i < t.element_count; ++i) {
    if (t.bitmap.get(i)) {
      std::uint8_t sign = static_cast<std::uint8_t>(signs.read_bit());
      std::uint8_t high_bits = static_cast<std::uint8_t>(highs.read_bits(high));
      std::uint8_t low_bits =
          target_view && low > 0 ? static_cast<std::uint8_t>(lows.read_bits(low)) : 0;
      if (t.mode == 1) {
        std::uint8_t mantissa =
            static_cast<std::uint8_t>((high_bits << low) | low_bits);
        out[i] = compose(sign, exps[kidx], mantissa);
      } else {
        std::uint8_t sm = static_cast<std::uint8_t>((high_bits << low) | low_bits);
        std::uint8_t shared = t.mx_shared_exponents[kidx / t.mx_block_size];
        out[i] = mx_decode_element(shared, sign, sm).value;
      }
      ++kidx;
    } else if (target_view) {
      if (pidx + 1 >= t.verify_pruned.size()) throw FormatError("pruned section short");
      out[i] = Bf16{static_cast<std::uint16_t>(
          t.verify_pruned[pidx] | (t.verify_pruned[pidx + 1] << 8))};
      pidx += 2;
    }
  }
  return out;
}

}  // namespace

std::vector<Bf16> decode_draft(const CassandraTensor& t) { return decode_impl(t, false); }

std::vector<Bf16> decode_target(const CassandraTensor& t) { return decode_impl(t, true); }

CompressionStats compression_stats(const CassandraTensor& t) {
  CompressionStats s;
  std::uint64_t exp_bits = t.mode == 1 ? t.spec_exponents.bit_size()
                                       : 8ull * t.mx_shared_exponents.size();
  s.spec_bits = t.element_count + t.kept_count + exp_bits +
                t.kept_count * t.high_bits_per_elem();
  s.verify_bits = t.kept_count * t.low_bits_per_elem() +
                  (t.element_count - t.kept_count) * 16ull;
  double n = static_cast<double>(t.element_count);
  s.spec_bits_per_elem = static_cast<double>(s.spec_bits) / n;
  s.total_bits_per_elem = static_cast<double>(s.spec_bits + s.verify_bits) / n;
  s.compression_ratio = 16.0 / s.total_bits_per_elem;
  return s;
}

// ---------------------------------------------------------------------------
// .cass serialization. All multi-byte integers little-endian; bitstreams
// MSB-first. Sections in order: bitmap, spec_signs, spec_exponents,
// spec_mantissa_high, verify_mantissa_low, verify_pruned; optional packed
// superblock section flagged in the header.

namespace {

constexpr std::uint8_t kFlagPacked = 0x01;

void put_u16(std::ostream& os, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  os.write(b, 2);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

std::uint64_t get_uint(std::istream& is, int nbytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < nbytes; ++i) {
    int c = is.get();
    if (c == EOF) throw FormatError("truncated header");
    v |= static_cast<std::uint64_t>(c) << (8 * i);
  }
  return v;
}

void put_bytes(std::ostream& os, const std::vector<std::uint8_t>& b) {
  os.write(reinterpret_cast<const char*>(b.data()),
           static_cast<std::streamsize>(b.size()));
}

std::vector<std::uint8_t> get_bytes(std::istream& is, std::uint64_t n) {
  std::vector<std::uint8_t> b(n);
  is.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::uint64_t>(is.gcount()) != n) throw FormatError("truncated section");
  return b;
}

}  // namespace

void write_cass(std::ostream& os, const CassandraTensor& t,
                const std::vector<std::uint8_t>* packed_section) {
  check_container(t);
  const std::vector<std::uint8_t>* sections[6] = {
      &t.bitmap.bytes(),
      &t.spec_signs.bytes(),
      t.mode == 1 ? &t.spec_exponents.bytes() : &t.mx_shared_exponents,
      &t.spec_mantissa_high.bytes(),
      &t.verify_mantissa_low.bytes(),
      &t.verify_pruned,
  };

  std::uint64_t header_size = 4 + 2 + 1 + 1 + 1 + 4ull * t.dims.size() + 8 + 8 + 1 +
                              1 + 2 +
                              (t.mode == 1 ? t.codebook.size() : 0) + 6 * 8 +
                              (packed_section ? 16 : 0);

  os.write("CASS", 4);
  put_u16(os, t.version);
  os.put(static_cast<char>(t.mode));
  os.put(0);  // dtype: bf16
  os.put(static_cast<char>(t.dims.size()));
  for (std::uint32_t d : t.dims) put_u32(os, d);
  put_u64(os, t.element_count);
  put_u64(os, t.kept_count);
  os.put(static_cast<char>(t.spec_mantissa_bits));
  os.put(static_cast<char>(packed_section ? kFlagPacked : 0));
  if (t.mode == 1) {
    put_u16(os, static_cast<std::uint16_t>(t.codebook.size()));
    put_bytes(os, t.codebook.ranked_symbols());
  } else {
    put_u16(os, t.mx_block_size);
  }

  std::uint64_t off = header_size;
  for (const auto* sec : sections) {
    put_u64(os, off);
    off += sec->size();
  }
  if (packed_section) {
    put_u64(os, off);
    put_u64(os, packed_section->size());
  }
  for (const auto* sec : sections) put_bytes(os, *sec);
  if (packed_section) put_bytes(os, *packed_section);
}

CassFile read_cass(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::string(magic, 4) != "CASS") throw FormatError("bad magic");

  CassandraTensor t;
  t.version = static_cast<std::uint16_t>(get_uint(is, 2));
  if (t.version != 1) throw FormatError("unsupported version");
  t.mode = static_cast<std::uint8_t>(get_uint(is, 1));
  if (t.mode != 1 && t.mode != 2) throw FormatError("bad mode");
  std::uint8_t dtype = static_cast<std::uint8_t>(get_uint(is, 1));
  if (dtype != 0) throw FormatError("unsupported dtype");
  std::uint8_t rank = static_cast<std::uint8_t>(get_uint(is, 1));
  for (int i = 0; i < rank; ++i)
    t.dims.push_back(static_cast<std::uint32_t>(get_uint(is, 4)));
  t.element_count = get_uint(is, 8);
  t.kept_count = get_uint(is, 8);
  t.spec_mantissa_bits = static_cast<std::uint8_t>(get_uint(is, 1));
  if (t.spec_mantissa_bits > 7) throw FormatError("bad mantissa split");
  std::uint8_t flags = static_cast<std::uint8_t>(get_uint(is, 1));

  std::uint16_t aux = static_cast<std::uint16_t>(get_uint(is, 2));
  if (t.mode == 1) {
    t.codebook = UnaryCodebook::from_ranked(get_bytes(is, aux));
  } else {
    if (aux == 0) throw FormatError("bad MX block size");
    t.mx_block_size = aux;
  }

  std::uint64_t offsets[6];
  for (auto& o : offsets) o = get_uint(is, 8);
  std::uint64_t packed_off = 0, packed_len = 0;
  if (flags & kFlagPacked) {
    packed_off = get_uint(is, 8);
    packed_len = get_uint(is, 8);
  }

  std::uint64_t n = t.element_count, k = t.kept_count;
  if (k > n || k == 0 || n == 0) throw FormatError("bad element counts");
  if (offsets[3] < offsets[2] || offsets[3] - offsets[2] > (256ull * k + 7) / 8)
    throw FormatError("bad section offsets");
  std::uint64_t lens[6] = {
      (n + 7) / 8,
      (k + 7) / 8,
      t.mode == 1 ? offsets[3] - offsets[2]
                  : (k + t.mx_block_size - 1) / t.mx_block_size,
      (k * t.high_bits_per_elem() + 7) / 8,
      (k * t.low_bits_per_elem() + 7) / 8,
      (n - k) * 2,
  };
  for (int i = 0; i < 5; ++i)
    if (offsets[i] + lens[i] != offsets[i + 1]) throw FormatError("bad section offsets");

  t.bitmap = KeepBitmap::from_bytes(get_bytes(is, lens[0]), n);
  if (t.bitmap.kept_count() != k) throw FormatError("bitmap does not match header counts");
  t.spec_signs = Bitstream::from_bytes(get_bytes(is, lens[1]), k);
  if (t.mode == 1) {
    auto exp_bytes = get_bytes(is, lens[2]);
    Bitstream raw = Bitstream::from_bytes(exp_bytes, exp_bytes.size() * 8);
    // recover the exact bit length by decoding K codewords
    BitReader r(raw);
    for (std::uint64_t i = 0; i < k; ++i) {
      while (true) {
        if (r.remaining() == 0) throw FormatError("truncated unary stream");
        if (r.read_bit()) break;
      }
    }
    t.spec_exponents = Bitstream::from_bytes(std::move(exp_bytes), r.position());
  } else {
    t.mx_shared_exponents = get_bytes(is, lens[2]);
  }
  t.spec_mantissa_high =
      Bitstream::from_bytes(get_bytes(is, lens[3]), k * t.high_bits_per_elem());
  t.verify_mantissa_low =
      Bitstream::from_bytes(get_bytes(is, lens[4]), k * t.low_bits_per_elem());
  t.verify_pruned = get_bytes(is, lens[5]);

  CassFile f;
  if (flags & kFlagPacked) {
    if (packed_off != offsets[5] + lens[5]) throw FormatError("bad packed offset");
    f.packed_section = get_bytes(is, packed_len);
  }
  check_container(t);
  f.tensor = std::move(t);
  return f;
}

void write_cass_file(const std::string& path, const CassandraTensor& t,
                     const std::vector<std::uint8_t>* packed_section) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_cass(os, t, packed_section);
  if (!os) throw std::runtime_error("write failed: " + path);
}

CassFile read_cass_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_cass(is);
}

}  // namespace cassandra
