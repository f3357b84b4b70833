#include "cassandra/tensor_file.hpp"

#include <bit>
#include <fstream>

#include "cassandra/container.hpp"

namespace cassandra {

namespace {

std::uint64_t product(const std::vector<std::uint32_t>& dims) {
  std::uint64_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return n;
}

}  // namespace

RawTensor read_tensor_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  std::string m(magic, is.gcount() == 4 ? 4 : 0);
  bool f32;
  if (m == "BF16")
    f32 = false;
  else if (m == "F32 ")
    f32 = true;
  else
    throw FormatError("bad tensor magic");

  int rank = is.get();
  if (rank == EOF || rank == 0) throw FormatError("bad tensor rank");
  RawTensor t;
  for (int i = 0; i < rank; ++i) {
    std::uint32_t d = 0;
    for (int b = 0; b < 4; ++b) {
      int c = is.get();
      if (c == EOF) throw FormatError("truncated tensor header");
      d |= static_cast<std::uint32_t>(c) << (8 * b);
    }
    t.dims.push_back(d);
  }
  std::uint64_t n = product(t.dims);
  t.values.resize(n);
  if (f32) {
    std::vector<std::uint32_t> raw(n);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 4));
    if (static_cast<std::uint64_t>(is.gcount()) != n * 4)
      throw FormatError("truncated tensor payload");
    for (std::uint64_t i = 0; i < n; ++i)
      t.values[i] = round_f32_to_bf16(std::bit_cast<float>(raw[i]));
  } else {
    std::vector<std::uint16_t> raw(n);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 2));
    if (static_cast<std::uint64_t>(is.gcount()) != n * 2)
      throw FormatError("truncated tensor payload");
    for (std::uint64_t i = 0; i < n; ++i) t.values[i] = Bf16{raw[i]};
  }
  return t;
}

void write_tensor_file_bf16(const std::string& path, const RawTensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  os.write("BF16", 4);
  os.put(static_cast<char>(t.dims.size()));
  for (std::uint32_t d : t.dims)
    for (int b = 0; b < 4; ++b) os.put(static_cast<char>((d >> (8 * b)) & 0xff));
  for (Bf16 v : t.values) {
    os.put(static_cast<char>(v.bits & 0xff));
    os.put(static_cast<char>(v.bits >> 8));
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

void write_tensor_file_f32(const std::string& path,
                           const std::vector<std::uint32_t>& dims,
                           const std::vector<float>& values) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  os.write("F32 ", 4);
  os.put(static_cast<char>(dims.size()));
  for (std::uint32_t d : dims)
    for (int b = 0; b < 4; ++b) os.put(static_cast<char>((d >> (8 * b)) & 0xff));
  for (float v : values) {
    std::uint32_t u = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) os.put(static_cast<char>((u >> (8 * b)) & 0xff));
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace cassandra
