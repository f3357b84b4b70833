#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cassandra/bf16.hpp"

namespace cassandra {

// Raw tensor file: magic "BF16" or "F32 ", rank u8, dims u32 little-endian,
// then the payload in row-major order. F32 payloads are rounded to BF16
// (round-to-nearest-even) on load.
struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<Bf16> values;

  std::size_t element_count() const { return values.size(); }
};

RawTensor read_tensor_file(const std::string& path);
void write_tensor_file_bf16(const std::string& path, const RawTensor& t);
void write_tensor_file_f32(const std::string& path,
                           const std::vector<std::uint32_t>& dims,
                           const std::vector<float>& values);

}  // namespace cassandra
