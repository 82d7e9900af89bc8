#pragma once

#include <string>
#include <utility>
#include <vector>

#include "malimg/nn/tensor.hpp"

namespace malimg::nn {

// MIFW checkpoint container. Little-endian byte layout:
//
//   offset  size  field
//   0       4     magic "MIFW"
//   4       4     u32 format version (currently 1)
//   8       4     u32 meta_len
//   12      m     meta: UTF-8 JSON (model/optimizer config block)
//   ..      4     u32 tensor count
//   per tensor:
//           2     u16 name length
//           n     name bytes
//           1     u8 rank
//           4*r   u32 dims
//           4*k   f32 values, row-major
//
// Values are stored as 32-bit floats regardless of the in-memory precision.
struct CheckpointTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;
};

struct CheckpointFile {
  std::string meta_json;  // serialized config block
  std::vector<CheckpointTensor> tensors;

  const CheckpointTensor* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const std::string& meta_json,
                     const std::vector<CheckpointTensor>& tensors);

CheckpointFile load_checkpoint(const std::string& path);

CheckpointTensor to_f32(const std::string& name, const Tensor& t);
CheckpointTensor vec_to_f32(const std::string& name, const std::vector<Scalar>& v);

}  // namespace malimg::nn
