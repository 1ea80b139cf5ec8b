#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sparrl/nn.h"

namespace sparrl::nn {

using NamedTensor = std::pair<std::string, Matrix>;

/// Binary tensor file: magic, format version, a free-form text header (JSON by
/// convention), then named tensors with shape headers and raw doubles.
/// Values round-trip bit-exactly.
struct TensorFile {
  std::string header;
  std::vector<NamedTensor> tensors;

  [[nodiscard]] const Matrix &find(const std::string &name) const;
};

inline constexpr std::uint32_t kTensorFileVersion = 1;

void write_tensor_file(const std::string &path, const TensorFile &file);
/// Throws sparrl::DataError on a truncated or foreign file.
TensorFile read_tensor_file(const std::string &path);

} // namespace sparrl::nn
