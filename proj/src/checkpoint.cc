#include "sparrl/checkpoint.h"

#include <cstring>
#include <fstream>

#include "sparrl/graph.h"

namespace sparrl::nn {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'R', 'L', 'C', 'K', 'P', 'T'};

template <typename T> void put(std::ostream &out, const T &v) {
  out.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T> T get(std::istream &in, const std::string &path) {
  T v{};
  if (!in.read(reinterpret_cast<char *>(&v), sizeof(T))) {
    throw DataError("checkpoint '" + path + "' is truncated");
  }
  return v;
}

std::string get_string(std::istream &in, const std::uint64_t n, const std::string &path) {
  if (n > (1ull << 32)) {
    throw DataError("checkpoint '" + path + "' has an implausible string length");
  }
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw DataError("checkpoint '" + path + "' is truncated");
  }
  return s;
}

} // namespace

const Matrix &TensorFile::find(const std::string &name) const {
  for (const auto &[n, m] : tensors) {
    if (n == name) {
      return m;
    }
  }
  throw DataError("checkpoint has no tensor '" + name + "'");
}

void write_tensor_file(const std::string &path, const TensorFile &file) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kTensorFileVersion);
  put<std::uint64_t>(out, file.header.size());
  out.write(file.header.data(), static_cast<std::streamsize>(file.header.size()));
  put<std::uint64_t>(out, file.tensors.size());
  for (const auto &[name, m] : file.tensors) {
    put<std::uint64_t>(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, m.rows);
    put<std::uint64_t>(out, m.cols);
    out.write(reinterpret_cast<const char *>(m.data.data()), static_cast<std::streamsize>(m.data.size() * sizeof(double)));
  }
  if (!out) {
    throw std::runtime_error("write failed for '" + path + "'");
  }
}

TensorFile read_tensor_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open checkpoint '" + path + "'");
  }
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw DataError("'" + path + "' is not a checkpoint file");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kTensorFileVersion) {
    throw DataError("checkpoint '" + path + "' has unsupported version " + std::to_string(version));
  }
  TensorFile file;
  file.header = get_string(in, get<std::uint64_t>(in, path), path);
  const auto count = get<std::uint64_t>(in, path);
  for (std::uint64_t k = 0; k < count; ++k) {
    std::string name = get_string(in, get<std::uint64_t>(in, path), path);
    const auto rows = get<std::uint64_t>(in, path);
    const auto cols = get<std::uint64_t>(in, path);
    if (rows * cols > (1ull << 34)) {
      throw DataError("checkpoint '" + path + "' has an implausible tensor shape");
    }
    Matrix m(rows, cols);
    if (!in.read(reinterpret_cast<char *>(m.data.data()), static_cast<std::streamsize>(m.data.size() * sizeof(double)))) {
      throw DataError("checkpoint '" + path + "' is truncated");
    }
    file.tensors.emplace_back(std::move(name), std::move(m));
  }
  return file;
}

} // namespace sparrl::nn
