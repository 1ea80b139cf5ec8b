#include "sparrl/rng.h"

#include <sstream>
#include <stdexcept>

namespace sparrl {

namespace {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 14695981039346656037ull;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ull;
  }
  return hash;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

} // namespace

Rng make_stream(const std::uint64_t master_seed, const std::string_view name) {
  const std::uint64_t mixed = splitmix64(master_seed ^ splitmix64(fnv1a(name)));
  std::seed_seq seq{
      static_cast<std::uint32_t>(mixed),
      static_cast<std::uint32_t>(mixed >> 32),
      static_cast<std::uint32_t>(master_seed),
      static_cast<std::uint32_t>(master_seed >> 32),
  };
  return Rng(seq);
}

std::uint64_t derive_seed(const std::uint64_t seed, const std::string_view name, const std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(fnv1a(name) + splitmix64(index)));
}

std::size_t uniform_index(Rng &rng, const std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("uniform_index: empty range");
  }
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::int64_t uniform_int(Rng &rng, const std::int64_t lo, const std::int64_t hi) {
  if (hi < lo) {
    throw std::invalid_argument("uniform_int: empty range");
  }
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

double uniform_unit(Rng &rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

std::string serialize_rng(const Rng &rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

Rng deserialize_rng(const std::string &state) {
  std::istringstream in(state);
  Rng rng;
  in >> rng;
  if (in.fail()) {
    throw std::runtime_error("corrupt generator state");
  }
  return rng;
}

} // namespace sparrl
