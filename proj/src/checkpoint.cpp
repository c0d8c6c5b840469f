// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "detsep/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace detsep {

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'D', 'S', 'C', 'K', 'P', 'T', '0', '\n'};

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("corrupt checkpoint: truncated file");
  return v;
}

std::string get_string(std::ifstream& is, uint64_t len) {
  std::string s(len, '\0');
  is.read(s.data(), static_cast<std::streamsize>(len));
  if (!is) throw std::runtime_error("corrupt checkpoint: truncated string");
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
  os.write(kMagic, sizeof(kMagic));
  put<uint32_t>(os, static_cast<uint32_t>(ckpt.version));
  put<uint64_t>(os, ckpt.meta_json.size());
  os.write(ckpt.meta_json.data(),
           static_cast<std::streamsize>(ckpt.meta_json.size()));
  put<uint64_t>(os, ckpt.params.size());
  for (const auto& [name, tensor] : ckpt.params) {
    put<uint64_t>(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    const auto& shape = tensor.shape();
    put<uint32_t>(os, static_cast<uint32_t>(shape.size()));
    for (int64_t d : shape) put<int64_t>(os, d);
    const auto& v = tensor.values();
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("corrupt checkpoint: bad magic in " + path);
  Checkpoint ckpt;
  ckpt.version = static_cast<int>(get<uint32_t>(is));
  if (ckpt.version != 1)
    throw std::runtime_error("corrupt checkpoint: unsupported version " +
                             std::to_string(ckpt.version));
  ckpt.meta_json = get_string(is, get<uint64_t>(is));
  const uint64_t count = get<uint64_t>(is);
  for (uint64_t i = 0; i < count; ++i) {
    std::string name = get_string(is, get<uint64_t>(is));
    const uint32_t rank = get<uint32_t>(is);
    ad::Shape shape(rank);
    for (uint32_t d = 0; d < rank; ++d) shape[d] = get<int64_t>(is);
    std::vector<double> values(static_cast<std::size_t>(ad::numel(shape)));
    is.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!is) throw std::runtime_error("corrupt checkpoint: truncated tensor");
    ckpt.params.emplace_back(std::move(name),
                             ad::Tensor::param(std::move(shape),
                                               std::move(values)));
  }
  return ckpt;
}

}  // namespace detsep
