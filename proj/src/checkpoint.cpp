// Copyright 2026 The sgdiff Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "sgdiff/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <random>

#include "sgdiff/errors.hpp"

namespace sgdiff {
namespace {

constexpr char kMagic[4] = {'S', 'G', 'D', 'F'};

template <typename T>
void put_le(std::ostream& os, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = std::bit_cast<U>(value);
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename T>
T get_le(std::istream& is, const char* what) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw IoError(std::string("truncated checkpoint while reading ") + what);
  }
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void Checkpoint::put_vector(const std::string& name, std::span<const double> values) {
  arrays_[name] = NamedArray{{values.size()}, {values.begin(), values.end()}};
}

void Checkpoint::put_scalar(const std::string& name, double value) {
  arrays_[name] = NamedArray{{}, {value}};
}

const NamedArray& Checkpoint::get(const std::string& name) const {
  const auto it = arrays_.find(name);
  if (it == arrays_.end()) throw CompatibilityError("checkpoint has no array '" + name + "'");
  return it->second;
}

RowMatrix<double> Checkpoint::matrix(const std::string& name) const {
  const auto& a = get(name);
  Index rows = 1;
  Index cols = 1;
  if (a.dims.size() == 1) {
    rows = static_cast<Index>(a.dims[0]);
  } else if (a.dims.size() == 2) {
    rows = static_cast<Index>(a.dims[0]);
    cols = static_cast<Index>(a.dims[1]);
  } else if (!a.dims.empty()) {
    throw CompatibilityError("array '" + name + "' has rank " + std::to_string(a.dims.size()));
  }
  return Eigen::Map<const RowMatrix<double>>(a.data.data(), rows, cols);
}

std::vector<double> Checkpoint::vector(const std::string& name) const { return get(name).data; }

double Checkpoint::scalar(const std::string& name) const {
  const auto& a = get(name);
  if (a.data.size() != 1) throw CompatibilityError("array '" + name + "' is not a scalar");
  return a.data[0];
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::random_device rd;
  auto tmp = path;
  tmp += ".tmp" + std::to_string(rd());
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os.write(kMagic, 4);
    put_le<std::uint32_t>(os, kCheckpointVersion);
    put_le<std::uint64_t>(os, ckpt.arrays().size());
    for (const auto& [name, a] : ckpt.arrays()) {
      put_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      put_le<std::uint32_t>(os, static_cast<std::uint32_t>(a.dims.size()));
      for (auto d : a.dims) put_le<std::uint64_t>(os, d);
      for (double x : a.data) put_le<double>(os, x);
    }
    os.flush();
    if (!os) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move checkpoint into " + path.string());
  }
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  char magic[4] = {};
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError(path.string() + " is not an SGDF checkpoint");
  }
  const auto version = get_le<std::uint32_t>(is, "version");
  if (version != kCheckpointVersion) {
    throw CompatibilityError("unsupported SGDF version " + std::to_string(version));
  }
  const auto count = get_le<std::uint64_t>(is, "array count");
  Checkpoint ckpt;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto name_len = get_le<std::uint32_t>(is, "name length");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw IoError("truncated checkpoint name");
    const auto rank = get_le<std::uint32_t>(is, "rank");
    if (rank > 8) throw IoError("implausible rank " + std::to_string(rank) + " for '" + name + "'");
    NamedArray a;
    std::uint64_t total = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      a.dims.push_back(get_le<std::uint64_t>(is, "dims"));
      total *= a.dims.back();
    }
    if (total > (std::uint64_t{1} << 32)) throw IoError("array '" + name + "' too large");
    a.data.resize(total);
    for (auto& x : a.data) x = get_le<double>(is, "data");
    ckpt.put_array(name, std::move(a));
  }
  return ckpt;
}

}  // namespace sgdiff
