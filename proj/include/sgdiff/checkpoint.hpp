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


#ifndef SGDIFF_CHECKPOINT_HPP
#define SGDIFF_CHECKPOINT_HPP

// SGDF checkpoints: a flat list of named real arrays.
//
//   "SGDF"            4 bytes
//   version           u32
//   array count       u64
//   per array:
//     name length     u32, then UTF-8 name bytes
//     rank            u32
//     dims            u64 x rank
//     data            little-endian IEEE doubles, row-major
//
// All integers are little-endian. Writes go to a sibling temp file that is
// renamed into place, so readers never observe a partial checkpoint.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgdiff/tensor.hpp"

namespace sgdiff {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;
};

class Checkpoint {
 public:
  template <typename Derived>
  void put(const std::string& name, const Eigen::MatrixBase<Derived>& m) {
    NamedArray a;
    a.dims = {static_cast<std::uint64_t>(m.rows()),
              static_cast<std::uint64_t>(m.cols())};
    a.data.reserve(m.size());
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) a.data.push_back(static_cast<double>(m(i, j)));
    }
    arrays_[name] = std::move(a);
  }
  void put_vector(const std::string& name, std::span<const double> values);
  void put_scalar(const std::string& name, double value);
  void put_array(const std::string& name, NamedArray array) { arrays_[name] = std::move(array); }

  bool contains(const std::string& name) const { return arrays_.count(name) != 0; }
  /// Throws CompatibilityError when the array is missing.
  const NamedArray& get(const std::string& name) const;

  /// Rank-2 array as a matrix; rank 0/1 arrays are read as a column.
  RowMatrix<double> matrix(const std::string& name) const;
  std::vector<double> vector(const std::string& name) const;
  double scalar(const std::string& name) const;

  const std::map<std::string, NamedArray>& arrays() const { return arrays_; }

 private:
  std::map<std::string, NamedArray> arrays_;
};

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace sgdiff

#endif  // SGDIFF_CHECKPOINT_HPP
