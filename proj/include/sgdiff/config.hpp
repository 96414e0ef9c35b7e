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


#ifndef SGDIFF_CONFIG_HPP
#define SGDIFF_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sgdiff/feature_diffusion.hpp"
#include "sgdiff/fusion.hpp"
#include "sgdiff/structure_diffusion.hpp"
#include "sgdiff/subgraph.hpp"

namespace sgdiff {

/// Flat run configuration. Hyper-parameter keys use the usual symbols
/// (k, ns, ha_x, ..., ds_g); defaults are desk scale.
struct RunConfig {
  // subgraph extraction
  int k = 1;
  int ns = -1;
  int max_nodes = 32;
  int drnl_classes = 16;
  // structure denoiser
  int ha_x = 32;
  int ha_e = 16;
  int ha_y = 16;
  int hm_x = 64;
  int hm_e = 32;
  int hm_y = 32;
  int head = 4;
  int l_t = 2;
  int ds_t = 10;
  // feature denoiser
  int h_g = 64;
  int l_g = 2;
  int ds_g = 50;
  // training
  std::uint64_t seed = 0;
  int epochs = 20;
  double lr = 1e-3;
  int batch_size = 16;
  int feat_epochs = 20;
  double feat_lr = 1e-3;
  int fusion_epochs = 500;
  double fusion_lr = 0.5;
  // sample caps and scoring
  int max_train = 2000;   // training subgraphs per model
  int max_fusion = 400;   // bundles used to fit the fusion weights
  int max_eval = 1000;    // test pairs per class
  int n_mc = 1;
  int feat_steps = 10;
  int hits_k = 100;
  // experiments
  int seeds = 3;
  int threads = 0;  // 0: hardware concurrency
  std::string features = "auto";     // auto | on | off
  std::string fusion_split = "train";  // train | valid

  /// Throws ConfigError naming the first offending key.
  void validate() const;

  bool operator==(const RunConfig&) const = default;

  ExtractionConfig extraction(std::uint64_t seed) const;
  StructDenoiserConfig structure_denoiser() const;
  FeatDenoiserConfig feature_denoiser(int feat_dim) const;
  TrainOptions structure_training(std::uint64_t seed) const;
  TrainOptions feature_training(std::uint64_t seed) const;
  FusionOptions fusion() const;
};

/// Every key in serialization order.
const std::vector<std::string>& config_keys();

/// Applies one key=value assignment; throws ConfigError.
void set_config_value(RunConfig& c, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& c, const std::string& key);

/// key=value lines; '#' starts a comment; unknown keys are rejected. The
/// result is validated.
RunConfig parse_config(std::istream& is, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
void write_config(std::ostream& os, const RunConfig& c);
std::string config_string(const RunConfig& c);

/// Overrides from variables named SGDIFF_<KEY> (upper case). `lookup`
/// defaults to std::getenv.
void apply_env_overrides(RunConfig& c,
                         const std::function<std::optional<std::string>(const std::string&)>& lookup = {});

/// Table settings for the named dataset with desk-scale widths.
RunConfig dataset_defaults(const std::string& dataset);

/// Short stable hash of the serialized config.
std::string config_fingerprint(const RunConfig& c);

}  // namespace sgdiff

#endif  // SGDIFF_CONFIG_HPP
