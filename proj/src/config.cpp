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


#include "sgdiff/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <variant>

#include "sgdiff/errors.hpp"

namespace sgdiff {
namespace {

using Field = std::variant<int RunConfig::*, double RunConfig::*, std::uint64_t RunConfig::*,
                           std::string RunConfig::*>;

struct Entry {
  const char* key;
  Field field;
};

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries{
      {"k", &RunConfig::k},
      {"ns", &RunConfig::ns},
      {"max_nodes", &RunConfig::max_nodes},
      {"drnl_classes", &RunConfig::drnl_classes},
      {"ha_x", &RunConfig::ha_x},
      {"ha_e", &RunConfig::ha_e},
      {"ha_y", &RunConfig::ha_y},
      {"hm_x", &RunConfig::hm_x},
      {"hm_e", &RunConfig::hm_e},
      {"hm_y", &RunConfig::hm_y},
      {"head", &RunConfig::head},
      {"l_t", &RunConfig::l_t},
      {"ds_t", &RunConfig::ds_t},
      {"h_g", &RunConfig::h_g},
      {"l_g", &RunConfig::l_g},
      {"ds_g", &RunConfig::ds_g},
      {"seed", &RunConfig::seed},
      {"epochs", &RunConfig::epochs},
      {"lr", &RunConfig::lr},
      {"batch_size", &RunConfig::batch_size},
      {"feat_epochs", &RunConfig::feat_epochs},
      {"feat_lr", &RunConfig::feat_lr},
      {"fusion_epochs", &RunConfig::fusion_epochs},
      {"fusion_lr", &RunConfig::fusion_lr},
      {"max_train", &RunConfig::max_train},
      {"max_fusion", &RunConfig::max_fusion},
      {"max_eval", &RunConfig::max_eval},
      {"n_mc", &RunConfig::n_mc},
      {"feat_steps", &RunConfig::feat_steps},
      {"hits_k", &RunConfig::hits_k},
      {"seeds", &RunConfig::seeds},
      {"threads", &RunConfig::threads},
      {"features", &RunConfig::features},
      {"fusion_split", &RunConfig::fusion_split},
  };
  return entries;
}

const Entry& find_entry(const std::string& key) {
  for (const auto& e : registry()) {
    if (key == e.key) return e;
  }
  throw ConfigError(key, "unknown key");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError(key, "cannot parse '" + text + "'");
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& e : registry()) out.emplace_back(e.key);
    return out;
  }();
  return keys;
}

void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  const Entry& e = find_entry(key);
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(c.*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          c.*member = value;
        } else {
          c.*member = parse_number<T>(key, value);
        }
      },
      e.field);
}

std::string get_config_value(const RunConfig& c, const std::string& key) {
  const Entry& e = find_entry(key);
  return std::visit(
      [&](auto member) -> std::string {
        using T = std::remove_cvref_t<decltype(c.*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return c.*member;
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(c.*member);
        } else {
          return std::to_string(c.*member);
        }
      },
      e.field);
}

void RunConfig::validate() const {
  for (const auto& e : registry()) {
    if (const auto* m = std::get_if<int RunConfig::*>(&e.field)) {
      const int v = this->**m;
      const std::string key = e.key;
      if (key == "ns") {
        if (v != -1 && v < 1) throw ConfigError(key, "must be -1 (no sampling) or >= 1, got " + std::to_string(v));
      } else if (key == "threads") {
        if (v < 0) throw ConfigError(key, "must be >= 0");
      } else if (v < 1) {
        throw ConfigError(key, "must be >= 1, got " + std::to_string(v));
      }
    }
  }
  if (max_nodes < 2) throw ConfigError("max_nodes", "must be >= 2");
  if (drnl_classes < 2) throw ConfigError("drnl_classes", "must be >= 2");
  if (ha_x % head != 0) throw ConfigError("head", "must divide ha_x");
  if (!(lr >= 0) || !std::isfinite(lr)) throw ConfigError("lr", "must be finite and >= 0");
  if (!(feat_lr >= 0) || !std::isfinite(feat_lr)) throw ConfigError("feat_lr", "must be finite and >= 0");
  if (!(fusion_lr >= 0) || !std::isfinite(fusion_lr)) throw ConfigError("fusion_lr", "must be finite and >= 0");
  if (features != "auto" && features != "on" && features != "off") {
    throw ConfigError("features", "must be auto, on or off");
  }
  if (fusion_split != "train" && fusion_split != "valid") throw ConfigError("fusion_split", "must be train or valid");
}

ExtractionConfig RunConfig::extraction(std::uint64_t s) const {
  return {.hops = k, .max_per_hop = ns, .max_nodes = max_nodes, .seed = s, .drnl_classes = drnl_classes};
}

StructDenoiserConfig RunConfig::structure_denoiser() const {
  StructDenoiserConfig c;
  c.node_classes = drnl_classes;
  c.T = ds_t;
  c.ha_x = ha_x;
  c.ha_e = ha_e;
  c.ha_y = ha_y;
  c.hm_x = hm_x;
  c.hm_e = hm_e;
  c.hm_y = hm_y;
  c.heads = head;
  c.layers = l_t;
  return c;
}

FeatDenoiserConfig RunConfig::feature_denoiser(int feat_dim) const {
  return {.feat_dim = feat_dim, .hidden = h_g, .layers = l_g, .T = ds_g};
}

TrainOptions RunConfig::structure_training(std::uint64_t s) const {
  TrainOptions o;
  o.epochs = epochs;
  o.lr = lr;
  o.batch_size = batch_size;
  o.seed = s;
  return o;
}

TrainOptions RunConfig::feature_training(std::uint64_t s) const {
  TrainOptions o;
  o.epochs = feat_epochs;
  o.lr = feat_lr;
  o.batch_size = batch_size;
  o.seed = s;
  return o;
}

FusionOptions RunConfig::fusion() const {
  FusionOptions o;
  o.epochs = fusion_epochs;
  o.lr = fusion_lr;
  return o;
}

RunConfig parse_config(std::istream& is, RunConfig base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value, got '" + line + "'", lineno);
    const std::string key = trim(line.substr(0, eq));
    try {
      set_config_value(base, key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(key, e.detail() + " (line " + std::to_string(lineno) + ")");
    }
  }
  base.validate();
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in, std::move(base));
}

void write_config(std::ostream& os, const RunConfig& c) {
  for (const auto& key : config_keys()) os << key << '=' << get_config_value(c, key) << '\n';
}

std::string config_string(const RunConfig& c) {
  std::ostringstream os;
  write_config(os, c);
  return os.str();
}

void apply_env_overrides(RunConfig& c,
                         const std::function<std::optional<std::string>(const std::string&)>& lookup) {
  auto get = [&](const std::string& name) -> std::optional<std::string> {
    if (lookup) return lookup(name);
    const char* v = std::getenv(name.c_str());
    if (v == nullptr) return std::nullopt;
    return std::string(v);
  };
  for (const auto& key : config_keys()) {
    std::string name = "SGDIFF_" + key;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::toupper(ch); });
    if (auto v = get(name)) set_config_value(c, key, trim(*v));
  }
  c.validate();
}

RunConfig dataset_defaults(const std::string& dataset) {
  struct Row {
    const char* name;
    int ns;
    int ds_t;
    int h_g;
    int ds_g;
  };
  static const Row rows[] = {
      {"cora", -1, 20, 64, 100},    {"citeseer", 20, 20, 64, 100}, {"pubmed", 20, 10, 64, 50},
      {"router", 10, 5, 64, 50},    {"usair", 40, 10, 64, 50},     {"ns", 5, 20, 64, 50},
  };
  std::string lower = dataset;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
  RunConfig c;
  for (const auto& r : rows) {
    if (lower == r.name) {
      c.ns = r.ns;
      c.ds_t = r.ds_t;
      c.h_g = r.h_g;
      c.ds_g = r.ds_g;
    }
  }
  return c;
}

std::string config_fingerprint(const RunConfig& c) {
  // FNV-1a over the canonical text.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : config_string(c)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace sgdiff
