// Copyright (c) 2026 The fginfer Authors. All Rights Reserved.
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

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fg/exact.hpp"
#include "fg/generators.hpp"
#include "fg/uai.hpp"

namespace fg {

/// On disk a dataset is one UAI file plus one JSON sidecar per instance:
/// inst_00000.uai / inst_00000.json, indices zero-padded to five digits.
/// The sidecar records the generation coordinates and the oracle labels
/// (when they were computable).
struct DatasetPaths {
  static std::string stem(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "inst_%05d", index);
    return buf;
  }
};

inline void save_dataset(const std::filesystem::path& dir, const DatasetSpec& spec,
                         const std::vector<GeneratedInstance>& data) {
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < data.size(); ++k) {
    const std::string stem = DatasetPaths::stem(int(k));
    {
      std::ofstream out(dir / (stem + ".uai"));
      if (!out) throw std::runtime_error("cannot write " + (dir / (stem + ".uai")).string());
      write_uai(out, data[k].graph);
    }
    nlohmann::json j;
    j["family"] = family_name(spec.family);
    j["index"] = int(k);
    j["seed"] = spec.seed;
    if (data[k].label) {
      const ExactResult& r = *data[k].label;
      j["oracle_log_Z"] = r.log_Z;
      j["oracle_marginals"] = r.marginals;
      j["oracle_map"] = r.map_assignment;
      j["oracle_map_log_score"] = r.map_log_score;
    }
    std::ofstream out(dir / (stem + ".json"));
    if (!out) throw std::runtime_error("cannot write " + (dir / (stem + ".json")).string());
    out << j.dump(1) << "\n";
  }
}

struct StoredInstance {
  FactorGraph graph;
  std::optional<ExactResult> label;
  nlohmann::json sidecar;
};

inline std::vector<StoredInstance> load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw std::runtime_error("dataset directory not found: " + dir.string());
  std::vector<StoredInstance> out;
  for (int index = 0;; ++index) {
    const std::string stem = DatasetPaths::stem(index);
    std::filesystem::path uai_path = dir / (stem + ".uai");
    if (!std::filesystem::exists(uai_path)) break;
    StoredInstance inst;
    {
      std::ifstream in(uai_path);
      inst.graph = read_uai(in);
    }
    std::filesystem::path json_path = dir / (stem + ".json");
    if (std::filesystem::exists(json_path)) {
      std::ifstream in(json_path);
      in >> inst.sidecar;
      if (inst.sidecar.contains("oracle_log_Z")) {
        ExactResult r;
        r.log_Z = inst.sidecar.at("oracle_log_Z").get<double>();
        r.marginals = inst.sidecar.at("oracle_marginals").get<std::vector<std::vector<double>>>();
        r.map_assignment = inst.sidecar.at("oracle_map").get<std::vector<int>>();
        r.map_log_score = inst.sidecar.at("oracle_map_log_score").get<double>();
        inst.label = std::move(r);
      }
    }
    out.push_back(std::move(inst));
  }
  if (out.empty()) throw std::runtime_error("no instances in " + dir.string());
  return out;
}

inline std::vector<LabeledGraph> as_labeled(const std::vector<StoredInstance>& data) {
  std::vector<LabeledGraph> out;
  out.reserve(data.size());
  for (const auto& inst : data) {
    if (!inst.label) throw std::runtime_error("instance lacks oracle labels");
    out.push_back({inst.graph, *inst.label});
  }
  return out;
}

/// Seeded shuffle split for experiment protocols on externally supplied
/// datasets (default 70% train / 30% held out).
template <typename T>
std::pair<std::vector<T>, std::vector<T>> seeded_split(const std::vector<T>& data,
                                                       std::uint64_t seed,
                                                       double train_fraction = 0.7) {
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw std::invalid_argument("seeded_split: fraction must be inside (0,1)");
  std::vector<std::size_t> order(data.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  Rng rng(seed ^ 0x5970317DULL);
  rng.shuffle(order);
  std::size_t cut = std::size_t(double(data.size()) * train_fraction + 0.5);
  cut = std::min(std::max<std::size_t>(cut, 1), data.size() - 1);
  std::pair<std::vector<T>, std::vector<T>> out;
  for (std::size_t k = 0; k < order.size(); ++k)
    (k < cut ? out.first : out.second).push_back(data[order[k]]);
  return out;
}

}  // namespace fg
