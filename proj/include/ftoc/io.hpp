// Copyright 2026 The ftoc Authors
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

// File formats: NDJSON datasets, JSON checkpoints, CSV metrics and CDFs.

#ifndef FTOC_IO_HPP_
#define FTOC_IO_HPP_

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ftoc/policy.hpp"

namespace ftoc {

/// One JSON object per line: traj_id, knot, t_remaining, x, u, plus
/// iteration, root and root_time.
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

/// Writes states as NDJSON lines {"index": i, "x": [...]}.
void save_states(const std::string& path, const std::vector<StateVec>& states);
std::vector<StateVec> load_states(const std::string& path);

nlohmann::json policy_to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& j);
void save_policy(const std::string& path, const Policy& policy);
Policy load_policy(const std::string& path);

void save_json(const std::string& path, const nlohmann::json& j);
nlohmann::json load_json(const std::string& path);

struct MetricsRow {
  std::string iteration;  // "0".."K" or "ensemble"
  std::string strategy;
  std::uint64_t seed = 0;
  double success_rate = 0.0;
  double mean_ratio = 0.0;
  double std_ratio = 0.0;
  int n_fail = 0;
  int n_diverged = 0;
};

/// Header: iteration,strategy,seed,success_rate,mean_ratio,std_ratio,n_fail,n_diverged
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
void save_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> load_metrics_csv(const std::string& path);

/// Header: ratio,fraction
void write_cdf_csv(std::ostream& out, const std::vector<std::pair<double, double>>& cdf);

/// Creates the directory and its parents.
void ensure_directory(const std::string& path);

}  // namespace ftoc

#endif  // FTOC_IO_HPP_
