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

#include "ftoc/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ftoc {

using nlohmann::json;

namespace {

template <typename V>
json vec_json(const V& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

template <typename V>
V json_vec(const json& a) {
  if (!a.is_array()) throw DomainError("expected a JSON array");
  V v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

// Row-major flattening.
template <typename M>
json mat_json(const M& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  }
  return a;
}

template <typename M>
M json_mat(const json& a, Eigen::Index rows, Eigen::Index cols) {
  if (!a.is_array() || a.size() != static_cast<std::size_t>(rows * cols)) {
    throw DomainError("matrix array has the wrong length");
  }
  M m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = a[k++].get<double>();
  }
  return m;
}

json mlp_json(const MlpParams& p) {
  json layers = json::array();
  for (const auto& l : p.layers) {
    layers.push_back({{"in", l.weight.cols()},
                      {"out", l.weight.rows()},
                      {"activation", to_string(l.activation)},
                      {"weight", mat_json(l.weight)},
                      {"bias", vec_json(l.bias)}});
  }
  return layers;
}

MlpParams json_mlp(const json& layers) {
  MlpParams p;
  for (const auto& l : layers) {
    const auto in = l.at("in").get<Eigen::Index>();
    const auto out = l.at("out").get<Eigen::Index>();
    p.layers.push_back({json_mat<Eigen::MatrixXd>(l.at("weight"), out, in),
                        json_vec<Eigen::VectorXd>(l.at("bias")),
                        activation_from_string(l.at("activation").get<std::string>())});
    if (p.layers.back().bias.size() != out) throw DomainError("bias length mismatch");
  }
  return p;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path);
  return in;
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& data) {
  for (const auto& r : data.records()) {
    json j = {{"traj_id", r.traj_id},   {"knot", r.knot},         {"t_remaining", r.t_remaining},
              {"x", vec_json(r.x)},     {"u", vec_json(r.u)},     {"iteration", r.iteration},
              {"root", r.root},         {"root_time", r.root_time}};
    out << j.dump() << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  Dataset data;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      Record r;
      r.traj_id = j.at("traj_id").get<long>();
      r.knot = j.at("knot").get<int>();
      r.t_remaining = j.at("t_remaining").get<double>();
      r.x = json_vec<StateVec>(j.at("x"));
      r.u = json_vec<ControlVec>(j.at("u"));
      r.iteration = j.value("iteration", 0);
      r.root = j.value("root", -1);
      r.root_time = j.value("root_time", 0.0);
      data.add(r);
    } catch (const json::exception& e) {
      throw DomainError("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return data;
}

void save_dataset(const std::string& path, const Dataset& data) {
  auto out = open_out(path);
  write_dataset(out, data);
}

Dataset load_dataset(const std::string& path) {
  auto in = open_in(path);
  return read_dataset(in);
}

void save_states(const std::string& path, const std::vector<StateVec>& states) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < states.size(); ++i) {
    out << json{{"index", i}, {"x", vec_json(states[i])}}.dump() << '\n';
  }
}

std::vector<StateVec> load_states(const std::string& path) {
  auto in = open_in(path);
  std::vector<StateVec> states;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    states.push_back(json_vec<StateVec>(json::parse(line).at("x")));
  }
  return states;
}

json policy_to_json(const Policy& p) {
  json j;
  j["format"] = "ftoc-policy-1";
  j["architecture"] = to_string(p.architecture());
  j["state_dim"] = p.state_dim();
  j["control_dim"] = p.control_dim();
  j["seed"] = p.seed();
  j["x_f"] = vec_json(p.x_f());
  j["u_f"] = vec_json(p.u_f());
  j["input_standardizer"] = {{"mean", vec_json(p.input_standardizer().mean)},
                             {"scale", vec_json(p.input_standardizer().scale)}};
  j["output_shift"] = vec_json(p.output_shift());
  j["output_scale"] = vec_json(p.output_scale());
  j["control_mlp"] = mlp_json(p.control_mlp());
  if (p.architecture() == Architecture::kQrnet) {
    j["time_scale"] = p.time_scale();
    j["time_mlp"] = mlp_json(p.time_mlp());
    const LqrSurrogate& s = *p.surrogate();
    const RiccatiTable& t = *s.table;
    json gains = json::array();
    for (const auto& e : t.entries) gains.push_back({{"k", vec_json(e.k)}, {"K", mat_json(e.K)}});
    j["lqr"] = {{"horizon", t.horizon},
                {"step", t.step},
                {"x_f", vec_json(t.x_f)},
                {"u_f", vec_json(t.u_f)},
                {"gains", gains},
                {"blend", {{"t_m", s.blend.t_m}, {"t_M", s.blend.t_M}, {"eps", s.blend.eps}}},
                {"saturation",
                 {{"u_min", vec_json(s.saturation.u_min())},
                  {"u_max", vec_json(s.saturation.u_max())},
                  {"u1", vec_json(s.saturation.center())}}}};
  }
  return j;
}

Policy policy_from_json(const json& j) {
  try {
    const Architecture arch = architecture_from_string(j.at("architecture").get<std::string>());
    const int n = j.at("state_dim").get<int>();
    const int m = j.at("control_dim").get<int>();
    const auto x_f = json_vec<StateVec>(j.at("x_f"));
    const auto u_f = json_vec<ControlVec>(j.at("u_f"));
    std::optional<LqrSurrogate> surrogate;
    if (arch == Architecture::kQrnet) {
      const json& l = j.at("lqr");
      auto table = std::make_shared<RiccatiTable>();
      table->horizon = l.at("horizon").get<double>();
      table->step = l.at("step").get<double>();
      table->x_f = json_vec<StateVec>(l.at("x_f"));
      table->u_f = json_vec<ControlVec>(l.at("u_f"));
      for (const auto& g : l.at("gains")) {
        table->entries.push_back(
            {json_vec<ControlVec>(g.at("k")), json_mat<GainMat>(g.at("K"), m, n), StateMat()});
      }
      BlendSchedule blend{l.at("blend").at("t_m").get<double>(), l.at("blend").at("t_M").get<double>(),
                          l.at("blend").at("eps").get<double>()};
      const json& sat = l.at("saturation");
      surrogate = LqrSurrogate{table, blend,
                               Saturation(json_vec<ControlVec>(sat.at("u_min")),
                                          json_vec<ControlVec>(sat.at("u_max")),
                                          json_vec<ControlVec>(sat.at("u1")))};
    }
    Policy p(arch, n, m, x_f, u_f, surrogate);
    p.set_seed(j.at("seed").get<std::uint64_t>());
    p.input_standardizer().mean = json_vec<Eigen::VectorXd>(j.at("input_standardizer").at("mean"));
    p.input_standardizer().scale = json_vec<Eigen::VectorXd>(j.at("input_standardizer").at("scale"));
    p.output_shift() = json_vec<Eigen::VectorXd>(j.at("output_shift"));
    p.output_scale() = json_vec<Eigen::VectorXd>(j.at("output_scale"));
    p.control_mlp() = json_mlp(j.at("control_mlp"));
    if (p.control_mlp().input_dim() != n || p.control_mlp().output_dim() != m) {
      throw DomainError("control network shape does not match the policy");
    }
    if (arch == Architecture::kQrnet) {
      p.time_scale() = j.at("time_scale").get<double>();
      p.time_mlp() = json_mlp(j.at("time_mlp"));
    }
    p.refresh_cache();
    return p;
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_json(const std::string& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(1) << '\n';
}

json load_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DomainError(path + ": " + e.what());
  }
}

void save_policy(const std::string& path, const Policy& policy) {
  auto out = open_out(path);
  out << policy_to_json(policy).dump() << '\n';
}

Policy load_policy(const std::string& path) { return policy_from_json(load_json(path)); }

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << "iteration,strategy,seed,success_rate,mean_ratio,std_ratio,n_fail,n_diverged\n";
  for (const auto& r : rows) {
    out << r.iteration << ',' << r.strategy << ',' << r.seed << ',' << fmt(r.success_rate) << ','
        << fmt(r.mean_ratio) << ',' << fmt(r.std_ratio) << ',' << r.n_fail << ',' << r.n_diverged
        << '\n';
  }
}

void save_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  auto out = open_out(path);
  write_metrics_csv(out, rows);
}

std::vector<MetricsRow> load_metrics_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<MetricsRow> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> f;
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw DomainError("metrics row has " + std::to_string(f.size()) + " fields");
    rows.push_back({f[0], f[1], std::stoull(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5]),
                    std::stoi(f[6]), std::stoi(f[7])});
  }
  return rows;
}

void write_cdf_csv(std::ostream& out, const std::vector<std::pair<double, double>>& cdf) {
  out << "ratio,fraction\n";
  for (const auto& [r, f] : cdf) out << fmt(r) << ',' << fmt(f) << '\n';
}

void ensure_directory(const std::string& path) {
  if (path.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw DomainError("cannot create directory " + path + ": " + ec.message());
}

}  // namespace ftoc
