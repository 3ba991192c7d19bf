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

#include "ftoc/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

namespace ftoc {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw DomainError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw DomainError(where + ": unknown field '" + it.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DomainError(where + "." + key + ": " + e.what());
  }
}

DofVec to_dof(const std::vector<double>& v) {
  DofVec q(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) q[static_cast<Eigen::Index>(i)] = v[i];
  return q;
}

}  // namespace

void RunConfig::finalize() {
  ModelSpec& m = solver.model;
  if (static_cast<int>(m.links.size()) != m.dof) {
    m.links.resize(static_cast<std::size_t>(std::max(m.dof, 0)), m.links.empty() ? LinkParams{} : m.links.front());
  }
  require(static_cast<int>(q_f.size()) == m.dof, "cost.q_f must have one entry per joint");
  const CostSpec w = solver.cost;
  solver.cost = make_cost(m, to_dof(q_f), w.r_t, w.r_u, w.r_a, w.r_f);
}

void RunConfig::validate() const {
  solver.validate();
  training.validate();
  lqr.blend.validate();
  require(lqr.horizon > 0.0 && lqr.step > 0.0, "lqr horizon and step must be positive");
  require(lqr.u_min < lqr.u_max, "lqr.u_min must be below lqr.u_max");
  for (Eigen::Index i = 0; i < solver.cost.u_f.size(); ++i) {
    require(lqr.u_min < solver.cost.u_f[i] && solver.cost.u_f[i] < lqr.u_max,
            "u_f must lie strictly inside the saturation bounds");
  }
  require(sampling.tau > 0.0 && sampling.iterations >= 1, "sampling needs tau > 0 and K >= 1");
  require(sampling.horizon_factor > 0.0, "sampling.horizon_factor must be positive");
  sampling.ivp.validate();
  require(static_cast<int>(experiment.q_c.size()) == solver.model.dof,
          "experiment.q_c must have one entry per joint");
  require(experiment.side >= 0.0, "experiment.side must be non-negative");
  require(experiment.n_train > 0 && experiment.n_val >= 0 && experiment.n_test > 0,
          "experiment counts must be positive");
  require(experiment.ratio_cap_success <= experiment.ratio_cap_fail, "ratio caps out of order");
  require(workers >= 1, "workers must be positive");
}

RunConfig default_config() {
  RunConfig c;
  c.solver.model = ModelSpec::planar_arm(2);
  c.solver.schedule = {150, 300, 450, 600, 750, 900, 1200, 1500, 1750};
  c.finalize();
  return c;
}

RunConfig config_from_json(const json& j) {
  RunConfig c = default_config();
  check_keys(j, {"model", "cost", "ddp", "freetime", "schedule", "lqr", "training", "sampling", "experiment", "workers"},
             "config");
  if (j.contains("model")) {
    const json& s = j.at("model");
    check_keys(s, {"kind", "dof", "gravity", "damping", "link"}, "model");
    std::string kind = to_string(c.solver.model.kind);
    read(s, "kind", kind, "model");
    const ModelKind k = model_kind_from_string(kind);
    int dof = k == ModelKind::kDoubleIntegrator1d ? 1 : c.solver.model.dof;
    read(s, "dof", dof, "model");
    c.solver.model = k == ModelKind::kDoubleIntegrator1d ? ModelSpec::double_integrator()
                                                          : ModelSpec::planar_arm(dof);
    read(s, "gravity", c.solver.model.gravity, "model");
    read(s, "damping", c.solver.model.damping, "model");
    if (s.contains("link")) {
      const json& l = s.at("link");
      check_keys(l, {"mass", "length", "com_offset", "inertia"}, "model.link");
      LinkParams p = c.solver.model.links.empty() ? LinkParams{} : c.solver.model.links.front();
      read(l, "mass", p.mass, "model.link");
      read(l, "length", p.length, "model.link");
      read(l, "com_offset", p.com_offset, "model.link");
      read(l, "inertia", p.inertia, "model.link");
      for (auto& link : c.solver.model.links) link = p;
    }
    if (k == ModelKind::kDoubleIntegrator1d) {
      c.q_f = {0.0};
      c.experiment.q_c = {1.0};
    } else if (static_cast<int>(c.q_f.size()) != dof) {
      c.q_f.assign(static_cast<std::size_t>(dof), 0.0);
      c.experiment.q_c.assign(static_cast<std::size_t>(dof), 0.0);
    }
  }
  if (j.contains("cost")) {
    const json& s = j.at("cost");
    check_keys(s, {"r_t", "r_u", "r_a", "r_f", "q_f"}, "cost");
    read(s, "r_t", c.solver.cost.r_t, "cost");
    read(s, "r_u", c.solver.cost.r_u, "cost");
    read(s, "r_a", c.solver.cost.r_a, "cost");
    read(s, "r_f", c.solver.cost.r_f, "cost");
    read(s, "q_f", c.q_f, "cost");
  }
  if (j.contains("ddp")) {
    const json& s = j.at("ddp");
    DdpSettings& d = c.solver.ddp;
    check_keys(s, {"max_iterations", "tolerance", "reg_init", "reg_min", "reg_max", "reg_factor", "backtrack",
                   "armijo", "min_step", "divergence_norm", "fault_line_search"},
               "ddp");
    read(s, "max_iterations", d.max_iterations, "ddp");
    read(s, "tolerance", d.tolerance, "ddp");
    read(s, "reg_init", d.reg_init, "ddp");
    read(s, "reg_min", d.reg_min, "ddp");
    read(s, "reg_max", d.reg_max, "ddp");
    read(s, "reg_factor", d.reg_factor, "ddp");
    read(s, "backtrack", d.backtrack, "ddp");
    read(s, "armijo", d.armijo, "ddp");
    read(s, "min_step", d.min_step, "ddp");
    read(s, "divergence_norm", d.divergence_norm, "ddp");
    read(s, "fault_line_search", d.fault_line_search, "ddp");
  }
  if (j.contains("freetime")) {
    const json& s = j.at("freetime");
    FreeTimeSettings& f = c.solver.freetime;
    check_keys(s, {"t_f0", "alpha", "eps", "eps0", "dt", "max_iterations"}, "freetime");
    read(s, "t_f0", f.t_f0, "freetime");
    read(s, "alpha", f.alpha, "freetime");
    read(s, "eps", f.eps, "freetime");
    read(s, "eps0", f.eps0, "freetime");
    read(s, "dt", f.dt, "freetime");
    read(s, "max_iterations", f.max_iterations, "freetime");
  }
  read(j, "schedule", c.solver.schedule, "config");
  if (j.contains("lqr")) {
    const json& s = j.at("lqr");
    check_keys(s, {"horizon", "step", "t_m", "t_M", "eps", "u_min", "u_max"}, "lqr");
    read(s, "horizon", c.lqr.horizon, "lqr");
    read(s, "step", c.lqr.step, "lqr");
    read(s, "t_m", c.lqr.blend.t_m, "lqr");
    read(s, "t_M", c.lqr.blend.t_M, "lqr");
    read(s, "eps", c.lqr.blend.eps, "lqr");
    read(s, "u_min", c.lqr.u_min, "lqr");
    read(s, "u_max", c.lqr.u_max, "lqr");
  }
  if (j.contains("training")) {
    const json& s = j.at("training");
    check_keys(s, {"learning_rate", "beta1", "beta2", "epsilon", "batch_size", "epochs", "validate_every"},
               "training");
    read(s, "learning_rate", c.training.adam.learning_rate, "training");
    read(s, "beta1", c.training.adam.beta1, "training");
    read(s, "beta2", c.training.adam.beta2, "training");
    read(s, "epsilon", c.training.adam.epsilon, "training");
    read(s, "batch_size", c.training.batch_size, "training");
    read(s, "epochs", c.training.epochs, "training");
    read(s, "validate_every", c.training.validate_every, "training");
  }
  if (j.contains("sampling")) {
    const json& s = j.at("sampling");
    check_keys(s, {"tau", "iterations", "mode", "fractions", "dt_sim", "horizon", "horizon_factor", "eps_succ"},
               "sampling");
    read(s, "tau", c.sampling.tau, "sampling");
    read(s, "iterations", c.sampling.iterations, "sampling");
    std::string mode = to_string(c.sampling.mode);
    read(s, "mode", mode, "sampling");
    c.sampling.mode = dataset_mode_from_string(mode);
    read(s, "fractions", c.sampling.fractions, "sampling");
    read(s, "dt_sim", c.sampling.ivp.dt_sim, "sampling");
    read(s, "horizon_factor", c.sampling.horizon_factor, "sampling");
    read(s, "eps_succ", c.sampling.ivp.eps_succ, "sampling");
    if (s.contains("horizon")) {
      read(s, "horizon", c.sampling.ivp.horizon, "sampling");
      c.sampling.horizon_explicit = true;
    }
  }
  if (j.contains("experiment")) {
    const json& s = j.at("experiment");
    check_keys(s, {"q_c", "side", "n_train", "n_val", "n_test", "seed", "seeds", "architecture",
                   "ratio_cap_fail", "ratio_cap_success"},
               "experiment");
    read(s, "q_c", c.experiment.q_c, "experiment");
    read(s, "side", c.experiment.side, "experiment");
    read(s, "n_train", c.experiment.n_train, "experiment");
    read(s, "n_val", c.experiment.n_val, "experiment");
    read(s, "n_test", c.experiment.n_test, "experiment");
    read(s, "seed", c.experiment.seed, "experiment");
    read(s, "seeds", c.experiment.seeds, "experiment");
    std::string arch = to_string(c.experiment.architecture);
    read(s, "architecture", arch, "experiment");
    c.experiment.architecture = architecture_from_string(arch);
    read(s, "ratio_cap_fail", c.experiment.ratio_cap_fail, "experiment");
    read(s, "ratio_cap_success", c.experiment.ratio_cap_success, "experiment");
  }
  read(j, "workers", c.workers, "config");
  c.finalize();
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  const ModelSpec& m = c.solver.model;
  const LinkParams link = m.links.empty() ? LinkParams{} : m.links.front();
  const DdpSettings& d = c.solver.ddp;
  const FreeTimeSettings& f = c.solver.freetime;
  json j;
  j["model"] = {{"kind", to_string(m.kind)},
                {"dof", m.dof},
                {"gravity", m.gravity},
                {"damping", m.damping},
                {"link", {{"mass", link.mass}, {"length", link.length}, {"com_offset", link.com_offset},
                          {"inertia", link.inertia}}}};
  j["cost"] = {{"r_t", c.solver.cost.r_t}, {"r_u", c.solver.cost.r_u}, {"r_a", c.solver.cost.r_a},
               {"r_f", c.solver.cost.r_f}, {"q_f", c.q_f}};
  j["ddp"] = {{"max_iterations", d.max_iterations}, {"tolerance", d.tolerance}, {"reg_init", d.reg_init},
              {"reg_min", d.reg_min}, {"reg_max", d.reg_max}, {"reg_factor", d.reg_factor},
              {"backtrack", d.backtrack}, {"armijo", d.armijo}, {"min_step", d.min_step},
              {"divergence_norm", d.divergence_norm}, {"fault_line_search", d.fault_line_search}};
  j["freetime"] = {{"t_f0", f.t_f0}, {"alpha", f.alpha}, {"eps", f.eps},
                   {"eps0", f.eps0}, {"dt", f.dt},       {"max_iterations", f.max_iterations}};
  j["schedule"] = c.solver.schedule;
  j["lqr"] = {{"horizon", c.lqr.horizon}, {"step", c.lqr.step},   {"t_m", c.lqr.blend.t_m},
              {"t_M", c.lqr.blend.t_M},   {"eps", c.lqr.blend.eps}, {"u_min", c.lqr.u_min},
              {"u_max", c.lqr.u_max}};
  j["training"] = {{"learning_rate", c.training.adam.learning_rate}, {"beta1", c.training.adam.beta1},
                   {"beta2", c.training.adam.beta2},                 {"epsilon", c.training.adam.epsilon},
                   {"batch_size", c.training.batch_size},           {"epochs", c.training.epochs},
                   {"validate_every", c.training.validate_every}};
  j["sampling"] = {{"tau", c.sampling.tau},
                   {"iterations", c.sampling.iterations},
                   {"mode", to_string(c.sampling.mode)},
                   {"fractions", c.sampling.fractions},
                   {"dt_sim", c.sampling.ivp.dt_sim},
                   {"horizon_factor", c.sampling.horizon_factor},
                   {"eps_succ", c.sampling.ivp.eps_succ}};
  if (c.sampling.horizon_explicit) j["sampling"]["horizon"] = c.sampling.ivp.horizon;
  j["experiment"] = {{"q_c", c.experiment.q_c},
                     {"side", c.experiment.side},
                     {"n_train", c.experiment.n_train},
                     {"n_val", c.experiment.n_val},
                     {"n_test", c.experiment.n_test},
                     {"seed", c.experiment.seed},
                     {"seeds", c.experiment.seeds},
                     {"architecture", to_string(c.experiment.architecture)},
                     {"ratio_cap_fail", c.experiment.ratio_cap_fail},
                     {"ratio_cap_success", c.experiment.ratio_cap_success}};
  j["workers"] = c.workers;
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DomainError("config file " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace ftoc
