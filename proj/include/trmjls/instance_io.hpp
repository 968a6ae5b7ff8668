/*
 Copyright 2026 The trmjls Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "trmjls/markov.hpp"
#include "trmjls/matrix_family.hpp"
#include "trmjls/moments.hpp"
#include "trmjls/montecarlo.hpp"
#include "trmjls/plant.hpp"
#include "trmjls/riccati.hpp"

namespace trmjls {

using nlohmann::json;

/// One parsed problem instance: exactly one plant kind plus an optional
/// simulation section. Chains are normalized and plants validated on read.
struct InstanceDocument {
  std::optional<ControlPlant> control;
  std::optional<FilterPlant> filter;
  std::optional<SimConfig> simulation;

  bool is_control() const { return control.has_value(); }
};

namespace io_detail {

inline Eigen::MatrixXd parse_matrix(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw std::invalid_argument(name + ": expected a nested array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::invalid_argument(name + ": ragged rows at row " +
                                  std::to_string(r));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

inline Eigen::VectorXd parse_vector(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument(name + ": expected a non-empty array");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

inline MatrixFamily parse_family(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument(name +
                                ": expected an array with one matrix per mode");
  }
  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    mats.push_back(parse_matrix(j[i], name + "[" + std::to_string(i) + "]"));
  }
  return MatrixFamily(std::move(mats));
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json family_to_json(const MatrixFamily& f) {
  json out = json::array();
  for (int i = 0; i < f.size(); ++i) out.push_back(matrix_to_json(f[i]));
  return out;
}

inline std::string full_precision(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace io_detail

inline MarkovSpec parse_chain(const json& j) {
  MarkovSpec chain;
  chain.transition = io_detail::parse_matrix(j.at("transition"),
                                             "chain.transition");
  chain.initial_eta =
      io_detail::parse_vector(j.at("initial_eta"), "chain.initial_eta");
  chain.horizon = j.at("horizon").get<int>();
  return normalize_chain(chain);
}

/// Parses an instance document. JSON with // and /* */ comments allowed.
/// Throws std::invalid_argument with one line per violation when the plant
/// fails validation.
inline InstanceDocument parse_instance(const json& doc) {
  InstanceDocument instance;
  const bool has_control = doc.contains("control");
  const bool has_filter = doc.contains("filter");
  if (has_control == has_filter) {
    throw std::invalid_argument(
        "instance must contain exactly one of \"control\" or \"filter\"");
  }
  if (!doc.contains("chain")) {
    throw std::invalid_argument("instance missing \"chain\" section");
  }
  const MarkovSpec chain = parse_chain(doc.at("chain"));

  std::vector<std::string> violations;
  if (has_control) {
    const json& p = doc.at("control");
    ControlPlant plant;
    plant.A = io_detail::parse_family(p.at("A"), "control.A");
    plant.B = io_detail::parse_family(p.at("B"), "control.B");
    plant.C = io_detail::parse_family(p.at("C"), "control.C");
    plant.D = io_detail::parse_family(p.at("D"), "control.D");
    plant.E = io_detail::parse_family(p.at("E"), "control.E");
    plant.Delta = io_detail::parse_matrix(p.at("Delta"), "control.Delta");
    plant.chain = chain;
    violations = validate_plant(plant);
    instance.control = std::move(plant);
  } else {
    const json& p = doc.at("filter");
    FilterPlant plant;
    plant.F = io_detail::parse_family(p.at("F"), "filter.F");
    plant.G = io_detail::parse_family(p.at("G"), "filter.G");
    plant.L = io_detail::parse_family(p.at("L"), "filter.L");
    plant.H = io_detail::parse_family(p.at("H"), "filter.H");
    plant.Sigma = io_detail::parse_matrix(p.at("Sigma"), "filter.Sigma");
    plant.chain = chain;
    violations = validate_plant(plant);
    instance.filter = std::move(plant);
  }
  if (!violations.empty()) {
    std::string msg = "plant validation failed:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw std::invalid_argument(msg);
  }

  if (doc.contains("simulation")) {
    const json& s = doc.at("simulation");
    SimConfig cfg;
    cfg.samples = s.value("samples", std::size_t{10000});
    cfg.seed = s.value("seed", std::uint64_t{0});
    if (cfg.samples < 1) {
      throw std::invalid_argument("simulation.samples must be >= 1");
    }
    instance.simulation = cfg;
  }
  return instance;
}

inline InstanceDocument read_instance(const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    throw std::invalid_argument("cannot open instance file: " + path);
  }
  json doc = json::parse(file, nullptr, /*allow_exceptions=*/true,
                         /*ignore_comments=*/true);
  return parse_instance(doc);
}

// --- machine-readable exports ---

inline json control_solution_to_json(const ControlSolution& sol) {
  json out;
  out["kind"] = "control";
  out["optimal_cost"] = sol.optimal_cost;
  out["feedback_convention"] = "u(t) = -M_{theta(t)}(t) x(t)";
  json p = json::array();
  for (const auto& fam : sol.P) p.push_back(io_detail::family_to_json(fam));
  out["P"] = std::move(p);
  json gains = json::array();
  for (const auto& fam : sol.gains.gains) {
    gains.push_back(io_detail::family_to_json(fam));
  }
  out["gains"] = std::move(gains);
  return out;
}

inline json filter_solution_to_json(const FilterSolution& sol) {
  json out;
  out["kind"] = "filter";
  json s = json::array();
  for (const auto& fam : sol.S) s.push_back(io_detail::family_to_json(fam));
  out["S"] = std::move(s);
  json gains = json::array();
  for (const auto& fam : sol.gains) {
    gains.push_back(io_detail::family_to_json(fam));
  }
  out["gains"] = std::move(gains);
  return out;
}

/// Reads back a gain schedule written by control_solution_to_json.
inline GainSchedule read_gain_schedule(const json& doc) {
  GainSchedule schedule;
  for (const auto& step : doc.at("gains")) {
    schedule.gains.push_back(io_detail::parse_family(step, "gains"));
  }
  return schedule;
}

/// CSV rows "t,i,<entries row-major>" for a time-indexed matrix family.
inline void write_schedule_csv(std::ostream& os,
                               const std::vector<MatrixFamily>& schedule) {
  if (schedule.empty()) {
    os << "t,i\n";
    return;
  }
  os << "t,i";
  const auto rows = schedule.front().rows();
  const auto cols = schedule.front().cols();
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      os << ",m" << r << c;
    }
  }
  os << "\n";
  for (std::size_t t = 0; t < schedule.size(); ++t) {
    const MatrixFamily& fam = schedule[t];
    for (int i = 0; i < fam.size(); ++i) {
      os << t << "," << i;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          os << "," << io_detail::full_precision(fam[i](r, c));
        }
      }
      os << "\n";
    }
  }
}

inline void write_trajectory_csv(std::ostream& os,
                                 const MomentTrajectory& traj) {
  write_schedule_csv(os, traj.values);
}

/// CSV with the run metadata embedded as a leading comment line; one row
/// per (t, i) holding the count, the mean entries, and their standard
/// errors, all row-major.
inline void write_empirical_csv(std::ostream& os,
                                const EmpiricalMoments& emp) {
  os << "# seed=" << emp.meta.seed << " samples=" << emp.meta.samples
     << " rng=" << emp.meta.algorithm << " workers=" << emp.meta.workers
     << " estimator=" << emp.meta.estimator << " normalization="
     << (emp.normalization == EmpiricalMoments::Normalization::Conditional
             ? "conditional"
             : "indicator")
     << "\n";
  if (emp.mean.empty() || emp.mean.front().empty()) {
    os << "t,i,count\n";
    return;
  }
  const auto rows = emp.mean.front().front().rows();
  const auto cols = emp.mean.front().front().cols();
  os << "t,i,count";
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) os << ",m" << r << c;
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) os << ",se" << r << c;
  }
  os << "\n";
  for (std::size_t t = 0; t < emp.mean.size(); ++t) {
    for (std::size_t i = 0; i < emp.mean[t].size(); ++i) {
      os << t << "," << i << "," << emp.counts[t][i];
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          os << "," << io_detail::full_precision(emp.mean[t][i](r, c));
        }
      }
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          os << "," << io_detail::full_precision(emp.std_error[t][i](r, c));
        }
      }
      os << "\n";
    }
  }
}

inline json empirical_to_json(const EmpiricalMoments& emp) {
  json out;
  out["metadata"] = {{"seed", emp.meta.seed},
                     {"samples", emp.meta.samples},
                     {"rng", emp.meta.algorithm},
                     {"workers", emp.meta.workers},
                     {"estimator", emp.meta.estimator}};
  out["normalization"] =
      emp.normalization == EmpiricalMoments::Normalization::Conditional
          ? "conditional"
          : "indicator";
  out["cost_mean"] = emp.cost_mean;
  out["cost_std_error"] = emp.cost_std_error;
  json per_step = json::array();
  for (std::size_t t = 0; t < emp.mean.size(); ++t) {
    json step = json::array();
    for (std::size_t i = 0; i < emp.mean[t].size(); ++i) {
      step.push_back({{"count", emp.counts[t][i]},
                      {"mean", io_detail::matrix_to_json(emp.mean[t][i])},
                      {"std_error",
                       io_detail::matrix_to_json(emp.std_error[t][i])}});
    }
    per_step.push_back(std::move(step));
  }
  out["moments"] = std::move(per_step);
  return out;
}

}  // namespace trmjls
