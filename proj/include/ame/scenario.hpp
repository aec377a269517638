// Copyright 2026 The AME Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ame/distributions.hpp"
#include "ame/equilibrium.hpp"
#include "ame/errors.hpp"
#include "ame/game.hpp"
#include "ame/market.hpp"

// Scenario files: one market plus optional solver, game and simulation
// settings. Every error names the offending field in JSON-path form.

namespace ame {

class ScenarioError : public Error {
 public:
  ScenarioError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Not well-formed JSON.
class ParseError : public ScenarioError {
 public:
  using ScenarioError::ScenarioError;
};

// Well-formed JSON with unknown keys, missing keys or wrong types.
class SchemaError : public ScenarioError {
 public:
  using ScenarioError::ScenarioError;
};

// Right shape, unusable values.
class ValidationError : public ScenarioError {
 public:
  using ScenarioError::ScenarioError;
};

inline constexpr int kSchemaVersion = 1;

struct SimSettings {
  std::size_t samples = 1000000;
  std::uint64_t seed = 1;
  bool operator==(const SimSettings&) const = default;
};

struct ScenarioFile {
  int schema_version = kSchemaVersion;
  MarketConfig market;  // sorted, shares sum to one, not merged
  SolverOptions solver;
  GameOptions game;
  int max_iters = 50;
  KindSet kinds;
  std::optional<SimSettings> sim;
  std::vector<std::string> warnings;  // e.g. reserve_above_support
};

inline bool operator==(const SolverOptions& a, const SolverOptions& b) {
  return a.quad_tol == b.quad_tol && a.breakpoint_tol == b.breakpoint_tol &&
         a.ode_grid == b.ode_grid && a.table_cells == b.table_cells;
}

inline bool operator==(const ScenarioFile& a, const ScenarioFile& b) {
  const auto& ga = a.game;
  const auto& gb = b.game;
  return a.schema_version == b.schema_version && a.market == b.market &&
         a.solver == b.solver && ga.coarse_grid == gb.coarse_grid &&
         ga.span_quantile == gb.span_quantile &&
         ga.refine_tol == gb.refine_tol && ga.eq_tol == gb.eq_tol &&
         ga.fd_step == gb.fd_step && a.max_iters == b.max_iters &&
         a.kinds.first_price == b.kinds.first_price &&
         a.kinds.second_price == b.kinds.second_price && a.sim == b.sim &&
         a.warnings == b.warnings;
}

namespace scenario_detail {

using nlohmann::json;

inline void only_keys(const json& obj, const std::string& path,
                      std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) {
      throw SchemaError(path.empty() ? key : path + "." + key, "unknown key");
    }
  }
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline const json& require(const json& obj, const std::string& path,
                           const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(join(path, key), "missing");
  return *it;
}

inline double number(const json& v, const std::string& field) {
  if (!v.is_number()) throw SchemaError(field, "expected a number");
  return v.get<double>();
}

inline long long integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw SchemaError(field, "expected an integer");
  return v.get<long long>();
}

inline std::string text(const json& v, const std::string& field) {
  if (!v.is_string()) throw SchemaError(field, "expected a string");
  return v.get<std::string>();
}

inline double positive(const json& v, const std::string& field) {
  const double x = number(v, field);
  if (!(x > 0.0)) throw ValidationError(field, "must be positive");
  return x;
}

// params is positional: uniform [lo, hi], exponential [rate],
// bounded_power [exponent].
inline ValueDistribution parse_distribution(const json& d) {
  only_keys(d, "distribution", {"family", "params"});
  const std::string family =
      text(require(d, "distribution", "family"), "distribution.family");
  const json& p = require(d, "distribution", "params");
  const std::string pp = "distribution.params";
  if (!p.is_array()) throw SchemaError(pp, "expected an array");
  auto arity = [&](std::size_t k) {
    if (p.size() != k) {
      throw SchemaError(pp, family + " takes " + std::to_string(k) +
                                " parameter(s)");
    }
  };
  auto at = [&](std::size_t i) {
    return number(p[i], pp + "[" + std::to_string(i) + "]");
  };
  try {
    if (family == "uniform") {
      arity(2);
      const double lo = at(0), hi = at(1);
      if (lo < 0.0) throw ValidationError(pp + "[0]", "must be nonnegative");
      if (!(hi > lo)) throw ValidationError(pp + "[1]", "must exceed lo");
      return ValueDistribution::uniform(lo, hi);
    }
    if (family == "exponential") {
      arity(1);
      if (!(at(0) > 0.0)) throw ValidationError(pp + "[0]", "must be positive");
      return ValueDistribution::exponential(at(0));
    }
    if (family == "bounded_power") {
      arity(1);
      if (!(at(0) > 0.0)) throw ValidationError(pp + "[0]", "must be positive");
      return ValueDistribution::bounded_power(at(0));
    }
  } catch (const InvalidArgument& e) {
    throw ValidationError(pp, e.what());
  }
  throw ValidationError("distribution.family",
                        "unknown family '" + family + "'");
}

inline json distribution_json(const ValueDistribution& d) {
  return {{"family", family_name(d.family())}, {"params", d.params()}};
}

}  // namespace scenario_detail

inline ScenarioFile parse_scenario_json(const nlohmann::json& root) {
  using namespace scenario_detail;
  only_keys(root, "",
            {"schema_version", "n_bidders", "distribution", "exchanges",
             "solver", "game", "sim"});
  ScenarioFile sf;
  if (root.contains("schema_version")) {
    const auto v = integer(root["schema_version"], "schema_version");
    if (v != kSchemaVersion) {
      throw SchemaError("schema_version",
                        "unsupported version " + std::to_string(v));
    }
  }

  MarketConfig cfg;
  const auto n = integer(require(root, "", "n_bidders"), "n_bidders");
  if (n < 2) throw ValidationError("n_bidders", "need at least 2 bidders");
  cfg.n_bidders = static_cast<int>(n);
  cfg.dist = parse_distribution(require(root, "", "distribution"));

  const json& ex = require(root, "", "exchanges");
  if (!ex.is_array()) throw SchemaError("exchanges", "expected an array");
  if (ex.empty()) throw ValidationError("exchanges", "no exchanges");
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const std::string p = "exchanges[" + std::to_string(i) + "]";
    only_keys(ex[i], p, {"lambda", "kind", "reserve"});
    const double lambda = number(require(ex[i], p, "lambda"), p + ".lambda");
    if (!(lambda > 0.0)) throw ValidationError(p + ".lambda", "must be > 0");
    const std::string kind = text(require(ex[i], p, "kind"), p + ".kind");
    const double reserve =
        number(require(ex[i], p, "reserve"), p + ".reserve");
    if (reserve < 0.0) {
      throw ValidationError(p + ".reserve", "must be nonnegative");
    }
    MechanismSpec mech;
    if (kind == "fp") {
      mech = first_price(reserve);
    } else if (kind == "sp") {
      mech = second_price(reserve);
    } else {
      throw ValidationError(p + ".kind", "expected 'fp' or 'sp'");
    }
    cfg.exchanges.push_back({lambda, mech});
  }
  sf.market = sorted_market(cfg);
  for (const auto& e : sf.market.exchanges) {
    if (e.mechanism.reserve >= sf.market.dist.integration_hi()) {
      std::ostringstream w;
      w << "reserve_above_support: " << kind_name(e.mechanism.kind) << "_"
        << e.mechanism.reserve << " never sells";
      sf.warnings.push_back(w.str());
    }
  }

  if (root.contains("solver")) {
    const json& s = root["solver"];
    only_keys(s, "solver",
              {"quad_tol", "breakpoint_tol", "ode_grid", "table_cells"});
    if (s.contains("quad_tol")) {
      sf.solver.quad_tol = positive(s["quad_tol"], "solver.quad_tol");
    }
    if (s.contains("breakpoint_tol")) {
      sf.solver.breakpoint_tol =
          positive(s["breakpoint_tol"], "solver.breakpoint_tol");
    }
    if (s.contains("ode_grid")) {
      const auto g = integer(s["ode_grid"], "solver.ode_grid");
      if (g < 512) throw ValidationError("solver.ode_grid", "must be >= 512");
      sf.solver.ode_grid = static_cast<int>(g);
    }
    if (s.contains("table_cells")) {
      const auto c = integer(s["table_cells"], "solver.table_cells");
      if (c < 16) throw ValidationError("solver.table_cells", "must be >= 16");
      sf.solver.table_cells = static_cast<int>(c);
    }
  }
  sf.game.solver = sf.solver;

  if (root.contains("game")) {
    const json& g = root["game"];
    only_keys(g, "game",
              {"coarse_grid", "span_quantile", "refine_tol", "eq_tol",
               "fd_step", "max_iters", "kinds"});
    if (g.contains("coarse_grid")) {
      const auto c = integer(g["coarse_grid"], "game.coarse_grid");
      if (c < 3) throw ValidationError("game.coarse_grid", "must be >= 3");
      sf.game.coarse_grid = static_cast<int>(c);
    }
    if (g.contains("span_quantile")) {
      const double q = positive(g["span_quantile"], "game.span_quantile");
      if (q >= 1.0) throw ValidationError("game.span_quantile", "must be < 1");
      sf.game.span_quantile = q;
    }
    if (g.contains("refine_tol")) {
      sf.game.refine_tol = positive(g["refine_tol"], "game.refine_tol");
    }
    if (g.contains("eq_tol")) {
      sf.game.eq_tol = positive(g["eq_tol"], "game.eq_tol");
    }
    if (g.contains("fd_step")) {
      sf.game.fd_step = positive(g["fd_step"], "game.fd_step");
    }
    if (g.contains("max_iters")) {
      const auto m = integer(g["max_iters"], "game.max_iters");
      if (m < 1) throw ValidationError("game.max_iters", "must be >= 1");
      sf.max_iters = static_cast<int>(m);
    }
    if (g.contains("kinds")) {
      const json& k = g["kinds"];
      if (!k.is_array()) throw SchemaError("game.kinds", "expected an array");
      sf.kinds = {false, false};
      for (std::size_t i = 0; i < k.size(); ++i) {
        const std::string f = "game.kinds[" + std::to_string(i) + "]";
        const std::string name = text(k[i], f);
        if (name == "fp") {
          sf.kinds.first_price = true;
        } else if (name == "sp") {
          sf.kinds.second_price = true;
        } else {
          throw ValidationError(f, "expected 'fp' or 'sp'");
        }
      }
      if (!sf.kinds.first_price && !sf.kinds.second_price) {
        throw ValidationError("game.kinds", "empty");
      }
    }
  }

  if (root.contains("sim")) {
    const json& s = root["sim"];
    only_keys(s, "sim", {"samples", "seed"});
    SimSettings sim;
    if (s.contains("samples")) {
      const auto k = integer(s["samples"], "sim.samples");
      if (k < 1) throw ValidationError("sim.samples", "must be >= 1");
      sim.samples = static_cast<std::size_t>(k);
    }
    if (s.contains("seed")) {
      const json& v = s["seed"];
      if (!v.is_number_unsigned() && !(v.is_number_integer() &&
                                       v.get<long long>() >= 0)) {
        throw SchemaError("sim.seed", "expected a nonnegative integer");
      }
      sim.seed = v.get<std::uint64_t>();
    }
    sf.sim = sim;
  }
  return sf;
}

inline ScenarioFile parse_scenario(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("$", "byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return parse_scenario_json(root);
}

inline ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("$", "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

// Canonical form: every setting written out, keys sorted by the json
// object type, so equal scenarios serialize to equal bytes.
inline nlohmann::json to_json(const ScenarioFile& sf) {
  using nlohmann::json;
  json ex = json::array();
  for (const auto& e : sf.market.exchanges) {
    ex.push_back({{"lambda", e.lambda},
                  {"kind", e.mechanism.kind == MechanismKind::FirstPrice
                               ? "fp"
                               : "sp"},
                  {"reserve", e.mechanism.reserve}});
  }
  json kinds = json::array();
  if (sf.kinds.first_price) kinds.push_back("fp");
  if (sf.kinds.second_price) kinds.push_back("sp");
  json root = {
      {"schema_version", sf.schema_version},
      {"n_bidders", sf.market.n_bidders},
      {"distribution", scenario_detail::distribution_json(sf.market.dist)},
      {"exchanges", ex},
      {"solver",
       {{"quad_tol", sf.solver.quad_tol},
        {"breakpoint_tol", sf.solver.breakpoint_tol},
        {"ode_grid", sf.solver.ode_grid},
        {"table_cells", sf.solver.table_cells}}},
      {"game",
       {{"coarse_grid", sf.game.coarse_grid},
        {"span_quantile", sf.game.span_quantile},
        {"refine_tol", sf.game.refine_tol},
        {"eq_tol", sf.game.eq_tol},
        {"fd_step", sf.game.fd_step},
        {"max_iters", sf.max_iters},
        {"kinds", kinds}}}};
  if (sf.sim) {
    root["sim"] = {{"samples", sf.sim->samples}, {"seed", sf.sim->seed}};
  }
  return root;
}

inline std::string serialize(const ScenarioFile& sf) {
  return to_json(sf).dump(2);
}

}  // namespace ame
