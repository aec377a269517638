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

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "ame/equilibrium.hpp"
#include "ame/game.hpp"
#include "ame/market.hpp"
#include "ame/revenue.hpp"
#include "ame/simulation.hpp"

// JSON views of the result types, used by the command-line front end.

namespace ame {

inline nlohmann::json to_json(const MechanismSpec& m) {
  return {{"kind", m.kind == MechanismKind::FirstPrice ? "fp" : "sp"},
          {"reserve", m.reserve}};
}

inline nlohmann::json to_json(const MarketConfig& cfg) {
  nlohmann::json ex = nlohmann::json::array();
  for (const auto& e : cfg.exchanges) {
    auto j = to_json(e.mechanism);
    j["lambda"] = e.lambda;
    ex.push_back(j);
  }
  return {{"n_bidders", cfg.n_bidders},
          {"family", family_name(cfg.dist.family())},
          {"params", cfg.dist.params()},
          {"exchanges", ex}};
}

// Breakpoints, one-sided limits, segment forms and bids at `samples`.
inline nlohmann::json to_json(const BiddingFunction& beta,
                              const std::vector<double>& samples) {
  using nlohmann::json;
  json ex = json::array();
  for (std::size_t ell = 1; ell <= beta.exchange_count(); ++ell) {
    const auto [left, right] = beta.one_sided_limits(ell);
    auto j = to_json(beta.market().exchanges[ell - 1].mechanism);
    j["lambda"] = beta.market().exchanges[ell - 1].lambda;
    j["breakpoint"] = beta.breakpoint(ell);
    j["sells"] = beta.sells(ell);
    j["bid_left"] = left;
    j["bid_right"] = right;
    ex.push_back(j);
  }
  json segs = json::array();
  for (const auto& s : beta.segments()) {
    segs.push_back({{"lo", s.lo},
                    {"hi", s.hi},
                    {"form", form_name(s.form)},
                    {"fp_share", s.active_fp_share},
                    {"sp_share", s.active_sp_share},
                    {"start_bid", s.start_bid}});
  }
  json pts = json::array();
  for (double v : samples) pts.push_back({v, beta(v)});
  json above = json::array();
  for (auto k : beta.reserve_above_support()) above.push_back(k);
  return {{"exchanges", ex},
          {"segments", segs},
          {"reserve_above_support", above},
          {"samples", pts}};
}

inline nlohmann::json to_json(const RevenueReport& rep) {
  using nlohmann::json;
  json ex = json::array();
  for (const auto& e : rep.per_exchange) {
    auto j = to_json(e.mechanism);
    j["index"] = e.index;
    j["lambda"] = e.lambda;
    j["breakpoint"] = e.breakpoint;
    j["revenue"] = e.revenue;
    j["welfare"] = e.welfare;
    j["sale_probability"] = e.sale_probability;
    j["sells"] = e.sells;
    j["reserve_above_support"] = e.reserve_above_support;
    ex.push_back(j);
  }
  json out = {{"per_exchange", ex},
              {"weighted_total", rep.weighted_total},
              {"welfare", rep.welfare},
              {"weighted_welfare", rep.weighted_welfare},
              {"sale_probability", rep.sale_probability}};
  out["myerson"] = rep.myerson ? json(*rep.myerson) : json(nullptr);
  out["myerson_welfare"] =
      rep.myerson_welfare ? json(*rep.myerson_welfare) : json(nullptr);
  return out;
}

inline nlohmann::json to_json(const SimReport& r) {
  return {{"samples", r.samples},
          {"per_exchange_mean", r.per_exchange_mean},
          {"per_exchange_stderr", r.per_exchange_stderr},
          {"per_exchange_welfare_mean", r.per_exchange_welfare_mean},
          {"per_exchange_sale_rate", r.per_exchange_sale_rate},
          {"welfare_mean", r.welfare_mean},
          {"welfare_stderr", r.welfare_stderr},
          {"sale_rate", r.sale_rate},
          {"sale_stderr", r.sale_stderr}};
}

inline nlohmann::json to_json(const BestResponse& br) {
  using nlohmann::json;
  json curve = json::array();
  for (const auto& p : br.revenue_curve) {
    curve.push_back({{"kind", p.kind == MechanismKind::FirstPrice ? "fp" : "sp"},
                     {"reserve", p.reserve},
                     {"revenue", p.revenue}});
  }
  return {{"exchange", br.exchange},
          {"best", to_json(MechanismSpec{br.best_kind, br.best_reserve})},
          {"best_revenue", br.best_revenue},
          {"current_revenue", br.current_revenue},
          {"gain", br.best_revenue - br.current_revenue},
          {"failed_probes", br.failed_probes},
          {"revenue_curve", curve}};
}

inline nlohmann::json to_json(const EquilibriumResult& eq) {
  using nlohmann::json;
  json kinds = json::array();
  for (auto k : eq.kinds) {
    kinds.push_back(k == MechanismKind::FirstPrice ? "fp" : "sp");
  }
  return {{"market", to_json(eq.market)},
          {"reserves_sorted", eq.reserves},
          {"kinds", kinds},
          {"revenues", eq.revenues},
          {"weighted_total", eq.weighted_total},
          {"iterations", eq.iterations},
          {"converged", eq.converged},
          {"max_gain", eq.max_gain}};
}

}  // namespace ame
