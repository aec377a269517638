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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ame/distributions.hpp"
#include "ame/equilibrium.hpp"
#include "ame/game.hpp"
#include "ame/market.hpp"
#include "ame/revenue.hpp"
#include "ame/simulation.hpp"

// The reproduction harness: every acceptance criterion as a named,
// timed list of checks. Shared by `ame repro` and the acceptance test.

namespace ame {

struct Check {
  std::string label;
  double expected = 0.0;
  double computed = 0.0;
  double tol = 0.0;
  std::string relation;  // "abs", "<", ">", "<=", ">="
  bool pass = false;
};

struct CriterionResult {
  std::string id;
  std::string title;
  std::string quote;  // the figure being reproduced
  std::vector<Check> checks;
  double seconds = 0.0;
  double time_limit = 0.0;  // 0 means unbounded
  std::string error;        // set when the criterion threw
  bool pass = false;
};

struct ReproOptions {
  SolverOptions solver;
  GameOptions game;
  std::size_t mc_samples = 1000000;
  std::uint64_t seed = 20260101;
  std::vector<std::string> only;  // criterion ids; empty runs all
};

struct SuiteMarket {
  std::string name;
  MarketConfig cfg;
};

// Markets for the Monte Carlo and no-regret criteria.
inline std::vector<SuiteMarket> suite_markets() {
  const auto U = ValueDistribution::uniform(0.0, 1.0);
  const auto E1 = ValueDistribution::exponential(1.0);
  const auto E2 = ValueDistribution::exponential(2.0);
  const auto P2 = ValueDistribution::bounded_power(2.0);
  const double third = 1.0 / 3.0;
  return {
      {"U2 FP.3 FP.5", {2, U, {{0.5, first_price(0.3)}, {0.5, first_price(0.5)}}}},
      {"U2 FP0 FP0", {2, U, {{0.5, first_price(0.0)}, {0.5, first_price(0.0)}}}},
      {"U2 FP.2402 FP.3157",
       {2, U, {{0.5, first_price(0.2402)}, {0.5, first_price(0.3157)}}}},
      {"U2 FP0 SP0", {2, U, {{0.5, first_price(0.0)}, {0.5, second_price(0.0)}}}},
      {"U2 SP.2 SP.4", {2, U, {{0.5, second_price(0.2)}, {0.5, second_price(0.4)}}}},
      {"U3 FP.1 SP.2 FP.3",
       {3, U,
        {{third, first_price(0.1)},
         {third, second_price(0.2)},
         {third, first_price(0.3)}}}},
      {"E1 n2 FP.5 SP1", {2, E1, {{0.4, first_price(0.5)}, {0.6, second_price(1.0)}}}},
      {"P2 n3 FP.2 FP.6", {3, P2, {{0.5, first_price(0.2)}, {0.5, first_price(0.6)}}}},
      {"U2 FP.2 SP.4", {2, U, {{0.5, first_price(0.2)}, {0.5, second_price(0.4)}}}},
      {"U2 SP.5", {2, U, {{1.0, second_price(0.5)}}}},
      {"E2 n3 SP.1 FP.3 FP.6",
       {3, E2,
        {{0.3, second_price(0.1)},
         {0.3, first_price(0.3)},
         {0.4, first_price(0.6)}}}},
  };
}

struct DominanceCase {
  std::string name;
  MarketConfig cfg;
  std::size_t j;
};

// Markets satisfying the FP-dominance hypothesis: every exchange below
// r_j runs first price.
inline std::vector<DominanceCase> dominance_suite() {
  const auto U = ValueDistribution::uniform(0.0, 1.0);
  const auto E1 = ValueDistribution::exponential(1.0);
  const auto E2 = ValueDistribution::exponential(2.0);
  const double third = 1.0 / 3.0;
  return {
      {"U2 FP.2 ?.4", {2, U, {{0.5, first_price(0.2)}, {0.5, first_price(0.4)}}}, 1},
      {"U3 FP.1 FP.2 ?.3",
       {3, U,
        {{third, first_price(0.1)},
         {third, first_price(0.2)},
         {third, first_price(0.3)}}},
       2},
      {"U2 FP0 ?.3", {2, U, {{0.3, first_price(0.0)}, {0.7, first_price(0.3)}}}, 1},
      {"U3 FP.1 ?.5", {3, U, {{0.5, first_price(0.1)}, {0.5, first_price(0.5)}}}, 1},
      {"U2 ?.3 FP.2", {2, U, {{0.5, first_price(0.3)}, {0.5, first_price(0.2)}}}, 0},
      {"U2 ?.3 SP.5", {2, U, {{0.5, first_price(0.3)}, {0.5, second_price(0.5)}}}, 0},
      {"U3 FP.1 ?.25 SP.4",
       {3, U,
        {{0.25, first_price(0.1)},
         {0.25, first_price(0.25)},
         {0.5, second_price(0.4)}}},
       1},
      {"E1 n2 FP.5 ?1", {2, E1, {{0.5, first_price(0.5)}, {0.5, first_price(1.0)}}}, 1},
      {"E1 n3 FP.2 ?.8", {3, E1, {{0.4, first_price(0.2)}, {0.6, first_price(0.8)}}}, 1},
      {"E2 n2 FP.1 FP.3 ?.6",
       {2, E2,
        {{third, first_price(0.1)},
         {third, first_price(0.3)},
         {third, first_price(0.6)}}},
       2},
      {"E1 n3 ?.4 SP.9", {3, E1, {{0.5, first_price(0.4)}, {0.5, second_price(0.9)}}}, 0},
      {"E2 n3 FP0 ?.2 SP.5",
       {3, E2,
        {{0.3, first_price(0.0)},
         {0.3, first_price(0.2)},
         {0.4, second_price(0.5)}}},
       1},
  };
}

namespace repro_detail {

inline Check near(std::string label, double expected, double computed,
                  double tol) {
  return {std::move(label), expected, computed, tol, "abs",
          std::abs(computed - expected) <= tol};
}

// computed `rel` bound, e.g. computed > bound.
inline Check compare(std::string label, double computed,
                     const std::string& rel, double bound) {
  bool ok = false;
  if (rel == "<") ok = computed < bound;
  if (rel == "<=") ok = computed <= bound;
  if (rel == ">") ok = computed > bound;
  if (rel == ">=") ok = computed >= bound;
  return {std::move(label), bound, computed, 0.0, rel, ok};
}

inline MarketConfig uniform_pair(MechanismSpec a, MechanismSpec b,
                                 double lambda_a = 0.5, int n = 2) {
  return {n, ValueDistribution::uniform(0.0, 1.0),
          {{lambda_a, a}, {1.0 - lambda_a, b}}};
}

struct Context {
  ReproOptions opts;
  std::optional<EquilibriumResult> cor5;

  const EquilibriumResult& equilibrium() {
    if (!cor5) {
      const auto start = uniform_pair(first_price(0.0), first_price(0.0));
      GameOptions g = opts.game;
      g.solver = opts.solver;
      cor5 = iterated_best_response(start, 50, g.eq_tol, KindSet::fp_only(), g);
    }
    return *cor5;
  }
};

inline void cor3(Context& ctx, CriterionResult& out) {
  const auto& s = ctx.opts.solver;
  const auto base = uniform_pair(first_price(0.0), first_price(0.0));
  const double dev = revenue_with(base, 0, first_price(0.1), s);
  const double r0 = revenue_with(base, 0, first_price(0.0), s);
  out.checks.push_back(near("Rev1(FP_0.1, FP_0)", 0.3402, dev, 5e-4));
  out.checks.push_back(near("Rev1(FP_0, FP_0)", 1.0 / 3.0, r0, 1e-6));
}

inline void cor4(Context& ctx, CriterionResult& out) {
  GameOptions g = ctx.opts.game;
  g.solver = ctx.opts.solver;
  for (double r : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const auto cfg = uniform_pair(first_price(r), first_price(r));
    std::ostringstream label;
    label << "dRev1/dr1 at r=" << r;
    out.checks.push_back(
        near(label.str(), -2.0 * r * r, symmetric_instability(cfg, g), 1e-3));
  }
}

inline void cor5(Context& ctx, CriterionResult& out) {
  const auto& eq = ctx.equilibrium();
  out.checks.push_back(compare("converged", eq.converged ? 1.0 : 0.0, ">", 0.5));
  out.checks.push_back(near("lower reserve", 0.2402, eq.reserves[0], 5e-3));
  out.checks.push_back(near("upper reserve", 0.3157, eq.reserves[1], 5e-3));
  // Revenues listed by the reserve of the exchange that earns them.
  std::size_t low = eq.market.exchanges[0].mechanism.reserve <=
                            eq.market.exchanges[1].mechanism.reserve
                        ? 0
                        : 1;
  out.checks.push_back(
      near("revenue at lower reserve", 0.397, eq.revenues[low], 2e-3));
  out.checks.push_back(
      near("revenue at upper reserve", 0.378, eq.revenues[1 - low], 2e-3));
  out.checks.push_back(near("weighted total", 0.3875, eq.weighted_total, 2e-3));
  const double myerson = myerson_benchmark(eq.market.dist, 2, ctx.opts.solver);
  out.checks.push_back(near("Myerson benchmark", 5.0 / 12.0, myerson, 1e-6));
  out.checks.push_back(
      compare("weighted total < Myerson", eq.weighted_total, "<", myerson));
}

inline void welfare(Context& ctx, CriterionResult& out) {
  const auto& eq = ctx.equilibrium();
  const auto& s = ctx.opts.solver;
  const auto beta = solve_bidding(eq.market, s);
  out.checks.push_back(near("breakpoint a", 0.369, beta.breakpoint(2), 5e-3));
  const auto rep = revenue_report(eq.market, beta, s);
  const OrderStatistics& os = beta.order_statistics();
  const double single = served_welfare(os, 0.5, s.quad_tol);
  out.checks.push_back(
      compare("market welfare > welfare of SP_0.5", rep.welfare, ">", single));
}

inline void two_segment_form(Context& ctx, CriterionResult& out) {
  const auto& s = ctx.opts.solver;
  std::mt19937_64 eng(ctx.opts.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    // r2 <= 0.7 keeps the breakpoint inside [0, 1].
    const double r2 = 0.05 + 0.65 * u(eng);
    const double r1 = r2 * u(eng);
    const auto cfg = uniform_pair(first_price(r1), first_price(r2));
    const auto beta = solve_bidding(cfg, s);
    const double a = (2.0 * r2 + std::sqrt(4.0 * r2 * r2 - 3.0 * r1 * r1)) / 3.0;
    const double c = 2.0 * a * r2 - a * a;
    const int pts = 4001;
    for (int i = 0; i < pts; ++i) {
      const double v = r1 + (1.0 - r1) * i / (pts - 1.0);
      if (v <= 0.0 || std::abs(v - a) < 1e-9) continue;
      const double exact =
          v < a ? (v * v + r1 * r1) / (2.0 * v) : (v * v + c) / (2.0 * v);
      worst = std::max(worst, std::abs(beta(v) - exact));
    }
  }
  out.checks.push_back(
      compare("sup-norm error over 20 random pairs", worst, "<=", 1e-7));
}

inline void zero_reserve_equivalence(Context& ctx, CriterionResult& out) {
  const auto& s = ctx.opts.solver;
  for (double p : {0.25, 0.5, 0.75}) {
    const auto cfg = uniform_pair(first_price(0.0), second_price(0.0), p);
    const auto rep = revenue_report(cfg, s);
    const double fp = rep.per_exchange[0].revenue;
    const double sp = rep.per_exchange[1].revenue;
    std::ostringstream tag;
    tag << " (FP share " << p << ")";
    out.checks.push_back(
        near("weighted total" + tag.str(), 1.0 / 3.0, rep.weighted_total, 1e-5));
    out.checks.push_back(compare("FP - total" + tag.str(),
                                 fp - rep.weighted_total, ">=", 0.0));
    out.checks.push_back(compare("total - SP" + tag.str(),
                                 rep.weighted_total - sp, ">=", 0.0));
  }
}

inline void first_price_dominance(Context& ctx, CriterionResult& out) {
  const auto cases = dominance_suite();
  std::vector<FpSpComparison> res(cases.size());
  parallel_for(cases.size(), [&](std::size_t i) {
    res[i] = verify_fp_dominates_sp(cases[i].cfg, cases[i].j, ctx.opts.solver);
  });
  for (std::size_t i = 0; i < cases.size(); ++i) {
    out.checks.push_back(
        compare("margin " + cases[i].name, res[i].margin, ">", 1e-6));
  }
}

inline void zero_reserve_instability(Context& ctx, CriterionResult& out) {
  const auto& s = ctx.opts.solver;
  for (int n : {2, 3}) {
    for (double lam : {0.3, 0.5, 0.7}) {
      const auto cfg =
          uniform_pair(first_price(0.0), first_price(0.0), lam, n);
      // The bound h is informative for small a, so it is read at the
      // smallest epsilon that already gains.
      double best = -1.0;
      std::optional<double> h_first;
      for (int k = 1; k <= 20; ++k) {
        const auto d = deviation_gain_zero_reserve(cfg, 0.01 * k, s);
        best = std::max(best, d.gain);
        if (!h_first && d.gain > 1e-6) h_first = d.h;
      }
      std::ostringstream tag;
      tag << " (n=" << n << ", lambda1=" << lam << ")";
      out.checks.push_back(compare("max gain" + tag.str(), best, ">", 1e-6));
      out.checks.push_back(compare("h(a) at first gaining epsilon" + tag.str(),
                                   h_first.value_or(-1.0), ">", 0.0));
    }
  }
}

inline void oracle(Context& ctx, CriterionResult& out) {
  const auto& s = ctx.opts.solver;
  const auto suite = suite_markets();
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const auto beta = solve_bidding(suite[i].cfg, s);
    const auto& norm = beta.market();
    SimConfig<BiddingFunction> sc{ctx.opts.mc_samples, ctx.opts.seed + i, norm,
                                  beta};
    const auto mc = estimate(sc);
    for (std::size_t ell = 1; ell <= norm.exchanges.size(); ++ell) {
      const double exact = exchange_revenue(beta, ell, s.quad_tol);
      const double se = mc.per_exchange_stderr[ell - 1];
      std::ostringstream label;
      label << suite[i].name << " exchange " << ell << " (3 se)";
      out.checks.push_back(
          near(label.str(), exact, mc.per_exchange_mean[ell - 1], 3.0 * se));
    }
  }
}

inline void regret(Context& ctx, CriterionResult& out) {
  const auto& s = ctx.opts.solver;
  const auto suite = suite_markets();
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const auto beta = solve_bidding(suite[i].cfg, s);
    const auto& dist = beta.market().dist;
    const auto values = quantile_grid(dist, 200);
    const double audit = regret_audit(beta, values, 2000, s.quad_tol);
    out.checks.push_back(
        compare("regret_audit " + suite[i].name, audit, "<=", 1e-4));

    // Deviations: a bid grid over [0, beta(hi)] plus every reserve.
    const double top = beta(dist.integration_hi());
    std::vector<double> bids;
    for (int k = 0; k <= 60; ++k) bids.push_back(top * k / 60.0);
    for (const auto& e : beta.market().exchanges) {
      bids.push_back(e.mechanism.reserve);
    }
    const auto vgrid = quantile_grid(dist, 12);
    SimConfig<BiddingFunction> sc{20000, ctx.opts.seed + 100 + i,
                                  beta.market(), beta};
    const auto emp = empirical_regret(sc, vgrid, bids);
    out.checks.push_back(compare("empirical regret within noise " +
                                     suite[i].name,
                                 emp.within_noise ? 1.0 : 0.0, ">", 0.5));
  }
}

struct CriterionDef {
  const char* id;
  const char* title;
  const char* quote;
  double time_limit;
  void (*run)(Context&, CriterionResult&);
};

inline const std::vector<CriterionDef>& criteria() {
  static const std::vector<CriterionDef> defs = {
      {"cor3", "Reserve deviation from FP_0", "Rev1(FP_0.1,FP_0) ~ 0.3402", 1.0,
       cor3},
      {"cor4", "Symmetric profile derivative", "-2 r2^2 <= 0 for any r2", 5.0,
       cor4},
      {"cor5", "Two-exchange FP equilibrium",
       "r1=0.2402, r2=0.3157 corresponds to the unique equilibrium", 60.0,
       cor5},
      {"welfare", "Equilibrium breakpoint and welfare", "a = ... = 0.369", 0.0,
       welfare},
      {"prop", "Closed-form two-exchange bidding",
       "(v^2+r1^2)/2v below a, (v^2+c)/2v above", 10.0, two_segment_form},
      {"thm1", "Zero-reserve revenue equivalence",
       "weighted total 1/3, FP >= total >= SP", 5.0, zero_reserve_equivalence},
      {"thm2", "FP dominates SP at equal reserve",
       "proposing SP_rk always yields less revenue than proposing FP_rk",
       60.0, first_price_dominance},
      {"thm3", "Zero reserve is never an equilibrium",
       "it suffices to show that h'(a) > 0", 30.0, zero_reserve_instability},
      {"oracle", "Monte Carlo agrees with quadrature",
       "per-exchange revenue within 3 standard errors", 120.0, oracle},
      {"regret", "No profitable bid deviation",
       "bidding according to beta is also global optimal", 0.0, regret},
  };
  return defs;
}

}  // namespace repro_detail

inline std::vector<std::string> criterion_ids() {
  std::vector<std::string> ids;
  for (const auto& d : repro_detail::criteria()) ids.push_back(d.id);
  return ids;
}

// Runs the selected criteria in order. `on_result` fires after each one,
// so callers can stream progress.
inline std::vector<CriterionResult> run_repro(
    const ReproOptions& opts,
    const std::function<void(const CriterionResult&)>& on_result = {}) {
  for (const auto& id : opts.only) {
    const auto ids = criterion_ids();
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
      throw InvalidArgument("unknown criterion '" + id + "'");
    }
  }
  repro_detail::Context ctx{opts, std::nullopt};
  std::vector<CriterionResult> results;
  for (const auto& def : repro_detail::criteria()) {
    if (!opts.only.empty() &&
        std::find(opts.only.begin(), opts.only.end(), def.id) ==
            opts.only.end()) {
      continue;
    }
    CriterionResult r;
    r.id = def.id;
    r.title = def.title;
    r.quote = def.quote;
    r.time_limit = def.time_limit;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      def.run(ctx, r);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    r.pass = r.error.empty() && !r.checks.empty() &&
             (r.time_limit <= 0.0 || r.seconds < r.time_limit);
    for (const auto& c : r.checks) r.pass = r.pass && c.pass;
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  }
  return results;
}

inline nlohmann::json to_json(const CriterionResult& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"label", c.label},
                      {"expected", c.expected},
                      {"computed", c.computed},
                      {"delta", c.computed - c.expected},
                      {"tol", c.tol},
                      {"relation", c.relation},
                      {"pass", c.pass}});
  }
  nlohmann::json j = {{"id", r.id},
                      {"title", r.title},
                      {"quote", r.quote},
                      {"seconds", r.seconds},
                      {"time_limit", r.time_limit},
                      {"pass", r.pass},
                      {"checks", checks}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

// One line per criterion, e.g. "PASS cor3 (0.01 s / 1 s) ...".
inline std::string summary_line(const CriterionResult& r) {
  std::ostringstream out;
  out << (r.pass ? "PASS " : "FAIL ") << r.id << " " << r.title << " ("
      << r.seconds << " s";
  if (r.time_limit > 0.0) out << " / limit " << r.time_limit << " s";
  out << ")";
  if (!r.error.empty()) out << " error: " << r.error;
  return out.str();
}

inline std::string markdown_table(const std::vector<CriterionResult>& rs) {
  std::ostringstream out;
  out.precision(8);
  out << "| criterion | check | expected | computed | tol | pass |\n"
      << "|---|---|---|---|---|---|\n";
  for (const auto& r : rs) {
    if (!r.error.empty()) {
      out << "| " << r.id << " | error: " << r.error << " | | | | no |\n";
    }
    for (const auto& c : r.checks) {
      out << "| " << r.id << " | " << c.label << " | ";
      if (c.relation == "abs") {
        out << c.expected << " | " << c.computed << " | " << c.tol;
      } else {
        out << c.relation << " " << c.expected << " | " << c.computed << " | ";
      }
      out << " | " << (c.pass ? "yes" : "no") << " |\n";
    }
  }
  return out.str();
}

}  // namespace ame
