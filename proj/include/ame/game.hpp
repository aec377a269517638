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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "ame/distributions.hpp"
#include "ame/equilibrium.hpp"
#include "ame/errors.hpp"
#include "ame/market.hpp"
#include "ame/numerics.hpp"
#include "ame/parallel.hpp"
#include "ame/revenue.hpp"

namespace ame {

struct GameOptions {
  int coarse_grid = 64;         // reserve probes per kind
  double span_quantile = 0.999;  // probes cover [0, F^-1(span_quantile)]
  double refine_tol = 1e-5;     // golden-section bracket width
  double eq_tol = 1e-5;         // accepted unilateral revenue gain
  double fd_step = 1e-3;        // reserve step for one-sided derivatives
  SolverOptions solver;
};

struct KindSet {
  bool first_price = true;
  bool second_price = true;

  static KindSet fp_only() { return {true, false}; }
  static KindSet sp_only() { return {false, true}; }
  std::vector<MechanismKind> kinds() const {
    std::vector<MechanismKind> out;
    if (first_price) out.push_back(MechanismKind::FirstPrice);
    if (second_price) out.push_back(MechanismKind::SecondPrice);
    return out;
  }
};

struct CurvePoint {
  MechanismKind kind;
  double reserve;
  double revenue;
};

struct BestResponse {
  std::size_t exchange = 0;
  MechanismKind best_kind = MechanismKind::FirstPrice;
  double best_reserve = 0.0;
  double best_revenue = 0.0;
  double current_revenue = 0.0;
  std::vector<CurvePoint> revenue_curve;
  std::vector<std::string> failed_probes;
};

struct EquilibriumResult {
  MarketConfig market;
  std::vector<double> reserves;  // sorted ascending
  std::vector<MechanismKind> kinds;
  std::vector<double> revenues;  // per exchange, caller order
  double weighted_total = 0.0;
  int iterations = 0;
  bool converged = false;
  double max_gain = 0.0;  // largest unilateral gain in the last sweep
};

namespace game_detail {

inline std::shared_ptr<const OrderStatistics> order_stats(
    const MarketConfig& cfg, const SolverOptions& opts) {
  return std::make_shared<const OrderStatistics>(cfg.dist, cfg.n_bidders,
                                                 opts.table_cells);
}

}  // namespace game_detail

// Revenue of exchange j (caller index) when it runs `mech` and every other
// exchange keeps its mechanism.
inline double revenue_with(const MarketConfig& cfg, std::size_t j,
                           MechanismSpec mech,
                           std::shared_ptr<const OrderStatistics> os,
                           const SolverOptions& opts = {}) {
  MarketConfig probe = cfg;
  probe.exchanges.at(j).mechanism = mech;
  const auto norm = normalize(probe);
  const auto beta = solve_bidding(norm.market, std::move(os), opts);
  return exchange_revenue(beta, norm.index_map[j] + 1, opts.quad_tol);
}

inline double revenue_with(const MarketConfig& cfg, std::size_t j,
                           MechanismSpec mech, const SolverOptions& opts = {}) {
  return revenue_with(cfg, j, mech, game_detail::order_stats(cfg, opts), opts);
}

// Best (kind, reserve) for exchange j with the others held fixed: a coarse
// reserve grid per kind, then golden-section refinement around the best
// grid point. Rev_j(r) need not be concave because the breakpoint structure
// changes with r, hence the grid.
inline BestResponse best_response(const MarketConfig& cfg, std::size_t j,
                                  KindSet kinds = {},
                                  const GameOptions& opts = {}) {
  if (j >= cfg.exchanges.size()) {
    throw IndexOutOfRange("best_response exchange " + std::to_string(j));
  }
  const auto os = game_detail::order_stats(cfg, opts.solver);
  const double span = cfg.dist.quantile(opts.span_quantile);
  const int grid = std::max(3, opts.coarse_grid);

  BestResponse br;
  br.exchange = j;
  br.current_revenue =
      revenue_with(cfg, j, cfg.exchanges[j].mechanism, os, opts.solver);
  bool found = false;
  for (MechanismKind kind : kinds.kinds()) {
    std::vector<double> reserves(grid), revenue(grid);
    std::vector<std::string> errors(grid);
    std::vector<char> ok(grid, 0);
    for (int i = 0; i < grid; ++i) reserves[i] = span * i / (grid - 1.0);
    parallel_for(static_cast<std::size_t>(grid), [&](std::size_t i) {
      try {
        revenue[i] =
            revenue_with(cfg, j, {kind, reserves[i]}, os, opts.solver);
        ok[i] = 1;
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    });
    int best_i = -1;
    for (int i = 0; i < grid; ++i) {
      if (!ok[i]) {
        br.failed_probes.push_back(std::string(kind_name(kind)) + "@" +
                                   std::to_string(reserves[i]) + ": " +
                                   errors[i]);
        continue;
      }
      br.revenue_curve.push_back({kind, reserves[i], revenue[i]});
      if (best_i < 0 || revenue[i] > revenue[best_i]) best_i = i;
    }
    if (best_i < 0) continue;

    double best_r = reserves[best_i];
    double best_rev = revenue[best_i];
    const double left = reserves[std::max(0, best_i - 1)];
    const double right = reserves[std::min(grid - 1, best_i + 1)];
    try {
      const auto refined = numerics::golden_section_max(
          [&](double r) {
            return revenue_with(cfg, j, {kind, r}, os, opts.solver);
          },
          left, right, opts.refine_tol);
      if (refined.value > best_rev) {
        best_r = refined.x;
        best_rev = refined.value;
      }
    } catch (const Error& e) {
      br.failed_probes.push_back(std::string("refine ") + kind_name(kind) +
                                 ": " + e.what());
    }
    if (!found || best_rev > br.best_revenue) {
      found = true;
      br.best_kind = kind;
      br.best_reserve = best_r;
      br.best_revenue = best_rev;
    }
  }
  if (!found) throw SolverDiverged("every best-response probe failed");
  return br;
}

// Round-robin best response, ascending by current reserve (ties by index).
// Each exchange moves to its best response whenever that gains anything.
// Converged means a whole sweep found no gain above tol. Not converging is a
// legitimate outcome: pure equilibria need not exist.
inline EquilibriumResult iterated_best_response(const MarketConfig& cfg0,
                                                int max_iters, double tol,
                                                KindSet kinds = {},
                                                const GameOptions& opts = {}) {
  validate(cfg0);
  EquilibriumResult res;
  res.market = cfg0;
  auto& cfg = res.market;
  for (int it = 1; it <= max_iters; ++it) {
    res.iterations = it;
    std::vector<std::size_t> order(cfg.exchanges.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
      return cfg.exchanges[a].mechanism.reserve <
             cfg.exchanges[b].mechanism.reserve;
    });
    double sweep_gain = 0.0;
    double sweep_move = 0.0;
    for (std::size_t j : order) {
      const auto br = best_response(cfg, j, kinds, opts);
      const double gain = br.best_revenue - br.current_revenue;
      sweep_gain = std::max(sweep_gain, gain);
      if (gain > 0.0) {
        auto& mech = cfg.exchanges[j].mechanism;
        const bool kind_changed = mech.kind != br.best_kind;
        sweep_move = std::max(sweep_move,
                              kind_changed ? 1.0
                                           : std::abs(mech.reserve -
                                                      br.best_reserve));
        mech = {br.best_kind, br.best_reserve};
      }
    }
    res.max_gain = sweep_gain;
    // Revenue is flat near a best response, so a gain below tol alone would
    // stop a few 1e-3 short in reserve. Keep moving until the profile
    // settles as well.
    if (sweep_gain <= tol && sweep_move <= 10.0 * opts.refine_tol) {
      res.converged = true;
      break;
    }
  }
  const auto report = revenue_report(cfg, opts.solver);
  for (const auto& e : cfg.exchanges) {
    res.reserves.push_back(e.mechanism.reserve);
    res.kinds.push_back(e.mechanism.kind);
  }
  std::sort(res.reserves.begin(), res.reserves.end());
  for (const auto& er : report.per_exchange) res.revenues.push_back(er.revenue);
  res.weighted_total = report.weighted_total;
  return res;
}

struct FpSpComparison {
  double rev_fp = 0.0;
  double rev_sp = 0.0;
  double margin = 0.0;  // rev_fp - rev_sp
};

// Revenue of exchange j under FP_{r_j} and SP_{r_j}, everything else fixed.
// Requires every exchange with a lower reserve to run first price.
inline FpSpComparison verify_fp_dominates_sp(const MarketConfig& cfg,
                                             std::size_t j,
                                             const SolverOptions& opts = {}) {
  validate(cfg);
  const double r = cfg.exchanges.at(j).mechanism.reserve;
  for (std::size_t k = 0; k < cfg.exchanges.size(); ++k) {
    const auto& mech = cfg.exchanges[k].mechanism;
    if (k != j && mech.reserve < r &&
        mech.kind != MechanismKind::FirstPrice) {
      throw HypothesisViolated("exchange " + std::to_string(k) +
                               " has a lower reserve and runs second price");
    }
  }
  const auto os = game_detail::order_stats(cfg, opts);
  FpSpComparison out;
  out.rev_fp = revenue_with(cfg, j, first_price(r), os, opts);
  out.rev_sp = revenue_with(cfg, j, second_price(r), os, opts);
  out.margin = out.rev_fp - out.rev_sp;
  return out;
}

struct ZeroReserveDeviation {
  double gain = 0.0;        // Rev_1(FP_eps, rest) - Rev_1(FP_0, rest)
  double breakpoint = 0.0;  // a(eps)
  double h = 0.0;           // lower bound h(a(eps))
  double lambda = 0.0;      // deviator's share
};

// h(a) = lambda (a G(a) - T(a)) - int_0^a n f(t) T(t) dt, with lambda the
// deviating exchange's share and T(a) = int_0^a t g(t) dt. Whenever
// F(a) <= (n - 1) / n it bounds the deviation gain from below.
inline double zero_reserve_gain_bound(const OrderStatistics& os, double lambda,
                                      double a, double tol = 1e-12) {
  const int n = os.n();
  const auto& d = os.dist();
  auto inner = [&](double t) { return n * d.pdf(t) * os.moment(t); };
  return lambda * (a * os.G(a) - os.moment(a)) -
         numerics::integrate(inner, os.lo(), a, tol, 16);
}

// Exchange 0 of an all-FP_0 market moves to FP_eps. The remaining
// exchanges share one reserve and are merged by normalization.
inline ZeroReserveDeviation deviation_gain_zero_reserve(
    const MarketConfig& cfg, double eps, const SolverOptions& opts = {}) {
  validate(cfg);
  for (const auto& e : cfg.exchanges) {
    if (e.mechanism.kind != MechanismKind::FirstPrice ||
        e.mechanism.reserve != 0.0) {
      throw HypothesisViolated("deviation_gain_zero_reserve needs all FP_0");
    }
  }
  const auto os = game_detail::order_stats(cfg, opts);
  double total = 0.0;
  for (const auto& e : cfg.exchanges) total += e.lambda;

  ZeroReserveDeviation out;
  out.lambda = cfg.exchanges[0].lambda / total;
  const double base = revenue_with(cfg, 0, first_price(0.0), os, opts);
  MarketConfig dev = cfg;
  dev.exchanges[0].mechanism = first_price(eps);
  const auto norm = normalize(dev);
  const auto beta = solve_bidding(norm.market, os, opts);
  const std::size_t ell = norm.index_map[0] + 1;
  out.gain = exchange_revenue(beta, ell, opts.quad_tol) - base;
  out.breakpoint = beta.breakpoint(ell);
  out.h = zero_reserve_gain_bound(*os, out.lambda, out.breakpoint);
  return out;
}

// Left derivative of Rev_1 in its own reserve at a symmetric FP_r profile,
// by the second-order backward difference
//   (3 R(r) - 4 R(r - h) + R(r - 2h)) / (2h).
// Rev_1 has a kink at r_1 = r_2, so a central difference would average the
// two one-sided slopes; the relevant deviation is downward. r near 0 is
// covered by deviation_gain_zero_reserve.
inline double symmetric_instability(const MarketConfig& cfg,
                                    const GameOptions& opts = {}) {
  validate(cfg);
  const double r = cfg.exchanges[0].mechanism.reserve;
  for (const auto& e : cfg.exchanges) {
    if (e.mechanism.kind != MechanismKind::FirstPrice ||
        e.mechanism.reserve != r) {
      throw HypothesisViolated("symmetric_instability needs a common FP_r");
    }
  }
  const double h = opts.fd_step;
  if (r < 2.0 * h) {
    throw HypothesisViolated(
        "reserve too close to 0 for a backward difference; use "
        "deviation_gain_zero_reserve");
  }
  const auto os = game_detail::order_stats(cfg, opts.solver);
  auto R = [&](double x) {
    return revenue_with(cfg, 0, first_price(x), os, opts.solver);
  };
  return (3.0 * R(r) - 4.0 * R(r - h) + R(r - 2.0 * h)) / (2.0 * h);
}

}  // namespace ame
