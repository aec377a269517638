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
#include <optional>
#include <vector>

#include "ame/distributions.hpp"
#include "ame/equilibrium.hpp"
#include "ame/errors.hpp"
#include "ame/market.hpp"
#include "ame/numerics.hpp"

namespace ame {

// Revenue of one exchange per auction it runs (not weighted by lambda).
struct ExchangeRevenue {
  std::size_t index = 0;  // caller's exchange index
  MechanismSpec mechanism;
  double lambda = 0.0;  // normalized share
  double breakpoint = 0.0;
  double revenue = 0.0;
  double welfare = 0.0;  // expected winner value on a sale
  double sale_probability = 0.0;
  bool sells = false;
  bool reserve_above_support = false;
};

struct RevenueReport {
  std::vector<ExchangeRevenue> per_exchange;
  double weighted_total = 0.0;    // sum_j lambda_j Rev_j
  double welfare = 0.0;           // int_{a_1} v n G f, lowest breakpoint
  double weighted_welfare = 0.0;  // sum_j lambda_j welfare_j
  double sale_probability = 0.0;  // 1 - F(a_1)^n
  std::optional<double> myerson;  // absent when F is not strictly regular
  std::optional<double> myerson_welfare;
};

namespace detail {

// Integral over [a, b] split at every kink inside the interval.
template <class F>
double integrate_pieces(const F& f, double a, double b,
                        const std::vector<double>& kinks, double tol) {
  if (!(b > a)) return 0.0;
  std::vector<double> cuts{a};
  for (double k : kinks) {
    if (k > a && k < b) cuts.push_back(k);
  }
  cuts.push_back(b);
  double total = 0.0;
  const double piece_tol = tol / static_cast<double>(cuts.size() - 1);
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    total += numerics::integrate(f, cuts[i - 1], cuts[i], piece_tol, 16);
  }
  return total;
}

}  // namespace detail

// Expected first-price revenue of merged exchange ell (1-based):
//   int_{a_ell}^{hi} beta(v) n G(v) f(v) dv.
inline double revenue_fp(const BiddingFunction& beta, std::size_t ell,
                         double tol = 1e-10) {
  if (!beta.sells(ell)) return 0.0;
  const auto& os = beta.order_statistics();
  const double a = beta.breakpoint(ell);
  auto f = [&](double v) { return beta(v) * os.winner_density(v); };
  return detail::integrate_pieces(f, a, os.hi(), beta.kinks(), tol);
}

// Expected second-price revenue of merged exchange ell (1-based). The winner
// with value v pays E[max(beta(v2), r) | v1 = v] =
// (G(a) r + int_a^v beta g) / G(v); integrating against n G f and swapping
// the order of integration gives
//   n G(a) r (F(hi) - F(a)) + int_a^hi beta(t) g(t) n (F(hi) - F(t)) dt.
inline double revenue_sp(const BiddingFunction& beta, std::size_t ell,
                         double tol = 1e-10) {
  if (!beta.sells(ell)) return 0.0;
  const auto& os = beta.order_statistics();
  const auto& dist = os.dist();
  const double a = beta.breakpoint(ell);
  const double r = beta.market().exchanges[ell - 1].mechanism.reserve;
  const double hi = os.hi();
  const double s_hi = dist.survival(hi);
  const int n = os.n();
  const double floor_part = n * os.G(a) * r * (dist.survival(a) - s_hi);
  auto f = [&](double t) {
    return beta(t) * os.g(t) * n * (dist.survival(t) - s_hi);
  };
  return floor_part + detail::integrate_pieces(f, a, hi, beta.kinks(), tol);
}

inline double exchange_revenue(const BiddingFunction& beta, std::size_t ell,
                               double tol = 1e-10) {
  const auto kind = beta.market().exchanges.at(ell - 1).mechanism.kind;
  return kind == MechanismKind::FirstPrice ? revenue_fp(beta, ell, tol)
                                           : revenue_sp(beta, ell, tol);
}

// E[v1; v1 >= a].
inline double served_welfare(const OrderStatistics& os, double a,
                             double tol = 1e-10) {
  auto f = [&](double v) { return v * os.winner_density(v); };
  return numerics::integrate(f, std::max(a, os.lo()), os.hi(), tol, 16);
}

// Revenue of the single second-price auction at the monopoly reserve.
inline double myerson_benchmark(const OrderStatistics& os,
                                const SolverOptions& opts = {}) {
  const double r = monopoly_reserve(os.dist());
  MarketConfig single{os.n(), os.dist(), {{1.0, second_price(r)}}};
  auto shared = std::make_shared<const OrderStatistics>(os);
  const auto beta = solve_bidding(single, shared, opts);
  return revenue_sp(beta, 1, opts.quad_tol);
}

inline double myerson_benchmark(const ValueDistribution& d, int n,
                                const SolverOptions& opts = {}) {
  return myerson_benchmark(OrderStatistics(d, n, opts.table_cells), opts);
}

// Revenue of every caller exchange from an already solved beta.
inline RevenueReport revenue_report(const MarketConfig& cfg,
                                    const BiddingFunction& beta,
                                    const SolverOptions& opts = {}) {
  const auto norm = normalize(cfg);
  const auto& os = beta.order_statistics();
  const std::size_t merged = norm.market.exchanges.size();
  std::vector<double> rev(merged), welfare(merged);
  for (std::size_t ell = 1; ell <= merged; ++ell) {
    rev[ell - 1] = exchange_revenue(beta, ell, opts.quad_tol);
    welfare[ell - 1] = beta.sells(ell)
                           ? served_welfare(os, beta.breakpoint(ell),
                                            opts.quad_tol)
                           : 0.0;
  }
  double total_lambda = 0.0;
  for (const auto& e : cfg.exchanges) total_lambda += e.lambda;

  RevenueReport rep;
  const auto& above = beta.reserve_above_support();
  double first_sale = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < cfg.exchanges.size(); ++j) {
    const std::size_t k = norm.index_map[j];
    ExchangeRevenue er;
    er.index = j;
    er.mechanism = cfg.exchanges[j].mechanism;
    er.lambda = cfg.exchanges[j].lambda / total_lambda;
    er.breakpoint = beta.breakpoint(k + 1);
    er.sells = beta.sells(k + 1);
    er.revenue = rev[k];
    er.welfare = welfare[k];
    er.sale_probability =
        er.sells ? 1.0 - std::pow(os.dist().cdf(er.breakpoint), os.n()) : 0.0;
    er.reserve_above_support =
        std::find(above.begin(), above.end(), k) != above.end();
    rep.weighted_total += er.lambda * er.revenue;
    rep.weighted_welfare += er.lambda * er.welfare;
    if (er.sells) first_sale = std::min(first_sale, er.breakpoint);
    rep.per_exchange.push_back(er);
  }
  if (std::isfinite(first_sale)) {
    rep.welfare = served_welfare(os, first_sale, opts.quad_tol);
    rep.sale_probability = 1.0 - std::pow(os.dist().cdf(first_sale), os.n());
  }
  try {
    const double r = monopoly_reserve(os.dist());
    rep.myerson = myerson_benchmark(os, opts);
    rep.myerson_welfare = served_welfare(os, r, opts.quad_tol);
  } catch (const NotRegular&) {
    // leave the benchmark empty
  }
  return rep;
}

inline RevenueReport revenue_report(const MarketConfig& cfg,
                                    const SolverOptions& opts = {}) {
  return revenue_report(cfg, solve_bidding(cfg, opts), opts);
}

}  // namespace ame
