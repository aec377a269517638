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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ame/revenue.hpp"
#include "ame/simulation.hpp"
#include "oracles.hpp"

namespace {

using ame::BiddingFunction;
using ame::first_price;
using ame::MarketConfig;
using ame::second_price;
using ame::ValueDistribution;

const ValueDistribution kU = ValueDistribution::uniform(0, 1);

MarketConfig two(ame::MechanismSpec a, ame::MechanismSpec b, double la = 0.5,
                 int n = 2, ValueDistribution d = kU) {
  return {n, d, {{la, a}, {1.0 - la, b}}};
}

std::vector<MarketConfig> suite() {
  const auto E1 = ValueDistribution::exponential(1.0);
  const auto E2 = ValueDistribution::exponential(2.0);
  const double third = 1.0 / 3.0;
  return {
      two(first_price(0.3), first_price(0.5)),
      two(first_price(0.2), second_price(0.4)),
      two(second_price(0.2), first_price(0.4), 0.4),
      {3, kU, {{third, first_price(0.1)}, {third, second_price(0.2)}, {third, first_price(0.3)}}},
      two(first_price(0.5), second_price(1.0), 0.4, 2, E1),
      {3, E2, {{0.3, second_price(0.1)}, {0.3, first_price(0.3)}, {0.4, first_price(0.6)}}},
  };
}

// Cut points of [a, hi] at the jumps of beta.
std::vector<double> pieces(const BiddingFunction& beta, double a, double hi) {
  std::vector<double> cuts{a};
  for (double k : beta.kinks()) {
    if (k > a && k < hi) cuts.push_back(k);
  }
  cuts.push_back(hi);
  return cuts;
}

// beta on [lo, hi] with the right end taken as a left limit.
double piece_bid(const BiddingFunction& beta, double t, double hi) {
  return t >= hi ? beta.left_limit(hi) : beta(t);
}

// int_a^hi beta n G f, Simpson per piece.
double fp_oracle(const BiddingFunction& beta, std::size_t ell) {
  const auto& os = beta.order_statistics();
  const double a = beta.breakpoint(ell);
  const auto cuts = pieces(beta, a, os.hi());
  double total = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    const double hi = cuts[i];
    total += oracle::simpson(
        [&](double t) { return piece_bid(beta, t, hi) * os.winner_density(t); },
        cuts[i - 1], hi);
  }
  return total;
}

// The double integral int_a^hi [G(a) r + int_a^v beta g] n f dv evaluated as
// written: the inner integral accumulated node by node, the outer by Simpson.
double sp_oracle(const BiddingFunction& beta, std::size_t ell) {
  const auto& os = beta.order_statistics();
  const auto& d = os.dist();
  const double a = beta.breakpoint(ell);
  const double r = beta.market().exchanges[ell - 1].mechanism.reserve;
  const int n = os.n();
  const auto cuts = pieces(beta, a, os.hi());
  double inner = os.G(a) * r;
  double total = 0.0;
  const int N = 4000;  // outer subintervals per piece, even
  for (std::size_t p = 1; p < cuts.size(); ++p) {
    const double lo = cuts[p - 1], hi = cuts[p];
    const double H = (hi - lo) / N;
    auto bg = [&](double t) { return piece_bid(beta, t, hi) * os.g(t); };
    std::vector<double> outer(N + 1);
    outer[0] = inner * n * d.pdf(lo);
    for (int k = 1; k <= N; ++k) {
      const double x0 = lo + (k - 1) * H, x1 = lo + k * H;
      inner += (bg(x0) + 4.0 * bg(0.5 * (x0 + x1)) + bg(x1)) * H / 6.0;
      outer[k] = inner * n * d.pdf(x1);
    }
    double s = outer[0] + outer[N];
    for (int k = 1; k < N; ++k) s += outer[k] * (k % 2 ? 4.0 : 2.0);
    total += s * H / 3.0;
  }
  return total;
}

TEST(Revenue, TwoFirstPriceMarketMatchesClosedForm) {
  const auto beta = ame::solve_bidding(two(first_price(0.3), first_price(0.5)));
  const double r1 = 0.3;
  const double a = (1.0 + std::sqrt(0.73)) / 3.0;
  const double c = 2.0 * a * 0.5 - a * a;
  const double rev1 = -4.0 / 3.0 * r1 * r1 * r1 + r1 * r1 * a + c - c * a + 1.0 / 3.0;
  const double rev2 = (1.0 - a * a * a) / 3.0 + c * (1.0 - a);
  EXPECT_NEAR(rev1, 0.443102, 1e-6);
  EXPECT_NEAR(ame::revenue_fp(beta, 1), rev1, 1e-6);
  EXPECT_NEAR(ame::revenue_fp(beta, 2), rev2, 1e-6);
}

TEST(Revenue, ZeroReserveAndDeviationNumbers) {
  const auto both = ame::solve_bidding(two(first_price(0.0), first_price(0.0)));
  EXPECT_NEAR(ame::revenue_fp(both, 1), 1.0 / 3.0, 1e-9);
  const auto cfg = two(first_price(0.1), first_price(0.0));
  const auto norm = ame::normalize(cfg);
  const auto beta = ame::solve_bidding(cfg);
  EXPECT_NEAR(ame::revenue_fp(beta, norm.index_map[0] + 1), 0.3402, 5e-4);
}

TEST(Revenue, SecondPriceExamples) {
  const auto sp0 = ame::solve_bidding({2, kU, {{1.0, second_price(0.0)}}});
  EXPECT_NEAR(ame::revenue_sp(sp0, 1), 1.0 / 3.0, 1e-9);
  const auto sp5 = ame::solve_bidding({2, kU, {{1.0, second_price(0.5)}}});
  EXPECT_NEAR(ame::revenue_sp(sp5, 1), 5.0 / 12.0, 1e-9);
  const auto rep = ame::revenue_report(two(first_price(0.0), second_price(0.0)));
  EXPECT_NEAR(rep.per_exchange[0].revenue, 4.0 / 9.0, 1e-7);
  EXPECT_NEAR(rep.per_exchange[1].revenue, 2.0 / 9.0, 1e-7);
  EXPECT_NEAR(rep.weighted_total, 1.0 / 3.0, 1e-7);
}

TEST(Revenue, EquilibriumMarketReport) {
  const auto rep = ame::revenue_report(two(first_price(0.2402), first_price(0.3157)));
  EXPECT_NEAR(rep.per_exchange[0].revenue, 0.397, 5e-4);
  EXPECT_NEAR(rep.per_exchange[1].revenue, 0.378, 5e-4);
  EXPECT_NEAR(rep.weighted_total, 0.3875, 5e-4);
  ASSERT_TRUE(rep.myerson.has_value());
  EXPECT_NEAR(*rep.myerson, 5.0 / 12.0, 1e-9);
}

TEST(Revenue, ReservesAboveSupportEarnNothing) {
  const auto rep = ame::revenue_report(two(first_price(1.2), second_price(1.5)));
  for (const auto& e : rep.per_exchange) {
    EXPECT_EQ(e.revenue, 0.0);
    EXPECT_FALSE(e.sells);
    EXPECT_TRUE(e.reserve_above_support);
  }
  EXPECT_EQ(rep.weighted_total, 0.0);
  EXPECT_EQ(rep.sale_probability, 0.0);
}

TEST(Revenue, QuadratureMatchesDirectIntegrals) {
  for (const auto& cfg : suite()) {
    const auto beta = ame::solve_bidding(cfg);
    for (std::size_t ell = 1; ell <= beta.exchange_count(); ++ell) {
      const auto kind = beta.market().exchanges[ell - 1].mechanism.kind;
      if (kind == ame::MechanismKind::FirstPrice) {
        EXPECT_NEAR(ame::revenue_fp(beta, ell), fp_oracle(beta, ell), 1e-8);
      } else {
        EXPECT_NEAR(ame::revenue_sp(beta, ell), sp_oracle(beta, ell), 1e-8);
      }
    }
  }
}

TEST(Revenue, MyersonBenchmarks) {
  // E[max(phi(v1), 0)] in closed form.
  EXPECT_NEAR(ame::myerson_benchmark(kU, 2), 5.0 / 12.0, 1e-9);
  EXPECT_NEAR(ame::myerson_benchmark(kU, 3), 17.0 / 32.0, 1e-9);
  const auto e1 = ValueDistribution::exponential(1.0);
  const double exp_closed = 2.0 * (std::exp(-1.0) - std::exp(-2.0) / 4.0);
  // Integration stops at the 1 - 1e-8 quantile H; the dropped revenue is
  // at most n E[v; v > H] = n (H + 1) e^{-H}.
  const double H = e1.integration_hi();
  const double tail = 2.0 * (H + 1.0) * std::exp(-H);
  EXPECT_NEAR(ame::myerson_benchmark(e1, 2), exp_closed, tail);
  EXPECT_LT(tail, 1e-6);
  EXPECT_THROW(ame::myerson_benchmark(ValueDistribution::bounded_power(0.5), 2),
               ame::NotRegular);
}

TEST(Revenue, MyersonAgreesWithMonteCarlo) {
  for (auto [d, n] : {std::pair{kU, 3}, std::pair{ValueDistribution::exponential(1.0), 2}}) {
    const MarketConfig cfg{n, d, {{1.0, second_price(ame::monopoly_reserve(d))}}};
    const auto beta = ame::solve_bidding(cfg);
    ame::SimConfig<BiddingFunction> sc{2000000, 17, beta.market(), beta};
    const auto mc = ame::estimate(sc);
    EXPECT_NEAR(mc.per_exchange_mean[0], ame::myerson_benchmark(d, n),
                3.0 * mc.per_exchange_stderr[0]);
  }
}

TEST(Revenue, ZeroReserveRevenueEquivalence) {
  for (auto d : {kU, ValueDistribution::exponential(1.5), ValueDistribution::bounded_power(2.0)}) {
    for (int n : {2, 3}) {
      const auto& dd = d;
      auto second_density = [&](double v) {
        const double F = dd.cdf(v);
        return v * n * (n - 1) * std::pow(F, n - 2) * (1 - F) * dd.pdf(v);
      };
      const double ev2 = oracle::simpson(second_density, d.support_lo(), d.integration_hi(), 200000);
      for (double p : {0.1, 0.25, 0.5, 0.75, 0.9}) {
        const auto rep =
            ame::revenue_report(two(first_price(0.0), second_price(0.0), p, n, d));
        EXPECT_NEAR(rep.weighted_total, ev2, 1e-6);
        EXPECT_GE(rep.per_exchange[0].revenue, rep.weighted_total - 1e-12);
        EXPECT_GE(rep.weighted_total, rep.per_exchange[1].revenue - 1e-12);
      }
      // Three exchanges, two of them FP_0 (merged for solving).
      const MarketConfig three{n, d, {{0.2, first_price(0.0)}, {0.5, second_price(0.0)}, {0.3, first_price(0.0)}}};
      const auto rep3 = ame::revenue_report(three);
      EXPECT_NEAR(rep3.weighted_total, ev2, 1e-6);
      EXPECT_EQ(rep3.per_exchange[0].revenue, rep3.per_exchange[2].revenue);
    }
  }
}

TEST(Revenue, ReportInvariants) {
  for (const auto& cfg : suite()) {
    const auto rep = ame::revenue_report(cfg);
    const auto& d = cfg.dist;
    double a1 = std::numeric_limits<double>::infinity();
    for (const auto& e : rep.per_exchange) {
      EXPECT_GE(e.revenue, 0.0);
      if (e.sells) a1 = std::min(a1, e.breakpoint);
    }
    EXPECT_LE(rep.weighted_total, rep.welfare);
    EXPECT_NEAR(rep.sale_probability, 1.0 - std::pow(d.cdf(a1), cfg.n_bidders), 1e-14);
    const ame::OrderStatistics os(d, cfg.n_bidders);
    const double welfare = oracle::simpson(
        [&](double v) { return v * os.winner_density(v); }, a1, d.integration_hi());
    EXPECT_NEAR(rep.welfare, welfare, 1e-8);
    if (rep.myerson && a1 < ame::monopoly_reserve(d)) {
      EXPECT_GE(rep.welfare, *rep.myerson_welfare);
    }
  }
}

}  // namespace
