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

#include "ame/distributions.hpp"
#include "ame/errors.hpp"
#include "oracles.hpp"

namespace {

using ame::OrderStatistics;
using ame::ValueDistribution;

std::vector<ValueDistribution> families() {
  return {ValueDistribution::uniform(0.0, 1.0),
          ValueDistribution::uniform(0.5, 2.0),
          ValueDistribution::exponential(1.0),
          ValueDistribution::exponential(2.5),
          ValueDistribution::bounded_power(2.0),
          ValueDistribution::bounded_power(0.7)};
}

// Interior points of the (truncated) support.
std::vector<double> interior(const ValueDistribution& d, int count) {
  std::vector<double> v;
  const double lo = d.support_lo(), hi = d.integration_hi();
  for (int i = 1; i <= count; ++i) v.push_back(lo + (hi - lo) * i / (count + 1.0));
  return v;
}

TEST(Distributions, CdfExamples) {
  EXPECT_DOUBLE_EQ(ValueDistribution::uniform(0, 1).cdf(0.7), 0.7);
  EXPECT_DOUBLE_EQ(ValueDistribution::exponential(1).cdf(0.0), 0.0);
  EXPECT_DOUBLE_EQ(ValueDistribution::bounded_power(2).cdf(0.5), 0.25);
  const auto u = ValueDistribution::uniform(0, 1);
  EXPECT_EQ(u.cdf(-1.0), 0.0);
  EXPECT_EQ(u.cdf(3.0), 1.0);
}

TEST(Distributions, WinnerDensityExamples) {
  const auto u = ValueDistribution::uniform(0, 1);
  EXPECT_NEAR(OrderStatistics(u, 2).winner_density(0.5), 1.0, 1e-14);
  EXPECT_NEAR(OrderStatistics(u, 3).winner_density(1.0), 3.0, 1e-14);
  const auto e = ValueDistribution::exponential(1);
  const OrderStatistics os(e, 2);
  const double expect = 2.0 * (1.0 - std::exp(-1.0)) * std::exp(-1.0);
  EXPECT_NEAR(os.winner_density(1.0), expect, 1e-12);
  EXPECT_NEAR(expect, 0.465088, 1e-6);
  // d/dv F(v)^n by central differences.
  const double h = 1e-6;
  const double fd =
      (std::pow(e.cdf(1.0 + h), 2) - std::pow(e.cdf(1.0 - h), 2)) / (2 * h);
  EXPECT_NEAR(os.winner_density(1.0), fd, 1e-8);
}

TEST(Distributions, MonopolyReserve) {
  EXPECT_NEAR(ame::monopoly_reserve(ValueDistribution::uniform(0, 1)), 0.5, 1e-12);
  EXPECT_NEAR(ame::monopoly_reserve(ValueDistribution::exponential(1)), 1.0, 1e-12);
  EXPECT_NEAR(ame::monopoly_reserve(ValueDistribution::bounded_power(2)),
              std::sqrt(1.0 / 3.0), 1e-12);
  for (const auto& d : families()) {
    if (!d.is_strictly_regular()) continue;
    const double r = ame::monopoly_reserve(d);
    EXPECT_LE(std::abs(d.virtual_value(r)), 1e-10) << ame::family_name(d.family());
  }
}

TEST(Distributions, IrregularDistributionIsRejected) {
  // phi(v) = 3v - 2 sqrt(v) decreases on (0, 1/9).
  const auto d = ValueDistribution::bounded_power(0.5);
  EXPECT_FALSE(d.is_strictly_regular());
  EXPECT_THROW(ame::monopoly_reserve(d), ame::NotRegular);
}

TEST(Distributions, InvalidParameters) {
  EXPECT_THROW(ValueDistribution::uniform(1.0, 0.5), ame::InvalidArgument);
  EXPECT_THROW(ValueDistribution::exponential(0.0), ame::InvalidArgument);
  EXPECT_THROW(ValueDistribution::bounded_power(-1.0), ame::InvalidArgument);
  EXPECT_THROW(OrderStatistics(ValueDistribution::uniform(0, 1), 1),
               ame::InvalidArgument);
}

TEST(Distributions, QuantileRoundTrip) {
  for (const auto& d : families()) {
    for (double v : interior(d, 200)) {
      EXPECT_LE(std::abs(d.quantile(d.cdf(v)) - v), 1e-9 * std::max(1.0, v))
          << ame::family_name(d.family()) << " v=" << v;
    }
  }
}

TEST(Distributions, DensityIsDerivativeOfCdf) {
  const double h = 1e-6;
  for (const auto& d : families()) {
    for (double v : interior(d, 100)) {
      // Difference the smaller of F and 1 - F to avoid cancellation.
      const double fd = d.cdf(v) < 0.5 ? (d.cdf(v + h) - d.cdf(v - h)) / (2 * h)
                                       : (d.survival(v - h) - d.survival(v + h)) / (2 * h);
      EXPECT_LE(std::abs(fd - d.pdf(v)), 1e-6 * d.pdf(v))
          << ame::family_name(d.family()) << " v=" << v;
    }
  }
}

TEST(Distributions, OrderStatisticDensityIsDerivative) {
  const double h = 1e-6;
  for (const auto& d : families()) {
    for (int n : {2, 3, 5}) {
      const OrderStatistics os(d, n);
      for (double v : interior(d, 100)) {
        EXPECT_NEAR(os.G(v), std::pow(d.cdf(v), n - 1), 1e-15);
        const double fd = (os.G(v + h) - os.G(v - h)) / (2 * h);
        EXPECT_LE(std::abs(fd - os.g(v)), 1e-6 * std::max(os.g(v), 1e-3))
            << ame::family_name(d.family()) << " n=" << n << " v=" << v;
      }
    }
  }
}

TEST(Distributions, WinnerDensityIntegratesToOne) {
  for (const auto& d : families()) {
    const OrderStatistics os(d, 3);
    const double mass = oracle::simpson([&](double v) { return os.winner_density(v); },
                                        d.support_lo(), d.integration_hi());
    EXPECT_NEAR(mass, 1.0, 1e-7) << ame::family_name(d.family());
  }
}

TEST(Distributions, MomentTableMatchesDirectIntegral) {
  for (const auto& d : families()) {
    const OrderStatistics os(d, 3);
    for (double v : interior(d, 9)) {
      const double direct = oracle::simpson([&](double t) { return t * os.g(t); },
                                            d.support_lo(), v);
      EXPECT_NEAR(os.moment(v), direct, 1e-11) << ame::family_name(d.family());
    }
  }
}

}  // namespace
