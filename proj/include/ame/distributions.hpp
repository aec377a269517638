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
#include <limits>
#include <string>
#include <vector>

#include "ame/errors.hpp"
#include "ame/numerics.hpp"

namespace ame {

enum class Family { Uniform, Exponential, BoundedPower };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::Uniform:
      return "uniform";
    case Family::Exponential:
      return "exponential";
    case Family::BoundedPower:
      return "bounded_power";
  }
  return "?";
}

// I.i.d. bidder value law. Three analytic families:
//   Uniform(lo, hi)      F(v) = (v - lo) / (hi - lo)
//   Exponential(rate)    F(v) = 1 - exp(-rate v)
//   BoundedPower(k)      F(v) = v^k on [0, 1]
// Immutable; cdf/pdf clamp outside the support.
class ValueDistribution {
 public:
  // Mass beyond integration_hi() for unbounded families.
  static constexpr double kTailMass = 1e-8;

  static ValueDistribution uniform(double lo, double hi) {
    if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi)) {
      throw InvalidArgument("uniform distribution needs 0 <= lo < hi");
    }
    return ValueDistribution(Family::Uniform, lo, hi);
  }
  static ValueDistribution exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
      throw InvalidArgument("exponential rate must be positive");
    }
    return ValueDistribution(Family::Exponential, rate, 0.0);
  }
  static ValueDistribution bounded_power(double exponent) {
    if (!(exponent > 0.0) || !std::isfinite(exponent)) {
      throw InvalidArgument("bounded_power exponent must be positive");
    }
    return ValueDistribution(Family::BoundedPower, exponent, 0.0);
  }

  Family family() const { return family_; }

  std::vector<double> params() const {
    if (family_ == Family::Uniform) return {p0_, p1_};
    return {p0_};
  }

  double support_lo() const { return family_ == Family::Uniform ? p0_ : 0.0; }

  double support_hi() const {
    switch (family_) {
      case Family::Uniform:
        return p1_;
      case Family::Exponential:
        return std::numeric_limits<double>::infinity();
      case Family::BoundedPower:
        return 1.0;
    }
    return 0.0;
  }

  // Upper limit used for every integral: the support end, or the
  // 1 - kTailMass quantile for unbounded families.
  double integration_hi() const {
    if (family_ == Family::Exponential) return quantile(1.0 - kTailMass);
    return support_hi();
  }

  double cdf(double v) const {
    switch (family_) {
      case Family::Uniform:
        return std::clamp((v - p0_) / (p1_ - p0_), 0.0, 1.0);
      case Family::Exponential:
        return v <= 0.0 ? 0.0 : -std::expm1(-p0_ * v);
      case Family::BoundedPower:
        if (v <= 0.0) return 0.0;
        if (v >= 1.0) return 1.0;
        return std::pow(v, p0_);
    }
    return 0.0;
  }

  // 1 - F(v), computed without cancellation where the family allows it.
  double survival(double v) const {
    if (family_ == Family::Exponential) {
      return v <= 0.0 ? 1.0 : std::exp(-p0_ * v);
    }
    return 1.0 - cdf(v);
  }

  double pdf(double v) const {
    switch (family_) {
      case Family::Uniform:
        return (v < p0_ || v > p1_) ? 0.0 : 1.0 / (p1_ - p0_);
      case Family::Exponential:
        return v < 0.0 ? 0.0 : p0_ * std::exp(-p0_ * v);
      case Family::BoundedPower:
        if (v < 0.0 || v > 1.0) return 0.0;
        if (v == 0.0) {
          if (p0_ == 1.0) return 1.0;
          return p0_ < 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
        }
        return p0_ * std::pow(v, p0_ - 1.0);
    }
    return 0.0;
  }

  double quantile(double p) const {
    p = std::clamp(p, 0.0, 1.0);
    switch (family_) {
      case Family::Uniform:
        return p0_ + p * (p1_ - p0_);
      case Family::Exponential:
        return -std::log1p(-p) / p0_;
      case Family::BoundedPower:
        return std::pow(p, 1.0 / p0_);
    }
    return 0.0;
  }

  // phi(v) = v - (1 - F(v)) / f(v)
  double virtual_value(double v) const { return v - survival(v) / pdf(v); }

  // Strict monotonicity of phi on `grid` interior points of
  // [support_lo, integration_hi].
  bool is_strictly_regular(int grid = 1000) const {
    const double lo = support_lo();
    const double hi = integration_hi();
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 1; i <= grid; ++i) {
      const double v = lo + (hi - lo) * i / (grid + 1.0);
      const double phi = virtual_value(v);
      if (!std::isfinite(phi) || !(phi > prev)) return false;
      prev = phi;
    }
    return true;
  }

  bool operator==(const ValueDistribution& o) const {
    return family_ == o.family_ && p0_ == o.p0_ && p1_ == o.p1_;
  }

 private:
  ValueDistribution(Family f, double p0, double p1)
      : family_(f), p0_(p0), p1_(p1) {}

  Family family_;
  double p0_;
  double p1_;
};

// Myerson reserve: the zero of the virtual value. Throws NotRegular when
// phi fails the grid monotonicity check.
inline double monopoly_reserve(const ValueDistribution& d) {
  if (!d.is_strictly_regular()) {
    throw NotRegular(std::string("virtual value of ") +
                     family_name(d.family()) +
                     " distribution is not strictly increasing");
  }
  const double lo = d.support_lo();
  const double hi = d.integration_hi();
  const double eps = 1e-12 * std::max(1.0, hi - lo);
  if (d.virtual_value(lo + eps) >= 0.0) return lo;
  if (d.virtual_value(hi) < 0.0) {
    throw SolverDiverged("virtual value has no root inside the support");
  }
  auto phi = [&](double v) { return d.virtual_value(v); };
  double a = lo + eps;
  double b = hi;
  for (int it = 0; it < 400 && b - a > 0.0; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    (phi(mid) < 0.0 ? a : b) = mid;
  }
  return std::abs(phi(a)) < std::abs(phi(b)) ? a : b;
}

// Order statistics of n i.i.d. draws, seen from one bidder:
//   G(v) = F(v)^(n-1)  the highest competing value is below v
//   g(v) = G'(v)
// plus a tabulated T(v) = int_lo^v t g(t) dt, the only integral the
// closed-form bidding segments need.
class OrderStatistics {
 public:
  OrderStatistics(ValueDistribution dist, int n_bidders,
                  int table_cells = 4096, double quad_tol = 1e-13)
      : dist_(dist), n_(n_bidders) {
    if (n_bidders < 2) throw InvalidArgument("need at least two bidders");
    if (table_cells < 16) throw InvalidArgument("table too coarse");
    lo_ = dist_.support_lo();
    hi_ = dist_.integration_hi();
    step_ = (hi_ - lo_) / table_cells;
    cumulative_.resize(static_cast<std::size_t>(table_cells) + 1, 0.0);
    // t g(t) vanishes at t = 0 even when f itself is unbounded there.
    auto tg = [this](double t) { return t > 0.0 ? t * g(t) : 0.0; };
    for (int i = 0; i < table_cells; ++i) {
      const double a = node(i);
      const double b = node(i + 1);
      cumulative_[i + 1] =
          cumulative_[i] +
          numerics::integrate(tg, a, b, quad_tol / table_cells, 1, 40);
    }
  }

  const ValueDistribution& dist() const { return dist_; }
  int n() const { return n_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  double G(double v) const {
    const double F = dist_.cdf(v);
    return n_ == 2 ? F : std::pow(F, n_ - 1);
  }

  double g(double v) const {
    const double f = dist_.pdf(v);
    if (n_ == 2) return f;
    const double F = dist_.cdf(v);
    if (F == 0.0) return 0.0;
    return (n_ - 1) * f * (n_ == 3 ? F : std::pow(F, n_ - 2));
  }

  // Density of the highest of the n values: n G(v) f(v).
  double winner_density(double v) const {
    const double G_v = G(v);
    return G_v == 0.0 ? 0.0 : n_ * G_v * dist_.pdf(v);
  }

  double winner_cdf(double v) const { return std::pow(dist_.cdf(v), n_); }

  // T(v) = int_lo^v t g(t) dt.
  double moment(double v) const {
    if (v <= lo_) return 0.0;
    // t g(t) vanishes at t = 0 even when f itself is unbounded there.
    auto tg = [this](double t) { return t > 0.0 ? t * g(t) : 0.0; };
    const std::size_t cells = cumulative_.size() - 1;
    const double pos = (v - lo_) / step_;
    if (pos >= static_cast<double>(cells)) {
      return cumulative_.back() + numerics::gauss_legendre8(tg, hi_, v);
    }
    const auto i = static_cast<std::size_t>(pos);
    const double a = node(static_cast<int>(i));
    return cumulative_[i] + (v > a ? numerics::gauss_legendre8(tg, a, v) : 0);
  }

 private:
  double node(int i) const {
    return i + 1 == static_cast<int>(cumulative_.size()) ? hi_
                                                           : lo_ + i * step_;
  }

  ValueDistribution dist_;
  int n_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  double step_ = 0.0;
  std::vector<double> cumulative_;
};

}  // namespace ame
