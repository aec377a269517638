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
#include <numeric>
#include <string>
#include <vector>

#include "ame/distributions.hpp"
#include "ame/errors.hpp"

namespace ame {

enum class MechanismKind { FirstPrice, SecondPrice };

inline const char* kind_name(MechanismKind k) {
  return k == MechanismKind::FirstPrice ? "fp" : "sp";
}

struct MechanismSpec {
  MechanismKind kind = MechanismKind::FirstPrice;
  double reserve = 0.0;

  bool operator==(const MechanismSpec&) const = default;
};

inline MechanismSpec first_price(double reserve) {
  return {MechanismKind::FirstPrice, reserve};
}
inline MechanismSpec second_price(double reserve) {
  return {MechanismKind::SecondPrice, reserve};
}

struct ExchangeSpec {
  double lambda = 1.0;  // share of queries
  MechanismSpec mechanism;

  bool operator==(const ExchangeSpec&) const = default;
};

struct MarketConfig {
  int n_bidders = 2;
  ValueDistribution dist = ValueDistribution::uniform(0.0, 1.0);
  std::vector<ExchangeSpec> exchanges;

  bool operator==(const MarketConfig&) const = default;
};

// Solved form of a market plus the map from the caller's exchange indices to
// the merged, reserve-sorted ones.
struct NormalizedMarket {
  MarketConfig market;
  std::vector<std::size_t> index_map;  // original index -> merged index
};

inline void validate(const MarketConfig& cfg) {
  if (cfg.n_bidders < 2) throw InvalidArgument("n_bidders must be >= 2");
  if (cfg.exchanges.empty()) throw EmptyMarket();
  for (std::size_t j = 0; j < cfg.exchanges.size(); ++j) {
    const auto& e = cfg.exchanges[j];
    if (!(e.lambda > 0.0) || !std::isfinite(e.lambda)) throw NegativeLambda(j);
    if (!(e.mechanism.reserve >= 0.0) || !std::isfinite(e.mechanism.reserve)) {
      throw InvalidArgument("exchange " + std::to_string(j) +
                            " reserve must be finite and >= 0");
    }
  }
}

// Rescales lambda to sum to one, sorts by (reserve, kind) with a stable
// order, and merges exchanges running the identical mechanism. Idempotent.
inline NormalizedMarket normalize(const MarketConfig& cfg) {
  validate(cfg);
  const std::size_t m = cfg.exchanges.size();
  double total = 0.0;
  for (const auto& e : cfg.exchanges) total += e.lambda;
  const bool rescale =
      std::abs(total - 1.0) > 4.0 * std::numeric_limits<double>::epsilon() * m;

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    const auto& ma = cfg.exchanges[a].mechanism;
    const auto& mb = cfg.exchanges[b].mechanism;
    if (ma.reserve != mb.reserve) return ma.reserve < mb.reserve;
    return ma.kind < mb.kind;
  });

  NormalizedMarket out;
  out.market.n_bidders = cfg.n_bidders;
  out.market.dist = cfg.dist;
  out.index_map.assign(m, 0);
  for (std::size_t idx : order) {
    const auto& e = cfg.exchanges[idx];
    const double lambda = rescale ? e.lambda / total : e.lambda;
    auto& merged = out.market.exchanges;
    if (!merged.empty() && merged.back().mechanism == e.mechanism) {
      merged.back().lambda += lambda;
    } else {
      merged.push_back({lambda, e.mechanism});
    }
    out.index_map[idx] = merged.size() - 1;
  }
  return out;
}

// The rescale-and-sort half of normalize(): every exchange keeps its own
// entry, which is what a game needs, since each one is a separate player.
inline MarketConfig sorted_market(const MarketConfig& cfg) {
  const auto norm = normalize(cfg);
  MarketConfig out{cfg.n_bidders, cfg.dist, {}};
  double total = 0.0;
  for (const auto& e : cfg.exchanges) total += e.lambda;
  const bool rescale = std::abs(total - 1.0) >
                       4.0 * std::numeric_limits<double>::epsilon() * cfg.exchanges.size();
  std::vector<std::size_t> order(cfg.exchanges.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return norm.index_map[a] < norm.index_map[b];
  });
  for (std::size_t idx : order) {
    const auto& e = cfg.exchanges[idx];
    out.exchanges.push_back({rescale ? e.lambda / total : e.lambda, e.mechanism});
  }
  return out;
}

// Lambda_ell = sum_{j <= ell} lambda_j on a normalized market, 1 <= ell <= m.
inline double cumulative_share(const MarketConfig& normalized,
                               std::size_t ell) {
  if (ell == 0 || ell > normalized.exchanges.size()) {
    throw IndexOutOfRange("cumulative_share index " + std::to_string(ell) +
                          " outside 1.." +
                          std::to_string(normalized.exchanges.size()));
  }
  double s = 0.0;
  for (std::size_t j = 0; j < ell; ++j) s += normalized.exchanges[j].lambda;
  return s;
}

}  // namespace ame
