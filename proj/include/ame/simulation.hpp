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
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ame/equilibrium.hpp"
#include "ame/market.hpp"
#include "ame/parallel.hpp"

// Monte Carlo oracle for the aggregate market. Bidders are sampled from F,
// bid through the supplied bid function, and every exchange runs its
// auction mechanically. Nothing here touches the revenue quadrature.

namespace ame {

// Outcome of one value profile on every exchange of the caller's market.
struct AuctionOutcome {
  std::vector<std::optional<std::size_t>> winner;  // per exchange
  std::vector<double> payment;                     // per exchange
};

template <class BidFn = BiddingFunction>
struct SimConfig {
  std::size_t samples = 1;
  std::uint64_t rng_seed = 0;
  MarketConfig cfg;
  BidFn beta;
};

struct SimReport {
  std::size_t samples = 0;
  std::vector<double> per_exchange_mean;
  std::vector<double> per_exchange_stderr;
  std::vector<double> per_exchange_welfare_mean;
  std::vector<double> per_exchange_sale_rate;
  double welfare_mean = 0.0;  // winner value when some exchange sells
  double welfare_stderr = 0.0;
  double sale_rate = 0.0;  // some exchange sells
  double sale_stderr = 0.0;

  bool operator==(const SimReport&) const = default;
};

namespace sim_detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent stream per (seed, stream id); blocks never share state.
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(id + 1)));
}

// Uniform in the open interval (0, 1).
inline double open_unit(std::mt19937_64& eng) {
  return ((eng() >> 11) + 0.5) * 0x1.0p-53;
}

struct Ranking {
  std::size_t winner = 0;
  double top = 0.0;
  double second = 0.0;
};

// Highest bid, the bidder holding it (ties split by `draw`) and the highest
// competing bid.
inline Ranking rank_bids(std::span<const double> bids, double draw) {
  Ranking r;
  r.top = -std::numeric_limits<double>::infinity();
  std::size_t ties = 0;
  for (double b : bids) {
    if (b > r.top) {
      r.top = b;
      ties = 1;
    } else if (b == r.top) {
      ++ties;
    }
  }
  const auto pick = std::min<std::size_t>(
      ties - 1, static_cast<std::size_t>(draw * static_cast<double>(ties)));
  std::size_t seen = 0;
  r.second = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (bids[i] == r.top && seen++ == pick) {
      r.winner = i;
    } else {
      r.second = std::max(r.second, bids[i]);
    }
  }
  if (bids.size() < 2) r.second = 0.0;
  return r;
}

}  // namespace sim_detail

// One query: bids = beta(values); exchange j sells when the top bid clears
// r_j; first price charges the top bid, second price max(second bid, r_j).
// `draw` in [0, 1) breaks ties among top bidders.
template <class BidFn>
AuctionOutcome run_auction_once(std::span<const double> values,
                                const BidFn& bid, const MarketConfig& cfg,
                                double draw) {
  std::vector<double> bids(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) bids[i] = bid(values[i]);
  const auto rank = sim_detail::rank_bids(bids, draw);
  AuctionOutcome out;
  out.winner.resize(cfg.exchanges.size());
  out.payment.assign(cfg.exchanges.size(), 0.0);
  for (std::size_t j = 0; j < cfg.exchanges.size(); ++j) {
    const auto& mech = cfg.exchanges[j].mechanism;
    if (values.empty() || rank.top < mech.reserve) continue;
    out.winner[j] = rank.winner;
    out.payment[j] = mech.kind == MechanismKind::FirstPrice
                         ? rank.top
                         : std::max(rank.second, mech.reserve);
  }
  return out;
}

namespace sim_detail {

// Running mean and squared deviation (Welford), merged pairwise with
// Chan's update so the variance never comes from a difference of sums.
struct Moments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    const double d = x - mean;
    mean += d / count;
    m2 += d * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.count == 0.0) return;
    if (count == 0.0) {
      *this = o;
      return;
    }
    const double total = count + o.count;
    const double d = o.mean - mean;
    mean += d * (o.count / total);
    m2 += o.m2 + d * d * (count * o.count / total);
    count = total;
  }

  double stderr_of_mean() const {
    if (count < 2.0) return 0.0;
    return std::sqrt(std::max(0.0, m2 / (count - 1.0)) / count);
  }
};

}  // namespace sim_detail

// Averages run_auction_once over `samples` profiles. Samples are cut into
// fixed blocks, each with its own generator stream, and block moments are
// merged in block order, so the report is bit-identical for any number
// of workers.
template <class BidFn>
SimReport estimate(const SimConfig<BidFn>& sc) {
  constexpr std::size_t kBlock = 8192;
  using sim_detail::Moments;
  const auto& cfg = sc.cfg;
  validate(cfg);
  const std::size_t m = cfg.exchanges.size();
  const auto n = static_cast<std::size_t>(cfg.n_bidders);
  const std::size_t blocks = (sc.samples + kBlock - 1) / kBlock;

  struct Block {
    std::vector<Moments> pay;
    std::vector<double> welfare, sales;
    Moments w, sold;
  };
  std::vector<Block> partial(blocks);
  double min_reserve = std::numeric_limits<double>::infinity();
  for (const auto& e : cfg.exchanges) {
    min_reserve = std::min(min_reserve, e.mechanism.reserve);
  }

  parallel_for(blocks, [&](std::size_t b) {
    auto eng = sim_detail::stream(sc.rng_seed, b);
    Block s;
    s.pay.assign(m, Moments{});
    s.welfare.assign(m, 0.0);
    s.sales.assign(m, 0.0);
    std::vector<double> values(n), bids(n);
    const std::size_t begin = b * kBlock;
    const std::size_t end = std::min(sc.samples, begin + kBlock);
    for (std::size_t k = begin; k < end; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        values[i] = cfg.dist.quantile(sim_detail::open_unit(eng));
        bids[i] = sc.beta(values[i]);
      }
      const double draw = sim_detail::open_unit(eng);
      const auto rank = sim_detail::rank_bids(bids, draw);
      const double v_win = values[rank.winner];
      for (std::size_t j = 0; j < m; ++j) {
        const auto& mech = cfg.exchanges[j].mechanism;
        if (rank.top < mech.reserve) {
          s.pay[j].add(0.0);
          continue;
        }
        const double p = mech.kind == MechanismKind::FirstPrice
                             ? rank.top
                             : std::max(rank.second, mech.reserve);
        s.pay[j].add(p);
        s.welfare[j] += v_win;
        s.sales[j] += 1.0;
      }
      const bool sold = rank.top >= min_reserve;
      s.w.add(sold ? v_win : 0.0);
      s.sold.add(sold ? 1.0 : 0.0);
    }
    partial[b] = std::move(s);
  });

  Block tot;
  tot.pay.assign(m, Moments{});
  tot.welfare.assign(m, 0.0);
  tot.sales.assign(m, 0.0);
  for (const auto& s : partial) {
    for (std::size_t j = 0; j < m; ++j) {
      tot.pay[j].merge(s.pay[j]);
      tot.welfare[j] += s.welfare[j];
      tot.sales[j] += s.sales[j];
    }
    tot.w.merge(s.w);
    tot.sold.merge(s.sold);
  }

  const double N = static_cast<double>(sc.samples);
  SimReport rep;
  rep.samples = sc.samples;
  for (std::size_t j = 0; j < m; ++j) {
    rep.per_exchange_mean.push_back(tot.pay[j].mean);
    rep.per_exchange_stderr.push_back(tot.pay[j].stderr_of_mean());
    rep.per_exchange_welfare_mean.push_back(tot.welfare[j] / N);
    rep.per_exchange_sale_rate.push_back(tot.sales[j] / N);
  }
  rep.welfare_mean = tot.w.mean;
  rep.welfare_stderr = tot.w.stderr_of_mean();
  rep.sale_rate = tot.sold.mean;
  rep.sale_stderr = tot.sold.stderr_of_mean();
  return rep;
}

struct EmpiricalRegret {
  double max_regret = 0.0;   // largest mean gain over the deviation grid
  double noise_bound = 0.0;  // z * stderr of that gain
  bool within_noise = true;  // every deviation's gain <= z * its stderr
  double worst_value = 0.0;
  double worst_bid = 0.0;
};

// For each value v, estimates the utility of every deviation bid against
// n - 1 opponents bidding sc.beta, using the same opponent draws for all
// bids (common random numbers), and compares with bidding sc.beta(v).
// sc.samples is the number of opponent profiles per value.
template <class BidFn>
EmpiricalRegret empirical_regret(const SimConfig<BidFn>& sc,
                                 std::span<const double> value_grid,
                                 std::span<const double> deviation_bids,
                                 double z = 4.0) {
  const auto& cfg = sc.cfg;
  validate(cfg);
  double total_lambda = 0.0;
  for (const auto& e : cfg.exchanges) total_lambda += e.lambda;
  const auto opponents = static_cast<std::size_t>(cfg.n_bidders - 1);
  const std::size_t M = sc.samples;

  struct ValueResult {
    double regret = 0.0, se = 0.0, bid = 0.0, excess = 0.0;
  };
  std::vector<ValueResult> results(value_grid.size());

  parallel_for(value_grid.size(), [&](std::size_t vi) {
    const double v = value_grid[vi];
    auto eng = sim_detail::stream(sc.rng_seed, 0x5EED0000ull + vi);
    std::vector<double> top(M);
    std::vector<double> ties(M);
    for (std::size_t k = 0; k < M; ++k) {
      double best = -std::numeric_limits<double>::infinity();
      double count = 0.0;
      for (std::size_t i = 0; i < opponents; ++i) {
        const double b = sc.beta(cfg.dist.quantile(sim_detail::open_unit(eng)));
        if (b > best) {
          best = b;
          count = 1.0;
        } else if (b == best) {
          count += 1.0;
        }
      }
      top[k] = best;
      ties[k] = count;
    }
    // Expected utility of bid b against one opponent profile.
    auto utility = [&](double b, std::size_t k) {
      const double share =
          b > top[k] ? 1.0 : (b == top[k] ? 1.0 / (ties[k] + 1.0) : 0.0);
      if (share == 0.0) return 0.0;
      double u = 0.0;
      for (const auto& e : cfg.exchanges) {
        const auto& mech = e.mechanism;
        if (b < mech.reserve) continue;
        const double pay = mech.kind == MechanismKind::FirstPrice
                               ? b
                               : std::max(top[k], mech.reserve);
        u += e.lambda / total_lambda * share * (v - pay);
      }
      return u;
    };
    const double own = sc.beta(v);
    ValueResult res;
    res.excess = -std::numeric_limits<double>::infinity();
    for (double b : deviation_bids) {
      sim_detail::Moments gain;
      for (std::size_t k = 0; k < M; ++k) gain.add(utility(b, k) - utility(own, k));
      const double mean = gain.mean;
      const double se = gain.stderr_of_mean();
      if (mean > res.regret) {
        res.regret = mean;
        res.se = se;
        res.bid = b;
      }
      res.excess = std::max(res.excess, mean - z * se);
    }
    results[vi] = res;
  });

  EmpiricalRegret out;
  for (std::size_t vi = 0; vi < results.size(); ++vi) {
    const auto& r = results[vi];
    if (r.regret > out.max_regret) {
      out.max_regret = r.regret;
      out.noise_bound = z * r.se;
      out.worst_value = value_grid[vi];
      out.worst_bid = r.bid;
    }
    if (r.excess > 1e-12) out.within_noise = false;
  }
  return out;
}

}  // namespace ame
