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
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ame/distributions.hpp"
#include "ame/errors.hpp"
#include "ame/market.hpp"
#include "ame/numerics.hpp"

namespace ame {

struct SolverOptions {
  double quad_tol = 1e-10;        // absolute, per integral
  double breakpoint_tol = 1e-10;  // value units
  int ode_grid = 1024;            // nodes per mixed segment (min 512)
  int table_cells = 4096;         // T(v) table resolution
};

enum class SegmentForm { ClosedFormFP, Identity, OdeGrid };

inline const char* form_name(SegmentForm f) {
  switch (f) {
    case SegmentForm::ClosedFormFP:
      return "closed_form_fp";
    case SegmentForm::Identity:
      return "identity";
    case SegmentForm::OdeGrid:
      return "ode_grid";
  }
  return "?";
}

// An active second-price exchange inside a segment: its own breakpoint,
// reserve and query share.
struct SpTerm {
  double breakpoint = 0.0;
  double reserve = 0.0;
  double lambda = 0.0;
};

// One continuous piece [lo, hi) of the bidding function. On it the active
// exchanges are fixed, and with rho = (lambda_I + lambda_J) / lambda_I the
// first-order condition reads
//   beta'(v) = rho * g(v) / G(v) * (v - beta(v)),   beta(lo) = start_bid.
// Multiplying by the integrating factor G^rho turns it into
//   d/dv [G^rho beta] = v d/dv [G^rho],
// which is what the OdeGrid form propagates between its nodes.
struct Segment {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double active_fp_share = 0.0;  // lambda_I
  double active_sp_share = 0.0;  // lambda_J
  std::vector<SpTerm> sp_terms;
  double start_bid = 0.0;  // beta+(lo)
  SegmentForm form = SegmentForm::ClosedFormFP;

  double fp_constant = 0.0;   // ClosedFormFP: G(lo) start_bid - T(lo)
  double ode_exponent = 1.0;  // OdeGrid: rho
  std::vector<double> grid_v;
  std::vector<double> grid_bid;

  double active_share() const { return active_fp_share + active_sp_share; }

  // Bid of a value inside (or at the left edge of) this segment.
  double bid(const OrderStatistics& os, double v) const {
    switch (form) {
      case SegmentForm::Identity:
        return std::max(v, start_bid);
      case SegmentForm::ClosedFormFP: {
        const double G = os.G(v);
        if (!(G > 0.0)) return start_bid;
        return std::max(start_bid, (fp_constant + os.moment(v)) / G);
      }
      case SegmentForm::OdeGrid: {
        if (v <= lo || grid_v.size() < 2) return start_bid;
        const double step = grid_v[1] - grid_v[0];
        auto i = static_cast<std::size_t>((v - lo) / step);
        i = std::min(i, grid_v.size() - 1);
        return std::max(start_bid,
                        propagate(os, grid_v[i], grid_bid[i], v));
      }
    }
    return start_bid;
  }

  // Exact solution of the linear segment ODE carried from (from, bid_from)
  // to v, with the remaining integral done by 8-point Gauss-Legendre.
  double propagate(const OrderStatistics& os, double from, double bid_from,
                   double v) const {
    const double Gv = os.G(v);
    if (!(Gv > 0.0) || v <= from) return bid_from;
    const double rho = ode_exponent;
    const double carried = bid_from * std::pow(os.G(from) / Gv, rho);
    auto integrand = [&](double t) {
      return rho * t * std::pow(os.G(t) / Gv, rho - 1.0) * os.g(t) / Gv;
    };
    return carried + numerics::gauss_legendre8(integrand, from, v);
  }
};

// Fills in the representation of `seg` for the given start bid. The segment
// is solved up to the integration limit; the caller trims `hi` afterwards.
inline Segment solve_segment(Segment seg, const OrderStatistics& os,
                             double start_bid,
                             const SolverOptions& opts = {}) {
  seg.start_bid = start_bid;
  const double lambda_i = seg.active_fp_share;
  const double lambda_j = seg.active_sp_share;
  if (!(lambda_i + lambda_j > 0.0)) {
    throw DegenerateSegment("segment has no active exchange");
  }
  const double G0 = os.G(seg.lo);
  if (!(G0 > 0.0) && seg.lo > os.lo() && start_bid > 0.0) {
    throw DegenerateSegment("G vanishes at an interior breakpoint");
  }
  if (lambda_i <= 0.0) {
    seg.form = SegmentForm::Identity;
    return seg;
  }
  if (lambda_j <= 0.0) {
    seg.form = SegmentForm::ClosedFormFP;
    seg.fp_constant = G0 * start_bid - os.moment(seg.lo);
    return seg;
  }

  seg.form = SegmentForm::OdeGrid;
  seg.ode_exponent = (lambda_i + lambda_j) / lambda_i;
  const double upper = std::max(os.hi(), seg.lo);
  const int cells = std::max(512, opts.ode_grid);
  seg.grid_v.resize(static_cast<std::size_t>(cells) + 1);
  seg.grid_bid.resize(seg.grid_v.size());
  const double step = (upper - seg.lo) / cells;
  if (!(step > 0.0)) {
    seg.grid_v.assign(1, seg.lo);
    seg.grid_bid.assign(1, start_bid);
    return seg;
  }
  for (int i = 0; i <= cells; ++i) seg.grid_v[i] = seg.lo + i * step;
  seg.grid_v.back() = upper;
  seg.grid_bid[0] = start_bid;
  const double rho = seg.ode_exponent;
  const double cell_tol = opts.quad_tol / cells;
  for (int i = 0; i < cells; ++i) {
    const double a = seg.grid_v[i];
    const double b = seg.grid_v[i + 1];
    const double Gb = os.G(b);
    auto integrand = [&](double t) {
      return rho * t * std::pow(os.G(t) / Gb, rho - 1.0) * os.g(t) / Gb;
    };
    const double carried = seg.grid_bid[i] * std::pow(os.G(a) / Gb, rho);
    const double next =
        carried + numerics::integrate(integrand, a, b, cell_tol, 1, 40);
    if (!std::isfinite(next)) {
      throw SolverDiverged("mixed segment propagation is not finite");
    }
    seg.grid_bid[i + 1] = next;
  }
  return seg;
}

// Symmetric equilibrium bid of the lambda-weighted average mechanism.
// Below the first breakpoint the bid is 0 (no sale); at a breakpoint the
// right limit is returned.
class BiddingFunction {
 public:
  BiddingFunction() = default;

  const MarketConfig& market() const { return market_; }
  const OrderStatistics& order_statistics() const { return *os_; }
  std::shared_ptr<const OrderStatistics> order_statistics_ptr() const {
    return os_;
  }
  std::span<const Segment> segments() const { return segments_; }

  std::size_t exchange_count() const { return breakpoints_.size(); }

  // a_ell for the merged exchange ell (1-based). Unreachable exchanges report
  // the upper integration limit.
  double breakpoint(std::size_t ell) const {
    check_index(ell);
    return breakpoints_[ell - 1];
  }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  // False when the exchange never sells (reserve above the support, or no
  // value is willing to clear it).
  bool sells(std::size_t ell) const {
    check_index(ell);
    return sells_[ell - 1];
  }

  // 0-based merged indices whose reserve is at or above the support end.
  const std::vector<std::size_t>& reserve_above_support() const {
    return above_support_;
  }

  // Values where beta may jump (segment starts).
  std::vector<double> kinks() const {
    std::vector<double> out;
    for (const auto& s : segments_) {
      if (out.empty() || s.lo != out.back()) out.push_back(s.lo);
    }
    return out;
  }

  double operator()(double v) const {
    const Segment* seg = segment_at(v);
    return seg ? seg->bid(*os_, v) : 0.0;
  }

  // beta-(v): limit from the left.
  double left_limit(double v) const {
    const Segment* seg = nullptr;
    for (const auto& s : segments_) {
      if (s.lo < v) seg = &s;
    }
    return seg ? seg->bid(*os_, v) : 0.0;
  }

  std::pair<double, double> one_sided_limits(std::size_t ell) const {
    const double a = breakpoint(ell);
    if (!sells_[ell - 1]) return {left_limit(a), left_limit(a)};
    return {left_limit(a), (*this)(a)};
  }

  const Segment* segment_at(double v) const {
    auto it = std::upper_bound(
        segments_.begin(), segments_.end(), v,
        [](double x, const Segment& s) { return x < s.lo; });
    if (it == segments_.begin()) return nullptr;
    return &*std::prev(it);
  }

 private:
  friend BiddingFunction solve_bidding(const MarketConfig&,
                                       std::shared_ptr<const OrderStatistics>,
                                       const SolverOptions&);

  void check_index(std::size_t ell) const {
    if (ell < 1 || ell > breakpoints_.size()) {
      throw IndexOutOfRange("exchange index " + std::to_string(ell) +
                            " outside 1.." +
                            std::to_string(breakpoints_.size()));
    }
  }

  MarketConfig market_;
  std::shared_ptr<const OrderStatistics> os_;
  std::vector<Segment> segments_;
  std::vector<double> breakpoints_;
  std::vector<bool> sells_;
  std::vector<std::size_t> above_support_;
};

namespace detail {

// Exchanges of a normalized market grouped by distinct reserve.
struct ReserveLevel {
  double reserve = 0.0;
  double fp_share = 0.0;
  double sp_share = 0.0;
  std::vector<std::size_t> members;
};

inline std::vector<ReserveLevel> reserve_levels(const MarketConfig& m) {
  std::vector<ReserveLevel> levels;
  for (std::size_t j = 0; j < m.exchanges.size(); ++j) {
    const auto& e = m.exchanges[j];
    if (levels.empty() || levels.back().reserve != e.mechanism.reserve) {
      levels.push_back({e.mechanism.reserve, 0.0, 0.0, {}});
    }
    auto& lv = levels.back();
    (e.mechanism.kind == MechanismKind::FirstPrice ? lv.fp_share
                                                   : lv.sp_share) += e.lambda;
    lv.members.push_back(j);
  }
  return levels;
}

}  // namespace detail

// Solves the bidding equilibrium segment by segment. From the current
// segment k, the next breakpoint is the lowest value at which some jump to
// a higher reserve r_t becomes weakly profitable. Dividing the utility gap
// between jumping and staying by G(v), the second-price integrals cancel
// and the indifference residual is
//   D_t(v) = lambda_new v - pay_new - lambda_I (r_t - beta_k(v)),
// where lambda_new and pay_new collect the exchanges with reserves in
// (r_k, r_t], each charging max(its reserve, r_t if first-price). D_t is
// increasing in v, so every root is found by bisection. With one new level
// this is the usual two-sided indifference
//   Lambda_{l-1}(a - p_{l-1}(beta-(a))) = Lambda_l (a - p_l(beta+(a))).
inline BiddingFunction solve_bidding(
    const MarketConfig& cfg, std::shared_ptr<const OrderStatistics> os,
    const SolverOptions& opts = {}) {
  BiddingFunction beta;
  beta.market_ = normalize(cfg).market;
  if (!os || os->n() != beta.market_.n_bidders ||
      !(os->dist() == beta.market_.dist)) {
    os = std::make_shared<const OrderStatistics>(
        beta.market_.dist, beta.market_.n_bidders, opts.table_cells);
  }
  beta.os_ = os;
  const auto& market = beta.market_;
  const std::size_t m = market.exchanges.size();
  const double lo = os->lo();
  const double hi = os->hi();
  beta.breakpoints_.assign(m, hi);
  beta.sells_.assign(m, false);
  for (std::size_t j = 0; j < m; ++j) {
    if (market.exchanges[j].mechanism.reserve >= hi) {
      beta.above_support_.push_back(j);
    }
  }

  const auto levels = detail::reserve_levels(market);
  const double tie_tol = 2.0 * opts.breakpoint_tol;
  std::size_t active = 0;
  double lambda_i = 0.0;
  double lambda_j = 0.0;
  std::vector<SpTerm> sp_terms;
  double v_cur = lo;

  while (active < levels.size()) {
    const Segment* cur = beta.segments_.empty() ? nullptr
                                                : &beta.segments_.back();
    double best_root = std::numeric_limits<double>::infinity();
    std::size_t best_t = levels.size();
    double lambda_new = 0.0;
    double sp_pay = 0.0;
    double fp_new = 0.0;
    for (std::size_t t = active; t < levels.size(); ++t) {
      const auto& lv = levels[t];
      lambda_new += lv.fp_share + lv.sp_share;
      sp_pay += lv.sp_share * lv.reserve;
      fp_new += lv.fp_share;
      if (lv.reserve >= hi) break;
      const double r_t = lv.reserve;
      const double pay_new = sp_pay + fp_new * r_t;
      auto residual = [&](double v) {
        const double stay = cur ? cur->bid(*os, v) : 0.0;
        return lambda_new * v - pay_new - lambda_i * (r_t - stay);
      };
      double root;
      if (lambda_i == 0.0) {
        // Nothing first price is active yet, so the residual is linear.
        root = std::max(v_cur, pay_new / lambda_new);
        if (root >= hi) continue;
      } else if (residual(v_cur) >= 0.0) {
        root = v_cur;
      } else if (residual(hi) < 0.0) {
        continue;
      } else {
        root = numerics::bisect(residual, v_cur, hi, opts.breakpoint_tol);
      }
      if (root < best_root - tie_tol) {
        best_root = root;
        best_t = t;
      } else if (std::abs(root - best_root) <= tie_tol) {
        best_t = t;
      }
    }
    if (best_t == levels.size()) break;

    const double a = best_root;
    if (!beta.segments_.empty()) beta.segments_.back().hi = a;
    Segment seg;
    seg.lo = a;
    for (std::size_t t = active; t <= best_t; ++t) {
      for (std::size_t j : levels[t].members) {
        beta.breakpoints_[j] = a;
        beta.sells_[j] = true;
        const auto& e = market.exchanges[j];
        if (e.mechanism.kind == MechanismKind::FirstPrice) {
          lambda_i += e.lambda;
        } else {
          lambda_j += e.lambda;
          sp_terms.push_back({a, e.mechanism.reserve, e.lambda});
        }
      }
    }
    seg.active_fp_share = lambda_i;
    seg.active_sp_share = lambda_j;
    seg.sp_terms = sp_terms;
    beta.segments_.push_back(
        solve_segment(std::move(seg), *os, levels[best_t].reserve, opts));
    active = best_t + 1;
    v_cur = a;
  }
  return beta;
}

inline BiddingFunction solve_bidding(const MarketConfig& cfg,
                                     const SolverOptions& opts = {}) {
  return solve_bidding(cfg, nullptr, opts);
}

inline double eval_bid(const BiddingFunction& beta, double v) {
  return beta(v);
}

inline std::pair<double, double> one_sided_limits(const BiddingFunction& beta,
                                                  std::size_t ell) {
  return beta.one_sided_limits(ell);
}

// Values at the midpoints of `count` equal-probability cells.
inline std::vector<double> quantile_grid(const ValueDistribution& d,
                                         std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = d.quantile((i + 0.5) / static_cast<double>(count));
  }
  return out;
}

// Largest gain, over the sampled values, from imitating another type s
// (bidding bid(s)) instead of bidding one's own bid(v), when every opponent
// uses `bid`. For a bidder of value v,
//   u(s, v) = sum_{j : bid(s) >= r_j} lambda_j (G(s) v - pay_j(s)),
// with pay_j = G(s) bid(s) for first price and
// G(A_j) r_j + int_{A_j}^s bid(t) g(t) dt for second price, A_j being the
// lowest value whose bid clears r_j. `kinks` lists the points where `bid`
// may be discontinuous; `bid` must be nondecreasing.
template <class BidFn>
double regret_audit(const BidFn& bid, std::span<const double> kinks,
                    const MarketConfig& normalized, const OrderStatistics& os,
                    std::span<const double> values, int grid_size,
                    double quad_tol = 1e-10) {
  const double lo = os.lo();
  const double hi = os.hi();
  const auto& dist = os.dist();

  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(grid_size) + 3 * kinks.size() + 2);
  pts.push_back(lo);
  pts.push_back(hi);
  for (int i = 0; i < grid_size; ++i) {
    pts.push_back(dist.quantile((i + 0.5) / grid_size));
  }
  for (double k : kinks) {
    pts.push_back(k);
    const double left = k - 1e-9 * std::max(1.0, std::abs(k));
    if (left > lo) pts.push_back(left);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  // K(s) = int_lo^s bid g on the sorted points, cells split at kinks.
  auto bg = [&](double t) { return bid(t) * os.g(t); };
  std::vector<double> K(pts.size(), 0.0);
  const double cell_tol = quad_tol / static_cast<double>(pts.size());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    K[i] = K[i - 1] + numerics::integrate(bg, pts[i - 1], pts[i], cell_tol, 1);
  }
  auto K_at = [&](double s) {
    auto it = std::upper_bound(pts.begin(), pts.end(), s);
    const std::size_t i = (it == pts.begin()) ? 0 : (it - pts.begin()) - 1;
    return K[i] + numerics::integrate(bg, pts[i], s, cell_tol, 1);
  };

  // Lowest value whose bid clears each reserve.
  const auto& ex = normalized.exchanges;
  std::vector<double> clear(ex.size(), std::numeric_limits<double>::infinity());
  std::vector<double> K_clear(ex.size(), 0.0);
  for (std::size_t j = 0; j < ex.size(); ++j) {
    const double r = ex[j].mechanism.reserve;
    double a;
    if (bid(lo) >= r) {
      a = lo;
    } else if (bid(hi) < r) {
      continue;
    } else {
      a = numerics::bisect([&](double t) { return bid(t) >= r ? 1.0 : -1.0; },
                           lo, hi, 1e-14);
      for (double k : kinks) {
        if (std::abs(k - a) <= 1e-9 && bid(k) >= r) a = k;
      }
    }
    clear[j] = a;
    K_clear[j] = K_at(a);
  }

  struct Offer {
    double slope;  // coefficient of v
    double pay;
  };
  auto offer = [&](double s, double Ks) {
    const double b = bid(s);
    const double Gs = os.G(s);
    Offer o{0.0, 0.0};
    for (std::size_t j = 0; j < ex.size(); ++j) {
      if (!(b >= ex[j].mechanism.reserve) || !(s >= clear[j])) continue;
      const double lam = ex[j].lambda;
      o.slope += lam * Gs;
      if (ex[j].mechanism.kind == MechanismKind::FirstPrice) {
        o.pay += lam * Gs * b;
      } else {
        o.pay += lam * (os.G(clear[j]) * ex[j].mechanism.reserve + Ks -
                        K_clear[j]);
      }
    }
    return o;
  };

  std::vector<Offer> offers(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) offers[i] = offer(pts[i], K[i]);

  double worst = 0.0;
  for (double v : values) {
    const Offer own = offer(v, K_at(v));
    const double u_own = own.slope * v - own.pay;
    double best = 0.0;
    for (const auto& o : offers) best = std::max(best, o.slope * v - o.pay);
    worst = std::max(worst, best - u_own);
  }
  return worst;
}

inline double regret_audit(const BiddingFunction& beta,
                           std::span<const double> values,
                           int grid_size = 2000, double quad_tol = 1e-10) {
  const auto kinks = beta.kinks();
  return regret_audit(beta, std::span<const double>(kinks), beta.market(),
                      beta.order_statistics(), values, grid_size, quad_tol);
}

}  // namespace ame
