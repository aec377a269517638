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

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <utility>

#include "ame/errors.hpp"

namespace ame::numerics {

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double b, double fa, double fm,
                    double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson quadrature with Richardson correction. The interval is
// first cut into `panels` pieces so that integrands that happen to look
// polynomial on the coarse stencil are still resolved.
template <class F>
double integrate(const F& f, double a, double b, double abs_tol,
                 int panels = 8, int max_depth = 48) {
  if (!(b > a)) return 0.0;
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * h;
    const double hi = (i + 1 == panels) ? b : lo + h;
    const double flo = f(lo);
    const double fhi = f(hi);
    const double fm = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
    total += detail::simpson_step(f, lo, hi, flo, fm, fhi, whole,
                                  abs_tol / panels, max_depth);
  }
  if (!std::isfinite(total)) {
    throw SolverDiverged("quadrature produced a non-finite value");
  }
  return total;
}

// Fixed 8-point Gauss-Legendre rule; used for short sub-cell integrals of
// smooth integrands where a tabulated cumulative value is already known.
template <class F>
double gauss_legendre8(const F& f, double a, double b) {
  static constexpr std::array<double, 4> kNodes = {
      0.1834346424956498049394761, 0.5255324099163289858177390,
      0.7966664774136267395915539, 0.9602898564975362316835609};
  static constexpr std::array<double, 4> kWeights = {
      0.3626837833783619829651504, 0.3137066458778872873379622,
      0.2223810344533744705443560, 0.1012285362903762591525314};
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < kNodes.size(); ++i) {
    const double dx = half * kNodes[i];
    sum += kWeights[i] * (f(mid - dx) + f(mid + dx));
  }
  return sum * half;
}

// Bisection for an increasing-sign function: requires f(lo) < 0 <= f(hi).
// Returns the right end of the final bracket, so f(result) >= 0.
template <class F>
double bisect(const F& f, double lo, double hi, double tol,
              int max_iter = 200) {
  for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (!std::isfinite(fm)) {
      throw SolverDiverged("bisection residual is not finite");
    }
    if (fm < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

struct ScalarMax {
  double x;
  double value;
};

// Golden-section search for a maximum of f on [a, b]. Stops when the
// bracket is narrower than tol.
template <class F>
ScalarMax golden_section_max(const F& f, double a, double b, double tol,
                             int max_iter = 200) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? ScalarMax{c, fc} : ScalarMax{d, fd};
}

}  // namespace ame::numerics
