#pragma once

// Composite Simpson quadrature with interval doubling, returning the running
// integral at uniformly spaced sample points.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "stagen/types.hpp"

namespace stagen {

inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const cplx& x) { return std::abs(x); }
template <class Derived>
double magnitude(const Eigen::MatrixBase<Derived>& m) {
  return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

struct QuadratureSettings {
  std::size_t min_intervals = 2000;  // at least 2001 abscissae
  std::size_t max_intervals = std::size_t{1} << 22;
  double rel_tol = 1e-9;
};

template <class T>
struct CumulativeIntegral {
  std::vector<double> t;
  std::vector<T> values;  // values[i] = integral of f over [t0, t[i]]
  std::size_t intervals = 0;
  double estimated_error = 0.0;
  bool converged = false;
};

/// Running integral of f over [t0, t1] reported at `samples` equally spaced
/// points (samples >= 2). The Simpson grid is refined by doubling until two
/// successive results differ by less than rel_tol relative to the largest
/// running value; `zero` supplies the additive identity for T.
template <class T, class F>
CumulativeIntegral<T> cumulative_simpson(F&& f, double t0, double t1, std::size_t samples, T zero,
                                         const QuadratureSettings& qs = {}) {
  if (samples < 2) throw std::invalid_argument("cumulative_simpson needs at least 2 samples");
  if (!(t1 >= t0)) throw std::invalid_argument("cumulative_simpson needs t1 >= t0");
  const std::size_t seg = samples - 1;
  std::size_t r = std::max<std::size_t>(1, (qs.min_intervals + 2 * seg - 1) / (2 * seg));
  CumulativeIntegral<T> out;
  out.t.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) out.t[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(seg);

  // Function values on the current grid; refinement reuses them.
  std::size_t n = 2 * seg * r;
  std::vector<T> fv(n + 1, zero);
  const double len = t1 - t0;
  for (std::size_t j = 0; j <= n; ++j) fv[j] = f(t0 + len * static_cast<double>(j) / static_cast<double>(n));

  auto integrate = [&](std::size_t nn) {
    std::vector<T> vals(samples, zero);
    const double h = len / static_cast<double>(nn);
    const std::size_t per = nn / seg;  // even
    T acc = zero;
    for (std::size_t i = 0; i < seg; ++i) {
      const std::size_t base = i * per;
      for (std::size_t j = base; j < base + per; j += 2) {
        acc = acc + (h / 3.0) * (fv[j] + 4.0 * fv[j + 1] + fv[j + 2]);
      }
      vals[i + 1] = acc;
    }
    return vals;
  };

  std::vector<T> prev = integrate(n);
  while (true) {
    if (2 * n > qs.max_intervals) {
      out.values = std::move(prev);
      out.intervals = n;
      out.converged = false;
      return out;
    }
    std::vector<T> refined(2 * n + 1, zero);
    for (std::size_t j = 0; j <= n; ++j) refined[2 * j] = fv[j];
    for (std::size_t j = 0; j < n; ++j) {
      refined[2 * j + 1] = f(t0 + len * (static_cast<double>(2 * j + 1)) / static_cast<double>(2 * n));
    }
    fv.swap(refined);
    n *= 2;
    std::vector<T> cur = integrate(n);
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      diff = std::max(diff, magnitude(cur[i] - prev[i]));
      scale = std::max(scale, magnitude(cur[i]));
    }
    prev = std::move(cur);
    if (diff <= qs.rel_tol * scale || scale == 0.0) {
      out.values = std::move(prev);
      out.intervals = n;
      out.estimated_error = diff;
      out.converged = true;
      return out;
    }
  }
}

/// Single definite integral with the same refinement rule.
template <class T, class F>
T simpson(F&& f, double t0, double t1, T zero, const QuadratureSettings& qs = {}) {
  auto r = cumulative_simpson<T>(std::forward<F>(f), t0, t1, 2, zero, qs);
  if (!r.converged) throw NumericalError("Simpson quadrature did not converge");
  return r.values.back();
}

}  // namespace stagen
