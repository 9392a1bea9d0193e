#ifndef LBPS_TESTS_BT_GRID_HPP
#define LBPS_TESTS_BT_GRID_HPP

#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

// Fractional-outcome BT log-likelihood written out directly, without any of
// the library's helpers.
inline double bt_loglik(const std::vector<std::vector<double>>& p, const std::vector<std::vector<double>>& w,
                        const std::vector<double>& q, double clamp = 1e-4) {
  double ll = 0.0;
  const std::size_t n = q.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (w[i][j] <= 0) continue;
      double pij = p[i][j];
      pij = pij < clamp ? clamp : (pij > 1 - clamp ? 1 - clamp : pij);
      const double d = q[i] - q[j];
      const double s = 1.0 / (1.0 + std::exp(-d));
      ll += w[i][j] * (pij * std::log(s) + (1 - pij) * std::log(1 - s));
    }
  }
  return ll;
}

// Exhaustive search over (q0, q1) in [lo, hi]^2, q2 = -q0 - q1.
inline std::vector<double> bt_grid3(const std::vector<std::vector<double>>& p,
                                    const std::vector<std::vector<double>>& w, double lo = -5.0,
                                    double hi = 5.0, double step = 0.005) {
  const int steps = static_cast<int>(std::lround((hi - lo) / step));
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> arg(3, 0.0);
  std::vector<double> q(3);
  for (int a = 0; a <= steps; ++a) {
    q[0] = lo + a * step;
    for (int b = 0; b <= steps; ++b) {
      q[1] = lo + b * step;
      q[2] = -q[0] - q[1];
      const double ll = bt_loglik(p, w, q);
      if (ll > best) {
        best = ll;
        arg = q;
      }
    }
  }
  return arg;
}

// Maximizer over the zero-sum subspace of any size by coordinate grid
// refinement: sweeps each Helmert-free parametrization (q_k for k < n-1,
// q_{n-1} = -sum) on a shrinking grid until the step is below `final_step`.
inline std::vector<double> bt_grid_refine(const std::vector<std::vector<double>>& p,
                                          const std::vector<std::vector<double>>& w, double final_step = 1e-7) {
  const std::size_t n = p.size();
  std::vector<double> x(n - 1, 0.0);
  const auto full = [&](const std::vector<double>& xs) {
    std::vector<double> q(xs);
    double s = 0;
    for (double v : xs) s += v;
    q.push_back(-s);
    return q;
  };
  double step = 0.5;
  while (step > final_step) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        double best = bt_loglik(p, w, full(x));
        double best_v = x[k];
        const double centre = x[k];
        for (int t = -8; t <= 8; ++t) {
          std::vector<double> y = x;
          y[k] = centre + t * step;
          const double ll = bt_loglik(p, w, full(y));
          if (ll > best) {
            best = ll;
            best_v = y[k];
          }
        }
        if (best_v != centre) {
          x[k] = best_v;
          moved = true;
        }
      }
    }
    step *= 0.25;
  }
  return full(x);
}

}  // namespace oracle

#endif
