#pragma once

// Slow, obviously-correct reference implementations used to check the
// library. None of them call into featlab.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace featlab::oracle {

/// Minimum within-cluster SSE over every 2-partition with both sides
/// non-empty.
inline double best_two_partition(const std::vector<std::vector<double>>& pts) {
  const std::size_t n = pts.size();
  const std::size_t d = pts[0].size();
  double best = std::numeric_limits<double>::infinity();
  // point 0 is pinned to side A so each partition is visited once
  for (std::size_t mask = 0; mask < (std::size_t{1} << (n - 1)); ++mask) {
    const std::size_t full = mask << 1;
    if (full == 0) continue;
    double sse = 0.0;
    for (int side = 0; side < 2; ++side) {
      std::vector<double> mean(d, 0.0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<int>((full >> i) & 1) != side) continue;
        for (std::size_t k = 0; k < d; ++k) mean[k] += pts[i][k];
        ++count;
      }
      for (auto& m : mean) m /= static_cast<double>(count);
      for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<int>((full >> i) & 1) != side) continue;
        for (std::size_t k = 0; k < d; ++k) sse += (pts[i][k] - mean[k]) * (pts[i][k] - mean[k]);
      }
    }
    best = std::min(best, sse);
  }
  return best;
}

/// max(0, mean(tau) - tau_k) written out longhand.
inline std::vector<double> triangle(const std::vector<std::vector<double>>& centroids,
                                    const std::vector<double>& x) {
  std::vector<double> tau;
  for (const auto& c : centroids) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - c[k]) * (x[k] - c[k]);
    tau.push_back(std::sqrt(s));
  }
  double mu = 0.0;
  for (double t : tau) mu += t;
  mu /= static_cast<double>(tau.size());
  std::vector<double> f;
  for (double t : tau) f.push_back(mu - t > 0.0 ? mu - t : 0.0);
  return f;
}

/// Alarm at t iff the pt+1 inputs ending at t are all 1.
inline std::vector<int> persistence(const std::vector<int>& c, std::size_t pt) {
  std::vector<int> out(c.size(), 0);
  for (std::size_t t = 0; t < c.size(); ++t) {
    if (t < pt) continue;
    bool all = true;
    for (std::size_t k = t - pt; k <= t; ++k) all = all && c[k] == 1;
    out[t] = all ? 1 : 0;
  }
  return out;
}

struct NaiveMetrics {
  double dr = 0.0;
  double far = 0.0;
  std::optional<double> mttd;
  double cr = 0.0;
};

/// Interval-by-interval walk over each unit, accumulating the raw counts.
inline NaiveMetrics naive_metrics(const std::vector<std::vector<int>>& labels,
                                  const std::vector<std::vector<int>>& alarms) {
  std::size_t total = 0, false_alarms = 0, agree = 0, incidents = 0, detected = 0;
  double delay_sum = 0.0;
  for (std::size_t u = 0; u < labels.size(); ++u) {
    bool has_incident = false, hit = false;
    std::size_t onset = 0;
    for (std::size_t t = 0; t < labels[u].size(); ++t) {
      ++total;
      const int l = labels[u][t];
      const int a = alarms[u][t];
      if (l == a) ++agree;
      if (l == 0 && a == 1) ++false_alarms;
      if (l == 1 && !has_incident) {
        has_incident = true;
        onset = t;
      }
      if (l == 1 && a == 1 && !hit) {
        hit = true;
        delay_sum += static_cast<double>(t - onset + 1);
      }
    }
    if (has_incident) ++incidents;
    if (hit) ++detected;
  }
  NaiveMetrics m;
  m.dr = incidents ? static_cast<double>(detected) / static_cast<double>(incidents) : 0.0;
  m.far = static_cast<double>(false_alarms) / static_cast<double>(total);
  if (detected) m.mttd = delay_sum / static_cast<double>(detected);
  m.cr = static_cast<double>(agree) / static_cast<double>(total);
  return m;
}

/// Z-scores the columns (population std, unit scale when constant).
inline std::vector<std::vector<double>> standardize(const std::vector<std::vector<double>>& x) {
  const std::size_t n = x.size(), d = x[0].size();
  std::vector<std::vector<double>> out = x;
  for (std::size_t k = 0; k < d; ++k) {
    double mean = 0.0;
    for (const auto& r : x) mean += r[k];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& r : x) var += (r[k] - mean) * (r[k] - mean);
    double sd = std::sqrt(var / static_cast<double>(n));
    if (!(sd > 0.0)) sd = 1.0;
    for (auto& r : out) r[k] = (r[k] - mean) / sd;
  }
  return out;
}

/// Optimal value of the C-SVM dual  max 1'a - a'Qa/2, 0 <= a <= C, y'a = 0
/// on already-scaled rows. Every assignment of each variable to
/// {lower bound, upper bound, free} is tried; free variables are solved from
/// the equality-constrained stationarity system and kept if feasible. The
/// optimum lies in the relative interior of some face, so it is among them.
inline double svm_dual_optimum(const std::vector<std::vector<double>>& rows,
                               const std::vector<int>& labels01, double c, double gamma) {
  const int n = static_cast<int>(rows.size());
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = labels01[i] == 1 ? 1.0 : -1.0;
  Eigen::MatrixXd Q(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < rows[i].size(); ++k) {
        s += (rows[i][k] - rows[j][k]) * (rows[i][k] - rows[j][k]);
      }
      Q(i, j) = y[i] * y[j] * std::exp(-gamma * s);
    }
  }
  auto dual = [&](const Eigen::VectorXd& a) { return a.sum() - 0.5 * a.dot(Q * a); };

  double best = -std::numeric_limits<double>::infinity();
  std::size_t combos = 1;
  for (int i = 0; i < n; ++i) combos *= 3;
  for (std::size_t code = 0; code < combos; ++code) {
    std::vector<int> state(n);
    std::size_t rest = code;
    for (int i = 0; i < n; ++i) {
      state[i] = static_cast<int>(rest % 3);  // 0 lower, 1 upper, 2 free
      rest /= 3;
    }
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    std::vector<int> free;
    for (int i = 0; i < n; ++i) {
      if (state[i] == 1) a[i] = c;
      if (state[i] == 2) free.push_back(i);
    }
    const int f = static_cast<int>(free.size());
    if (f == 0) {
      if (std::abs(y.dot(a)) > 1e-12) continue;
    } else {
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(f + 1, f + 1);
      Eigen::VectorXd b(f + 1);
      const Eigen::VectorXd qa = Q * a;
      for (int p = 0; p < f; ++p) {
        for (int q = 0; q < f; ++q) A(p, q) = Q(free[p], free[q]);
        A(p, f) = y[free[p]];
        A(f, p) = y[free[p]];
        b[p] = 1.0 - qa[free[p]];
      }
      b[f] = -y.dot(a);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
      if (!lu.isInvertible()) continue;
      const Eigen::VectorXd sol = lu.solve(b);
      bool feasible = true;
      for (int p = 0; p < f; ++p) {
        if (sol[p] < -1e-12 || sol[p] > c + 1e-12) feasible = false;
        a[free[p]] = std::clamp(sol[p], 0.0, c);
      }
      if (!feasible) continue;
    }
    best = std::max(best, dual(a));
  }
  return best;
}

}  // namespace featlab::oracle
