#include "featlab/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "featlab/error.hpp"
#include "featlab/rng.hpp"

namespace featlab {
namespace {

constexpr double kTau = 1e-12;
constexpr std::size_t kRowCacheBytes = std::size_t{128} << 20;

void check_finite(std::span<const FeatureVector> rows) {
  for (const auto& r : rows) {
    for (double v : r) {
      if (!std::isfinite(v)) throw ValidationError("feature vector contains a non-finite value");
    }
  }
}

// SMO over the dual  max sum(a) - 1/2 a'Qa,  0 <= a <= C,  y'a = 0,
// with Q_ij = y_i y_j exp(-gamma D_ij) and gradient G = Qa - 1 of the
// equivalent minimization.
class DualSolver {
 public:
  DualSolver(const Eigen::MatrixXd& sqdist, const std::vector<int>& labels, double c, double gamma)
      : d2_(sqdist), n_(labels.size()), c_(c), gamma_(gamma), y_(n_), alpha_(n_, 0.0),
        grad_(n_, -1.0), cache_(n_) {
    for (std::size_t i = 0; i < n_; ++i) y_[i] = labels[i] == 1 ? 1.0 : -1.0;
    cache_limit_ = std::max<std::size_t>(2, kRowCacheBytes / (sizeof(double) * std::max<std::size_t>(n_, 1)));
  }

  TrainStatus solve(const TrainOptions& opts) {
    TrainStatus st;
    if (opts.rule == WorkingSetRule::kSecondOrder) {
      solve_second_order(opts, st);
    } else {
      solve_random_partner(opts, st);
    }
    rho_ = compute_rho();
    st.kkt_violation = kkt_violation();
    st.dual_objective = dual_objective();
    return st;
  }

  const std::vector<double>& alpha() const { return alpha_; }
  const std::vector<double>& y() const { return y_; }
  double bias() const { return -rho_; }

 private:
  bool upper(std::size_t i) const { return alpha_[i] >= c_; }
  bool lower(std::size_t i) const { return alpha_[i] <= 0.0; }

  // Kernel row K(i, .) without label signs.
  const std::vector<double>& kernel_row(std::size_t i) {
    auto& row = cache_[i];
    if (!row.empty()) return row;
    std::vector<double>& out = cached_ < cache_limit_ ? row : scratch_[scratch_next_++ % 2];
    out.resize(n_);
    const double* col = d2_.data() + i * n_;  // column i == row i (symmetric, col-major)
    for (std::size_t k = 0; k < n_; ++k) out[k] = std::exp(-gamma_ * col[k]);
    if (&out == &row) ++cached_;
    return out;
  }

  double dual_objective() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += alpha_[i] - 0.5 * alpha_[i] * (grad_[i] + 1.0);
    return s;
  }

  void apply_update(std::size_t i, std::size_t j, double old_ai, double old_aj,
                    const std::vector<double>& ki, const std::vector<double>& kj) {
    const double dai = (alpha_[i] - old_ai) * y_[i];
    const double daj = (alpha_[j] - old_aj) * y_[j];
    for (std::size_t k = 0; k < n_; ++k) grad_[k] += y_[k] * (ki[k] * dai + kj[k] * daj);
  }

  void solve_second_order(const TrainOptions& opts, TrainStatus& st) {
    const std::size_t max_iter = std::max<std::size_t>(opts.max_passes, 1) * std::max<std::size_t>(n_, 100);
    while (st.iterations < max_iter) {
      // i: maximal violator in I_up.
      double gmax = -std::numeric_limits<double>::infinity();
      std::size_t i = n_;
      for (std::size_t t = 0; t < n_; ++t) {
        const bool in_up = y_[t] > 0 ? !upper(t) : !lower(t);
        if (in_up && -y_[t] * grad_[t] >= gmax) {
          gmax = -y_[t] * grad_[t];
          i = t;
        }
      }
      if (i == n_) {
        st.converged = true;
        return;
      }
      const auto ki = kernel_row(i);  // copy: j's row may evict the scratch slot

      // j: partner in I_low with the largest second-order decrease.
      double gmax2 = -std::numeric_limits<double>::infinity();
      double best_obj = std::numeric_limits<double>::infinity();
      std::size_t j = n_;
      for (std::size_t t = 0; t < n_; ++t) {
        const bool in_low = y_[t] > 0 ? !lower(t) : !upper(t);
        if (!in_low) continue;
        const double v = -y_[t] * grad_[t];
        gmax2 = std::max(gmax2, -v);
        const double diff = gmax - v;
        if (diff > 0.0) {
          double quad = 2.0 - 2.0 * ki[t];
          if (quad <= 0.0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best_obj) {
            best_obj = obj;
            j = t;
          }
        }
      }
      if (gmax + gmax2 < opts.tol || j == n_) {
        st.converged = true;
        return;
      }
      const auto& kj = kernel_row(j);

      const double old_ai = alpha_[i];
      const double old_aj = alpha_[j];
      pair_step(i, j, ki[j]);
      apply_update(i, j, old_ai, old_aj, ki, kj);
      ++st.iterations;
      if (opts.record_dual_trace) st.dual_trace.push_back(dual_objective());
    }
  }

  // Analytic two-variable step with box clipping.
  void pair_step(std::size_t i, std::size_t j, double kij) {
    double& ai = alpha_[i];
    double& aj = alpha_[j];
    if (y_[i] != y_[j]) {
      double quad = 2.0 - 2.0 * kij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad_[i] - grad_[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) {
          aj = 0.0;
          ai = diff;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = -diff;
      }
      if (diff > 0.0) {
        if (ai > c_) {
          ai = c_;
          aj = c_ - diff;
        }
      } else if (aj > c_) {
        aj = c_;
        ai = c_ + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * kij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad_[i] - grad_[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c_) {
        if (ai > c_) {
          ai = c_;
          aj = sum - c_;
        }
      } else if (aj < 0.0) {
        aj = 0.0;
        ai = sum;
      }
      if (sum > c_) {
        if (aj > c_) {
          aj = c_;
          ai = sum - c_;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = sum;
      }
    }
  }

  void solve_random_partner(const TrainOptions& opts, TrainStatus& st) {
    Rng rng(opts.seed);
    std::uniform_int_distribution<std::size_t> other(0, n_ >= 2 ? n_ - 2 : 0);
    const std::size_t max_sweeps = std::max<std::size_t>(opts.max_passes, 1) * 1000;
    double b = 0.0;
    std::size_t quiet = 0;
    for (std::size_t sweep = 0; sweep < max_sweeps && quiet < opts.max_passes; ++sweep) {
      std::size_t changed = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double ei = y_[i] * grad_[i] + b;  // f(x_i) - y_i
        const double r = y_[i] * ei;
        if (!((r < -opts.tol && alpha_[i] < c_) || (r > opts.tol && alpha_[i] > 0.0))) continue;
        std::size_t j = other(rng);
        if (j >= i) ++j;
        const double ej = y_[j] * grad_[j] + b;
        const double ai = alpha_[i];
        const double aj = alpha_[j];
        double lo = 0.0;
        double hi = 0.0;
        if (y_[i] != y_[j]) {
          lo = std::max(0.0, aj - ai);
          hi = std::min(c_, c_ + aj - ai);
        } else {
          lo = std::max(0.0, ai + aj - c_);
          hi = std::min(c_, ai + aj);
        }
        if (lo >= hi) continue;
        const auto ki = kernel_row(i);
        const double kij = ki[j];
        const double eta = 2.0 * kij - 2.0;
        if (eta >= 0.0) continue;
        double new_aj = std::clamp(aj - y_[j] * (ei - ej) / eta, lo, hi);
        if (std::abs(new_aj - aj) < 1e-12 * (new_aj + aj + 1e-12)) continue;
        double new_ai = ai + y_[i] * y_[j] * (aj - new_aj);
        new_ai = std::clamp(new_ai, 0.0, c_);
        alpha_[i] = new_ai;
        alpha_[j] = new_aj;
        const auto& kj = kernel_row(j);
        const double b1 = b - ei - y_[i] * (new_ai - ai) - y_[j] * (new_aj - aj) * kij;
        const double b2 = b - ej - y_[i] * (new_ai - ai) * kij - y_[j] * (new_aj - aj);
        if (new_ai > 0.0 && new_ai < c_) {
          b = b1;
        } else if (new_aj > 0.0 && new_aj < c_) {
          b = b2;
        } else {
          b = 0.5 * (b1 + b2);
        }
        apply_update(i, j, ai, aj, ki, kj);
        ++changed;
        ++st.iterations;
        if (opts.record_dual_trace) st.dual_trace.push_back(dual_objective());
      }
      quiet = changed == 0 ? quiet + 1 : 0;
    }
    st.converged = quiet >= opts.max_passes;
  }

  double compute_rho() const {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double yg = y_[i] * grad_[i];
      if (upper(i)) {
        if (y_[i] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else if (lower(i)) {
        if (y_[i] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else {
        ++n_free;
        sum_free += yg;
      }
    }
    return n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  }

  double kkt_violation() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double margin = grad_[i] + 1.0 + y_[i] * bias();  // y_i f(x_i)
      double v = 0.0;
      if (lower(i)) {
        v = std::max(0.0, 1.0 - margin);
      } else if (upper(i)) {
        v = std::max(0.0, margin - 1.0);
      } else {
        v = std::abs(margin - 1.0);
      }
      worst = std::max(worst, v);
    }
    return worst;
  }

  const Eigen::MatrixXd& d2_;
  std::size_t n_;
  double c_;
  double gamma_;
  std::vector<double> y_;
  std::vector<double> alpha_;
  std::vector<double> grad_;
  std::vector<std::vector<double>> cache_;
  std::vector<double> scratch_[2];
  std::size_t scratch_next_ = 0;
  std::size_t cached_ = 0;
  std::size_t cache_limit_ = 0;
  double rho_ = 0.0;
};

}  // namespace

void SvmHyperparams::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("SVM c must be positive and finite");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ConfigError("SVM gamma must be positive and finite");
  }
}

Scaler Scaler::fit(std::span<const FeatureVector> rows) {
  Scaler s;
  if (rows.empty()) return s;
  const std::size_t d = rows.front().size();
  s.means.assign(d, 0.0);
  s.stds.assign(d, 0.0);
  for (const auto& r : rows) {
    if (r.size() != d) throw DimensionError("feature vectors differ in dimension");
    for (std::size_t j = 0; j < d; ++j) s.means[j] += r[j];
  }
  const double n = static_cast<double>(rows.size());
  for (auto& m : s.means) m /= n;
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = r[j] - s.means[j];
      s.stds[j] += diff * diff;
    }
  }
  for (auto& v : s.stds) {
    v = std::sqrt(v / n);
    if (!(v > 0.0)) v = 1.0;
  }
  return s;
}

FeatureVector Scaler::transform(std::span<const double> x) const {
  if (x.size() != means.size()) {
    throw DimensionError("feature dimension " + std::to_string(x.size()) +
                         " does not match model dimension " + std::to_string(means.size()));
  }
  FeatureVector out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - means[j]) / stds[j];
  return out;
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  if (a.size() != b.size()) {
    throw DimensionError("kernel arguments differ in dimension (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
  }
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return std::exp(-gamma * s);
}

double SvmModel::decision_value(std::span<const double> x) const {
  const FeatureVector xs = scaler.transform(x);
  double f = bias;
  for (std::size_t i = 0; i < support_vectors.size(); ++i) {
    f += dual_coefs[i] * rbf_kernel(support_vectors[i], xs, gamma);
  }
  return f;
}

std::pair<int, double> SvmModel::predict(std::span<const double> x) const {
  const double f = decision_value(x);
  return {f > 0.0 ? 1 : 0, f};
}

PreparedTrainingSet PreparedTrainingSet::build(std::span<const FeatureVector> features,
                                               std::span<const int> labels) {
  if (features.size() != labels.size()) {
    throw DimensionError("feature and label counts differ");
  }
  if (features.empty()) throw ValidationError("no training examples");
  check_finite(features);
  bool has_pos = false;
  bool has_neg = false;
  for (int l : labels) {
    if (l == 1) has_pos = true;
    else if (l == 0) has_neg = true;
    else throw ValidationError("labels must be 0 or 1");
  }
  if (!has_pos || !has_neg) throw ValidationError("training data must contain both classes");

  PreparedTrainingSet out;
  out.scaler = Scaler::fit(features);
  const std::size_t n = features.size();
  const std::size_t d = out.scaler.dim();
  out.rows.reserve(n);
  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    out.rows.push_back(out.scaler.transform(features[i]));
    for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = out.rows.back()[j];
  }
  out.labels.assign(labels.begin(), labels.end());

  const Eigen::Index m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd& d2 = out.sqdist;
  d2.setZero(m, m);
  d2.selfadjointView<Eigen::Lower>().rankUpdate(x, -2.0);
  const Eigen::VectorXd sq = x.rowwise().squaredNorm();
  for (Eigen::Index c = 0; c < m; ++c) {
    d2(c, c) = 0.0;
    for (Eigen::Index r = c + 1; r < m; ++r) {
      const double v = std::max(0.0, d2(r, c) + sq(r) + sq(c));
      d2(r, c) = v;
      d2(c, r) = v;
    }
  }
  return out;
}

std::pair<SvmModel, TrainStatus> train_svm(const PreparedTrainingSet& data, const SvmHyperparams& hp,
                                           const TrainOptions& opts) {
  hp.validate();
  if (!(opts.tol > 0.0)) throw ConfigError("SMO tolerance must be > 0");
  DualSolver solver(data.sqdist, data.labels, hp.c, hp.gamma);
  TrainStatus st = solver.solve(opts);

  SvmModel model;
  model.gamma = hp.gamma;
  model.bias = solver.bias();
  model.scaler = data.scaler;
  const auto& alpha = solver.alpha();
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] > 0.0) {
      model.support_vectors.push_back(data.rows[i]);
      model.dual_coefs.push_back(alpha[i] * solver.y()[i]);
    }
  }
  return {std::move(model), std::move(st)};
}

std::pair<SvmModel, TrainStatus> train_svm(std::span<const FeatureVector> features,
                                           std::span<const int> labels, const SvmHyperparams& hp,
                                           const TrainOptions& opts) {
  hp.validate();
  return train_svm(PreparedTrainingSet::build(features, labels), hp, opts);
}

std::pair<SvmModel, TrainStatus> train_svm(std::span<const LabeledExample> examples,
                                           const SvmHyperparams& hp, const TrainOptions& opts) {
  std::vector<FeatureVector> features;
  std::vector<int> labels;
  features.reserve(examples.size());
  labels.reserve(examples.size());
  for (const auto& ex : examples) {
    features.push_back(ex.features);
    labels.push_back(ex.label);
  }
  return train_svm(features, labels, hp, opts);
}

}  // namespace featlab
