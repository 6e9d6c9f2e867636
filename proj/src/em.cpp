// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "stratdisc/clustering.hpp"
#include "stratdisc/errors.hpp"
#include "stratdisc/kernels.hpp"

namespace stratdisc {
namespace {

constexpr std::size_t D = kFeatureStride;
using Mat = Eigen::Matrix<double, D, D, Eigen::RowMajor>;
using Vec = Eigen::Matrix<double, D, 1>;

double log_sum_exp(const double* v, std::size_t n) {
  double m = -HUGE_VAL;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

double penalty(const Weights& w, double l2) {
  double s = 0.0;
  for (double x : w) s += x * x;
  return 0.5 * l2 * s;
}

// Objective, gradient and (optionally) Hessian of one cluster's weighted
// softmax log-likelihood minus the L2 penalty.
double evaluate(const FeatureCache& fc, const std::vector<double>& resp, const Weights& w, double l2,
                Weights* grad, Mat* hess) {
  const auto& K = kernels::active();
  thread_local std::vector<double> z;
  thread_local std::array<double, D> mu;
  double f = -penalty(w, l2);
  if (grad) grad->fill(0.0);
  if (hess) hess->setZero();
  for (std::size_t t = 0; t < fc.num_trajectories(); ++t) {
    const double r = resp[t];
    if (r < 1e-12) continue;
    for (std::size_t o = fc.traj_begin[t]; o < fc.traj_begin[t + 1]; ++o) {
      const auto& op = fc.ops[o];
      const double* X = fc.rows.data() + op.row_begin * D;
      z.resize(op.num_rows);
      K.gemv(X, op.num_rows, D, w.data(), z.data());
      const double lse = log_sum_exp(z.data(), op.num_rows);
      f += r * (z[op.chosen] - lse);
      if (!grad) continue;
      mu.fill(0.0);
      for (std::size_t a = 0; a < op.num_rows; ++a) {
        const double p = std::exp(z[a] - lse);
        K.axpy(p, X + a * D, mu.data(), D);
        if (hess) K.syr(-r * p, X + a * D, hess->data(), D);
      }
      K.axpy(r, X + op.chosen * D, grad->data(), D);
      K.axpy(-r, mu.data(), grad->data(), D);
      if (hess) K.syr(r, mu.data(), hess->data(), D);
    }
  }
  if (grad)
    for (std::size_t j = 0; j < D; ++j) (*grad)[j] -= l2 * w[j];
  if (hess)
    for (std::size_t j = 0; j < D; ++j) (*hess)(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) -= l2;
  return f;
}

// Damped Newton ascent; never returns a point worse than the start.
Weights m_step(const FeatureCache& fc, const std::vector<double>& resp, Weights w, double l2) {
  Weights g;
  Mat H;
  double f = evaluate(fc, resp, w, l2, &g, &H);
  for (int it = 0; it < 50; ++it) {
    double gmax = 0.0;
    for (double x : g) gmax = std::max(gmax, std::fabs(x));
    if (gmax < 1e-7) break;
    const Vec gv = Eigen::Map<const Vec>(g.data());
    Mat negH = -H;
    Vec d = negH.ldlt().solve(gv);
    if (!d.allFinite() || gv.dot(d) <= 0.0) d = gv;  // fall back to steepest ascent
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      Weights cand = w;
      for (std::size_t j = 0; j < D; ++j) cand[j] += step * d(static_cast<Eigen::Index>(j));
      const double fc_val = evaluate(fc, resp, cand, l2, nullptr, nullptr);
      if (fc_val >= f + 1e-4 * step * gv.dot(d)) {
        w = cand;
        moved = fc_val > f;
        f = fc_val;
        break;
      }
    }
    if (!moved) break;
    f = evaluate(fc, resp, w, l2, &g, &H);
  }
  return w;
}

// E-step: per-cluster trajectory log-likelihoods into responsibilities.
double e_step(const FeatureCache& fc, const std::vector<Weights>& w,
              std::vector<std::vector<double>>& resp) {
  const std::size_t k = w.size();
  const double log_k = std::log(static_cast<double>(k));
  std::vector<double> ll(k);
  double total = 0.0;
  resp.assign(fc.num_trajectories(), std::vector<double>(k, 0.0));
  for (std::size_t t = 0; t < fc.num_trajectories(); ++t) {
    for (std::size_t i = 0; i < k; ++i) ll[i] = trajectory_log_likelihood(fc, t, w[i]) - log_k;
    const double lse = log_sum_exp(ll.data(), k);
    total += lse;
    for (std::size_t i = 0; i < k; ++i) resp[t][i] = std::exp(ll[i] - lse);
  }
  return total;
}

std::vector<std::vector<double>> seed_assignments(const FeatureCache& fc, std::size_t k, Rng& rng) {
  const std::size_t n = fc.num_trajectories();
  std::vector<std::array<double, kNumFeatures>> pts(n);
  for (std::size_t t = 0; t < n; ++t) {
    pts[t].fill(0.0);
    const std::size_t b = fc.traj_begin[t], e = fc.traj_begin[t + 1];
    for (std::size_t o = b; o < e; ++o) {
      const auto& op = fc.ops[o];
      const double* x = fc.rows.data() + (op.row_begin + op.chosen) * D;
      for (std::size_t j = 0; j < kNumFeatures; ++j) pts[t][j] += x[j];
    }
    if (e > b)
      for (double& v : pts[t]) v /= static_cast<double>(e - b);
  }
  // standardize so that no feature dominates the distance
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    double m = 0.0, s = 0.0;
    for (const auto& p : pts) m += p[j];
    m /= static_cast<double>(n);
    for (const auto& p : pts) s += (p[j] - m) * (p[j] - m);
    s = std::sqrt(s / static_cast<double>(n));
    for (auto& p : pts) p[j] = s > 1e-12 ? (p[j] - m) / s : 0.0;
  }
  auto dist2 = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t j = 0; j < kNumFeatures; ++j) s += (pts[a][j] - pts[b][j]) * (pts[a][j] - pts[b][j]);
    return s;
  };
  std::vector<std::size_t> centers{rng.below(n)};
  std::vector<double> d2(n);
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      d2[t] = HUGE_VAL;
      for (std::size_t c : centers) d2[t] = std::min(d2[t], dist2(t, c));
      total += d2[t];
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.below(n);
    } else {
      double u = rng.uniform() * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        u -= d2[pick];
        if (u < 0.0) break;
      }
    }
    centers.push_back(pick);
  }
  std::vector<std::vector<double>> resp(n, std::vector<double>(k, 0.0));
  for (std::size_t t = 0; t < n; ++t) {
    std::size_t best = 0;
    double bd = HUGE_VAL;
    for (std::size_t c = 0; c < k; ++c) {
      const double d = dist2(t, centers[c]);
      if (d < bd) {
        bd = d;
        best = c;
      }
    }
    resp[t][best] = 1.0;
  }
  // guarantee every cluster has at least its own center
  for (std::size_t c = 0; c < k; ++c) {
    std::fill(resp[centers[c]].begin(), resp[centers[c]].end(), 0.0);
    resp[centers[c]][c] = 1.0;
  }
  return resp;
}

std::vector<double> column(const std::vector<std::vector<double>>& resp, std::size_t i) {
  std::vector<double> c(resp.size());
  for (std::size_t t = 0; t < resp.size(); ++t) c[t] = resp[t][i];
  return c;
}

}  // namespace

double cluster_objective(const FeatureCache& fc, const std::vector<double>& resp, const Weights& w,
                         double l2, Weights* grad) {
  return evaluate(fc, resp, w, l2, grad, nullptr);
}

double mixture_log_likelihood(const FeatureCache& fc, const std::vector<Weights>& w) {
  std::vector<std::vector<double>> resp;
  return e_step(fc, w, resp);
}

std::vector<std::size_t> EmResult::assignments() const {
  std::vector<std::size_t> out(responsibilities.size(), 0);
  for (std::size_t t = 0; t < responsibilities.size(); ++t)
    out[t] = static_cast<std::size_t>(
        std::max_element(responsibilities[t].begin(), responsibilities[t].end()) -
        responsibilities[t].begin());
  return out;
}

EmResult em_fit(const FeatureCache& fc, const EmConfig& cfg) {
  if (cfg.k == 0) throw ConfigError("number of clusters must be positive");
  if (fc.num_trajectories() < cfg.k) throw ConfigError("fewer trajectories than clusters");
  EmResult best;
  bool have = false;
  const std::size_t restarts = std::max<std::size_t>(1, cfg.restarts);
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng = Rng::stream(cfg.seed, 0x656dULL, r * 1000 + cfg.k);
    EmResult res;
    res.weights.assign(cfg.k, Weights{});
    auto resp = seed_assignments(fc, cfg.k, rng);
    for (std::size_t i = 0; i < cfg.k; ++i) res.weights[i] = m_step(fc, column(resp, i), Weights{}, cfg.l2);
    auto objective = [&](double ll) {
      double o = ll;
      for (const auto& w : res.weights) o -= penalty(w, cfg.l2);
      return o;
    };
    double ll = e_step(fc, res.weights, resp);
    double obj = objective(ll);
    res.history.push_back(obj);
    for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
      for (std::size_t i = 0; i < cfg.k; ++i) {
        auto ri = column(resp, i);
        double mass = 0.0;
        for (double v : ri) mass += v;
        if (mass < 1e-8) {
          // degenerate cluster: restart its weights near a random trajectory's fit
          ++res.degenerate_restarts;
          std::vector<double> one(ri.size(), 0.0);
          one[rng.below(one.size())] = 1.0;
          res.weights[i] = m_step(fc, one, Weights{}, cfg.l2);
          continue;
        }
        res.weights[i] = m_step(fc, ri, res.weights[i], cfg.l2);
      }
      ll = e_step(fc, res.weights, resp);
      const double next = objective(ll);
      res.history.push_back(next);
      ++res.iterations;
      const double gain = next - obj;
      obj = next;
      if (gain < cfg.tolerance || gain < cfg.change_tolerance * std::fabs(obj)) break;
    }
    res.responsibilities = std::move(resp);
    res.log_likelihood = ll;
    res.objective = obj;
    res.best_restart = r;
    if (!have || res.objective > best.objective) {
      best = std::move(res);
      have = true;
    }
  }
  return best;
}

}  // namespace stratdisc
