// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <bit>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "stratdisc/clustering.hpp"
#include "stratdisc/errors.hpp"

namespace stratdisc {
namespace {

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double lse(const std::vector<double>& v) {
  double m = -HUGE_VAL;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

std::optional<Criterion> criterion_from_string(std::string_view s) {
  if (s == "bic" || s == "BIC") return Criterion::bic;
  if (s == "aic" || s == "AIC") return Criterion::aic;
  if (s == "marginal" || s == "marginal_likelihood") return Criterion::marginal;
  if (s == "weighted_marginal" || s == "weighted-marginal") return Criterion::weighted_marginal;
  return std::nullopt;
}

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::bic:
      return "bic";
    case Criterion::aic:
      return "aic";
    case Criterion::marginal:
      return "marginal";
    case Criterion::weighted_marginal:
      return "weighted_marginal";
  }
  return "bic";
}

SupportTrace support_along(const Environment& env, const Policy& policy, const Trajectory& t) {
  SupportTrace s;
  auto run = policy.start();
  ActionDistribution d;
  for (const auto& op : replay(env, t)) {
    d.clear();
    run->distribution(op.belief, d);
    int size = 0;
    bool in = false;
    for (std::size_t i = 0; i < d.actions.size(); ++i)
      if (d.probs[i] > 0.0) {
        ++size;
        if (d.actions[i] == op.action) in = true;
      }
    s.in_support.push_back(in ? 1 : 0);
    s.support_size.push_back(size);
    s.legal_size.push_back(std::popcount(op.belief.legal_mask()));
    run->advance(op.belief, op.action);
  }
  return s;
}

EpsilonStats epsilon_stats(const SupportTrace& s) {
  EpsilonStats e;
  for (std::size_t i = 0; i < s.in_support.size(); ++i) {
    const int comp = s.legal_size[i] - s.support_size[i];
    if (s.in_support[i]) {
      e.log_base -= std::log(static_cast<double>(s.support_size[i]));
      if (comp > 0) e.n_allowed += 1.0;
    } else {
      e.log_base -= std::log(static_cast<double>(std::max(comp, 1)));
      e.n_disallowed += 1.0;
    }
  }
  return e;
}

double epsilon_log_likelihood(const EpsilonStats& s, double eps) {
  return s.log_base + xlogy(s.n_allowed, 1.0 - eps) + xlogy(s.n_disallowed, eps);
}

double log_beta_marginal(double d, double a, double alpha, double beta) {
  return log_beta_fn(d + alpha, a + beta) - log_beta_fn(alpha, beta);
}

double log_beta_marginal_quadrature(double d, double a, double alpha, double beta) {
  // log integrand of eps^(d+alpha-1) (1-eps)^(a+beta-1) / B(alpha, beta)
  auto log_f = [&](double e) {
    return xlogy(d + alpha - 1.0, e) + xlogy(a + beta - 1.0, 1.0 - e) - log_beta_fn(alpha, beta);
  };
  const double mode = std::clamp((d + alpha - 1.0) / std::max(d + a + alpha + beta - 2.0, 1e-12), 1e-9, 1.0 - 1e-9);
  const double shift = log_f(mode);
  // adaptive Gauss-Kronrod on each side of the mode, where the integrand peaks
  auto g = [&](double e) { return std::exp(log_f(e) - shift); };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double v = GK::integrate(g, 0.0, mode, 20, 1e-13) + GK::integrate(g, mode, 1.0, 20, 1e-13);
  return shift + std::log(v);
}

ModelScore score_model(const std::vector<std::vector<EpsilonStats>>& stats, bool admissible,
                       std::size_t num_ops) {
  ModelScore m;
  m.admissible = admissible;
  m.num_ops = num_ops;
  const std::size_t n = stats.size();
  const std::size_t k = n == 0 ? 0 : stats[0].size();
  m.k = k;
  if (n == 0 || k == 0) return m;
  const double log_k = std::log(static_cast<double>(k));
  std::vector<double> eps(k, 0.1);
  std::vector<std::vector<double>> resp(n, std::vector<double>(k));
  std::vector<double> row(k);
  double ll = -HUGE_VAL;
  for (int it = 0; it < 500; ++it) {
    double next = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t i = 0; i < k; ++i) row[i] = epsilon_log_likelihood(stats[t][i], eps[i]) - log_k;
      const double z = lse(row);
      next += z;
      for (std::size_t i = 0; i < k; ++i) resp[t][i] = std::isfinite(z) ? std::exp(row[i] - z) : 1.0 / k;
    }
    double change = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double dis = 0.0, tot = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        dis += resp[t][i] * stats[t][i].n_disallowed;
        tot += resp[t][i] * (stats[t][i].n_disallowed + stats[t][i].n_allowed);
      }
      const double e = tot > 0.0 ? dis / tot : eps[i];
      change = std::max(change, std::fabs(e - eps[i]));
      eps[i] = e;
    }
    const bool done = it > 0 && std::fabs(next - ll) < 1e-10 && change < 1e-12;
    ll = next;
    if (done) break;
  }
  // final likelihood at the fitted epsilons
  ll = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < k; ++i) row[i] = epsilon_log_likelihood(stats[t][i], eps[i]) - log_k;
    ll += lse(row);
  }
  m.epsilons = eps;
  m.log_likelihood = ll;
  m.num_params = k;
  const double ln_n = std::log(static_cast<double>(std::max<std::size_t>(num_ops, 1)));
  m.bic = -2.0 * ll + static_cast<double>(m.num_params) * ln_n;
  m.aic = -2.0 * ll + 2.0 * static_cast<double>(m.num_params);

  // Beta-marginal per cluster with trajectories hard-assigned by responsibility.
  std::vector<EpsilonStats> agg(k);
  std::vector<double> members(k, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const auto i = static_cast<std::size_t>(std::max_element(resp[t].begin(), resp[t].end()) - resp[t].begin());
    agg[i].log_base += stats[t][i].log_base;
    agg[i].n_allowed += stats[t][i].n_allowed;
    agg[i].n_disallowed += stats[t][i].n_disallowed;
    members[i] += 1.0;
  }
  m.log_marginal = -m.bic / 2.0;
  m.beta_log_marginal = -static_cast<double>(n) * log_k;
  m.weighted_marginal = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double lm = agg[i].log_base + log_beta_marginal(agg[i].n_disallowed, agg[i].n_allowed);
    m.beta_log_marginal += lm;
    m.weighted_marginal += members[i] / static_cast<double>(n) * lm;
  }
  return m;
}

const ModelScore& select_model(const std::vector<ModelScore>& scores, Criterion c) {
  const ModelScore* best = nullptr;
  auto better = [&](const ModelScore& a, const ModelScore& b) {
    switch (c) {
      case Criterion::bic:
        return a.bic < b.bic;
      case Criterion::aic:
        return a.aic < b.aic;
      case Criterion::marginal:
        return a.beta_log_marginal > b.beta_log_marginal;
      case Criterion::weighted_marginal:
        return a.weighted_marginal > b.weighted_marginal;
    }
    return false;
  };
  for (const auto& s : scores)
    if (s.admissible && (best == nullptr || better(s, *best))) best = &s;
  if (best == nullptr) throw NoAdmissibleModel("no model has a description for every cluster");
  return *best;
}

std::string scores_tsv(const std::vector<ModelScore>& scores) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "k\tlog_likelihood\tbic\taic\tlog_marginal_bic\tlog_marginal_beta\tweighted_marginal"
         "\tnum_params\tnum_ops\tadmissible\tepsilons\n";
  // inadmissible models carry NaN scores; print them as "nan" whatever their sign bit
  auto num = [](double x) -> std::string {
    if (std::isnan(x)) return "nan";
    std::ostringstream v;
    v << std::setprecision(10) << x;
    return v.str();
  };
  for (const auto& s : scores) {
    out << s.k << '\t' << num(s.log_likelihood) << '\t' << num(s.bic) << '\t' << num(s.aic) << '\t'
        << num(s.log_marginal) << '\t' << num(s.beta_log_marginal) << '\t' << num(s.weighted_marginal) << '\t'
        << s.num_params << '\t' << s.num_ops << '\t' << (s.admissible ? 1 : 0) << '\t';
    for (std::size_t i = 0; i < s.epsilons.size(); ++i) out << (i ? "," : "") << s.epsilons[i];
    out << '\n';
  }
  return out.str();
}

}  // namespace stratdisc
