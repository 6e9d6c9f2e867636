// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "stratdisc/clustering.hpp"
#include "stratdisc/errors.hpp"
#include "stratdisc/rng.hpp"
#include "stratdisc/synthetic.hpp"

using namespace stratdisc;

namespace {

std::size_t feature(std::string_view name) {
  const auto& names = feature_names();
  const auto it = std::find(names.begin(), names.end(), name);
  REQUIRE(it != names.end());
  return static_cast<std::size_t>(it - names.begin());
}

std::vector<Trajectory> random_trajectories(const Environment& env, std::size_t n, std::uint64_t seed) {
  const RandomPolicy random;
  std::vector<Trajectory> out;
  for (std::size_t i = 0; i < n; ++i) {
    Rng t = Rng::stream(seed, 1, i), a = Rng::stream(seed, 2, i);
    out.push_back(rollout(env, random, t, a).trajectory);
  }
  return out;
}

Weights random_weights(Rng& rng, double scale) {
  Weights w{};
  for (std::size_t i = 0; i < kNumFeatures; ++i) w[i] = scale * rng.normal();
  return w;
}

double logit(const BeliefState& b, Computation c, const Weights& w) {
  double f[kFeatureStride];
  action_features(b, c, f);
  double s = 0.0;
  for (std::size_t i = 0; i < kFeatureStride; ++i) s += f[i] * w[i];
  return s;
}

// log B(a, b) from lgamma, independent of the library.
double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

}  // namespace

TEST_CASE("feature rows") {
  const auto env = Environment::standard();
  const BeliefState b(env);
  FeatureBlock fb;
  legal_action_features(b, fb);
  REQUIRE(fb.actions.size() == 13);
  CHECK(fb.rows.size() == 13 * kFeatureStride);
  const auto tc = feature("termination_constant"), leaf = feature("is_leaf"), root = feature("is_root");
  for (std::size_t r = 0; r < fb.actions.size(); ++r) {
    const double* f = fb.rows.data() + r * kFeatureStride;
    const Computation c = fb.actions[r];
    CHECK(f[kNumFeatures] == 0.0);  // pad column
    if (c == kTerminate) {
      CHECK(f[tc] == 0.0);
      CHECK(f[leaf] == 0.0);
    } else {
      CHECK(f[tc] == -1.0);
      CHECK(f[leaf] == (env.layout().is_leaf(c) ? 1.0 : 0.0));
      CHECK(f[root] == (env.layout().level[static_cast<std::size_t>(c)] == 1 ? 1.0 : 0.0));
    }
    double g[kFeatureStride];
    action_features(b, c, g);
    CHECK(std::equal(f, f + kFeatureStride, g));
  }
}

TEST_CASE("softmax example and normalization") {
  const auto env = Environment::standard();
  const BeliefState b(env);
  Weights w{};
  w[feature("termination_constant")] = -10.0;  // every click gets logit +10
  const double e10 = std::exp(10.0);
  CHECK(softmax_prob(w, b, kTerminate) == doctest::Approx(1.0 / (1.0 + 12.0 * e10)));
  CHECK(softmax_prob(w, b, 5) == doctest::Approx(e10 / (1.0 + 12.0 * e10)));

  Rng rng(2);
  const auto trajs = random_trajectories(env, 30, 7);
  for (const auto& t : trajs) {
    const Weights v = random_weights(rng, 2.0);
    for (const auto& op : replay(env, t)) {
      ActionDistribution d;
      SoftmaxPolicy(v).distribution(op.belief, d);
      double total = 0.0, z = 0.0, m = -HUGE_VAL;
      for (auto a : d.actions) m = std::max(m, logit(op.belief, a, v));
      for (auto a : d.actions) z += std::exp(logit(op.belief, a, v) - m);
      for (std::size_t i = 0; i < d.actions.size(); ++i) {
        total += d.probs[i];
        CHECK(d.probs[i] == doctest::Approx(std::exp(logit(op.belief, d.actions[i], v) - m) / z));
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("trajectory log-likelihood matches the per-step softmax") {
  const auto env = Environment::standard();
  const auto trajs = random_trajectories(env, 40, 3);
  const FeatureCache fc = build_feature_cache(env, trajs);
  CHECK(fc.num_trajectories() == 40);
  Rng rng(4);
  for (std::size_t t = 0; t < trajs.size(); ++t) {
    const Weights w = random_weights(rng, 1.0);
    double want = 0.0;
    for (const auto& op : replay(env, trajs[t])) want += std::log(softmax_prob(w, op.belief, op.action));
    CHECK(trajectory_log_likelihood(fc, t, w) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("analytic gradient matches finite differences") {
  const auto env = Environment::standard();
  const auto trajs = random_trajectories(env, 25, 9);
  const FeatureCache fc = build_feature_cache(env, trajs);
  Rng rng(10);
  for (int point = 0; point < 20; ++point) {
    std::vector<double> resp(trajs.size());
    for (auto& r : resp) r = rng.uniform();
    const Weights w = random_weights(rng, 0.7);
    Weights grad{};
    cluster_objective(fc, resp, w, 1e-3, &grad);
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      const double h = 1e-5 * std::max(1.0, std::fabs(w[i]));
      Weights hi = w, lo = w;
      hi[i] += h;
      lo[i] -= h;
      const double fd = (cluster_objective(fc, resp, hi, 1e-3, nullptr) -
                         cluster_objective(fc, resp, lo, 1e-3, nullptr)) / (2.0 * h);
      CHECK(std::fabs(grad[i] - fd) <= 1e-5 * std::max(1.0, std::fabs(fd)));
    }
  }
  // without the penalty the objective is the weighted sum of trajectory likelihoods
  std::vector<double> resp(trajs.size(), 0.5);
  const Weights w = random_weights(rng, 1.0);
  double want = 0.0;
  for (std::size_t t = 0; t < trajs.size(); ++t) want += 0.5 * trajectory_log_likelihood(fc, t, w);
  CHECK(cluster_objective(fc, resp, w, 0.0, nullptr) == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("EM objective never decreases") {
  const auto env = Environment::standard();
  const auto data = synthetic_dataset({"no_planning", "leaves_until_max", "random"}, 30, 2, 5);
  const FeatureCache fc = build_feature_cache(env, data.trajectories());
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    EmConfig cfg;
    cfg.k = 1 + seed % 4;
    cfg.seed = seed;
    cfg.restarts = 1;
    cfg.max_iterations = 30;
    const EmResult r = em_fit(fc, cfg);
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] >= r.history[i - 1] - 1e-9);
    CHECK(r.log_likelihood == doctest::Approx(mixture_log_likelihood(fc, r.weights)));
    for (const auto& row : r.responsibilities) {
      double s = 0.0;
      for (double v : row) s += v;
      CHECK(s == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("EM stopping and separation") {
  const auto env = Environment::standard();
  const auto data = synthetic_dataset({"no_planning", "leaves_until_max"}, 20, 5, 3);
  const FeatureCache fc = build_feature_cache(env, data.trajectories());

  EmConfig loose;
  loose.k = 2;
  loose.tolerance = std::numeric_limits<double>::infinity();
  loose.restarts = 1;
  CHECK(em_fit(fc, loose).iterations == 1);

  EmConfig cfg;
  cfg.k = 2;
  const auto r = em_fit(fc, cfg);
  std::vector<int> got;
  for (auto a : r.assignments()) got.push_back(static_cast<int>(a));
  CHECK(adjusted_rand_index(got, data.labels()) > 0.95);

  EmConfig bad;
  bad.k = 0;
  CHECK_THROWS_AS(em_fit(fc, bad), ConfigError);
  bad.k = 101;
  CHECK_THROWS_AS(em_fit(fc, bad), ConfigError);
}

TEST_CASE("discretized policy examples") {
  const auto env = Environment::standard();
  const BeliefState b(env);
  Weights w{};
  w[feature("is_leaf")] = 1.0;
  ActionDistribution d;
  DiscretizedPolicy(w).distribution(b, d);
  CHECK(d.actions.size() == 6);
  for (std::size_t i = 0; i < d.actions.size(); ++i) {
    CHECK(env.layout().is_leaf(d.actions[i]));
    CHECK(d.probs[i] == doctest::Approx(1.0 / 6.0));
  }

  // a logit gap inside the tie tolerance counts as a tie
  w[feature("is_leaf")] = 0.05;
  DiscretizedPolicy(w, 0.1).distribution(b, d);
  CHECK(d.actions.size() == 13);
  DiscretizedPolicy(w, 0.01).distribution(b, d);
  CHECK(d.actions.size() == 6);
  CHECK(DiscretizedPolicy(w, 0.1).tie() == 0.1);
  CHECK(discretize(w).tie() == 0.0);
}

TEST_CASE("discretized support is the brute-force argmax set") {
  const auto env = Environment::standard();
  const auto trajs = random_trajectories(env, 40, 12);
  Rng rng(13);
  for (const auto& t : trajs) {
    Weights w = random_weights(rng, 1.0);
    // integer weights make ties common
    for (auto& x : w) x = std::round(x);
    const DiscretizedPolicy p(w);
    for (const auto& op : replay(env, t)) {
      ActionDistribution d;
      p.distribution(op.belief, d);
      double m = -HUGE_VAL;
      const auto legal = op.belief.legal_actions();
      for (auto a : legal) m = std::max(m, logit(op.belief, a, w));
      std::vector<Computation> want;
      for (auto a : legal)
        if (logit(op.belief, a, w) >= m - 1e-9) want.push_back(a);
      CHECK(d.actions == want);
    }
  }
}

TEST_CASE("support traces and epsilon statistics") {
  const auto env = Environment::standard();
  const auto trajs = random_trajectories(env, 10, 14);
  for (const auto& t : trajs) {
    const auto s = support_along(env, RandomPolicy(), t);
    CHECK(s.in_support.size() == t.clicks.size() + 1);
    for (std::size_t i = 0; i < s.in_support.size(); ++i) {
      CHECK(s.in_support[i] == 1);
      CHECK(s.support_size[i] == s.legal_size[i]);
    }
    const auto e = epsilon_stats(s);
    CHECK(e.n_disallowed == 0.0);
    CHECK(e.n_allowed == 0.0);
    double lb = 0.0;
    for (auto n : s.legal_size) lb -= std::log(n);
    CHECK(e.log_base == doctest::Approx(lb));
  }
  SupportTrace s;
  s.in_support = {1, 0, 1};
  s.support_size = {2, 1, 13};
  s.legal_size = {13, 12, 13};
  const auto e = epsilon_stats(s);
  CHECK(e.n_allowed == 1.0);
  CHECK(e.n_disallowed == 1.0);
  CHECK(e.log_base == doctest::Approx(-std::log(2.0) - std::log(11.0) - std::log(13.0)));
  CHECK(epsilon_log_likelihood(e, 0.2) == doctest::Approx(e.log_base + std::log(0.8) + std::log(0.2)));
}

TEST_CASE("Beta marginal: closed form, quadrature and lgamma agree") {
  for (double d : {0.0, 1.0, 5.0, 20.0, 100.0})
    for (double a : {0.0, 1.0, 7.0, 50.0, 400.0})
      for (auto [al, be] : {std::pair{1.0, 1.0}, {2.0, 2.0}, {0.5, 3.0}}) {
        const double want = log_beta(d + al, a + be) - log_beta(al, be);
        CHECK(log_beta_marginal(d, a, al, be) == doctest::Approx(want).epsilon(1e-12));
        if (al >= 1.0 && be >= 1.0)
          CHECK(log_beta_marginal_quadrature(d, a, al, be) == doctest::Approx(want).epsilon(1e-8));
      }
  CHECK(log_beta_marginal(0, 0) == doctest::Approx(0.0));
  CHECK(log_beta_marginal(1, 0) == doctest::Approx(std::log(0.5)));
}

TEST_CASE("printed log marginals are half the negated BIC") {
  // (k, log marginal, BIC) rows of the published model-score table
  const int rows[][3] = {{1, -55801, 111603}, {2, -43710, 87420},  {3, -46094, 92188},  {4, -44479, 88957},
                         {5, -43206, 86411},  {6, -43810, 87620},  {9, -42601, 85202},  {10, -41957, 83913},
                         {12, -42907, 85813}, {13, -43419, 86838}, {15, -42755, 85509}, {16, -43453, 86906},
                         {17, -42861, 85722}};
  for (const auto& r : rows) CHECK(std::fabs(r[1] + r[2] / 2.0) <= 1.0);
}

TEST_CASE("model scores") {
  // identical clusters: the likelihood does not change with k, only the penalty does
  std::vector<std::vector<EpsilonStats>> one;
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    EpsilonStats e;
    e.n_allowed = static_cast<double>(rng.below(10));
    e.n_disallowed = static_cast<double>(rng.below(3));
    e.log_base = -static_cast<double>(e.n_allowed + e.n_disallowed) * 1.5;
    one.push_back({e});
  }
  double prev_bic = -HUGE_VAL, prev_aic = -HUGE_VAL, ll1 = 0.0;
  for (std::size_t k = 1; k <= 5; ++k) {
    std::vector<std::vector<EpsilonStats>> stats;
    for (const auto& row : one) stats.emplace_back(k, row[0]);
    const auto m = score_model(stats, true, 400);
    if (k == 1) ll1 = m.log_likelihood;
    CHECK(m.log_likelihood == doctest::Approx(ll1));
    CHECK(m.bic > prev_bic);
    CHECK(m.aic > prev_aic);
    CHECK(m.log_marginal == -m.bic / 2.0);
    CHECK(m.bic == doctest::Approx(-2.0 * m.log_likelihood + static_cast<double>(k) * std::log(400.0)));
    CHECK(m.aic == doctest::Approx(-2.0 * m.log_likelihood + 2.0 * static_cast<double>(k)));
    prev_bic = m.bic;
    prev_aic = m.aic;
  }

  // the fitted epsilon of one cluster is the disallowed fraction
  double dis = 0.0, tot = 0.0;
  for (const auto& row : one) {
    dis += row[0].n_disallowed;
    tot += row[0].n_disallowed + row[0].n_allowed;
  }
  const auto m1 = score_model(one, true, 400);
  CHECK(m1.epsilons[0] == doctest::Approx(dis / tot));
  CHECK(m1.beta_log_marginal == doctest::Approx([&] {
          double lb = 0.0;
          for (const auto& row : one) lb += row[0].log_base;
          return lb + log_beta(dis + 1.0, tot - dis + 1.0);
        }()));

  std::vector<ModelScore> scores(3);
  for (std::size_t i = 0; i < 3; ++i) {
    scores[i].k = i + 1;
    scores[i].admissible = i != 1;
    scores[i].bic = 10.0 - static_cast<double>(i) * (i == 1 ? 10.0 : 1.0);
    scores[i].aic = static_cast<double>(i);
    scores[i].beta_log_marginal = static_cast<double>(i);
  }
  CHECK(select_model(scores, Criterion::bic).k == 3);
  CHECK(select_model(scores, Criterion::aic).k == 1);
  CHECK(select_model(scores, Criterion::marginal).k == 3);
  for (auto& s : scores) s.admissible = false;
  CHECK_THROWS_AS(select_model(scores, Criterion::bic), NoAdmissibleModel);
  CHECK(criterion_from_string("aic") == Criterion::aic);
  CHECK(!criterion_from_string("xyz"));
}

TEST_CASE("adjusted Rand index") {
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0));
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {5, 5, 2, 2}) == doctest::Approx(1.0));
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5));
  CHECK(adjusted_rand_index({0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 2, 2}) == doctest::Approx(0.2424242424));
}
