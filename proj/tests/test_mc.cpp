#include <cmath>

#include "doctest.h"
#include "ppl/datasets.hpp"
#include "ppl/errors.hpp"
#include "ppl/mc.hpp"
#include "ppl/models.hpp"
#include "support/scenarios.hpp"

using namespace ppl;

namespace {

constexpr double kCoinPosteriorMean = 31.0 / 52.0;

// Standard normal log density in `d` dimensions, with gradient.
LogDensityGrad std_normal() {
  return [](const std::vector<double>& q, std::vector<double>& g) {
    double lp = 0.0;
    g.resize(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
      lp -= 0.5 * q[i] * q[i];
      g[i] = -q[i];
    }
    return lp;
  };
}

ModelFn std_normal_model(std::size_t d) {
  return [d](Trace& t) { t.sample("z", dist::normal(t.tape().constant(Tensor::zeros({d})), 1.0)); };
}

InferenceProblem std_normal_problem(ApproxPtr q, std::size_t d) {
  InferenceProblem p;
  p.model = std_normal_model(d);
  p.latent["z"] = std::move(q);
  return p;
}

double column_mean(const Tensor& samples, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += samples[i];
  return s / static_cast<double>(to - from);
}

double determinant(std::vector<double> a, std::size_t n) {
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a[r * n + c]) > std::fabs(a[piv * n + c])) piv = r;
    if (piv != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      det = -det;
    }
    det *= a[c * n + c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / a[c * n + c];
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
    }
  }
  return det;
}

}  // namespace

TEST_CASE("leapfrog contract errors") {
  LeapfrogState s{{0.0}, {1.0}, {0.0}, 0.0};
  CHECK_THROWS_AS(leapfrog(s, 0.1, 0, std_normal()), ConfigError);
  CHECK_THROWS_AS(leapfrog(s, 0.0, 5, std_normal()), ConfigError);
  CHECK_THROWS_AS(leapfrog(s, -0.1, 5, std_normal()), ConfigError);
  ParameterStore store;
  auto q = std::make_shared<EmpiricalApproximation>(store, "qz", 10, Shape{1});
  CHECK_THROWS_AS(HMC(std_normal_problem(q, 1), HMCConfig{0.1, 0}, 0).initialize(), ConfigError);
  CHECK_THROWS_AS(HMC(std_normal_problem(q, 1), HMCConfig{0.0, 5}, 0).initialize(), ConfigError);
}

TEST_CASE("leapfrog reversibility, energy error order and small-step acceptance") {
  for (std::uint64_t seed : {1u, 2u}) {
    const testing::HMCMechanics m = testing::hmc_mechanics(seed);
    CHECK(m.reversibility_error <= 1e-10);
    CHECK(m.delta_h_ratio >= 3.2);
    CHECK(m.delta_h_ratio <= 4.8);
    CHECK(m.acceptance_small_step >= 0.999);
  }
}

TEST_CASE("leapfrog preserves phase-space volume") {
  constexpr std::size_t D = 2, n = 2 * D;
  const std::vector<double> x0 = {0.3, -1.2, 0.7, 0.4};
  auto map = [&](const std::vector<double>& x) {
    LeapfrogState s;
    s.q = {x[0], x[1]};
    s.p = {x[2], x[3]};
    s.log_density = std_normal()(s.q, s.grad);
    leapfrog(s, 0.3, 7, std_normal());
    return std::vector<double>{s.q[0], s.q[1], s.p[0], s.p[1]};
  };
  std::vector<double> jac(n * n);
  const double h = 1e-5;
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> up = x0, dn = x0;
    up[c] += h;
    dn[c] -= h;
    const auto fu = map(up), fd = map(dn);
    for (std::size_t r = 0; r < n; ++r) jac[r * n + c] = (fu[r] - fd[r]) / (2 * h);
  }
  CHECK(std::fabs(determinant(jac, n) - 1.0) <= 1e-8);
}

TEST_CASE("HMC on a standard normal target") {
  ParameterStore store;
  auto q = std::make_shared<EmpiricalApproximation>(store, "qz", 5500, Shape{});
  InferenceProblem p;
  p.model = [](Trace& t) { t.sample("z", dist::normal(t.tape().constant(Tensor::scalar(0.0)), 1.0)); };
  p.latent["z"] = q;
  HMC hmc(p, HMCConfig{0.05, 10}, 3);
  hmc.run(5500);
  const Summary s = q->summarize(500.0 / 5500.0);
  CHECK(s.rows == 5000);
  CHECK(std::fabs(s.mean.item()) <= 0.05);
  CHECK(std::fabs(s.sd.item() * s.sd.item() - 1.0) <= 0.1);
}

TEST_CASE("samplers recover the Beta-Bernoulli posterior mean") {
  CHECK(std::fabs(testing::beta_bernoulli_hmc(1) - kCoinPosteriorMean) <= 0.02);
  CHECK(std::fabs(testing::beta_bernoulli_mh(1) - kCoinPosteriorMean) <= 0.02);
}

TEST_CASE("samplers recover the Normal-Normal posterior mean") {
  // 100 observations: posterior N(sum(x) / 101, 1 / sqrt(101)).
  const data::Dataset ds = data::gaussian_1d(100, 5, 0.8, 1.0);
  const Tensor x = ds.features.reshaped({100});
  double total = 0.0;
  for (double v : x.data()) total += v;
  const double post_mean = total / 101.0;
  auto problem = [&](ApproxPtr q) {
    InferenceProblem p;
    p.model = models::normal_normal(100);
    p.latent["z"] = std::move(q);
    p.data["x"] = x;
    return p;
  };
  SUBCASE("SGLD, constant small step") {
    ParameterStore store;
    auto q = std::make_shared<EmpiricalApproximation>(store, "qz", 20000, Shape{});
    SGLD sgld(problem(q), SGLDConfig{1e-3}, 4);
    sgld.run(20000);
    CHECK(std::fabs(q->summarize(0.1).mean.item() - post_mean) <= 0.05);
  }
  SUBCASE("HMC") {
    ParameterStore store;
    auto q = std::make_shared<EmpiricalApproximation>(store, "qz", 2000, Shape{});
    HMC hmc(problem(q), HMCConfig{0.02, 10}, 4);
    hmc.run(2000);
    CHECK(std::fabs(q->summarize(0.1).mean.item() - post_mean) <= 0.02);
  }
  SUBCASE("MH") {
    ParameterStore store;
    auto q = std::make_shared<EmpiricalApproximation>(store, "qz", 20000, Shape{});
    MetropolisHastings mh(problem(q), MHConfig{0.2}, 4);
    mh.run(20000);
    CHECK(std::fabs(q->summarize(0.1).mean.item() - post_mean) <= 0.02);
  }
}

TEST_CASE("SGLD with a zero step leaves the position unchanged") {
  ParameterStore store;
  auto q = std::make_shared<EmpiricalApproximation>(store, "qz", 5, Shape{2}, Tensor::vector({0.4, -0.9}));
  SGLD sgld(std_normal_problem(q, 2), SGLDConfig{0.0}, 1);
  sgld.run(5);
  for (std::size_t r = 0; r < 5; ++r) {
    CHECK(q->samples()[r * 2] == 0.4);
    CHECK(q->samples()[r * 2 + 1] == -0.9);
  }
}

TEST_CASE("SGLD minibatches need the N/M scale") {
  constexpr std::size_t N = 1000, D = 2, M = 10;
  const data::Dataset ds = data::logreg(N, D, 21);

  ParameterStore store;
  auto qh = std::make_shared<EmpiricalApproximation>(store, "qh", 3000, Shape{D});
  InferenceProblem full;
  full.model = models::logreg(N, D);
  full.latent["beta"] = qh;
  full.inputs["X"] = ds.features;
  full.data["y"] = ds.labels;
  HMC hmc(full, HMCConfig{0.02, 10}, 5);
  hmc.run(3000);
  const Tensor oracle = qh->summarize(0.1).mean;

  auto sgld_mean = [&](bool scaled) {
    auto q = std::make_shared<EmpiricalApproximation>(store, scaled ? "qs" : "qu", 30000, Shape{D});
    InferenceProblem p;
    p.model = models::logreg(M, D);
    p.latent["beta"] = q;
    p.inputs["X"] = FeedSlot{"X", {M, D}};
    p.data["y"] = FeedSlot{"y", {M}};
    if (scaled) p.scale["y"] = static_cast<double>(N) / M;
    SGLD sgld(p, SGLDConfig{2e-4}, 6);
    Rng batches(7);
    sgld.run(30000, [&](std::size_t) {
      Tensor x({M, D}), y({M});
      for (std::size_t r = 0; r < M; ++r) {
        const std::size_t i = batches.uniform_index(N);
        for (std::size_t j = 0; j < D; ++j) x[r * D + j] = ds.features.at(i, j);
        y[r] = ds.labels[i];
      }
      return Feeds{{"X", x}, {"y", y}};
    });
    return q->summarize(0.1).mean;
  };
  const Tensor scaled = sgld_mean(true);
  const Tensor unscaled = sgld_mean(false);
  double err_scaled = 0.0, err_unscaled = 0.0;
  for (std::size_t j = 0; j < D; ++j) {
    err_scaled = std::max(err_scaled, std::fabs(scaled[j] - oracle[j]));
    err_unscaled = std::max(err_unscaled, std::fabs(unscaled[j] - oracle[j]));
  }
  CAPTURE(err_scaled);
  CAPTURE(err_unscaled);
  CHECK(err_scaled <= 0.05);
  CHECK(err_unscaled > 0.05);
}

TEST_CASE("Empirical cursor semantics") {
  ParameterStore store;
  auto q = std::make_shared<EmpiricalApproximation>(store, "qz", 10, Shape{}, Tensor::scalar(0.0));
  MetropolisHastings mh(std_normal_problem(q, 1), MHConfig{1.0}, 2);
  CHECK_THROWS_AS(mh.run(1), ShapeError);  // event shape {} vs model's {1}

  auto q1 = std::make_shared<EmpiricalApproximation>(store, "qz1", 10, Shape{1});
  MetropolisHastings mh1(std_normal_problem(q1, 1), MHConfig{1.0}, 2);
  mh1.run(4);
  CHECK(q1->cursor() == 4);
  for (std::size_t r = 4; r < 10; ++r) CHECK(q1->samples()[r] == 0.0);
  const Summary s = q1->summarize();
  CHECK(s.rows == 4);
  CHECK(s.mean.item() == doctest::Approx(column_mean(q1->samples(), 0, 4)).epsilon(1e-12));
  mh1.run(6);
  CHECK(q1->cursor() == 10);
  CHECK_THROWS_AS(mh1.update(), StoreFull);
  CHECK(q1->cursor() == 10);
}

TEST_CASE("MH detailed balance on a two-state target") {
  ParameterStore store;
  auto q = std::make_shared<EmpiricalApproximation>(store, "qz", 100000, Shape{});
  InferenceProblem p;
  p.model = [](Trace& t) {
    t.sample("z", dist::categorical(t.tape().constant(Tensor::vector({std::log(0.3), std::log(0.7)}))));
  };
  p.latent["z"] = q;
  MetropolisHastings mh(p, MHConfig{1.0}, 8);
  mh.run(100000);
  const double freq = column_mean(q->samples(), 0, 100000);
  CHECK(std::fabs(freq - 0.7) <= 0.01);
}

TEST_CASE("HMC and SGLD reject discrete latents") {
  ParameterStore store;
  auto q = std::make_shared<EmpiricalApproximation>(store, "qz", 10, Shape{});
  InferenceProblem p;
  p.model = [](Trace& t) { t.sample("z", dist::categorical(t.tape().constant(Tensor::vector({0.0, 0.0})))); };
  p.latent["z"] = q;
  CHECK_THROWS_WITH_AS(HMC(p, HMCConfig{}, 0).initialize(), doctest::Contains("discrete"), ConfigError);
  CHECK_THROWS_WITH_AS(SGLD(p, SGLDConfig{}, 0).initialize(), doctest::Contains("discrete"), ConfigError);
}

TEST_CASE("random-walk MH") {
  SUBCASE("standard normal mean") {
    ParameterStore store;
    auto q = std::make_shared<EmpiricalApproximation>(store, "qz", 10000, Shape{1});
    MetropolisHastings mh(std_normal_problem(q, 1), MHConfig{1.0}, 12);
    mh.run(10000);
    CHECK(std::fabs(q->summarize().mean.item()) <= 0.08);
  }
  SUBCASE("vanishing proposal accepts almost always") {
    ParameterStore store;
    auto q = std::make_shared<EmpiricalApproximation>(store, "qz", 2000, Shape{1});
    MetropolisHastings mh(std_normal_problem(q, 1), MHConfig{1e-6}, 12);
    mh.run(2000);
    CHECK(mh.acceptance_rate() >= 0.999);
  }
  SUBCASE("nonpositive proposal sd") {
    ParameterStore store;
    auto q = std::make_shared<EmpiricalApproximation>(store, "qz", 10, Shape{1});
    CHECK_THROWS_AS(MetropolisHastings(std_normal_problem(q, 1), MHConfig{0.0}, 0).initialize(), ConfigError);
  }
}

TEST_CASE("merged chain summaries concatenate rows") {
  ParameterStore store;
  auto a = std::make_shared<EmpiricalApproximation>(store, "a", 200, Shape{1});
  auto b = std::make_shared<EmpiricalApproximation>(store, "b", 200, Shape{1});
  MetropolisHastings ma(std_normal_problem(a, 1), MHConfig{1.0}, 1);
  MetropolisHastings mb(std_normal_problem(b, 1), MHConfig{1.0}, 2);
  ma.run(200);
  mb.run(100);
  const Summary s = merge_summaries({a.get(), b.get()});
  CHECK(s.rows == 300);
  const double expected = (column_mean(a->samples(), 0, 200) * 200 + column_mean(b->samples(), 0, 100) * 100) / 300;
  CHECK(s.mean.item() == doctest::Approx(expected).epsilon(1e-12));
  const Summary burned = merge_summaries({a.get(), b.get()}, 0.5);
  CHECK(burned.rows == 150);
}
