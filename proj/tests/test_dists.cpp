#include <cmath>
#include <functional>
#include <numbers>

#include "doctest.h"
#include "ppl/dists.hpp"
#include "ppl/errors.hpp"
#include "support/gradient_suite.hpp"

using namespace ppl;

namespace {

// Composite Simpson on [a, b] with n (even) panels.
double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

double normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2 * std::numbers::pi));
}

}  // namespace

TEST_CASE("documented log densities") {
  Tape t;
  CHECK(Normal(t.scalar(0), t.scalar(1)).log_prob(Tensor::scalar(0)).item() ==
        doctest::Approx(-0.91893853).epsilon(1e-8));
  const Categorical cat(t.constant(Tensor::zeros({5})));
  for (int k = 0; k < 5; ++k)
    CHECK(cat.log_prob(Tensor::scalar(k)).item() == doctest::Approx(-std::log(5.0)));
  CHECK(Beta(t.scalar(1), t.scalar(1)).log_prob(Tensor::scalar(0.73)).item() ==
        doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("shapes") {
  Tape t;
  const Normal n(t.constant(Tensor::zeros({3, 2})), t.scalar(1.0));
  CHECK(n.batch_shape() == Shape{3, 2});
  CHECK(n.log_prob(Tensor::zeros({3, 2})).shape() == Shape{3, 2});
  const Categorical c(t.constant(Tensor::zeros({4, 3})));
  CHECK(c.batch_shape() == Shape{4});
  CHECK(c.log_prob(Tensor::zeros({4})).shape() == Shape{4});
  const Dirichlet d(t.constant(Tensor::ones({2, 3})));
  CHECK(d.sample_shape() == Shape{2, 3});
  Rng rng(1);
  CHECK(d.sample(rng).shape() == Shape{2, 3});
  CHECK(d.log_prob(d.sample(rng)).shape() == Shape{2});
}

TEST_CASE("support and parameter errors") {
  Tape t;
  CHECK_THROWS_AS(Bernoulli(t.scalar(0)).log_prob(Tensor::scalar(0.5)), SupportError);
  CHECK_THROWS_AS(Beta(t.scalar(2), t.scalar(2)).log_prob(Tensor::scalar(1.0)), SupportError);
  CHECK_THROWS_AS(Categorical(t.constant(Tensor::zeros({5}))).log_prob(Tensor::scalar(5)),
                  SupportError);
  Rng rng(0);
  // Construction succeeds; the bad parameter surfaces when evaluated.
  const Normal bad(t.scalar(0), t.scalar(-1));
  CHECK_THROWS_AS(bad.sample(rng), InvalidParameter);
  CHECK_THROWS_AS(bad.log_prob(Tensor::scalar(0)), InvalidParameter);
  CHECK_THROWS_AS(Dirichlet(t.constant(Tensor::vector({1, 0}))).sample(rng), InvalidParameter);
  CHECK_THROWS_AS(Bernoulli(t.scalar(0)).rsample(rng), NotReparameterizable);
  CHECK_THROWS_AS(Beta(t.scalar(1), t.scalar(1)).rsample(rng), NotReparameterizable);
}

TEST_CASE("sampling moments") {
  Tape t;
  Rng rng(2024);
  SUBCASE("standard Normal") {
    const Normal n(t.scalar(0), t.scalar(1));
    const int m = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < m; ++i) {
      const double x = n.sample(rng).item();
      s += x;
      s2 += x * x;
    }
    const double mean = s / m;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(s2 / m - mean * mean - 1.0) < 0.05);
  }
  SUBCASE("two-class Categorical") {
    const Categorical c(t.constant(Tensor::zeros({2})));
    int zeros = 0;
    for (int i = 0; i < 10000; ++i) zeros += c.sample(rng).item() == 0.0;
    CHECK(zeros >= 4700);
    CHECK(zeros <= 5300);
  }
  SUBCASE("Beta means") {
    for (auto [a, b] : {std::pair{1.0, 1.0}, {2.0, 5.0}, {0.5, 0.5}}) {
      const Beta d(t.scalar(a), t.scalar(b));
      const int m = 50000;
      double s = 0;
      for (int i = 0; i < m; ++i) s += d.sample(rng).item();
      const double mu = a / (a + b);
      const double var = a * b / ((a + b) * (a + b) * (a + b + 1));
      CHECK(std::abs(s / m - mu) <= 3 * std::sqrt(var / m));
    }
  }
  SUBCASE("Dirichlet draws lie on the simplex") {
    const Dirichlet d(t.constant(Tensor::vector({0.3, 1.0, 4.0})));
    for (int i = 0; i < 1000; ++i) {
      const Tensor x = d.sample(rng);
      CHECK(std::abs(x[0] + x[1] + x[2] - 1.0) <= 1e-12);
      CHECK(x[0] >= 0.0);
    }
  }
  SUBCASE("PointMass returns its point exactly") {
    const Tensor c = Tensor::vector({1.5, -2.25});
    const PointMass pm(t.constant(c));
    CHECK(identical(pm.sample(rng), c));
    CHECK(identical(pm.log_prob(c).tensor(), Tensor::zeros({2})));
  }
}

TEST_CASE("sampling is deterministic given the generator state") {
  Tape t;
  const Beta d(t.scalar(0.7), t.scalar(2.0));
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(d.sample(a).item() == d.sample(b).item());
}

TEST_CASE("discrete distributions are normalized") {
  Tape t;
  for (double l : {-3.0, 0.0, 0.4, 7.0}) {
    const Bernoulli b(t.scalar(l));
    const double total = std::exp(b.log_prob(Tensor::scalar(0)).item()) +
                         std::exp(b.log_prob(Tensor::scalar(1)).item());
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
  Rng rng(3);
  for (std::size_t k = 2; k <= 16; ++k) {
    Tensor logits({k});
    for (std::size_t i = 0; i < k; ++i) logits[i] = 3 * rng.normal();
    const Categorical c(t.constant(logits));
    double total = 0;
    for (std::size_t i = 0; i < k; ++i) total += std::exp(c.log_prob(Tensor::scalar(i)).item());
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("continuous densities integrate to one") {
  Tape t;
  for (auto [mu, sigma] : {std::pair{0.0, 1.0}, {2.0, 0.3}, {-1.0, 4.0}}) {
    const Normal n(t.scalar(mu), t.scalar(sigma));
    const double z = simpson(
        [&](double x) {
          Tape local;
          return std::exp(Normal(local.scalar(mu), local.scalar(sigma))
                              .log_prob(Tensor::scalar(x))
                              .item());
        },
        mu - 10 * sigma, mu + 10 * sigma, 4000);
    CHECK(std::abs(z - 1.0) <= 1e-6);
  }
  // x = sin^2(u) turns the integrand into 2 sin^(2a-1) cos^(2b-1) / B(a, b),
  // which is smooth for integer and half-integer a, b; midpoint rule avoids
  // evaluating the density at the excluded endpoints.
  for (auto [a, b] : {std::pair{1.0, 1.0}, {2.0, 5.0}, {0.5, 0.5}, {3.0, 0.5}}) {
    const int n = 4000;
    const double h = (std::numbers::pi / 2) / n;
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = (i + 0.5) * h;
      const double s = std::sin(u), c = std::cos(u);
      Tape local;
      z += std::exp(Beta(local.scalar(a), local.scalar(b)).log_prob(Tensor::scalar(s * s)).item()) *
           2 * s * c * h;
    }
    INFO("a=" << a << " b=" << b);
    CHECK(std::abs(z - 1.0) <= 1e-6);
  }
}

TEST_CASE("reparameterized samples differentiate pathwise") {
  Parameter mu("mu", Tensor::scalar(0.3));
  Parameter sigma("sigma", Tensor::scalar(1.7));
  {
    Tape t;
    Rng rng(8);
    const Value z = Normal(t.param(mu), t.scalar(1.0)).rsample(rng);
    CHECK(t.backward(z).at(mu).item() == 1.0);
  }
  {
    Tape t;
    Rng rng(8);
    const double eps = Rng(8).normal();
    const Value z = Normal(t.scalar(0.0), t.param(sigma)).rsample(rng);
    const double g = t.backward(z * z).at(sigma).item();
    CHECK(g == doctest::Approx(2 * 1.7 * eps * eps).epsilon(1e-12));
  }
}

TEST_CASE("pathwise and score-function gradients agree") {
  // d/dmu E[z^2], z ~ N(mu, 1): pathwise 2z, score z^2 (z - mu).
  const double mu = 0.7;
  Rng rng(99);
  const int m = 100000;
  double a = 0, a2 = 0, b = 0, b2 = 0;
  for (int i = 0; i < m; ++i) {
    const double z = mu + rng.normal();
    const double g1 = 2 * z;
    const double g2 = z * z * (z - mu);
    a += g1;
    a2 += g1 * g1;
    b += g2;
    b2 += g2 * g2;
  }
  const double ma = a / m, mb = b / m;
  const double se = std::sqrt((a2 / m - ma * ma) / m + (b2 / m - mb * mb) / m);
  CHECK(std::abs(ma - mb) <= 3 * se);
  CHECK(std::abs(ma - 2 * mu) <= 3 * std::sqrt((a2 / m - ma * ma) / m));
}

TEST_CASE("analytic KL against quadrature") {
  Tape t;
  auto kl = [&](double mq, double sq, double mp, double sp) {
    return kl_normal_normal(Normal(t.scalar(mq), t.scalar(sq)), Normal(t.scalar(mp), t.scalar(sp)))
        .item();
  };
  auto quad = [&](double mq, double sq, double mp, double sp) {
    return simpson(
        [&](double x) {
          const double q = normal_pdf(x, mq, sq);
          return q > 0 ? q * std::log(q / normal_pdf(x, mp, sp)) : 0.0;
        },
        mq - 12 * sq, mq + 12 * sq);
  };
  CHECK(kl(0, 1, 0, 1) == 0.0);
  CHECK(kl(1, 1, 0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(kl(0, 2, 0, 1) == doctest::Approx(1.5 - std::log(2.0)).epsilon(1e-14));
  CHECK(kl(0, 2, 0, 1) == doctest::Approx(quad(0, 2, 0, 1)).epsilon(1e-8));
  CHECK(kl(0.3, 0.4, -1.0, 2.5) == doctest::Approx(quad(0.3, 0.4, -1.0, 2.5)).epsilon(1e-8));

  CHECK_THROWS_AS(kl_normal_normal(Normal(t.constant(Tensor::zeros({3})), t.scalar(1)),
                                   Normal(t.constant(Tensor::zeros({4})), t.scalar(1))),
                  ShapeError);
  CHECK_THROWS_AS(kl_normal_normal(Beta(t.scalar(1), t.scalar(1)), Normal(t.scalar(0), t.scalar(1))),
                  ConfigError);
}

TEST_CASE("analytic entropy") {
  Tape t;
  CHECK(entropy(Normal(t.scalar(0), t.scalar(1))).item() ==
        doctest::Approx(0.5 * std::log(2 * std::numbers::pi * std::numbers::e)).epsilon(1e-14));
  CHECK(entropy(Categorical(t.constant(Tensor::zeros({4})))).item() ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK_THROWS_AS(entropy(Beta(t.scalar(1), t.scalar(1))), ConfigError);

  const double sigma = 2.3;
  const Normal n(t.scalar(0), t.scalar(sigma));
  Rng rng(4);
  const int m = 100000;
  double s = 0, s2 = 0;
  for (int i = 0; i < m; ++i) {
    const double x = sigma * rng.normal();
    const double v = -(-0.5 * (x / sigma) * (x / sigma) - std::log(sigma) - 0.91893853320467274);
    s += v;
    s2 += v * v;
  }
  const double mc = s / m;
  CHECK(std::abs(entropy(n).item() - mc) <= 3 * std::sqrt((s2 / m - mc * mc) / m));
}

TEST_CASE("Empirical store") {
  Tape t;
  const Tensor store = Tensor::matrix({{1, 10}, {2, 20}, {3, 30}, {0, 0}});
  const Empirical e(t.constant(store), 3);
  CHECK(e.batch_shape() == Shape{2});
  Rng rng(1);
  for (int i = 0; i < 50; ++i) CHECK(e.sample(rng)[0] != 0.0);
  CHECK_THROWS_AS(e.log_prob(Tensor::vector({1, 10})), ConfigError);
  CHECK_THROWS_AS(e.rsample(rng), NotReparameterizable);
  CHECK_THROWS_AS(Empirical(t.constant(store), 5), IndexError);
}

TEST_CASE("log_prob gradients pass the finite-difference check at 10 random points") {
  for (const auto& r : testing::distribution_gradient_suite(10, 77)) {
    INFO(r.name << " max rel err " << r.max_rel_error);
    CHECK(r.max_rel_error <= 1e-5);
  }
}
