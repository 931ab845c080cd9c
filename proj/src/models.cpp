#include "ppl/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ppl/errors.hpp"

namespace ppl::models {

ModelFn beta_bernoulli(std::size_t n) {
  if (n == 0) throw ConfigError("beta-bernoulli needs n >= 1");
  return [n](Trace& t) {
    Tape& tape = t.tape();
    const Value theta = t.sample("theta", dist::beta(tape.scalar(1.0), tape.scalar(1.0)));
    t.sample("x", dist::bernoulli_probs(broadcast_to(theta, {n})));
  };
}

ModelFn normal_normal(std::size_t n, double prior_sd, double lik_sd) {
  if (n == 0) throw ConfigError("normal-normal needs n >= 1");
  return [=](Trace& t) {
    Tape& tape = t.tape();
    const Value z = t.sample("z", dist::normal(tape.scalar(0.0), prior_sd));
    t.sample("x", dist::normal(broadcast_to(z, {n}), lik_sd));
  };
}

ModelFn gmm(const GMMSpec& spec) {
  if (spec.n == 0 || spec.k == 0 || spec.d == 0) throw ConfigError("gmm needs n, k, d >= 1");
  return [spec](Trace& t) {
    Tape& tape = t.tape();
    const Value beta =
        t.sample("beta", dist::normal(tape.constant(Tensor::zeros({spec.k, spec.d})), spec.prior_sd));
    const Value z = t.sample("z", dist::categorical(tape.constant(Tensor::zeros({spec.n, spec.k}))));
    const Value loc = gather(beta, z.tensor());
    if (spec.sigma_param.empty()) {
      t.sample("x", dist::normal(loc, spec.sigma_x));
    } else {
      t.sample("x", dist::normal(loc, softplus(t.param(spec.sigma_param))));
    }
  };
}

ModelFn logreg(std::size_t n, std::size_t d) {
  if (n == 0 || d == 0) throw ConfigError("logreg needs n, d >= 1");
  return [n, d](Trace& t) {
    Tape& tape = t.tape();
    const Value beta = t.sample("beta", dist::normal(tape.constant(Tensor::zeros({d})), 1.0));
    const Value x = t.input("X");
    if (x.shape() != Shape{n, d})
      throw ShapeError("logreg input X must be " + to_string({n, d}) + ", got " +
                       to_string(x.shape()));
    t.sample("y", dist::bernoulli_logits(matmul(x, beta)));
  };
}

GANProblem gan_1d(ParameterStore& store, const Tensor& real, std::size_t batch, std::size_t hidden,
                  std::uint64_t seed) {
  if (real.rank() != 2 || real.dim(1) != 1) throw ShapeError("gan-1d data must be [N, 1]");
  if (hidden == 0) throw ConfigError("gan-1d needs hidden >= 1");
  Rng rng(seed);
  Parameter* mu = &store.create("generator/mu", Tensor::zeros({1}));
  Parameter* sigma = &store.create("generator/sigma", Tensor::full({1}, std::log(std::expm1(1.0))));
  Tensor w1({1, hidden}), w2({hidden, 1});
  for (auto& v : w1.mutable_data()) v = rng.normal();
  for (auto& v : w2.mutable_data()) v = rng.normal() / std::sqrt(static_cast<double>(hidden));
  Parameter* dw1 = &store.create("discriminator/w1", w1);
  Parameter* db1 = &store.create("discriminator/b1", Tensor::zeros({hidden}));
  Parameter* dw2 = &store.create("discriminator/w2", w2);
  Parameter* db2 = &store.create("discriminator/b2", Tensor::zeros({1}));

  GANProblem g;
  g.generator = [mu, sigma](Trace& t, std::size_t b) {
    Tape& tape = t.tape();
    const Value eps = t.sample("eps", dist::normal(tape.constant(Tensor::zeros({b, 1})), 1.0));
    return tape.param(*mu) + softplus(tape.param(*sigma)) * eps;
  };
  g.discriminator = [dw1, db1, dw2, db2](Tape& tape, Value x) {
    const Value h = tanh(matmul(x, tape.param(*dw1)) + tape.param(*db1));
    return matmul(h, tape.param(*dw2)) + tape.param(*db2);
  };
  g.generator_params = {mu, sigma};
  g.discriminator_params = {dw1, db1, dw2, db2};
  g.real = real;
  g.batch = batch;
  return g;
}

Tensor kmeans_pp_init(const Tensor& x, std::size_t k, Rng& rng) {
  if (x.rank() != 2 || x.dim(0) < k || k == 0)
    throw ConfigError("k-means++ needs an [N, D] matrix with N >= k >= 1");
  const std::size_t n = x.dim(0), d = x.dim(1);
  Tensor centers({k, d});
  std::vector<double> nearest(n, INFINITY);
  std::size_t pick = rng.uniform_index(n);
  for (std::size_t c = 0;; ++c) {
    for (std::size_t j = 0; j < d; ++j) centers[c * d + j] = x.at(pick, j);
    if (c + 1 == k) break;
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = x.at(i, j) - centers[c * d + j];
        d2 += diff * diff;
      }
      nearest[i] = std::min(nearest[i], d2);
    }
    pick = rng.categorical(nearest);
  }
  return centers;
}

double matched_max_error(const Tensor& estimate, const Tensor& truth) {
  if (truth.rank() != 2 || estimate.shape() != truth.shape())
    throw ShapeError("matched error needs two [K, D] matrices of equal shape");
  const std::size_t k = truth.dim(0), d = truth.dim(1);
  if (k > 8) throw ConfigError("matched error enumerates permutations; K must be <= 8");
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double worst = 0.0;
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t j = 0; j < d; ++j)
        worst = std::max(worst, std::fabs(estimate.at(perm[c], j) - truth.at(c, j)));
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace ppl::models
