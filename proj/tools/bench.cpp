#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>

#include "cli.hpp"
#include "ppl/datasets.hpp"
#include "ppl/errors.hpp"
#include "ppl/mc.hpp"
#include "ppl/models.hpp"

namespace ppl::cli {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

// The logistic-regression log joint and its gradient, built by hand on a tape
// in the same op order the model function produces.
class HandwrittenTarget {
 public:
  HandwrittenTarget(Tensor x, Tensor y) : x_(std::move(x)), y_(std::move(y)), d_(x_.dim(1)) {}

  double operator()(const std::vector<double>& q, std::vector<double>& grad) const {
    Tape tape;
    const Value beta = tape.leaf(Tensor({d_}, q));
    const DistPtr prior = dist::normal(tape.constant(Tensor::zeros({d_})), 1.0);
    const Value logits = matmul(tape.constant(x_), beta);
    const DistPtr lik = dist::bernoulli_logits(logits);
    const Value y = tape.constant(y_);
    const Value lp = sum(prior->log_prob(beta)) + sum(lik->log_prob(y));
    const double v = lp.item();
    grad.assign(d_, 0.0);
    if (!std::isfinite(v)) {
      grad.assign(d_, std::nan(""));
      return v;
    }
    tape.backward(lp);
    const Tensor g = tape.grad(beta);
    std::copy(g.data().begin(), g.data().end(), grad.begin());
    return v;
  }

 private:
  Tensor x_;
  Tensor y_;
  std::size_t d_;
};

std::vector<double> handwritten_chain(const HandwrittenTarget& f, std::size_t d, std::size_t n_iter,
                                      double eps, std::size_t n_steps, std::uint64_t seed,
                                      std::size_t& accepted) {
  Rng rng(seed);
  std::vector<double> q(d, 0.0), p(d), g(d), chain;
  chain.reserve(n_iter * d);
  accepted = 0;
  const double half = 0.5 * eps;
  for (std::size_t it = 0; it < n_iter; ++it) {
    for (std::size_t i = 0; i < d; ++i) p[i] = rng.normal();
    std::vector<double> qn = q;
    double lp = f(qn, g);
    double k0 = 0.0;
    for (double v : p) k0 += v * v;
    const double h0 = -lp + 0.5 * k0;
    bool ok = std::isfinite(h0);
    for (double v : g) ok = ok && std::isfinite(v);
    if (ok)
      for (std::size_t l = 0; l < n_steps; ++l) {
        for (std::size_t i = 0; i < d; ++i) p[i] += half * g[i];
        for (std::size_t i = 0; i < d; ++i) qn[i] += eps * p[i];
        lp = f(qn, g);
        for (std::size_t i = 0; i < d; ++i) p[i] += half * g[i];
      }
    double k1 = 0.0;
    for (double v : p) k1 += v * v;
    const double h1 = -lp + 0.5 * k1;
    const double u = rng.uniform();
    if (ok && std::isfinite(h1) && u < std::exp(h0 - h1)) {
      q = qn;
      ++accepted;
    }
    chain.insert(chain.end(), q.begin(), q.end());
  }
  return chain;
}

}  // namespace

BenchResult bench_overhead(const BenchOptions& o) {
  if (o.n == 0 || o.d == 0 || o.n_iter == 0 || o.n_steps == 0 || o.reps == 0)
    throw ConfigError("bench-overhead needs n, d, n_iter, n_steps, reps >= 1");
  const double eps = o.step_size.value_or(0.5 / static_cast<double>(o.n));
  const data::Dataset ds = data::logreg(o.n, o.d, mix_seed(o.seed, 1));
  const std::uint64_t chain_seed = mix_seed(o.seed, 3);
  const HandwrittenTarget target(ds.features, ds.labels);

  BenchResult r;
  r.iterations = o.n_iter;
  r.identical = true;
  r.library_seconds = r.handwritten_seconds = INFINITY;
  for (std::size_t rep = 0; rep < o.reps; ++rep) {
    auto t0 = Clock::now();
    ParameterStore store;
    auto q = std::make_shared<EmpiricalApproximation>(store, "qbeta", o.n_iter, Shape{o.d});
    InferenceProblem p;
    p.model = models::logreg(o.n, o.d);
    p.latent["beta"] = q;
    p.inputs["X"] = ds.features;
    p.data["y"] = ds.labels;
    HMC hmc(std::move(p), HMCConfig{eps, o.n_steps}, chain_seed);
    hmc.run(o.n_iter);
    r.library_seconds = std::min(r.library_seconds, seconds_since(t0));

    t0 = Clock::now();
    std::size_t accepted = 0;
    const std::vector<double> hand = handwritten_chain(target, o.d, o.n_iter, eps, o.n_steps, chain_seed, accepted);
    r.handwritten_seconds = std::min(r.handwritten_seconds, seconds_since(t0));

    const auto& lib = q->samples().data();
    r.identical = r.identical && lib.size() == hand.size() && std::memcmp(lib.data(), hand.data(), lib.size() * sizeof(double)) == 0;
    r.acceptance_rate = hmc.acceptance_rate();
  }
  r.ratio = r.library_seconds / r.handwritten_seconds;
  return r;
}

}  // namespace ppl::cli
