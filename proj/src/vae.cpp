#include "ppl/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ppl/errors.hpp"

namespace ppl {
namespace {

Tensor glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  Tensor w({fan_in, fan_out});
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.mutable_data()) v = sd * rng.normal();
  return w;
}

// Per-row sum of an [n, ...] tensor.
std::vector<double> row_sums(const Tensor& t) {
  const std::size_t n = t.dim(0);
  const std::size_t w = t.size() / n;
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i] += t[i * w + j];
  return out;
}

}  // namespace

VAEToy::VAEToy(const VAEToySpec& spec, std::uint64_t seed) : spec_(spec) {
  if (spec.latent_dim == 0) throw ConfigError("vae-toy needs latent dimension d >= 1");
  if (spec.batch == 0 || spec.side == 0 || spec.hidden == 0)
    throw ConfigError("vae-toy needs batch, side and hidden >= 1");
  Rng rng(seed);
  const std::size_t d = spec.latent_dim, h = spec.hidden, p = pixels();

  store_.create("decoder/w1", glorot(rng, d, h));
  store_.create("decoder/b1", Tensor::zeros({h}));
  store_.create("decoder/w2", glorot(rng, h, p));
  store_.create("decoder/b2", Tensor::zeros({p}));
  decoder_ = {"decoder/w1", "decoder/b1", "decoder/w2", "decoder/b2"};

  Parameter* v1 = &store_.create("encoder/w1", glorot(rng, p, h));
  Parameter* c1 = &store_.create("encoder/b1", Tensor::zeros({h}));
  Parameter* vm = &store_.create("encoder/w_mu", glorot(rng, h, d));
  Parameter* cm = &store_.create("encoder/b_mu", Tensor::zeros({d}));
  Parameter* vs = &store_.create("encoder/w_sigma", glorot(rng, h, d));
  Parameter* cs = &store_.create("encoder/b_sigma", Tensor::zeros({d}));
  encoder_ = {v1, c1, vm, cm, vs, cs};

  qz_ = std::make_shared<FunctionalApproximation>(
      "qz", encoder_, [=](Tape& tape, const Feeds& feeds) -> DistPtr {
        const auto it = feeds.find("x");
        if (it == feeds.end()) throw ShapeError("feed slot 'x' was not fed");
        const Value x = tape.constant(it->second);
        const Value hid = tanh(matmul(x, tape.param(*v1)) + tape.param(*c1));
        const Value mu = matmul(hid, tape.param(*vm)) + tape.param(*cm);
        const Value sigma = softplus(matmul(hid, tape.param(*vs)) + tape.param(*cs));
        return dist::normal(mu, sigma);
      });
}

Value VAEToy::decoder_logits(Tape& tape, Value z) const {
  Parameter& w1 = const_cast<ParameterStore&>(store_).get("decoder/w1");
  Parameter& b1 = const_cast<ParameterStore&>(store_).get("decoder/b1");
  Parameter& w2 = const_cast<ParameterStore&>(store_).get("decoder/w2");
  Parameter& b2 = const_cast<ParameterStore&>(store_).get("decoder/b2");
  const Value hid = tanh(matmul(z, tape.param(w1)) + tape.param(b1));
  return matmul(hid, tape.param(w2)) + tape.param(b2);
}

ModelFn VAEToy::model(std::size_t n) const {
  if (n == 0) throw ConfigError("vae-toy model needs n >= 1");
  const std::size_t d = spec_.latent_dim;
  return [this, n, d](Trace& t) {
    Tape& tape = t.tape();
    const Value z = t.sample("z", dist::normal(tape.constant(Tensor::zeros({n, d})), 1.0));
    const Value w1 = t.param("decoder/w1");
    const Value b1 = t.param("decoder/b1");
    const Value w2 = t.param("decoder/w2");
    const Value b2 = t.param("decoder/b2");
    const Value hid = tanh(matmul(z, w1) + b1);
    t.sample("x", dist::bernoulli_logits(matmul(hid, w2) + b2));
  };
}

Tensor VAEToy::reconstruct(const Tensor& x) {
  check_binary_images(x, pixels());
  Tape tape;
  const DistPtr q = qz_->build(tape, {{"x", x}});
  const auto* normal = static_cast<const Normal*>(q.get());
  return sigmoid(decoder_logits(tape, normal->mu())).tensor();
}

Tensor VAEToy::decode(const Tensor& z) {
  if (z.rank() != 2 || z.dim(1) != spec_.latent_dim)
    throw ShapeError("latent codes must be [n, " + std::to_string(spec_.latent_dim) + "]");
  Tape tape;
  return sigmoid(decoder_logits(tape, tape.constant(z))).tensor();
}

void check_binary_images(const Tensor& x, std::size_t pixels) {
  if (x.rank() != 2 || x.dim(1) != pixels)
    throw ConfigError("vae-toy data must have " + std::to_string(pixels) + " columns");
  for (double v : x.data())
    if (v != 0.0 && v != 1.0) throw ConfigError("vae-toy data must be binary (0/1)");
}

InferenceProblem vae_problem(VAEToy& vae, std::size_t rows) {
  InferenceProblem p;
  p.model = vae.model(rows);
  p.latent["z"] = vae.approximation();
  p.data["x"] = FeedSlot{"x", {rows, vae.pixels()}};
  p.params = &vae.store();
  p.model_params = vae.decoder_params();
  return p;
}

double vae_heldout_bound(VAEToy& vae, const Tensor& data, std::size_t samples, std::uint64_t seed,
                         std::size_t iwae_k) {
  check_binary_images(data, vae.pixels());
  if (samples == 0 || iwae_k == 0) throw ConfigError("held-out bound needs samples, K >= 1");
  const std::size_t n = data.dim(0);
  Rng rng(seed);
  const ModelFn model = vae.model(n);
  const Feeds feeds{{"x", data}};
  double total = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    std::vector<std::vector<double>> w(iwae_k);
    for (std::size_t k = 0; k < iwae_k; ++k) {
      Tape tape;
      const DistPtr q = vae.approximation()->build(tape, feeds);
      const Value z = q->rsample(rng);
      const Trace tr = trace(model, tape, rng, {{"x", data}, {"z", z}}, feeds, &vae.store());
      std::vector<double> row(n, 0.0);
      for (const auto& rv : tr.variables()) {
        const auto r = row_sums(rv.dist->log_prob(rv.value).tensor());
        for (std::size_t i = 0; i < n; ++i) row[i] += r[i];
      }
      const auto lq = row_sums(q->log_prob(z).tensor());
      for (std::size_t i = 0; i < n; ++i) row[i] -= lq[i];
      w[k] = std::move(row);
    }
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -INFINITY;
      for (std::size_t k = 0; k < iwae_k; ++k) mx = std::max(mx, w[k][i]);
      double acc = 0.0;
      for (std::size_t k = 0; k < iwae_k; ++k) acc += std::exp(w[k][i] - mx);
      total += mx + std::log(acc) - std::log(static_cast<double>(iwae_k));
    }
  }
  return total / static_cast<double>(samples * n);
}

VAEFitResult vae_fit(VAEToy& vae, const Tensor& train, const Tensor& heldout,
                     const VAEFitOptions& options, std::uint64_t seed) {
  check_binary_images(train, vae.pixels());
  check_binary_images(heldout, vae.pixels());
  const std::size_t m = vae.spec().batch;
  const std::size_t n = train.dim(0);
  if (n < m) throw ConfigError("vae-toy training set is smaller than one minibatch");
  if (options.epochs == 0) throw ConfigError("vae-toy needs epochs >= 1");

  std::unique_ptr<VariationalInference> inf;
  if (options.iwae_k > 0)
    inf = std::make_unique<IWAE>(vae_problem(vae, m), IWAEConfig{options.iwae_k}, options.optimizer,
                                 seed);
  else {
    KLqpConfig cfg;
    cfg.estimator = options.estimator;
    inf = std::make_unique<KLqp>(vae_problem(vae, m), cfg, options.optimizer, seed);
  }
  inf->initialize();

  VAEFitResult result;
  const std::uint64_t eval_seed = mix_seed(seed, 1);
  result.initial_bound = vae_heldout_bound(vae, heldout, options.eval_samples, eval_seed);

  Rng shuffle(mix_seed(seed, 2));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t p = vae.pixels();
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle.uniform_index(i + 1)]);
    for (std::size_t start = 0; start + m <= n; start += m) {
      Tensor batch({m, p});
      for (std::size_t r = 0; r < m; ++r)
        std::copy(train.ptr() + order[start + r] * p, train.ptr() + (order[start + r] + 1) * p,
                  batch.mutable_ptr() + r * p);
      result.steps.push_back(inf->update({{"x", batch}}));
    }
    result.epoch_bounds.push_back(vae_heldout_bound(vae, heldout, options.eval_samples, eval_seed));
  }
  result.final_bound = result.epoch_bounds.back();
  return result;
}

}  // namespace ppl
