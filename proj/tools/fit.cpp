#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cli.hpp"
#include "ppl/compose.hpp"
#include "ppl/datasets.hpp"
#include "ppl/errors.hpp"
#include "ppl/gan.hpp"
#include "ppl/mc.hpp"
#include "ppl/models.hpp"
#include "ppl/vae.hpp"
#include "ppl/vi.hpp"

namespace ppl::cli {
namespace {

using json = nlohmann::ordered_json;

double softplus_d(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double inv_softplus(double y) { return std::log(std::expm1(y)); }

json tensor_json(const Tensor& t) {
  if (t.rank() == 0) return t.item();
  if (t.rank() == 1) return json(t.data());
  const std::size_t rows = t.dim(0), w = t.size() / rows;
  json out = json::array();
  for (std::size_t i = 0; i < rows; ++i)
    out.push_back(std::vector<double>(t.data().begin() + i * w, t.data().begin() + (i + 1) * w));
  return out;
}

json summary_json(const Summary& s) {
  return {{"family", "empirical"}, {"rows", s.rows},          {"mean", tensor_json(s.mean)},
          {"sd", tensor_json(s.sd)}, {"q05", tensor_json(s.q05)}, {"q50", tensor_json(s.q50)},
          {"q95", tensor_json(s.q95)}};
}

Tensor map_tensor(const Tensor& t, double (*f)(double)) {
  Tensor out = t;
  for (auto& v : out.mutable_data()) v = f(v);
  return out;
}

// Posterior summary of one approximation; `mean` is filled for families with
// a usable point summary.
json approx_json(const Approximation& q, double burn_in, Tensor* mean = nullptr) {
  if (const auto* e = dynamic_cast<const EmpiricalApproximation*>(&q)) {
    const Summary s = e->summarize(burn_in);
    if (mean) *mean = s.mean;
    return summary_json(s);
  }
  if (const auto* n = dynamic_cast<const NormalApproximation*>(&q)) {
    if (mean) *mean = n->loc().value();
    return {{"family", "normal"},
            {"mean", tensor_json(n->loc().value())},
            {"sd", tensor_json(map_tensor(n->raw_scale().value(), softplus_d))}};
  }
  if (const auto* b = dynamic_cast<const BetaApproximation*>(&q)) {
    const auto ps = b->parameters();
    const Tensor a = map_tensor(ps[0]->value(), softplus_d);
    const Tensor c = map_tensor(ps[1]->value(), softplus_d);
    Tensor m = a, sd = a;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double t = a[i] + c[i];
      m[i] = a[i] / t;
      sd[i] = std::sqrt(a[i] * c[i] / (t * t * (t + 1.0)));
    }
    if (mean) *mean = m;
    return {{"family", "beta"},  {"alpha", tensor_json(a)}, {"beta", tensor_json(c)},
            {"mean", tensor_json(m)}, {"sd", tensor_json(sd)}};
  }
  if (const auto* p = dynamic_cast<const PointMassApproximation*>(&q)) {
    if (mean) *mean = p->point();
    return {{"family", "point_mass"}, {"point", tensor_json(p->point())}};
  }
  if (const auto* c = dynamic_cast<const CategoricalApproximation*>(&q)) {
    json shape = c->logits().shape();
    return {{"family", "categorical"}, {"logits_shape", shape}};
  }
  return {{"family", "amortized"}};
}

// ---- sessions ------------------------------------------------------------------------

class Session {
 public:
  virtual ~Session() = default;
  // Validates and creates all state; every compatibility error surfaces here.
  virtual void initialize() = 0;
  virtual Diagnostics step(std::size_t i) = 0;
  virtual void summarize(json& s, double burn_in) = 0;
  // Sample stores, for merging chains. Empty for non-samplers.
  virtual std::vector<std::pair<std::string, const EmpiricalApproximation*>> stores() const { return {}; }
  virtual double acceptance_rate() const { return std::nan(""); }
};

class SingleSession : public Session {
 public:
  ParameterStore store;
  std::map<std::string, ApproxPtr> approximations;  // reported latents
  std::unique_ptr<Inference> inference;
  FeedProvider feeds;
  std::function<void(json&)> extra;
  std::function<void()> on_initialize;

  void initialize() override {
    inference->initialize();
    if (on_initialize) on_initialize();
  }
  Diagnostics step(std::size_t i) override { return inference->update(feeds ? feeds(i) : Feeds{}); }
  void summarize(json& s, double burn_in) override {
    json latents = json::object();
    for (const auto& [name, q] : approximations) latents[name] = approx_json(*q, burn_in);
    s["latents"] = latents;
    if (extra) extra(s);
  }
  std::vector<std::pair<std::string, const EmpiricalApproximation*>> stores() const override {
    std::vector<std::pair<std::string, const EmpiricalApproximation*>> out;
    for (const auto& [name, q] : approximations)
      if (const auto* e = dynamic_cast<const EmpiricalApproximation*>(q.get())) out.emplace_back(name, e);
    return out;
  }
  double acceptance_rate() const override {
    if (const auto* mc = dynamic_cast<const MonteCarlo*>(inference.get())) return mc->acceptance_rate();
    return std::nan("");
  }
};

double metric_or_nan(const Diagnostics& d, const std::string& key) {
  const auto it = d.metrics.find(key);
  return it == d.metrics.end() ? std::nan("") : it->second;
}

class VEMSession : public Session {
 public:
  ParameterStore store;
  std::shared_ptr<PointMassApproximation> qbeta;
  std::unique_ptr<KLqp> estep;
  std::unique_ptr<MAP> mstep;
  std::size_t inner_e = 5;
  Tensor truth;

  void initialize() override {
    require_cross_binding(*estep, *mstep);
    require_cross_binding(*mstep, *estep);
    estep->initialize();
    mstep->initialize();
  }
  Diagnostics step(std::size_t) override {
    Diagnostics d;
    double e_loss = 0.0;
    for (std::size_t i = 0; i < inner_e; ++i) {
      const Diagnostics e = estep->update();
      e_loss = metric_or_nan(e, "loss");
      d.diverged = d.diverged || e.diverged;
    }
    const Diagnostics m = mstep->update();
    d.diverged = d.diverged || m.diverged;
    d.metrics["e_loss"] = e_loss;
    d.metrics["m_loss"] = metric_or_nan(m, "loss");
    return d;
  }
  void summarize(json& s, double burn_in) override {
    s["latents"] = {{"beta", approx_json(*qbeta, burn_in)}};
    if (truth.rank() == 2) s["truth_error"] = models::matched_max_error(qbeta->point(), truth);
  }
};

class SVISession : public Session {
 public:
  ParameterStore store;
  std::shared_ptr<NormalApproximation> qbeta;
  std::unique_ptr<KLqp> local;
  std::unique_ptr<KLqp> global;
  SVIRecipe recipe;
  Tensor x;
  Rng batches{0};
  Tensor truth;

  void initialize() override {
    validate_recipe(recipe);
    local->initialize();
    global->initialize();
  }
  Diagnostics step(std::size_t) override {
    const std::size_t n = x.dim(0), d = x.dim(1), m = recipe.m;
    Tensor mb({m, d});
    for (std::size_t r = 0; r < m; ++r) {
      const std::size_t i = batches.uniform_index(n);
      for (std::size_t j = 0; j < d; ++j) mb[r * d + j] = x.at(i, j);
    }
    return svi_step(recipe, mb);
  }
  void summarize(json& s, double burn_in) override {
    s["latents"] = {{"beta", approx_json(*qbeta, burn_in)}};
    s["local_parameter_elements"] = local_parameter_elements(recipe);
    if (truth.rank() == 2) s["truth_error"] = models::matched_max_error(qbeta->loc().value(), truth);
  }
};

// ---- presets -------------------------------------------------------------------------

struct Context {
  const FitOptions& o;
  std::size_t n_iter;
  std::uint64_t data_seed;
  std::uint64_t init_seed;
  std::uint64_t seed;  // inference seed for this chain
};

bool is_sampler(const std::string& inference) {
  return inference == "mh" || inference == "hmc" || inference == "sgld";
}

OptimizerConfig optimizer(const FitOptions& o, double default_lr) {
  const double lr = o.lr.value_or(default_lr);
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("--lr must be positive");
  if (o.optimizer == "adam") return OptimizerConfig::adam(lr);
  if (o.optimizer == "sgd") return OptimizerConfig::sgd(lr);
  if (o.optimizer == "rmsprop") return OptimizerConfig::rmsprop(lr);
  throw ConfigError("unknown optimizer '" + o.optimizer + "' (adam, sgd, rmsprop)");
}

double step_size(const FitOptions& o, std::size_t n, double fallback) {
  if (o.step_size_auto) return 0.5 / static_cast<double>(n);
  return o.step_size.value_or(fallback);
}

std::size_t or_default(std::size_t v, std::size_t fallback) { return v ? v : fallback; }

data::Dataset load(const FitOptions& o, bool labeled, const std::function<data::Dataset()>& generate) {
  if (!o.path.empty()) return data::read_csv(o.path, labeled);
  return generate();
}

// Latent stores for samplers, VI families otherwise.
std::unique_ptr<Inference> make_vi(const Context& c, InferenceProblem problem, double lr,
                                   std::size_t default_samples) {
  const std::string& inf = c.o.inference;
  const OptimizerConfig opt = optimizer(c.o, lr);
  if (inf == "map") return std::make_unique<MAP>(std::move(problem), opt, c.seed);
  if (inf == "iwae") {
    if (c.o.iwae_k == 0) throw ConfigError("--K must be >= 1");
    return std::make_unique<IWAE>(std::move(problem), IWAEConfig{c.o.iwae_k}, opt, c.seed);
  }
  KLqpConfig cfg;
  if (inf == "klqp") cfg.estimator = Estimator::reparam;
  else if (inf == "klqp-akl") cfg.estimator = Estimator::analytic_kl;
  else if (inf == "klqp-aent") cfg.estimator = Estimator::analytic_entropy;
  else if (inf == "klqp-score") cfg.estimator = Estimator::score;
  else throw ConfigError("inference '" + inf + "' is not a variational method");
  cfg.n_samples = or_default(c.o.n_samples, cfg.estimator == Estimator::score ? 16 : default_samples);
  return std::make_unique<KLqp>(std::move(problem), cfg, opt, c.seed);
}

std::unique_ptr<Inference> make_sampler(const Context& c, InferenceProblem problem, std::size_t n,
                                        double hmc_step, double sgld_step, double mh_sd) {
  const std::string& inf = c.o.inference;
  if (inf == "hmc")
    return std::make_unique<HMC>(std::move(problem), HMCConfig{step_size(c.o, n, hmc_step), c.o.n_steps},
                                 c.seed);
  if (inf == "sgld") {
    SGLDConfig cfg;
    cfg.step_size = step_size(c.o, n, sgld_step);
    return std::make_unique<SGLD>(std::move(problem), cfg, c.seed);
  }
  return std::make_unique<MetropolisHastings>(std::move(problem), MHConfig{step_size(c.o, n, mh_sd)},
                                              c.seed);
}

std::unique_ptr<Session> beta_bernoulli(const Context& c) {
  const data::Dataset ds = load(c.o, false, [&] {
    const std::size_t n = or_default(c.o.n, 50);
    return data::coin_flips(n, static_cast<std::size_t>(std::lround(0.6 * static_cast<double>(n))),
                            c.data_seed);
  });
  if (ds.dims() != 1) throw ConfigError("beta-bernoulli data must have one column");
  const std::size_t n = ds.rows();
  const Tensor x = ds.features.reshaped({n});
  for (double v : x.data())
    if (v != 0.0 && v != 1.0) throw ConfigError("beta-bernoulli data must be 0/1");
  const double s = std::accumulate(x.data().begin(), x.data().end(), 0.0);

  auto session = std::make_unique<SingleSession>();
  ParameterStore& store = session->store;
  ApproxPtr q;
  const std::string& inf = c.o.inference;
  if (is_sampler(inf))
    q = std::make_shared<EmpiricalApproximation>(store, "qtheta", c.n_iter, Shape{}, Tensor::scalar(0.5));
  else if (inf == "map")
    q = std::make_shared<PointMassApproximation>(store, "qtheta", Tensor::scalar(0.0), Constraint::sigmoid);
  else
    q = std::make_shared<BetaApproximation>(store, "qtheta", Tensor::scalar(inv_softplus(1.0)),
                                            Tensor::scalar(inv_softplus(1.0)));
  InferenceProblem p;
  p.model = models::beta_bernoulli(n);
  p.latent["theta"] = q;
  p.data["x"] = x;
  session->approximations["theta"] = q;
  session->inference = is_sampler(inf) ? make_sampler(c, std::move(p), n, 0.1, 1e-3, 0.5)
                                       : make_vi(c, std::move(p), 0.05, 1);
  session->extra = [s, n](json& out) {
    out["conjugate_mean"] = (1.0 + s) / (2.0 + static_cast<double>(n));
  };
  return session;
}

std::unique_ptr<Session> logreg(const Context& c) {
  const data::Dataset ds = load(c.o, true, [&] {
    return data::logreg(or_default(c.o.n, 500), or_default(c.o.d, 5), c.data_seed);
  });
  if (!ds.labeled()) throw ConfigError("logreg data needs a label column");
  const std::size_t n = ds.rows(), d = ds.dims();

  auto session = std::make_unique<SingleSession>();
  ParameterStore& store = session->store;
  ApproxPtr q;
  const std::string& inf = c.o.inference;
  if (is_sampler(inf))
    q = std::make_shared<EmpiricalApproximation>(store, "qbeta", c.n_iter, Shape{d});
  else if (inf == "map")
    q = std::make_shared<PointMassApproximation>(store, "qbeta", Tensor::zeros({d}));
  else
    q = std::make_shared<NormalApproximation>(store, "qbeta", Tensor::zeros({d}),
                                              Tensor::full({d}, inv_softplus(0.1)));
  InferenceProblem p;
  p.model = models::logreg(n, d);
  p.latent["beta"] = q;
  p.inputs["X"] = ds.features;
  p.data["y"] = ds.labels;
  session->approximations["beta"] = q;
  session->inference =
      is_sampler(inf)
          ? make_sampler(c, std::move(p), n, 0.5 / static_cast<double>(n), 0.5 / static_cast<double>(n),
                         0.5 / std::sqrt(static_cast<double>(n)))
          : make_vi(c, std::move(p), 0.05, 1);
  if (const auto it = ds.truth.find("beta"); it != ds.truth.end()) {
    const Tensor truth = it->second;
    session->extra = [q, truth, burn = c.o.burn_in](json& out) {
      Tensor mean;
      approx_json(*q, burn, &mean);
      double err = 0.0;
      for (std::size_t i = 0; i < truth.size(); ++i) err = std::max(err, std::fabs(mean[i] - truth[i]));
      out["truth_error"] = err;
    };
  }
  return session;
}

std::unique_ptr<Session> gmm(const Context& c) {
  const std::size_t k = or_default(c.o.k, 3);
  const data::Dataset ds = load(c.o, true, [&] {
    return data::gmm(or_default(c.o.n, 600), k, or_default(c.o.d, 2), c.data_seed);
  });
  const std::size_t n = ds.rows(), d = ds.dims();
  if (n < k) throw ConfigError("gmm needs at least k rows");
  Tensor truth;
  if (const auto it = ds.truth.find("means"); it != ds.truth.end() && it->second.dim(0) == k)
    truth = it->second;
  Rng init_rng(c.init_seed);
  const Tensor init = models::kmeans_pp_init(ds.features, k, init_rng);
  const std::string& inf = c.o.inference;

  if (inf == "vem") {
    auto s = std::make_unique<VEMSession>();
    s->truth = truth;
    s->qbeta = std::make_shared<PointMassApproximation>(s->store, "qbeta", init);
    auto qz = std::make_shared<CategoricalApproximation>(s->store, "qz", Tensor::zeros({n, k}));
    const ModelFn model = models::gmm({n, k, d, 1.0, 0.5, ""});
    InferenceProblem e;
    e.model = model;
    e.latent["z"] = qz;
    e.data["x"] = ds.features;
    e.data["beta"] = s->qbeta;
    InferenceProblem m;
    m.model = model;
    m.latent["beta"] = s->qbeta;
    m.data["x"] = ds.features;
    m.data["z"] = qz;
    KLqpConfig cfg;
    cfg.estimator = Estimator::score;
    cfg.n_samples = or_default(c.o.n_samples, 4);
    cfg.local_plate = {"x", "z"};
    s->estep = std::make_unique<KLqp>(e, cfg, optimizer(c.o, 0.5), mix_seed(c.seed, 1));
    s->mstep = std::make_unique<MAP>(m, optimizer(c.o, 0.05), mix_seed(c.seed, 2));
    return s;
  }

  if (inf == "svi") {
    const std::size_t mb = or_default(c.o.minibatch, 128);
    if (mb > n) throw ConfigError("svi minibatch --M exceeds the number of rows");
    auto s = std::make_unique<SVISession>();
    s->truth = truth;
    s->x = ds.features;
    s->batches = Rng(mix_seed(c.seed, 3));
    s->qbeta = std::make_shared<NormalApproximation>(s->store, "qbeta", init,
                                                     Tensor::full({k, d}, inv_softplus(0.05)));
    auto qz = std::make_shared<CategoricalApproximation>(s->store, "qz", Tensor::zeros({mb, k}));
    const ModelFn model = models::gmm({mb, k, d, 1.0, 0.5, ""});
    const double scale = static_cast<double>(n) / static_cast<double>(mb);
    ScaleMap sc;
    if (scale != 1.0) sc = {{"x", scale}, {"z", scale}};
    InferenceProblem lp;
    lp.model = model;
    lp.latent["z"] = qz;
    lp.data["x"] = FeedSlot{"x", {mb, d}};
    lp.data["beta"] = s->qbeta;
    lp.scale = sc;
    InferenceProblem gp;
    gp.model = model;
    gp.latent["beta"] = s->qbeta;
    gp.data["x"] = FeedSlot{"x", {mb, d}};
    gp.data["z"] = qz;
    gp.scale = sc;
    KLqpConfig lc;
    lc.estimator = Estimator::score;
    lc.n_samples = or_default(c.o.n_samples, 8);
    lc.local_plate = {"x", "z"};
    s->local = std::make_unique<KLqp>(lp, lc, OptimizerConfig::adam(2.0), mix_seed(c.seed, 1));
    s->global = std::make_unique<KLqp>(gp, KLqpConfig{}, optimizer(c.o, 0.02), mix_seed(c.seed, 2));
    s->recipe = SVIRecipe{s->local.get(), s->global.get(), mb, 10, "x", true};
    return s;
  }

  auto session = std::make_unique<SingleSession>();
  ParameterStore& store = session->store;
  InferenceProblem p;
  p.model = models::gmm({n, k, d, 1.0, 0.5, ""});
  p.data["x"] = ds.features;
  ApproxPtr qbeta, qz;
  if (inf == "mh") {
    qbeta = std::make_shared<EmpiricalApproximation>(store, "qbeta", c.n_iter, Shape{k, d}, init);
    qz = std::make_shared<EmpiricalApproximation>(store, "qz", c.n_iter, Shape{n});
  } else {
    qbeta = std::make_shared<NormalApproximation>(store, "qbeta", init,
                                                  Tensor::full({k, d}, inv_softplus(0.05)));
    qz = std::make_shared<CategoricalApproximation>(store, "qz", Tensor::zeros({n, k}));
  }
  p.latent["beta"] = qbeta;
  p.latent["z"] = qz;
  session->approximations["beta"] = qbeta;
  if (inf == "mh") {
    session->inference = make_sampler(c, std::move(p), n, 0.1, 1e-3, 0.05);
  } else {
    KLqpConfig cfg;
    cfg.estimator = Estimator::score;
    cfg.n_samples = or_default(c.o.n_samples, 4);
    cfg.local_plate = {"x", "z"};
    session->inference = std::make_unique<KLqp>(std::move(p), cfg, optimizer(c.o, 0.1), c.seed);
  }
  if (truth.rank() == 2)
    session->extra = [qbeta, truth, burn = c.o.burn_in](json& out) {
      Tensor mean;
      approx_json(*qbeta, burn, &mean);
      out["truth_error"] = models::matched_max_error(mean, truth);
    };
  return session;
}

class VAESession : public SingleSession {
 public:
  std::unique_ptr<VAEToy> vae;
  Tensor train, heldout;
  std::vector<std::size_t> order;
  Rng shuffle{0};
  std::size_t cursor = 0;
  double initial_bound = 0.0;
  std::uint64_t eval_seed = 0;
};

std::unique_ptr<Session> vae_toy(const Context& c) {
  const VAEToySpec defaults;
  const data::Dataset ds = load(c.o, true, [&] { return data::vae_toy(or_default(c.o.n, 2500), c.data_seed); });
  const std::size_t n = ds.rows();
  const std::size_t held = n / 5;
  if (held == 0) throw ConfigError("vae-toy needs at least 5 rows (a fifth is held out)");
  VAEToySpec spec;
  spec.latent_dim = c.o.d ? c.o.d : defaults.latent_dim;
  spec.batch = or_default(c.o.minibatch, defaults.batch);
  if (n - held < spec.batch) throw ConfigError("vae-toy training split is smaller than one minibatch");

  auto s = std::make_unique<VAESession>();
  s->vae = std::make_unique<VAEToy>(spec, c.init_seed);
  check_binary_images(ds.features, s->vae->pixels());
  const std::size_t p = s->vae->pixels();
  s->train = Tensor({n - held, p}, std::vector<double>(ds.features.data().begin(),
                                                      ds.features.data().begin() + (n - held) * p));
  s->heldout = Tensor({held, p}, std::vector<double>(ds.features.data().begin() + (n - held) * p,
                                                    ds.features.data().end()));
  s->order.resize(n - held);
  std::iota(s->order.begin(), s->order.end(), 0);
  s->shuffle = Rng(mix_seed(c.seed, 2));
  s->cursor = s->order.size();  // reshuffle on first use
  s->eval_seed = mix_seed(c.seed, 1);
  s->approximations["z"] = s->vae->approximation();
  s->inference = make_vi(c, vae_problem(*s->vae, spec.batch), 0.01, 1);

  VAESession* raw = s.get();
  s->feeds = [raw, p, m = spec.batch](std::size_t) {
    if (raw->cursor + m > raw->order.size()) {
      auto& o = raw->order;
      for (std::size_t i = o.size() - 1; i > 0; --i) std::swap(o[i], o[raw->shuffle.uniform_index(i + 1)]);
      raw->cursor = 0;
    }
    Tensor batch({m, p});
    for (std::size_t r = 0; r < m; ++r) {
      const std::size_t row = raw->order[raw->cursor + r];
      std::copy(raw->train.ptr() + row * p, raw->train.ptr() + (row + 1) * p, batch.mutable_ptr() + r * p);
    }
    raw->cursor += m;
    return Feeds{{"x", batch}};
  };
  s->on_initialize = [raw] {
    raw->initial_bound = vae_heldout_bound(*raw->vae, raw->heldout, 10, raw->eval_seed);
  };
  s->extra = [raw](json& out) {
    out["heldout_bound_initial"] = raw->initial_bound;
    out["heldout_bound_final"] = vae_heldout_bound(*raw->vae, raw->heldout, 10, raw->eval_seed);
    out["heldout_rows"] = raw->heldout.dim(0);
  };
  return s;
}

std::unique_ptr<Session> gan_1d(const Context& c) {
  const data::Dataset ds = load(c.o, false, [&] { return data::gaussian_1d(or_default(c.o.n, 10000), c.data_seed); });
  if (ds.dims() != 1) throw ConfigError("gan-1d data must have one column");
  auto s = std::make_unique<SingleSession>();
  GANProblem g = models::gan_1d(s->store, ds.features, or_default(c.o.minibatch, 64), 16, c.init_seed);
  GANConfig cfg;
  cfg.d_optimizer = optimizer(c.o, 0.005);
  cfg.g_optimizer = optimizer(c.o, 0.005);
  s->inference = std::make_unique<GANInference>(std::move(g), cfg, c.seed);
  const double data_mean =
      std::accumulate(ds.features.data().begin(), ds.features.data().end(), 0.0) / static_cast<double>(ds.rows());
  ParameterStore* store = &s->store;
  s->extra = [store, data_mean](json& out) {
    out["generator"] = {{"mean", store->get("generator/mu").value()[0]},
                        {"sd", softplus_d(store->get("generator/sigma").value()[0])}};
    out["data_mean"] = data_mean;
  };
  return s;
}

std::size_t default_iterations(const std::string& model, const std::string& inference) {
  if (inference == "vem") return 300;
  if (inference == "svi") return 1500;
  if (inference == "gan") return 5000;
  if (model == "vae-toy") return 400;
  if (inference == "mh") return 5000;
  return 1000;
}

std::unique_ptr<Session> make_session(const Context& c) {
  const std::string& m = c.o.model;
  if (m == "beta-bernoulli") return beta_bernoulli(c);
  if (m == "logreg") return logreg(c);
  if (m == "gmm") return gmm(c);
  if (m == "vae-toy") return vae_toy(c);
  if (m == "gan-1d") return gan_1d(c);
  throw ConfigError("unknown model '" + m + "'");
}

void check_pair(const FitOptions& o) {
  if (o.model == "dp-sim") throw ConfigError("model dp-sim is simulated with the dp-sim subcommand, not fit");
  const auto& table = compatibility();
  const auto it = table.find(o.model);
  if (it == table.end()) throw ConfigError("unknown model '" + o.model + "'");
  const auto& infs = inference_names();
  if (std::find(infs.begin(), infs.end(), o.inference) == infs.end())
    throw ConfigError("unknown inference '" + o.inference + "'");
  if (std::find(it->second.begin(), it->second.end(), o.inference) == it->second.end()) {
    std::string supported;
    for (const auto& s : it->second) supported += (supported.empty() ? "" : ", ") + s;
    throw ConfigError("inference '" + o.inference + "' is not available for model '" + o.model +
                      "' (supported: " + supported + ")");
  }
  if (o.chains == 0) throw ConfigError("--chains must be >= 1");
  if (o.chains > 1 && !is_sampler(o.inference))
    throw ConfigError("--chains applies to samplers (mh, hmc, sgld) only");
  if (!(o.burn_in >= 0.0 && o.burn_in < 1.0)) throw ConfigError("--burn-in must lie in [0, 1)");
  if (o.step_size && o.step_size_auto) throw ConfigError("--step-size is either a number or auto");
}

struct ChainOutput {
  std::ostringstream records;
  std::ostringstream progress;
  bool aborted = false;
  std::string error;
};

// Runs one chain, writing step records and progress lines.
bool drive(Session& s, const FitOptions& o, std::size_t n_iter, std::size_t stride, std::size_t chain,
           bool tag_chain, std::ostream& out, std::ostream& err) {
  std::size_t streak = 0;
  for (std::size_t i = 0; i < n_iter; ++i) {
    const Diagnostics d = s.step(i);
    streak = d.diverged ? streak + 1 : 0;
    const bool report = (i + 1) % stride == 0 || i + 1 == n_iter;
    if (report || streak > o.max_diverged) {
      json rec;
      rec["type"] = "step";
      if (tag_chain) rec["chain"] = chain;
      rec["step"] = i + 1;
      for (const auto& [k, v] : d.metrics) rec[k] = v;
      if (d.diverged) rec["diverged"] = true;
      if (!d.warnings.empty()) rec["warnings"] = d.warnings;
      out << rec.dump() << '\n';
      err << "fit " << o.model << "/" << o.inference;
      if (tag_chain) err << " chain " << chain;
      err << " " << (i + 1) << "/" << n_iter;
      for (const auto& [k, v] : d.metrics) err << " " << k << "=" << v;
      err << '\n';
    }
    if (streak > o.max_diverged) {
      json rec{{"type", "abort"}, {"step", i + 1},
               {"reason", std::to_string(streak) + " consecutive divergent updates"}};
      if (tag_chain) rec["chain"] = chain;
      out << rec.dump() << '\n';
      return false;
    }
  }
  return true;
}

}  // namespace

const std::map<std::string, std::vector<std::string>>& compatibility() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"beta-bernoulli", {"klqp-score", "map", "hmc", "sgld", "mh"}},
      {"gmm", {"vem", "svi", "klqp-score", "mh"}},
      {"logreg", {"klqp", "klqp-akl", "klqp-aent", "klqp-score", "iwae", "map", "hmc", "sgld", "mh"}},
      {"vae-toy", {"klqp", "klqp-akl", "klqp-aent", "klqp-score", "iwae"}},
      {"gan-1d", {"gan"}},
      {"dp-sim", {}},
  };
  return table;
}

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {"beta-bernoulli", "gmm", "logreg", "vae-toy", "gan-1d", "dp-sim"};
  return names;
}

const std::vector<std::string>& inference_names() {
  static const std::vector<std::string> names = {"klqp", "klqp-score", "klqp-akl", "klqp-aent", "iwae", "map",
                                                 "hmc",  "sgld",       "mh",       "gan",       "vem",  "svi"};
  return names;
}

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  check_pair(o);
  const std::size_t n_iter = or_default(o.n_iter, default_iterations(o.model, o.inference));
  const std::size_t stride = or_default(o.stride, std::max<std::size_t>(1, n_iter / 10));
  const auto start = std::chrono::steady_clock::now();

  std::vector<std::unique_ptr<Session>> sessions;
  for (std::size_t chain = 0; chain < o.chains; ++chain) {
    const Context c{o, n_iter, mix_seed(o.seed, 1), mix_seed(o.seed, 2), mix_seed(o.seed, 3 + chain)};
    sessions.push_back(make_session(c));
    sessions.back()->initialize();
  }

  const bool tag = o.chains > 1;
  bool completed = true;
  if (!tag) {
    completed = drive(*sessions[0], o, n_iter, stride, 0, false, out, err);
  } else {
    std::vector<ChainOutput> buffers(o.chains);
    std::vector<std::thread> threads;
    for (std::size_t chain = 0; chain < o.chains; ++chain)
      threads.emplace_back([&, chain] {
        try {
          buffers[chain].aborted =
              !drive(*sessions[chain], o, n_iter, stride, chain, true, buffers[chain].records, buffers[chain].progress);
        } catch (const std::exception& e) {
          buffers[chain].error = e.what();
        }
      });
    for (auto& t : threads) t.join();
    for (auto& b : buffers) {
      out << b.records.str();
      err << b.progress.str();
      if (!b.error.empty()) throw std::runtime_error(b.error);
      completed = completed && !b.aborted;
    }
  }
  if (!completed) {
    err << "error: inference diverged; aborting\n";
    return kDiverged;
  }

  json s;
  s["type"] = "summary";
  s["model"] = o.model;
  s["inference"] = o.inference;
  s["seed"] = o.seed;
  s["n_iter"] = n_iter;
  if (tag) s["chains"] = o.chains;
  sessions[0]->summarize(s, o.burn_in);
  if (tag) {
    json latents = json::object();
    for (const auto& [name, first] : sessions[0]->stores()) {
      std::vector<const EmpiricalApproximation*> chains;
      for (const auto& sess : sessions)
        for (const auto& [other, e] : sess->stores())
          if (other == name) chains.push_back(e);
      latents[name] = summary_json(merge_summaries(chains, o.burn_in));
    }
    s["latents"] = latents;
  }
  const double acc = sessions[0]->acceptance_rate();
  if (!std::isnan(acc)) {
    double total = 0.0;
    for (const auto& sess : sessions) total += sess->acceptance_rate();
    s["acceptance_rate"] = total / static_cast<double>(sessions.size());
  }
  if (o.timing)
    s["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << s.dump() << '\n';
  return kOk;
}

}  // namespace ppl::cli
