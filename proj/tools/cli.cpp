#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "ppl/datasets.hpp"
#include "ppl/errors.hpp"
#include "ppl/infer.hpp"
#include "ppl/model.hpp"

namespace ppl::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct GenOptions {
  std::string model;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t k = 3;
  std::uint64_t seed = 1;
  std::string out;
};

fs::path output_dir() {
  const char* env = std::getenv("PPL_OUTPUT_DIR");
  return env && *env ? fs::path(env) : fs::current_path();
}

int cmd_gen(const GenOptions& o, std::ostream& out) {
  data::Dataset ds;
  const auto n_or = [&](std::size_t fallback) { return o.n ? o.n : fallback; };
  if (o.model == "logreg")
    ds = data::logreg(n_or(500), o.d ? o.d : 5, o.seed);
  else if (o.model == "gmm")
    ds = data::gmm(n_or(600), o.k, o.d ? o.d : 2, o.seed);
  else if (o.model == "vae-toy")
    ds = data::vae_toy(n_or(2500), o.seed);
  else if (o.model == "gan-1d")
    ds = data::gaussian_1d(n_or(10000), o.seed);
  else if (o.model == "beta-bernoulli") {
    const std::size_t n = n_or(50);
    ds = data::coin_flips(n, static_cast<std::size_t>(std::lround(0.6 * static_cast<double>(n))), o.seed);
  } else
    throw ConfigError("gen has no generator for model '" + o.model + "'");

  fs::path path = o.out.empty() ? output_dir() / (o.model + "_n" + std::to_string(ds.rows()) + "_seed" +
                                                  std::to_string(o.seed) + ".csv")
                                : fs::path(o.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  data::write_csv(ds, path);
  json rec{{"type", "gen"}, {"model", o.model}, {"path", path.string()}, {"rows", ds.rows()},
           {"columns", ds.columns.size()}};
  if (!ds.truth.empty()) {
    fs::path truth = path;
    truth.replace_extension(".truth.json");
    data::write_truth(ds, truth);
    rec["truth"] = truth.string();
  }
  out << rec.dump() << '\n';
  return kOk;
}

struct DPOptions {
  double alpha = 1.0;
  std::size_t n_draws = 500;
  std::uint64_t seed = 1;
  std::size_t max_iterations = 10000;
};

int cmd_dp_sim(const DPOptions& o, std::ostream& out) {
  if (!(o.alpha > 0.0)) throw ConfigError("dp-sim needs alpha > 0");
  if (o.n_draws == 0) throw ConfigError("dp-sim needs n-draws >= 1");
  Rng rng(o.seed);
  const auto base = [](std::size_t, Rng& r) { return Tensor::scalar(r.normal()); };
  std::map<std::size_t, std::size_t> histogram;
  for (std::size_t i = 0; i < o.n_draws; ++i)
    ++histogram[dirichlet_process_draw(o.alpha, base, rng, o.max_iterations).stick];
  json hist = json::array();
  double mean = 0.0;
  for (const auto& [stick, count] : histogram) {
    hist.push_back({{"stick", stick}, {"count", count}});
    mean += static_cast<double>(stick * count);
  }
  out << json{{"type", "dp-sim"},
              {"alpha", o.alpha},
              {"n_draws", o.n_draws},
              {"seed", o.seed},
              {"distinct_sticks", histogram.size()},
              {"max_stick", histogram.rbegin()->first},
              {"mean_stick", mean / static_cast<double>(o.n_draws)},
              {"histogram", hist}}
             .dump()
      << '\n';
  return kOk;
}

int cmd_list(std::ostream& out) {
  for (const auto& a : algorithm_registry())
    out << json{{"type", "algorithm"},
                {"name", a.name},
                {"family", a.family},
                {"objective", a.objective},
                {"update_rule", a.update_rule}}
               .dump()
        << '\n';
  for (const auto& [model, infs] : compatibility())
    out << json{{"type", "model"}, {"name", model}, {"inferences", infs}}.dump() << '\n';
  return kOk;
}

int cmd_bench(const BenchOptions& o, bool timing, std::ostream& out, std::ostream& err) {
  const BenchResult r = bench_overhead(o);
  json rec{{"type", "bench-overhead"},
           {"n", o.n},
           {"d", o.d},
           {"n_iter", o.n_iter},
           {"n_steps", o.n_steps},
           {"step_size", o.step_size.value_or(0.5 / static_cast<double>(o.n))},
           {"reps", o.reps},
           {"identical", r.identical},
           {"acceptance_rate", r.acceptance_rate}};
  if (timing) {
    rec["library_seconds"] = r.library_seconds;
    rec["handwritten_seconds"] = r.handwritten_seconds;
    rec["ratio"] = r.ratio;
  }
  out << rec.dump() << '\n';
  if (!r.identical) {
    err << "error: library and handwritten chains differ\n";
    return kFailure;
  }
  return kOk;
}

// "auto" or a positive number.
void parse_step_size(const std::string& text, std::optional<double>& value, bool& is_auto) {
  if (text.empty()) return;
  if (text == "auto") {
    is_auto = true;
    return;
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(v > 0.0)) throw ConfigError("--step-size must be a positive number or auto");
  value = v;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probabilistic programming toolkit: fit bundled models, generate data, benchmark."};
  app.require_subcommand(1);

  FitOptions fit;
  std::string fit_step;
  bool no_timing = false;
  auto* f = app.add_subcommand("fit", "Run inference on a bundled model");
  f->add_option("--model", fit.model, "Model preset")->required()->check(CLI::IsMember(model_names()));
  f->add_option("--inference", fit.inference, "Inference algorithm")
      ->required()
      ->check(CLI::IsMember(inference_names()));
  f->add_option("--n-iter", fit.n_iter, "Updates (default per preset)");
  f->add_option("--seed", fit.seed, "Root seed");
  f->add_option("--step-size", fit_step, "HMC/SGLD step size or MH proposal sd; 'auto' = 0.5/N");
  f->add_option("--n-steps", fit.n_steps, "Leapfrog steps per HMC update");
  f->add_option("--n-samples", fit.n_samples, "Monte Carlo samples per KLqp update");
  f->add_option("--K", fit.iwae_k, "IWAE importance samples");
  f->add_option("--M", fit.minibatch, "Minibatch size (svi, vae-toy, gan-1d)");
  f->add_option("--n", fit.n, "Rows of generated data");
  f->add_option("--d", fit.d, "Feature (or vae-toy latent) dimension");
  f->add_option("--k", fit.k, "Mixture components");
  f->add_option("--path", fit.path, "CSV data instead of generated data")->check(CLI::ExistingFile);
  f->add_option("--stride", fit.stride, "Report every this many updates (default n_iter/10)");
  f->add_option("--chains", fit.chains, "Independent sampler chains run concurrently");
  f->add_option("--burn-in", fit.burn_in, "Fraction of sampler rows dropped from summaries");
  f->add_option("--lr", fit.lr, "Learning rate (default per preset)");
  f->add_option("--optimizer", fit.optimizer, "adam, sgd or rmsprop")->check(CLI::IsMember({"adam", "sgd", "rmsprop"}));
  f->add_option("--max-diverged", fit.max_diverged, "Abort after this many consecutive divergent updates");
  f->add_flag("--no-timing", no_timing, "Omit wall-clock fields (for reproducible transcripts)");

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Write a synthetic dataset as CSV with a truth sidecar");
  g->add_option("--model", gen.model, "Model preset")->required();
  g->add_option("--n", gen.n, "Rows");
  g->add_option("--d", gen.d, "Feature dimension");
  g->add_option("--k", gen.k, "Mixture components");
  g->add_option("--seed", gen.seed, "Seed");
  g->add_option("--out", gen.out, "Output CSV (default $PPL_OUTPUT_DIR or cwd)");

  BenchOptions bench;
  std::string bench_step;
  bool bench_no_timing = false;
  auto* b = app.add_subcommand("bench-overhead", "Library HMC vs a handwritten loop on logreg");
  b->add_option("--n", bench.n, "Rows");
  b->add_option("--d", bench.d, "Features");
  b->add_option("--n-iter", bench.n_iter, "HMC updates");
  b->add_option("--n-steps", bench.n_steps, "Leapfrog steps");
  b->add_option("--step-size", bench_step, "Step size or 'auto' (0.5/N, the default)");
  b->add_option("--seed", bench.seed, "Root seed");
  b->add_option("--reps", bench.reps, "Interleaved repetitions; the fastest of each is reported");
  b->add_flag("--no-timing", bench_no_timing, "Omit wall-clock fields");

  DPOptions dp;
  auto* s = app.add_subcommand("dp-sim", "Simulate Dirichlet-process stick-breaking draws");
  s->add_option("--alpha", dp.alpha, "Concentration");
  s->add_option("--n-draws", dp.n_draws, "Draws");
  s->add_option("--seed", dp.seed, "Seed");
  s->add_option("--max-iterations", dp.max_iterations, "Sticks per draw before giving up");

  auto* l = app.add_subcommand("list", "Algorithms and the model/inference compatibility matrix");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  }

  try {
    if (f->parsed()) {
      parse_step_size(fit_step, fit.step_size, fit.step_size_auto);
      fit.timing = !no_timing;
      return cmd_fit(fit, out, err);
    }
    if (g->parsed()) return cmd_gen(gen, out);
    if (b->parsed()) {
      bool is_auto = false;
      parse_step_size(bench_step, bench.step_size, is_auto);
      if (is_auto) bench.step_size.reset();
      return cmd_bench(bench, !bench_no_timing, out, err);
    }
    if (s->parsed()) return cmd_dp_sim(dp, out);
    if (l->parsed()) return cmd_list(out);
  } catch (const std::logic_error& e) {
    // ConfigError, ShapeError, InvalidParameter, ...: rejected inputs.
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kConfigError;
}

}  // namespace ppl::cli
