#include "ppl/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ppl/errors.hpp"
#include "ppl/rng.hpp"

namespace ppl::data {
namespace {

std::vector<std::string> feature_columns(std::size_t d, const char* prefix) {
  std::vector<std::string> cols;
  for (std::size_t j = 0; j < d; ++j) cols.push_back(prefix + std::to_string(j));
  return cols;
}

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

void append_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

nlohmann::json to_json(const Tensor& t) {
  if (t.rank() == 0) return t.item();
  if (t.rank() == 1) return std::vector<double>(t.data().begin(), t.data().end());
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < t.dim(0); ++i) rows.push_back(to_json(t.row(i)));
  return rows;
}

}  // namespace

Dataset logreg(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n == 0 || d == 0) throw ConfigError("logreg data needs n, d >= 1");
  Rng rng(seed);
  Tensor beta({d});
  for (auto& v : beta.mutable_data()) v = rng.normal();
  Dataset ds;
  ds.features = Tensor({n, d});
  ds.labels = Tensor({n});
  for (std::size_t i = 0; i < n; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double x = rng.normal();
      ds.features[i * d + j] = x;
      eta += x * beta[j];
    }
    ds.labels[i] = rng.bernoulli(sigmoid(eta)) ? 1.0 : 0.0;
  }
  ds.columns = feature_columns(d, "x");
  ds.columns.push_back("y");
  ds.truth["beta"] = beta;
  return ds;
}

Dataset gmm(std::size_t n, std::size_t k, std::size_t d, std::uint64_t seed, double sigma_x,
            double separation) {
  if (n == 0 || k == 0 || d == 0) throw ConfigError("gmm data needs n, k, d >= 1");
  if (!(sigma_x > 0.0)) throw ConfigError("gmm data needs sigma_x > 0");
  Rng rng(seed);
  Tensor means({k, d});
  double half_width = separation * std::pow(static_cast<double>(k), 1.0 / static_cast<double>(d));
  for (std::size_t attempt = 0;; ++attempt) {
    if (attempt > 0 && attempt % 100 == 0) half_width *= 1.1;
    for (auto& v : means.mutable_data()) v = (2.0 * rng.uniform() - 1.0) * half_width;
    bool ok = true;
    for (std::size_t a = 0; a < k && ok; ++a)
      for (std::size_t b = a + 1; b < k && ok; ++b) {
        double dist2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = means.at(a, j) - means.at(b, j);
          dist2 += diff * diff;
        }
        ok = dist2 >= separation * separation;
      }
    if (ok) break;
  }
  Dataset ds;
  ds.features = Tensor({n, d});
  ds.labels = Tensor({n});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = rng.uniform_index(k);
    ds.labels[i] = static_cast<double>(c);
    for (std::size_t j = 0; j < d; ++j) ds.features[i * d + j] = means.at(c, j) + sigma_x * rng.normal();
  }
  ds.columns = feature_columns(d, "x");
  ds.columns.push_back("label");
  ds.truth["means"] = means;
  ds.truth["sigma_x"] = Tensor::scalar(sigma_x);
  return ds;
}

Dataset vae_toy(std::size_t n, std::uint64_t seed, std::size_t side, double noise) {
  if (n == 0 || side == 0) throw ConfigError("vae-toy data needs n, side >= 1");
  if (!(noise >= 0.0 && noise < 0.5)) throw ConfigError("vae-toy noise must lie in [0, 0.5)");
  Rng rng(seed);
  const std::size_t p = side * side;
  Tensor protos({2, p});
  for (std::size_t j = 0; j < p; ++j) {
    protos[j] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    protos[p + j] = 1.0 - protos[j];  // complementary, so the two classes never coincide
  }
  Dataset ds;
  ds.features = Tensor({n, p});
  ds.labels = Tensor({n});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = rng.uniform_index(2);
    ds.labels[i] = static_cast<double>(c);
    for (std::size_t j = 0; j < p; ++j) {
      const double v = protos[c * p + j];
      ds.features[i * p + j] = rng.bernoulli(noise) ? 1.0 - v : v;
    }
  }
  ds.columns = feature_columns(p, "p");
  ds.columns.push_back("label");
  ds.truth["prototypes"] = protos;
  return ds;
}

Dataset gaussian_1d(std::size_t n, std::uint64_t seed, double mean, double sd) {
  if (n == 0) throw ConfigError("gaussian data needs n >= 1");
  Rng rng(seed);
  Dataset ds;
  ds.features = Tensor({n, 1});
  for (std::size_t i = 0; i < n; ++i) ds.features[i] = mean + sd * rng.normal();
  ds.labels = Tensor({0});
  ds.columns = {"x"};
  ds.truth["mean"] = Tensor::scalar(mean);
  ds.truth["sd"] = Tensor::scalar(sd);
  return ds;
}

Dataset coin_flips(std::size_t n, std::size_t s, std::uint64_t seed) {
  if (n == 0 || s > n) throw ConfigError("coin flips need 0 <= s <= n, n >= 1");
  Rng rng(seed);
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < s; ++i) x[i] = 1.0;
  for (std::size_t i = n - 1; i > 0; --i) std::swap(x[i], x[rng.uniform_index(i + 1)]);
  Dataset ds;
  ds.features = Tensor({n, 1}, std::move(x));
  ds.labels = Tensor({0});
  ds.columns = {"x"};
  ds.truth["ones"] = Tensor::scalar(static_cast<double>(s));
  return ds;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::string out;
  for (std::size_t j = 0; j < ds.columns.size(); ++j) {
    if (j) out += ',';
    out += ds.columns[j];
  }
  out += '\n';
  const std::size_t n = ds.rows(), d = ds.dims();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (j) out += ',';
      append_number(out, ds.features[i * d + j]);
    }
    if (ds.labeled()) {
      out += ',';
      append_number(out, ds.labels[i]);
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << out;
  if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Dataset read_csv(const std::filesystem::path& path, bool labeled) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
  Dataset ds;
  std::string line;
  if (!std::getline(f, line)) throw ConfigError("'" + path.string() + "' is empty");
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) ds.columns.push_back(col);
  }
  const std::size_t width = ds.columns.size();
  if (width == 0 || (labeled && width < 2))
    throw ConfigError("'" + path.string() + "' has too few columns");
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t fields = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (true) {
      const char* comma = std::find(p, end, ',');
      double v = 0.0;
      const auto res = std::from_chars(p, comma, v);
      if (res.ec != std::errc() || res.ptr != comma)
        throw ConfigError("malformed number on line " + std::to_string(rows + 2) + " of '" +
                          path.string() + "'");
      values.push_back(v);
      ++fields;
      if (comma == end) break;
      p = comma + 1;
    }
    if (fields != width)
      throw ConfigError("line " + std::to_string(rows + 2) + " of '" + path.string() + "' has " +
                        std::to_string(fields) + " fields, expected " + std::to_string(width));
    ++rows;
  }
  if (rows == 0) throw ConfigError("'" + path.string() + "' has no data rows");
  const std::size_t d = labeled ? width - 1 : width;
  ds.features = Tensor({rows, d});
  ds.labels = labeled ? Tensor({rows}) : Tensor({0});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) ds.features[i * d + j] = values[i * width + j];
    if (labeled) ds.labels[i] = values[i * width + d];
  }
  return ds;
}

void write_truth(const Dataset& ds, const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : ds.truth) j[k] = to_json(v);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << j.dump(2) << '\n';
}

}  // namespace ppl::data
