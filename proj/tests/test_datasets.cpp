#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "doctest.h"
#include "ppl/datasets.hpp"
#include "ppl/errors.hpp"
#include "ppl/model.hpp"

using namespace ppl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ppl_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path file(const std::string& name, const std::string& content) const {
    const fs::path p = path / name;
    std::ofstream(p) << content;
    return p;
  }
};

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::memcmp(a.ptr(), b.ptr(), a.size() * sizeof(double)) == 0;
}

// Stick count distribution of the stochastic while loop with Beta(1, alpha)
// sticks: P(K >= k) = prod_{m=1..k} E[beta^m], E[beta^m] = prod_{i<m} (1+i) / (1+alpha+i).
double tail(double alpha, std::size_t k) {
  double p = 1.0;
  for (std::size_t m = 1; m <= k; ++m)
    for (std::size_t i = 0; i < m; ++i) p *= (1.0 + i) / (1.0 + alpha + i);
  return p;
}

Tensor base_draw(std::size_t, Rng& r) { return Tensor::scalar(r.normal()); }

}  // namespace

TEST_CASE("CSV round trip is exact") {
  TempDir dir;
  for (const data::Dataset& ds : {data::logreg(50, 3, 1), data::gmm(40, 2, 3, 2), data::vae_toy(10, 3)}) {
    const fs::path p = dir.path / "d.csv";
    data::write_csv(ds, p);
    const data::Dataset back = data::read_csv(p, ds.labeled());
    CHECK(back.columns == ds.columns);
    CHECK(bit_equal(back.features, ds.features));
    if (ds.labeled()) CHECK(bit_equal(back.labels, ds.labels));
  }
}

TEST_CASE("CSV errors") {
  TempDir dir;
  CHECK_THROWS_AS(data::read_csv(dir.path / "missing.csv", false), std::runtime_error);
  CHECK_THROWS_AS(data::read_csv(dir.file("empty.csv", ""), false), ConfigError);
  CHECK_THROWS_AS(data::read_csv(dir.file("header.csv", "a,b\n"), false), ConfigError);
  CHECK_THROWS_WITH_AS(data::read_csv(dir.file("bad.csv", "a,b\n1,2\n3,x\n"), false),
                       doctest::Contains("line 3"), ConfigError);
  CHECK_THROWS_WITH_AS(data::read_csv(dir.file("ragged.csv", "a,b\n1,2\n3\n"), false),
                       doctest::Contains("line 3"), ConfigError);
  CHECK_THROWS_AS(data::read_csv(dir.file("one.csv", "y\n1\n"), true), ConfigError);
}

TEST_CASE("generators are deterministic per seed") {
  CHECK(bit_equal(data::logreg(30, 4, 5).features, data::logreg(30, 4, 5).features));
  CHECK(bit_equal(data::gmm(30, 3, 2, 5).features, data::gmm(30, 3, 2, 5).features));
  CHECK_FALSE(bit_equal(data::gmm(30, 3, 2, 5).features, data::gmm(30, 3, 2, 6).features));
}

TEST_CASE("generator contracts") {
  SUBCASE("mixture means are well separated") {
    const Tensor m = data::gmm(100, 3, 2, 7).truth.at("means");
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = a + 1; b < 3; ++b) {
        const double dx = m.at(a, 0) - m.at(b, 0), dy = m.at(a, 1) - m.at(b, 1);
        CHECK(std::sqrt(dx * dx + dy * dy) >= 6.0);
      }
  }
  SUBCASE("coin flips have exactly s ones") {
    const data::Dataset ds = data::coin_flips(50, 30, 3);
    double s = 0.0;
    for (double v : ds.features.data()) s += v;
    CHECK(s == 30.0);
  }
  SUBCASE("logistic labels are binary") {
    const data::Dataset ds = data::logreg(100, 3, 3);
    for (double v : ds.labels.data()) CHECK((v == 0.0 || v == 1.0));
  }
  SUBCASE("bad sizes") {
    CHECK_THROWS_AS(data::logreg(0, 3, 1), ConfigError);
    CHECK_THROWS_AS(data::coin_flips(5, 6, 1), ConfigError);
    CHECK_THROWS_AS(data::vae_toy(10, 1, 8, 0.5), ConfigError);
  }
}

TEST_CASE("Dirichlet process stick-breaking") {
  SUBCASE("concentration must be positive") {
    Rng rng(1);
    CHECK_THROWS_AS(dirichlet_process_draw(0.0, base_draw, rng), ConfigError);
    CHECK_THROWS_AS(dirichlet_process_draw(-1.0, base_draw, rng), ConfigError);
  }
  SUBCASE("stick counts follow the analytic distribution") {
    constexpr std::size_t n = 100000;
    for (double alpha : {1.0, 3.0}) {
      Rng rng(2);
      std::vector<double> counts(4, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = dirichlet_process_draw(alpha, base_draw, rng).stick;
        if (k < counts.size()) counts[k] += 1.0;
      }
      for (std::size_t k = 0; k < counts.size(); ++k) {
        const double p = tail(alpha, k) - tail(alpha, k + 1);
        const double se = std::sqrt(p * (1 - p) / n);
        CAPTURE(alpha);
        CAPTURE(k);
        CHECK(std::fabs(counts[k] / n - p) <= 4 * se);
      }
    }
  }
  SUBCASE("draws are deterministic per seed") {
    Rng a(9), b(9);
    for (int i = 0; i < 200; ++i) {
      const auto da = dirichlet_process_draw(0.5, base_draw, a);
      const auto db = dirichlet_process_draw(0.5, base_draw, b);
      CHECK(da.stick == db.stick);
      CHECK(da.value.item() == db.value.item());
    }
  }
  SUBCASE("small concentration breaks a bounded number of distinct sticks") {
    Rng rng(1);
    std::set<std::size_t> distinct;
    for (int i = 0; i < 500; ++i) distinct.insert(dirichlet_process_draw(0.1, base_draw, rng).stick);
    CHECK(distinct.size() >= 1);
    CHECK(distinct.size() <= 50);
  }
  SUBCASE("iteration cap") {
    Rng rng(1);
    CHECK_THROWS_AS(
        {
          for (int i = 0; i < 1000; ++i) dirichlet_process_draw(0.01, base_draw, rng, 3);
        },
        ConfigError);
  }
}
