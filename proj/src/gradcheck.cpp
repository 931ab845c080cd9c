#include "ppl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ppl/errors.hpp"

namespace ppl {
namespace {

double evaluate(const RootBuilder& build) {
  Tape tape;
  return build(tape).item();
}

}  // namespace

GradCheckReport grad_check(const RootBuilder& build, const std::vector<Parameter*>& params,
                           double h, double tol) {
  if (!(h > 0.0 && h <= 1e-2)) throw ConfigError("grad_check: h must lie in (0, 1e-2]");

  Tape tape;
  const Value root = build(tape);
  const double f0 = root.item();
  const GradientMap grads = tape.backward(root);

  const double again = evaluate(build);
  if (std::memcmp(&f0, &again, sizeof(double)) != 0)
    throw ConfigError("grad_check: builder is not deterministic");

  GradCheckReport report;
  for (Parameter* p : params) {
    if (!p->trainable()) continue;
    const Tensor* analytic = grads.find(p);
    const Tensor base = p->value();
    GradCheckEntry entry{p->name(), 0.0};
    for (std::size_t i = 0; i < base.size(); ++i) {
      Tensor plus = base;
      plus[i] += h;
      p->assign(plus);
      const double fp = evaluate(build);
      Tensor minus = base;
      minus[i] -= h;
      p->assign(minus);
      const double fm = evaluate(build);
      p->assign(base);

      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic ? (*analytic)[i] : 0.0;
      const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
      const double err = std::abs(a - numeric) / denom;
      entry.max_rel_error = std::max(entry.max_rel_error, std::isnan(err) ? INFINITY : err);
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(entry);
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

}  // namespace ppl
