#include "frag/testfunction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "frag/errors.hpp"

namespace frag {
namespace {

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

TestFunction TestFunction::one() {
  TestFunction f = constant(1.0);
  f.id_ = "one";
  return f;
}

TestFunction TestFunction::constant(double v) {
  TestFunction f = piecewise({0.0, 1.0}, {v});
  f.id_ = "const_" + fmt_short(v);
  return f;
}

TestFunction TestFunction::identity() {
  TestFunction f = polynomial({0.0, 1.0});
  f.id_ = "identity";
  return f;
}

TestFunction TestFunction::indicator(double lo, double hi) {
  if (!(lo >= 0.0 && lo < hi && hi <= 1.0)) {
    raise(Errc::invalid_argument, "indicator needs 0 <= lo < hi <= 1");
  }
  std::vector<double> breaks{0.0};
  std::vector<double> values;
  if (lo > 0.0) {
    breaks.push_back(lo);
    values.push_back(0.0);
  }
  breaks.push_back(hi);
  values.push_back(1.0);
  if (hi < 1.0) {
    breaks.push_back(1.0);
    values.push_back(0.0);
  }
  TestFunction f = piecewise(std::move(breaks), std::move(values));
  f.id_ = "ind_" + fmt_short(lo) + "_" + fmt_short(hi);
  return f;
}

TestFunction TestFunction::piecewise(std::vector<double> breaks, std::vector<double> values) {
  if (breaks.size() < 2 || values.size() + 1 != breaks.size()) {
    raise(Errc::invalid_argument, "piecewise needs n+1 breakpoints for n values");
  }
  if (breaks.front() != 0.0 || breaks.back() != 1.0) {
    raise(Errc::invalid_argument, "piecewise breakpoints must span [0, 1]");
  }
  for (std::size_t i = 1; i < breaks.size(); ++i) {
    if (!(breaks[i] > breaks[i - 1])) {
      raise(Errc::invalid_argument, "piecewise breakpoints must strictly increase");
    }
  }
  TestFunction f;
  f.kind_ = Kind::piecewise;
  f.bound_ = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) raise(Errc::invalid_argument, "piecewise values must be finite");
    f.bound_ = std::max(f.bound_, std::fabs(v));
  }
  f.breaks_ = std::move(breaks);
  f.values_ = std::move(values);
  f.id_ = "piecewise_" + std::to_string(f.values_.size());
  return f;
}

TestFunction TestFunction::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) raise(Errc::invalid_argument, "polynomial needs coefficients");
  double bound = 0.0;
  for (double c : coeffs) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      raise(Errc::invalid_argument, "polynomial coefficients must be nonnegative");
    }
    bound += c;
  }
  TestFunction f;
  f.kind_ = Kind::polynomial;
  f.coeffs_ = std::move(coeffs);
  f.bound_ = bound;  // coefficients nonnegative, so the max on [0, 1] is at 1
  f.id_ = "poly_" + std::to_string(f.coeffs_.size() - 1);
  return f;
}

std::vector<TestFunction> TestFunction::equal_bins(int n) {
  if (n < 1) raise(Errc::invalid_argument, "need at least one bin");
  std::vector<TestFunction> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    TestFunction f = indicator(static_cast<double>(k) / n, static_cast<double>(k + 1) / n);
    char buf[32];
    std::snprintf(buf, sizeof buf, "bin%02d", k);
    f.id_ = buf;
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<TestFunction> TestFunction::default_library() {
  std::vector<TestFunction> out = equal_bins(16);
  out.push_back(one());
  out.push_back(identity());
  return out;
}

double TestFunction::operator()(double u) const {
  if (u < 0.0 || u > 1.0) return 0.0;
  if (kind_ == Kind::polynomial) {
    double acc = 0.0;
    for (std::size_t j = coeffs_.size(); j-- > 0;) acc = acc * u + coeffs_[j];
    return acc;
  }
  if (u == 1.0) return values_.back();
  const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), u);
  const std::size_t idx = static_cast<std::size_t>(it - breaks_.begin()) - 1;
  return values_[std::min(idx, values_.size() - 1)];
}

}  // namespace frag
