#include "frag/dislocation.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "frag/errors.hpp"
#include "frag/quadrature.hpp"

namespace frag {

MassPartition DislocationMeasure::sample(RngStream& rng) const {
  SplitScratch scratch;
  SplitView v = sample_view(rng, scratch);
  return MassPartition::from_sorted(std::vector<double>(v.terms.begin(), v.terms.end()));
}

double DislocationMeasure::dust_rate() const {
  return integrate([](const SplitView& s) { return s.dust > 0.0 ? 1.0 : 0.0; });
}

DiscreteDislocation::DiscreteDislocation(std::vector<std::pair<double, MassPartition>> atoms) {
  if (atoms.empty()) raise(Errc::invalid_argument, "discrete measure needs at least one atom");
  atoms_.reserve(atoms.size());
  for (auto& [rate, part] : atoms) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
      raise(Errc::invalid_argument, "atom rates must be positive and finite");
    }
    if (part.is_trivial()) {
      raise(Errc::invalid_argument,
            "the trivial partition (1, 0, ...) cannot carry dislocation rate");
    }
    Atom a;
    a.rate = rate;
    a.log_terms.reserve(part.size());
    for (double s : part.terms()) {
      a.log_terms.push_back(std::log(s));
      min_term_ = std::min(min_term_, s);
    }
    a.partition = std::move(part);
    total_rate_ += rate;
    cumulative_.push_back(total_rate_);
    atoms_.push_back(std::move(a));
  }
}

SplitView DiscreteDislocation::sample_view(RngStream& rng, SplitScratch&) const {
  const double u = rng.next_double() * total_rate_;
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const std::size_t k = std::min<std::size_t>(it - cumulative_.begin(), atoms_.size() - 1);
  const Atom& a = atoms_[k];
  return SplitView{a.partition.terms(), a.log_terms, a.partition.dust()};
}

double DiscreteDislocation::integrate(const std::function<double(const SplitView&)>& h) const {
  double acc = 0.0;
  for (const Atom& a : atoms_) {
    acc += a.rate * h(SplitView{a.partition.terms(), a.log_terms, a.partition.dust()});
  }
  return acc;
}

double DiscreteDislocation::tilt_weight_bound(double p) const {
  double best = 0.0;
  for (const Atom& a : atoms_) {
    double w = 0.0;
    for (double lt : a.log_terms) w += std::exp((1.0 + p) * lt);
    best = std::max(best, w);
  }
  return best;
}

namespace {

// Binary density family restricted to a in [1/2, 1 - eps]. Sampling inverts a
// panelled cumulative table of g; panel interiors are resolved with a
// safeguarded Newton iteration against partial Gauss-Kronrod integrals.
class TruncatedBinaryDislocation final : public DislocationMeasure {
 public:
  TruncatedBinaryDislocation(BinaryDensityFamily family, double eps)
      : family_(std::move(family)), eps_(eps), a_lo_(0.5), a_hi_(1.0 - eps) {
    if (!(eps > 0.0 && eps < 0.5)) {
      raise(Errc::invalid_argument, "truncation epsilon must lie in (0, 1/2)");
    }
    validate_child_map();
    total_rate_ = integrate_interval(family_.g, a_lo_, a_hi_);
    if (!(total_rate_ > 0.0)) {
      raise(Errc::invalid_argument, "truncated density has no mass on [1/2, 1 - eps]");
    }
    build_cumulative();

    min_term_ = a_lo_;
    tilt_grid_.resize(kGrid + 1);
    for (std::size_t i = 0; i <= kGrid; ++i) {
      const double a = a_lo_ + (a_hi_ - a_lo_) * static_cast<double>(i) / kGrid;
      tilt_grid_[i] = {a, family_.child(a)};
      min_term_ = std::min(min_term_, tilt_grid_[i].second);
    }
  }

  double total_rate() const override { return total_rate_; }

  SplitView sample_view(RngStream& rng, SplitScratch& scratch) const override {
    const double a = invert_cdf(rng.next_double() * total_rate_);
    return fill_view(a, scratch.terms, scratch.log_terms);
  }

  double integrate(const std::function<double(const SplitView&)>& h) const override {
    return integrate_interval(
        [&](double a) {
          std::vector<double> terms, logs;
          return family_.g(a) * h(fill_view(a, terms, logs));
        },
        a_lo_, a_hi_);
  }

  double min_term() const override { return min_term_; }

  double tilt_weight_bound(double p) const override {
    double best = 0.0;
    for (const auto& [a, c] : tilt_grid_) {
      best = std::max(best, std::pow(a, 1.0 + p) + std::pow(c, 1.0 + p));
    }
    return best * (1.0 + 1e-6);
  }

 private:
  static constexpr std::size_t kPanels = 1024;
  static constexpr std::size_t kGrid = 4096;

  void validate_child_map() {
    double prev = family_.child(a_lo_);
    for (std::size_t i = 1; i <= 256; ++i) {
      const double a = a_lo_ + (a_hi_ - a_lo_) * static_cast<double>(i) / 256;
      const double c = family_.child(a);
      if (!(c > 0.0) || c > 1.0 - a + 1e-12) {
        raise(Errc::invalid_argument, "child map must satisfy 0 < c(a) <= 1 - a");
      }
      if (c > prev + 1e-12) {
        raise(Errc::invalid_argument, "child map must be non-increasing");
      }
      prev = c;
    }
  }

  void build_cumulative() {
    panel_edges_.resize(kPanels + 1);
    cum_.resize(kPanels + 1);
    cum_[0] = 0.0;
    for (std::size_t k = 0; k <= kPanels; ++k) {
      panel_edges_[k] = a_lo_ + (a_hi_ - a_lo_) * static_cast<double>(k) / kPanels;
    }
    for (std::size_t k = 0; k < kPanels; ++k) {
      cum_[k + 1] = cum_[k] + gauss_kronrod_15(family_.g, panel_edges_[k], panel_edges_[k + 1]);
    }
    // Make the table consistent with the adaptive total so inversion of
    // u * total_rate never runs off the end.
    const double scale = total_rate_ / cum_[kPanels];
    for (double& c : cum_) c *= scale;
  }

  double invert_cdf(double target) const {
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
    const std::size_t k =
        std::min<std::size_t>(std::max<std::ptrdiff_t>(it - cum_.begin() - 1, 0), kPanels - 1);
    double lo = panel_edges_[k], hi = panel_edges_[k + 1];
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 80; ++iter) {
      const double fx = cum_[k] + gauss_kronrod_15(family_.g, panel_edges_[k], x) - target;
      if (fx > 0.0) {
        hi = x;
      } else {
        lo = x;
      }
      const double gx = family_.g(x);
      double next = gx > 0.0 ? x - fx / gx : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::fabs(next - x) < 1e-15 * std::max(1.0, std::fabs(x))) return next;
      x = next;
    }
    return x;
  }

  SplitView fill_view(double a, std::vector<double>& terms, std::vector<double>& logs) const {
    const double c = family_.child(a);
    terms.assign({a, c});
    logs.assign({std::log(a), std::log(c)});
    const double dust = std::max(0.0, 1.0 - a - c);
    return SplitView{std::span<const double>(terms), std::span<const double>(logs), dust};
  }

  BinaryDensityFamily family_;
  double eps_;
  double a_lo_, a_hi_;
  double total_rate_ = 0.0;
  double min_term_ = 1.0;
  std::vector<double> panel_edges_;
  std::vector<double> cum_;
  std::vector<std::pair<double, double>> tilt_grid_;
};

}  // namespace

std::shared_ptr<DislocationMeasure> truncate(const BinaryDensityFamily& family, double eps,
                                             TruncationInfo* info) {
  auto measure = std::make_shared<TruncatedBinaryDislocation>(family, eps);
  // Mass-deficit integral over the full family; a family whose deficit
  // diverges is not a dislocation measure, so this raises non_integrable even
  // though the truncated rate itself is finite.
  const double deficit = integrate_interval_singular(
      [&](double a) { return a >= 1.0 ? 0.0 : (1.0 - a) * family.g(a); }, 0.5, 1.0);
  if (info) {
    info->epsilon = eps;
    info->total_rate = measure->total_rate();
    info->discarded_rate_bound = deficit / eps;
  }
  return measure;
}

std::shared_ptr<DislocationMeasure> truncate(std::shared_ptr<DislocationMeasure> measure,
                                             double eps, TruncationInfo* info) {
  if (!(eps > 0.0 && eps < 0.5)) {
    raise(Errc::invalid_argument, "truncation epsilon must lie in (0, 1/2)");
  }
  if (info) {
    info->epsilon = eps;
    info->total_rate = measure->total_rate();
    const double deficit = measure->integrate([](const SplitView& s) {
      const double s1 = s.terms.empty() ? 0.0 : s.terms[0];
      return 1.0 - s1;
    });
    info->discarded_rate_bound = deficit / eps;
  }
  return measure;
}

namespace catalog {

std::shared_ptr<DislocationMeasure> binary(double a, double rate) {
  if (!(a >= 0.5 && a < 1.0)) {
    raise(Errc::invalid_argument, "binary split needs a in [1/2, 1)");
  }
  return from_atoms({{rate, {a, 1.0 - a}}});
}

std::shared_ptr<DislocationMeasure> half_quarter(double rate) {
  return from_atoms({{rate, {0.5, 0.25}}});
}

std::shared_ptr<DislocationMeasure> from_atoms(
    std::vector<std::pair<double, std::vector<double>>> atoms) {
  std::vector<std::pair<double, MassPartition>> built;
  built.reserve(atoms.size());
  for (auto& [rate, terms] : atoms) {
    built.emplace_back(rate, MassPartition::normalized(std::move(terms)));
  }
  return std::make_shared<DiscreteDislocation>(std::move(built));
}

BinaryDensityFamily uniform_binary() {
  BinaryDensityFamily f;
  f.name = "uniform";
  f.g = [](double) { return 1.0; };
  return f;
}

}  // namespace catalog

}  // namespace frag
