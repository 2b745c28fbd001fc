#include "frag/tagged.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "frag/errors.hpp"
#include "frag/quadrature.hpp"

namespace frag {
namespace {

constexpr double kLatticeTol = 1e-9;
constexpr int kLatticeMaxDenominator = 1024;

// Best rational approximation via continued fractions, denominator capped.
bool is_rational(double r, double tol, int max_den) {
  double x = r;
  long long p_prev = 1, q_prev = 0;
  long long p_cur = static_cast<long long>(std::floor(x));
  long long q_cur = 1;
  for (int iter = 0; iter < 64; ++iter) {
    if (std::fabs(r - static_cast<double>(p_cur) / static_cast<double>(q_cur)) < tol) {
      return q_cur <= max_den;
    }
    const double frac = x - std::floor(x);
    if (frac < 1e-15) break;
    x = 1.0 / frac;
    const long long a = static_cast<long long>(std::floor(x));
    const long long p_next = a * p_cur + p_prev;
    const long long q_next = a * q_cur + q_prev;
    p_prev = p_cur;
    q_prev = q_cur;
    p_cur = p_next;
    q_cur = q_next;
    if (q_cur > max_den) {
      return std::fabs(r - static_cast<double>(p_prev) / static_cast<double>(q_prev)) < tol;
    }
  }
  return std::fabs(r - static_cast<double>(p_cur) / static_cast<double>(q_cur)) < tol &&
         q_cur <= max_den;
}

double ks_distance(std::vector<double>& samples, const LimitMeasure& rho) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = rho.cdf(samples[i]);
    ks = std::max(ks, std::max(static_cast<double>(i + 1) / n - f,
                               f - static_cast<double>(i) / n));
  }
  return ks;
}

}  // namespace

TiltedJumpLaw::TiltedJumpLaw(std::shared_ptr<const DislocationMeasure> nu, double p,
                             double p_lower)
    : nu_(std::move(nu)), p_(p), p_lower_(p_lower) {
  if (!nu_) raise(Errc::invalid_argument, "null measure");
  if (!(p > p_lower)) {
    raise(Errc::below_lower_index, "tilt must exceed the lower index");
  }
  total_rate_ = nu_->integrate([p](const SplitView& s) {
    double acc = 0.0;
    for (double lt : s.log_terms) acc += std::exp((1.0 + p) * lt);
    return acc;
  });
  killing_rate_ = phi(*nu_, p, p_lower);

  for (const DislocationMeasure::Atom& a : nu_->atoms()) {
    for (std::size_t i = 0; i < a.log_terms.size(); ++i) {
      const double lt = a.log_terms[i];
      atoms_.push_back({-lt, a.rate * std::exp((1.0 + p) * lt)});
    }
  }
  if (!atoms_.empty()) {
    std::sort(atoms_.begin(), atoms_.end(),
              [](const Atom& a, const Atom& b) { return a.x < b.x; });
    // Merge numerically equal jump sizes so lattice detection sees distinct
    // values.
    std::vector<Atom> merged;
    for (const Atom& a : atoms_) {
      if (!merged.empty() && a.x - merged.back().x < 1e-12 * std::max(1.0, a.x)) {
        merged.back().weight += a.weight;
      } else {
        merged.push_back(a);
      }
    }
    atoms_ = std::move(merged);
    double cum = 0.0;
    for (const Atom& a : atoms_) {
      cum += a.weight;
      cumulative_.push_back(cum);
    }
  } else {
    envelope_ = nu_->tilt_weight_bound(p_);
  }
}

double TiltedJumpLaw::levy_exponent_no_kill(double lambda) const {
  if (!atoms_.empty()) {
    double acc = 0.0;
    for (const Atom& a : atoms_) acc += a.weight * (1.0 - std::exp(-lambda * a.x));
    return acc;
  }
  const double p = p_;
  return nu_->integrate([p, lambda](const SplitView& s) {
    double acc = 0.0;
    for (double lt : s.log_terms) {
      acc += std::exp((1.0 + p) * lt) * (1.0 - std::exp(lambda * lt));
    }
    return acc;
  });
}

bool TiltedJumpLaw::is_lattice() const {
  if (atoms_.empty()) return false;
  const double x0 = atoms_.front().x;
  for (std::size_t i = 1; i < atoms_.size(); ++i) {
    if (!is_rational(atoms_[i].x / x0, kLatticeTol, kLatticeMaxDenominator)) return false;
  }
  return true;
}

double TiltedJumpLaw::sample_jump(RngStream& rng) const {
  if (!atoms_.empty()) {
    const double u = rng.next_double() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const std::size_t k = std::min<std::size_t>(it - cumulative_.begin(), atoms_.size() - 1);
    return atoms_[k].x;
  }
  // Size-biased pick within a partition drawn by rejection against the tilt
  // weight envelope.
  SplitScratch scratch;
  for (int guard = 0; guard < 100000000; ++guard) {
    const SplitView s = nu_->sample_view(rng, scratch);
    double w = 0.0;
    for (double lt : s.log_terms) w += std::exp((1.0 + p_) * lt);
    if (rng.next_double() * envelope_ > w) continue;
    double u = rng.next_double() * w;
    for (double lt : s.log_terms) {
      u -= std::exp((1.0 + p_) * lt);
      if (u < 0.0) return -lt;
    }
    return -s.log_terms.back();
  }
  raise(Errc::internal, "tilted rejection sampler failed to accept");
}

OvershootSample overshoot_sample(const TiltedJumpLaw& law, double x, RngStream& rng) {
  if (!(x >= 0.0)) raise(Errc::invalid_argument, "passage level must be nonnegative");
  if (law.killing_rate() < -1e-9) {
    raise(Errc::invalid_argument,
          "tilt has negative killing rate; overshoot chain undefined below the Malthusian tilt");
  }
  const double kill = std::max(0.0, law.killing_rate());
  const double rate = law.total_rate();
  const double p_kill = kill > 0.0 ? kill / (kill + rate) : 0.0;
  double pos = 0.0;
  while (pos <= x) {
    if (p_kill > 0.0 && rng.next_double() < p_kill) {
      return {true, std::numeric_limits<double>::infinity(),
              std::numeric_limits<double>::infinity()};
    }
    pos += law.sample_jump(rng);
  }
  return {false, pos, pos - x};
}

LimitMeasure::LimitMeasure(std::shared_ptr<const DislocationMeasure> nu, double p_star,
                           double p_lower)
    : nu_(std::move(nu)), p_star_(p_star) {
  if (!nu_) raise(Errc::invalid_argument, "null measure");
  phi_prime_ = phi_prime(*nu_, p_star, p_lower);
  min_support_ = nu_->min_term();

  if (nu_->is_discrete()) {
    std::vector<std::pair<double, double>> weighted;  // (size, r s^(1+p*))
    for (const DislocationMeasure::Atom& a : nu_->atoms()) {
      for (std::size_t i = 0; i < a.log_terms.size(); ++i) {
        weighted.emplace_back(a.partition.term(i),
                              a.rate * std::exp((1.0 + p_star) * a.log_terms[i]));
      }
    }
    std::sort(weighted.begin(), weighted.end());
    double cum = 0.0;
    for (std::size_t i = 0; i < weighted.size(); ++i) {
      cum += weighted[i].second;
      const bool last_of_size =
          i + 1 == weighted.size() || weighted[i + 1].first > weighted[i].first;
      if (last_of_size) {
        breaks_.push_back(weighted[i].first);
        inner_.push_back(cum);
      }
    }
    breaks_.push_back(1.0);
  }
}

namespace {

// Exact integral of f(u)/u over (s, 1], using the piecewise or polynomial
// structure of f directly.
double log_weighted_tail(const TestFunction& f, double s) {
  if (s >= 1.0) return 0.0;
  if (f.kind() == TestFunction::Kind::polynomial) {
    const std::vector<double>& c = f.coeffs();
    double acc = c.empty() ? 0.0 : c[0] * std::log(1.0 / s);
    for (std::size_t j = 1; j < c.size(); ++j) {
      acc += c[j] * (1.0 - std::pow(s, static_cast<double>(j))) / static_cast<double>(j);
    }
    return acc;
  }
  const std::vector<double>& b = f.breaks();
  const std::vector<double>& v = f.values();
  double acc = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double lo = std::max(s, b[k]);
    const double hi = b[k + 1];
    if (hi > lo && v[k] != 0.0) acc += v[k] * std::log(hi / lo);
  }
  return acc;
}

}  // namespace

double LimitMeasure::cdf(double v) const {
  if (v <= min_support_) return 0.0;
  const double hi = std::min(v, 1.0);
  if (!breaks_.empty()) {
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < breaks_.size(); ++j) {
      const double lo = breaks_[j];
      if (hi <= lo) break;
      acc += inner_[j] * std::log(std::min(hi, breaks_[j + 1]) / lo);
    }
    return acc / phi_prime_;
  }
  // Density route: swap the integration order, so a single pass over the
  // measure integrates sum_i s_i^(1+p*) log(hi / s_i) over {s_i < hi}.
  const double p = p_star_;
  const double acc = nu_->integrate([p, hi](const SplitView& s) {
    double w = 0.0;
    for (std::size_t i = 0; i < s.terms.size(); ++i) {
      if (s.terms[i] < hi) w += std::exp((1.0 + p) * s.log_terms[i]) * std::log(hi / s.terms[i]);
    }
    return w;
  });
  return acc / phi_prime_;
}

double LimitMeasure::pairing(const TestFunction& f) const {
  if (!breaks_.empty()) {
    double acc = 0.0;
    if (f.kind() == TestFunction::Kind::piecewise) {
      // Merge rho's breakpoints with f's; both are piecewise on the result.
      std::vector<double> pts;
      pts.reserve(breaks_.size() + f.breaks().size());
      for (double b : breaks_) pts.push_back(b);
      for (double b : f.breaks()) {
        if (b > breaks_.front() && b < 1.0) pts.push_back(b);
      }
      std::sort(pts.begin(), pts.end());
      pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double lo = pts[i], hi = pts[i + 1];
        const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), lo);
        const std::size_t j = static_cast<std::size_t>(it - breaks_.begin());
        if (j == 0 || j > inner_.size()) continue;
        const double mid = 0.5 * (lo + hi);
        acc += inner_[j - 1] * f(mid) * std::log(hi / lo);
      }
    } else {
      // Polynomial f: integrate c0/u + sum_j c_j u^(j-1) exactly per segment.
      const std::vector<double>& c = f.coeffs();
      for (std::size_t j = 0; j + 1 < breaks_.size(); ++j) {
        const double lo = breaks_[j], hi = breaks_[j + 1];
        double seg = c[0] * std::log(hi / lo);
        for (std::size_t k = 1; k < c.size(); ++k) {
          seg += c[k] * (std::pow(hi, static_cast<double>(k)) -
                         std::pow(lo, static_cast<double>(k))) /
                 static_cast<double>(k);
        }
        acc += inner_[j] * seg;
      }
    }
    return acc / phi_prime_;
  }

  // Density route: same order swap as cdf, with the inner integral of
  // f(u)/u over (s_i, 1] in closed form.
  const double p = p_star_;
  const double acc = nu_->integrate([&f, p](const SplitView& s) {
    double w = 0.0;
    for (std::size_t i = 0; i < s.terms.size(); ++i) {
      w += std::exp((1.0 + p) * s.log_terms[i]) * log_weighted_tail(f, s.terms[i]);
    }
    return w;
  });
  return acc / phi_prime_;
}

std::vector<RenewalPoint> renewal_limit_check(std::shared_ptr<const DislocationMeasure> nu,
                                              double p_star, std::span<const double> x_grid,
                                              std::uint64_t samples, std::uint64_t seed,
                                              double p_lower) {
  TiltedJumpLaw law(nu, p_star, p_lower);
  if (std::fabs(law.killing_rate()) > 1e-9) {
    raise(Errc::invalid_argument, "renewal check requires the Malthusian tilt (zero killing)");
  }
  if (law.is_lattice()) {
    raise(Errc::lattice_detected,
          "jump sizes are lattice: the renewal overshoot limit does not apply");
  }
  LimitMeasure rho(nu, p_star, p_lower);
  std::vector<RenewalPoint> out;
  for (double x : x_grid) {
    std::vector<double> vals;
    vals.reserve(samples);
    for (std::uint64_t i = 0; i < samples; ++i) {
      RngStream rng(derive_stream(replica_seed(seed, i), kTagOvershoot));
      const OvershootSample s = overshoot_sample(law, x, rng);
      vals.push_back(std::exp(-s.overshoot));
    }
    out.push_back({x, samples, ks_distance(vals, rho)});
  }
  return out;
}

std::vector<TaggedCheckPoint> tagged_path_check(std::shared_ptr<const DislocationMeasure> nu,
                                                double p, double t,
                                                std::span<const double> lambdas,
                                                std::uint64_t samples, std::uint64_t seed,
                                                double p_lower) {
  if (!(t >= 0.0)) raise(Errc::invalid_argument, "time horizon must be nonnegative");
  if (samples < 2) raise(Errc::invalid_argument, "need at least two sample paths");
  TiltedJumpLaw law(nu, p, p_lower);
  if (law.killing_rate() < -1e-9) {
    raise(Errc::invalid_argument, "tilt has negative killing rate; chain undefined");
  }
  const double kill = std::max(0.0, law.killing_rate());
  const double rate = law.total_rate();

  std::vector<double> xi(samples);  // xi_t, +inf when killed
  std::uint64_t killed = 0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    RngStream rng(derive_stream(replica_seed(seed, i), kTagTaggedPath));
    double clock = 0.0, pos = 0.0;
    bool dead = false;
    while (true) {
      const double t_jump = rng.exponential(rate);
      const double t_kill = kill > 0.0 ? rng.exponential(kill)
                                       : std::numeric_limits<double>::infinity();
      const double step = std::min(t_jump, t_kill);
      if (clock + step > t) break;
      clock += step;
      if (t_kill < t_jump) {
        dead = true;
        break;
      }
      pos += law.sample_jump(rng);
    }
    xi[i] = dead ? std::numeric_limits<double>::infinity() : pos;
    killed += dead ? 1 : 0;
  }

  std::vector<TaggedCheckPoint> out;
  for (double lambda : lambdas) {
    double mean = 0.0;
    for (double v : xi) mean += std::isinf(v) ? 0.0 : std::exp(-lambda * v);
    mean /= static_cast<double>(samples);
    double var = 0.0;
    for (double v : xi) {
      const double y = (std::isinf(v) ? 0.0 : std::exp(-lambda * v)) - mean;
      var += y * y;
    }
    var /= static_cast<double>(samples - 1);
    const double se = std::sqrt(var / static_cast<double>(samples));
    const double target = std::exp(-phi(*nu, lambda + p, p_lower) * t);
    const double z = se > 0.0 ? (mean - target) / se : (mean == target ? 0.0 : INFINITY);
    out.push_back({lambda, mean, se, target, z, killed});
  }
  return out;
}

}  // namespace frag
