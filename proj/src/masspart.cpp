#include "frag/masspart.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "frag/errors.hpp"

namespace frag {

MassPartition MassPartition::normalized(std::vector<double> raw) {
  for (double v : raw) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      raise(Errc::invalid_argument, "partition entries must be finite and nonnegative");
    }
  }
  std::erase(raw, 0.0);
  std::sort(raw.begin(), raw.end(), std::greater<double>());
  double sum = 0.0;
  for (double v : raw) sum += v;
  if (sum > 1.0 + kSumTolerance) {
    raise(Errc::sum_exceeds_one, "partition mass " + std::to_string(sum) + " exceeds 1");
  }
  MassPartition p;
  p.terms_ = std::move(raw);
  p.sum_ = std::min(sum, 1.0);
  p.dust_ = std::max(0.0, 1.0 - sum);
  return p;
}

MassPartition MassPartition::from_sorted(std::vector<double> terms) {
  MassPartition p;
  double sum = 0.0;
  for (double v : terms) sum += v;
  p.terms_ = std::move(terms);
  p.sum_ = std::min(sum, 1.0);
  p.dust_ = std::max(0.0, 1.0 - sum);
  return p;
}

std::optional<std::size_t> size_biased_pick(const MassPartition& s, double u) {
  if (!(u >= 0.0 && u < 1.0)) {
    raise(Errc::invalid_argument, "size-biased pick needs u in [0, 1)");
  }
  double cum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    cum += s.term(i);
    if (u < cum) return i;
  }
  return std::nullopt;
}

}  // namespace frag
