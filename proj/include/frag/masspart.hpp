#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace frag {

// Ranked mass partition: the positive fragment masses of one dislocation,
// sorted non-increasing, with total mass at most 1. The deficit 1 - sum is
// the dust fraction lost to infinitesimal fragments.
class MassPartition {
 public:
  static constexpr double kSumTolerance = 1e-12;

  MassPartition() = default;

  // Drops zero entries, sorts descending, validates. Raises invalid_argument
  // on negative entries and sum_exceeds_one when the total is above 1 beyond
  // tolerance.
  static MassPartition normalized(std::vector<double> raw);

  // Trusted constructor for terms already sorted non-increasing with sum <= 1.
  static MassPartition from_sorted(std::vector<double> terms);

  std::span<const double> terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  double term(std::size_t i) const { return terms_[i]; }
  double sum() const noexcept { return sum_; }
  double dust() const noexcept { return dust_; }

  // The partition (1, 0, ...): a dislocation that changes nothing. A valid
  // dislocation measure puts zero mass on it.
  bool is_trivial() const noexcept {
    return terms_.size() == 1 && terms_[0] >= 1.0 - kSumTolerance;
  }

 private:
  std::vector<double> terms_;
  double sum_ = 0.0;
  double dust_ = 1.0;
};

// Size-biased pick: u in [0, 1) selects the index whose cumulative mass band
// contains u; nullopt means the dust band was hit.
std::optional<std::size_t> size_biased_pick(const MassPartition& s, double u);

}  // namespace frag
