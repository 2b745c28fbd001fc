#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace frag {

enum class Errc {
  invalid_argument = 1,
  parse_error,
  validation_error,
  sum_exceeds_one,
  non_integrable,
  below_lower_index,
  no_malthusian_root,
  no_biggins_root,
  budget_exceeded,
  killed_before_passage,
  lattice_detected,
  genealogy_missing,
  check_failed,
  io_error,
  internal,
};

const char* errc_name(Errc c) noexcept;

// All library failures are reported as Error. `line`/`column` are only
// meaningful for parse_error (0 otherwise).
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string msg, int line = 0, int column = 0)
      : std::runtime_error(std::move(msg)), line(line), column(column), code_(code) {}

  Errc code() const noexcept { return code_; }

  int line = 0;
  int column = 0;

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) { throw Error(code, msg); }

inline const char* errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::parse_error: return "ParseError";
    case Errc::validation_error: return "ValidationError";
    case Errc::sum_exceeds_one: return "SumExceedsOne";
    case Errc::non_integrable: return "NonIntegrable";
    case Errc::below_lower_index: return "BelowLowerIndex";
    case Errc::no_malthusian_root: return "NoMalthusianRoot";
    case Errc::no_biggins_root: return "NoBigginsRoot";
    case Errc::budget_exceeded: return "BudgetExceeded";
    case Errc::killed_before_passage: return "KilledBeforePassage";
    case Errc::lattice_detected: return "LatticeDetected";
    case Errc::genealogy_missing: return "GenealogyMissing";
    case Errc::check_failed: return "CheckFailed";
    case Errc::io_error: return "IoError";
    case Errc::internal: return "InternalError";
  }
  return "UnknownError";
}

}  // namespace frag
