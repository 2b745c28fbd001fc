#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "frag/dislocation.hpp"
#include "frag/testfunction.hpp"

namespace frag {

// One parsed value: a scalar token or a (possibly nested) list. Scalars keep
// their raw text so 64-bit seeds survive untruncated.
struct ConfigValue {
  enum class Kind { scalar, list };
  Kind kind = Kind::scalar;
  std::string token;
  std::vector<ConfigValue> items;
  int line = 0;
  int column = 0;

  double as_double(const std::string& key) const;
  std::uint64_t as_u64(const std::string& key) const;
  std::int64_t as_i64(const std::string& key) const;
  bool as_bool(const std::string& key) const;
  const std::string& as_string(const std::string& key) const;
  const std::vector<ConfigValue>& as_list(const std::string& key) const;
};

// Ordered so echoes and error listings are deterministic.
using ConfigDoc = std::map<std::string, ConfigValue>;

// Grammar: one `section.key = value` per line, `#` comments, values are
// scalars or bracketed comma-separated lists (nesting allowed, newlines
// allowed inside brackets). Raises parse_error with line/column.
ConfigDoc parse_config_document(std::string_view text);

// Parse a single value from override text (as passed to --set key=value).
ConfigValue parse_config_value(std::string_view text);

enum class OutputFormat { csv, json };

// Validated run configuration with every default materialized.
struct RunConfig {
  std::shared_ptr<DislocationMeasure> measure;
  double p_lower;
  bool measure_discrete = true;

  std::uint64_t seed = 1;
  std::uint32_t replicas = 1;
  std::uint64_t budget = 100000000;
  int threads = 0;
  std::string out = "frag-out";
  OutputFormat format = OutputFormat::csv;

  double eta = 0.01;
  bool genealogy = false;
  double alpha = 0.0;
  std::vector<double> eta_schedule;

  double horizon = 1.0;     // sim.t
  double floor_mass = 0.0;  // sim.floor
  bool has_sim_tilt = false;
  double sim_tilt = 0.0;  // martingale tilt; defaults to the Malthusian value
  std::vector<double> phi_grid;

  std::vector<double> x_grid;
  std::uint64_t samples = 100000;
  bool renewal_check = false;
  bool has_overshoot_tilt = false;
  double overshoot_tilt = 0.0;

  std::uint64_t m21_lines = 1000;
  std::uint64_t m21_samples = 100000;

  std::vector<TestFunction> fns;

  // Canonical key -> rendered value, defaults included; used for echoes.
  std::vector<std::pair<std::string, std::string>> echo;
};

// Validates the document, builds the measure and test functions, fills in
// defaults. Unknown keys are rejected with validation_error.
RunConfig build_run_config(const ConfigDoc& doc);

// parse + build in one step.
RunConfig parse_config(std::string_view text);

}  // namespace frag
