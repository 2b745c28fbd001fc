#pragma once

#include <string>
#include <vector>

#include "frag/config.hpp"

namespace frag {

struct RunOutcome {
  int exit_code = 0;  // 0 success, 1 a statistical check failed
  std::vector<std::string> files;
  std::string summary;  // the summary JSON, also written to <out>.json
};

// Execute one subcommand against a validated configuration. Writes the
// result table to <out>.csv (or embeds it in the summary for json format)
// and the summary to <out>.json. Module errors propagate as Error.
RunOutcome run_dispatch(const std::string& subcommand, const RunConfig& cfg);

const std::vector<std::string>& subcommand_names();

}  // namespace frag
