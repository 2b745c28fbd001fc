// Command-line front end. Everything goes through the C API in frag.h; the
// core library is linked as a shared object.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "frag.h"

namespace {

struct Options {
  std::string config_path;
  std::vector<std::string> sets;
  std::string seed;
  std::string replicas;
  std::string out;
  std::string format;
  std::string threads;
  bool echo_config = false;
};

std::vector<std::string> subcommand_list() {
  std::vector<std::string> names;
  std::istringstream is(frag_subcommands());
  std::string name;
  while (std::getline(is, name)) {
    if (!name.empty()) names.push_back(name);
  }
  return names;
}

int exit_code_for(frag_status status) {
  switch (status) {
    case FRAG_OK:
      return 0;
    case FRAG_E_INVALID:
    case FRAG_E_PARSE:
    case FRAG_E_VALIDATION:
      return 2;
    default:
      return 3;
  }
}

void report_error(frag_status status) {
  std::cerr << "error: " << frag_status_name(status);
  const char* message = frag_last_error();
  if (message != nullptr && *message != '\0') std::cerr << ": " << message;
  if (frag_last_error_line() > 0) {
    std::cerr << " (line " << frag_last_error_line() << ", column " << frag_last_error_column()
              << ")";
  }
  std::cerr << "\n";
}

// Overrides in precedence order: config file < FRAG_THREADS < --set < named
// flags.
int apply_overrides(frag_config* config, const Options& opts) {
  if (opts.threads.empty()) {
    if (const char* env = std::getenv("FRAG_THREADS"); env != nullptr && *env != '\0') {
      if (frag_status s = frag_config_set(config, "run.threads", env)) {
        report_error(s);
        return exit_code_for(s);
      }
    }
  }
  for (const std::string& entry : opts.sets) {
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error: --set expects key=value, got '" << entry << "'\n";
      return 2;
    }
    const std::string key = entry.substr(0, eq);
    const std::string value = entry.substr(eq + 1);
    if (frag_status s = frag_config_set(config, key.c_str(), value.c_str())) {
      report_error(s);
      return exit_code_for(s);
    }
  }
  const std::pair<const char*, const std::string*> named[] = {
      {"run.seed", &opts.seed},
      {"run.replicas", &opts.replicas},
      {"run.out", &opts.out},
      {"run.format", &opts.format},
      {"run.threads", &opts.threads},
  };
  for (const auto& [key, value] : named) {
    if (value->empty()) continue;
    std::string text = *value;
    if (std::string(key) == "run.out" || std::string(key) == "run.format") {
      text = "\"" + text + "\"";
    }
    if (frag_status s = frag_config_set(config, key, text.c_str())) {
      report_error(s);
      return exit_code_for(s);
    }
  }
  return 0;
}

int run_subcommand(const std::string& name, const Options& opts) {
  std::ifstream in(opts.config_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open config file '" << opts.config_path << "'\n";
    return 2;
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  frag_config* config = nullptr;
  if (frag_status s = frag_config_parse(text.c_str(), text.size(), &config)) {
    report_error(s);
    return exit_code_for(s);
  }

  int rc = apply_overrides(config, opts);
  if (rc != 0) {
    frag_config_free(config);
    return rc;
  }

  if (opts.echo_config) {
    char* echo = nullptr;
    frag_status s = frag_config_echo(config, &echo);
    if (s == FRAG_OK) {
      std::cout << echo << "\n";
      frag_string_free(echo);
    } else {
      report_error(s);
    }
    frag_config_free(config);
    return s == FRAG_OK ? 0 : exit_code_for(s);
  }

  int exit_code = 0;
  char* summary = nullptr;
  frag_status s = frag_run(config, name.c_str(), &exit_code, &summary);
  if (s != FRAG_OK) {
    report_error(s);
    frag_config_free(config);
    return exit_code_for(s);
  }
  if (summary != nullptr) {
    std::cout << summary;
    const std::size_t len = std::string(summary).size();
    if (len == 0 || summary[len - 1] != '\n') std::cout << "\n";
    frag_string_free(summary);
  }
  frag_config_free(config);
  return exit_code;
}

void add_common_options(CLI::App* sub, Options& opts) {
  sub->add_option("-c,--config", opts.config_path, "configuration file")
      ->required()
      ->type_name("FILE");
  sub->add_option("--set", opts.sets, "override one key (key=value, repeatable)")
      ->type_name("KEY=VALUE");
  sub->add_option("--seed", opts.seed, "override run.seed");
  sub->add_option("--replicas", opts.replicas, "override run.replicas");
  sub->add_option("--out", opts.out, "override run.out (output path prefix)");
  sub->add_option("--format", opts.format, "override run.format (csv or json)");
  sub->add_option("--threads", opts.threads, "override run.threads (0 = hardware)");
  sub->add_flag("--echo-config", opts.echo_config,
                "print the materialized configuration as JSON and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fragmentation process simulator and numerical checks"};
  app.require_subcommand(1);

  Options opts;
  std::string chosen;
  for (const std::string& name : subcommand_list()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    add_common_options(sub, opts);
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  return run_subcommand(chosen, opts);
}
