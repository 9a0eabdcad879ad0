#pragma once

#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "causal/cli.hpp"

namespace causal::testing {

struct CliCase {
  std::string name;
  std::vector<std::string> args;  ///< paths relative to the source tree
};

inline void PrintTo(const CliCase& c, std::ostream* os) { *os << c.name; }

inline std::string source_path(const std::string& rel) { return std::string(CAUSAL_SOURCE_DIR) + "/" + rel; }

/// Golden corpus: each case renders a JSON report stored as tests/golden/<name>.json.
inline std::vector<CliCase> golden_corpus() {
  return {
      {"measure_worked", {"measure", "samples/worked_example.json"}},
      {"measure_zero_cell", {"measure", "samples/zero_cell.json"}},
      {"measure_simpson", {"measure", "samples/simpson.json"}},
      {"measure_case_control", {"measure", "samples/case_control.json"}},
      {"meta_full", {"meta", "samples/full_bundle.json"}},
      {"dose_full", {"dose", "samples/full_bundle.json"}},
      {"checklist_full", {"checklist", "samples/full_bundle.json", "--config", "samples/config_default.json"}},
      {"checklist_strict", {"checklist", "samples/full_bundle.json", "--config", "samples/config_strict.json"}},
      {"checklist_weak", {"checklist", "samples/weak_association.json"}},
      {"legal_full", {"legal", "samples/full_bundle.json", "--config", "samples/config_default.json"}},
      {"legal_strict", {"legal", "samples/full_bundle.json", "--config", "samples/config_strict.json"}},
      {"legal_case_control", {"legal", "samples/case_control.json"}},
      {"legal_worked", {"legal", "samples/worked_example.json"}},
      {"apportion_paper", {"apportion", "--rr-a", "6", "--rr-s", "11", "--rr-as", "51", "--scheme", "paper"}},
      {"apportion_synergy", {"apportion", "--rr-a", "6", "--rr-s", "11", "--rr-as", "51", "--scheme", "synergy"}},
      {"taxi", {"taxi", "--spec", "samples/three_blue_one_yellow.json"}},
      {"sensitivity_full", {"sensitivity", "samples/full_bundle.json", "--seed", "7", "--draws", "20000"}},
      {"simulate_cohort", {"simulate", "--truth", "samples/truth_cohort.json", "--seed", "11"}},
      {"simulate_confounded", {"simulate", "--truth", "samples/truth_confounded.json", "--seed", "11"}},
  };
}

inline bool is_path_arg(const std::string& a) { return a.rfind("samples/", 0) == 0; }

struct CliRun {
  int code = 0;
  std::string out, err;
};

inline CliRun run(std::vector<std::string> args) {
  for (auto& a : args)
    if (is_path_arg(a)) a = source_path(a);
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

inline CliRun run_json(std::vector<std::string> args) {
  args.insert(args.begin(), {"--format", "json"});
  return run(std::move(args));
}

}  // namespace causal::testing
