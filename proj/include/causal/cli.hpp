#pragma once

// Batch command-line front end. Exit codes: 0 success, 1 validation or
// engine error, 2 usage error.

#include <algorithm>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "causal/report.hpp"

namespace causal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << bytes;
}

inline Json parse_json_bytes(const std::string& bytes, const std::string& what) {
  try {
    return Json::parse(bytes);
  } catch (const Json::parse_error& e) {
    throw SchemaError(what + ": malformed JSON: " + e.what());
  }
}

}  // namespace detail

/// Runs one invocation. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Causal-evidence evaluation engine", "causal"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string format = "human";
  std::string output_path;
  app.add_option("--format", format, "Report rendering")
      ->check(CLI::IsMember({"human", "json"}))
      ->capture_default_str();
  app.add_option("-o,--output", output_path, "Write the report to a file instead of stdout");

  std::string file, config_path, spec_path, truth_path, emit_path, scheme = "paper";
  double rr_a = 0, rr_s = 0, rr_as = 0;
  std::uint64_t seed = 0, draws = 10000;
  unsigned threads = 1;
  double threshold = 0;

  auto* measure = app.add_subcommand("measure", "Effect measures per table and per study");
  measure->add_option("file", file, "Study file")->required();

  auto* meta = app.add_subcommand("meta", "Meta-analysis and consistency across studies");
  meta->add_option("file", file, "Study file")->required();

  auto* dose = app.add_subcommand("dose", "Trend test and power-model fit per dose series");
  dose->add_option("file", file, "Study file")->required();

  auto* checklist = app.add_subcommand("checklist", "Ten-test causality checklist");
  checklist->add_option("file", file, "Study file")->required();
  checklist->add_option("--config", config_path, "Config file");

  auto* legal = app.add_subcommand("legal", "Checklist plus legal verdicts");
  legal->add_option("file", file, "Study file")->required();
  legal->add_option("--config", config_path, "Config file");

  auto* apportion = app.add_subcommand("apportion", "Split the joint excess risk of two exposures");
  apportion->add_option("--rr-a", rr_a, "RR of exposure a alone")->required();
  apportion->add_option("--rr-s", rr_s, "RR of exposure s alone")->required();
  apportion->add_option("--rr-as", rr_as, "RR of the joint exposure")->required();
  apportion->add_option("--scheme", scheme, "paper or synergy")
      ->check(CLI::IsMember({"paper", "synergy"}))
      ->capture_default_str();

  auto* taxi = app.add_subcommand("taxi", "Posterior over companies for an unidentified vehicle");
  taxi->add_option("--spec", spec_path, "Scenario file")->required();

  auto* sensitivity = app.add_subcommand("sensitivity", "Monte Carlo unmeasured-confounder analysis");
  sensitivity->add_option("file", file, "Study file")->required();
  sensitivity->add_option("--seed", seed, "Seed")->required();
  sensitivity->add_option("--draws", draws, "Number of draws")->required()->check(CLI::PositiveNumber);
  sensitivity->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 256u));
  sensitivity->add_option("--threshold", threshold, "Adjusted-RR threshold (overrides config)");
  sensitivity->add_option("--config", config_path, "Config file");

  auto* simulate = app.add_subcommand("simulate", "Simulate a cohort from a truth file");
  simulate->add_option("--truth", truth_path, "Truth file")->required();
  simulate->add_option("--seed", seed, "Seed")->required();
  simulate->add_option("--emit-study", emit_path, "Also write the simulated study file");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    for (std::size_t i = 0; i < args.size(); ++i) {
      const auto& a = args[i];
      if (a == "--format" || a == "-o" || a == "--output") {
        ++i;
        continue;
      }
      if (a.empty() || a.front() == '-') continue;
      if (!app.get_subcommand_no_throw(a)) {
        err << "usage error: unknown subcommand '" << a << "'\nrun with --help for usage\n";
        return kExitUsage;
      }
      break;
    }
    err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  auto* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    report::EngineConfig cfg;
    std::string digest_input;
    if (!config_path.empty()) {
      const auto bytes = detail::read_file(config_path);
      cfg = report::parse_config(detail::parse_json_bytes(bytes, config_path));
      digest_input += bytes;
    }
    if (sub == sensitivity && threshold != 0) {
      cfg.sensitivity_threshold = threshold;
      cfg.validate();
    }

    EvidenceBundle bundle;
    if (!file.empty()) {
      const auto bytes = detail::read_file(file);
      bundle = parse_study_file(bytes);
      digest_input = bytes + digest_input;
    }
    std::string input_bytes = digest_input;
    if (sub == taxi) input_bytes = detail::read_file(spec_path);
    if (sub == simulate) input_bytes = detail::read_file(truth_path);
    if (sub == apportion) {
      std::ostringstream s;
      s.precision(17);
      s << rr_a << ' ' << rr_s << ' ' << rr_as << ' ' << scheme;
      input_bytes = s.str();
    }

    report::Builder b(command, report::digest(input_bytes), cfg);
    std::string emitted;
    if (sub == measure) {
      report::add_measure(b, bundle);
    } else if (sub == meta) {
      report::add_meta(b, bundle);
    } else if (sub == dose) {
      report::add_dose(b, bundle);
    } else if (sub == checklist) {
      report::add_checklist(b, bundle);
    } else if (sub == legal) {
      report::add_legal(b, bundle);
    } else if (sub == apportion) {
      const auto s = scheme == "paper" ? ApportionScheme::PaperExcessUnits : ApportionScheme::SynergyPartition;
      report::add_apportionment(b, apportion_joint_exposures(rr_a, rr_s, rr_as, s));
    } else if (sub == taxi) {
      report::add_taxi(b, report::parse_taxi(detail::parse_json_bytes(input_bytes, spec_path)));
    } else if (sub == sensitivity) {
      report::add_sensitivity(b, bundle, seed, draws, threads);
    } else if (sub == simulate) {
      const auto req = report::parse_truth(detail::parse_json_bytes(input_bytes, truth_path));
      emitted = report::add_simulation(b, req, seed).dump(2) + "\n";
    }

    const auto rendered =
        report::render_report(b.finish(), format == "json" ? report::Format::Json : report::Format::Human);
    if (!emit_path.empty()) detail::write_file(emit_path, emitted);
    if (output_path.empty()) {
      out << rendered;
    } else {
      detail::write_file(output_path, rendered);
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error [" << e.kind() << "]: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace causal::cli
