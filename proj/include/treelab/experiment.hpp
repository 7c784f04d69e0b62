#pragma once

// Experiment orchestration shared by the CLI and the acceptance suite: a
// declarative spec (JSON, overridable from flags), validation ahead of any
// sampling, and byte-stable CSV/JSON rendering of results.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "treelab/errors.hpp"
#include "treelab/parallel.hpp"

namespace treelab {

const char* version_string() noexcept;

struct ExperimentSpec {
  std::string command;  // e.g. "perc tau", "walk schramm", "constants"
  std::vector<int> trees{3, 3};
  std::vector<int> radii;  // empty: command default
  std::vector<double> p, beta, h, lambda;
  std::vector<int> n;
  std::size_t replicas = 0;  // 0: command default
  std::uint64_t seed = 20180911;
  unsigned threads = 1;
  std::string out;
  std::string format = "csv";

  // Command-specific knobs.
  std::string kernel = "srw";
  std::vector<double> weights;
  double alpha = 0.0;
  int m_ref = 0;  // 0: default
  double eps = 0.0;
  std::vector<int> direction;  // empty: all ones
  int r_max = 3;
  double z = 3.0;
  double tolerance = 0.0;  // 0: default
  double bias_tolerance = 0.01;
  std::optional<double> betac;
  std::vector<double> offsets;  // beta_c - beta for exponent fits
  std::vector<double> fields;   // h values for exponent fits
  std::size_t burn_in = 1000;
  std::size_t thinning = 10;
  std::size_t chains = 4;
  std::size_t batches = 30;
  std::string suite = "tiny";
};

// Schema: every field above under the same name (command as a string);
// unknown keys are rejected.
ExperimentSpec spec_from_json(const nlohmann::json& j);
// Canonical form: only fields that affect results (no threads, out, format).
nlohmann::json canonical_json(const ExperimentSpec& spec);
// FNV-1a 64 of the canonical JSON dump, 16 hex digits. Outputs carry the hash
// of the spec after command defaults are filled in (the summary's "spec").
std::string spec_hash(const ExperimentSpec& spec);

// Throws Error with a validation kind on any problem.
void validate(const ExperimentSpec& spec);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct RunOutput {
  Table table;
  nlohmann::json summary;
  bool partial = false;
};

RunOutput run(const ExperimentSpec& spec);

std::string to_csv(const Table& table);
std::string to_json_text(const RunOutput& out);
std::string format_number(double x);

// 2 for configuration problems, 3 for capacity or convergence failures.
int exit_code(ErrorKind kind) noexcept;

struct OracleCheck {
  std::string graph;
  std::string estimator;
  double exact = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  bool agrees = false;
};
struct OracleSuiteParams {
  std::size_t replicas = 100000;
  double p = 0.4;
  double lambda = 0.5;
  double beta = 0.35;
  double h = 0.3;
  double z = 3.0;
};
std::vector<OracleCheck> run_oracle_suite(const OracleSuiteParams& params, const Execution& ex = {});

}  // namespace treelab
