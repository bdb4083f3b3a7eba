#include "cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "covtest/csv.hpp"
#include "covtest/permutation.hpp"
#include "covtest/simulation.hpp"

#ifndef COVTEST_VERSION
#define COVTEST_VERSION "0.0.0"
#endif

namespace covtest::cli {
namespace {

using nlohmann::ordered_json;

struct ResolvedSeed {
  std::uint64_t value = 0;
  std::string source;
};

ResolvedSeed resolve_seed(const std::optional<std::uint64_t>& flag, const GetEnv& getenv) {
  if (flag) return {*flag, "flag"};
  if (const auto env = getenv("COVTEST_SEED")) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(env->data(), env->data() + env->size(), v);
    if (res.ec != std::errc() || res.ptr != env->data() + env->size()) {
      throw InputError("COVTEST_SEED must be an unsigned integer, got '" + *env + "'");
    }
    return {v, "env"};
  }
  std::random_device device;
  const std::uint64_t v = (static_cast<std::uint64_t>(device()) << 32) ^ device();
  return {v, "random"};
}

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(); }

ordered_json manifest(const std::string& command, ordered_json inputs, ordered_json flags,
                      const ResolvedSeed& seed, std::size_t workers,
                      std::chrono::steady_clock::time_point started) {
  const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started);
  ordered_json m;
  m["tool"] = "covtest";
  m["version"] = COVTEST_VERSION;
  m["command"] = command;
  m["inputs"] = std::move(inputs);
  m["flags"] = std::move(flags);
  m["seed"] = seed.value;
  m["seed_source"] = seed.source;
  // Everything above is a function of the invocation; runtime is not.
  m["runtime"] = {{"workers", workers}, {"duration_ms", std::round(elapsed.count() * 1000) / 1000}};
  return m;
}

struct TestArgs {
  std::string test;
  std::vector<std::string> files;
  std::size_t permutations = 100;
  std::optional<std::uint64_t> seed;
  std::string matrix_kind = "covariance";
  std::optional<std::string> method;
  std::vector<Index> blocks;
  std::size_t workers = 1;
  bool emit_permuted = false;
  bool header = false;
  bool drop_incomplete = false;
  bool strict = false;
};

struct SimulateArgs {
  std::optional<int> table;
  std::optional<std::string> config;
  std::optional<std::size_t> replicates;
  std::optional<std::size_t> permutations;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  std::vector<std::string> only;
};

void warn(std::ostream& err, const std::string& message) { err << "warning: " << message << "\n"; }

int run_test_command(const TestArgs& a, std::ostream& out, std::ostream& err, const GetEnv& getenv) {
  const auto started = std::chrono::steady_clock::now();
  const TestKind test = parse_test_kind(a.test);

  TestOptions options;
  options.kind = parse_matrix_kind(a.matrix_kind);
  if (a.method) options.method = parse_correlation_method(*a.method);
  options.blocks = a.blocks;
  // Option and file-count mismatches are rejected before any file is read.
  validate_test_options(test, options, a.files.size());
  if (a.permutations < 1) throw InputError("--permutations must be >= 1");
  if (a.workers < 1) throw InputError("--workers must be >= 1");

  const ResolvedSeed seed = resolve_seed(a.seed, getenv);
  std::vector<std::string> warnings;
  if (a.permutations < 19) {
    warnings.push_back("r = " + std::to_string(a.permutations) +
                       " < 19: the p-value cannot fall to 0.05 (1/alpha - 1 at alpha = 0.05)");
  }

  std::vector<DataMatrixd> samples;
  ordered_json inputs = ordered_json::array();
  for (const auto& file : a.files) {
    CsvTable table = ingest_csv(file, a.header, a.drop_incomplete);
    ordered_json input;
    input["path"] = file;
    input["rows"] = table.data.n();
    input["columns"] = table.data.p();
    if (a.header) input["header"] = table.header;
    if (a.drop_incomplete) {
      input["dropped_rows"] = table.dropped_lines.size();
      input["dropped_lines"] = table.dropped_lines;
      if (!table.dropped_lines.empty()) {
        warnings.push_back(file + ": dropped " + std::to_string(table.dropped_lines.size()) +
                           " incomplete row(s)");
      }
    }
    inputs.push_back(std::move(input));
    samples.push_back(std::move(table.data));
  }

  PermutationConfig cfg;
  cfg.r = a.permutations;
  cfg.seed = seed.value;
  cfg.workers = a.workers;
  cfg.retain_permuted = a.emit_permuted;
  cfg.strict = a.strict;
  const TestResult result = run_test(test, samples, options, cfg);
  warnings.insert(warnings.end(), result.warnings.begin(), result.warnings.end());

  ordered_json flags;
  flags["permutations"] = a.permutations;
  flags["matrix_kind"] = a.matrix_kind;
  flags["method"] = a.method ? ordered_json(*a.method) : ordered_json();
  flags["blocks"] = a.blocks;
  flags["header"] = a.header;
  flags["drop_incomplete"] = a.drop_incomplete;
  flags["emit_permuted"] = a.emit_permuted;
  flags["strict"] = a.strict;

  ordered_json j;
  j["command"] = "test";
  j["test"] = to_string(test);
  j["statistic_kind"] = std::string(to_string(result.observed.kind));
  j["statistic"] = result.observed.value;
  j["p_value"] = result.p_value;
  j["exceed_count"] = result.exceed_count;
  j["r"] = result.r;
  j["warnings"] = warnings;
  if (result.permuted) j["permuted"] = *result.permuted;
  j["manifest"] = manifest("test " + to_string(test), std::move(inputs), std::move(flags), seed,
                           a.workers, started);

  for (const auto& w : warnings) warn(err, w);
  out << j.dump(2) << "\n";
  return kSuccess;
}

int run_simulate_command(const SimulateArgs& a, std::ostream& out, std::ostream& err,
                         const GetEnv& getenv) {
  const auto started = std::chrono::steady_clock::now();
  if (a.table.has_value() == a.config.has_value()) {
    throw InputError("simulate needs exactly one of --table or --config");
  }
  sim::TableSpec table;
  ordered_json inputs = ordered_json::array();
  if (a.table) {
    table = sim::default_table(*a.table);
  } else {
    std::ifstream in(*a.config);
    if (!in) throw InputError("cannot open '" + *a.config + "'");
    std::ostringstream text;
    text << in.rdbuf();
    table = sim::study_from_config(text.str());
    inputs.push_back({{"path", *a.config}});
  }
  if (a.replicates) table.settings.replicates = *a.replicates;
  if (a.permutations) table.settings.permutations = *a.permutations;
  if (a.alpha) table.settings.alpha = *a.alpha;
  if (table.settings.permutations < 1) throw InputError("--permutations must be >= 1");
  if (a.workers < 1) throw InputError("--workers must be >= 1");
  const ResolvedSeed seed = resolve_seed(a.seed, getenv);
  table.settings.seed = seed.value;
  table.settings.workers = a.workers;

  if (!a.only.empty()) {
    std::vector<sim::Cell> kept;
    for (auto& cell : table.cells) {
      const std::string key = cell.hypothesis + " | " + cell.row + " | " + cell.column;
      bool match = true;
      for (const auto& s : a.only) match = match && key.find(s) != std::string::npos;
      if (match) kept.push_back(std::move(cell));
    }
    if (kept.empty()) throw InputError("--only matched no cells");
    table.cells = std::move(kept);
  }

  const std::vector<sim::CellResult> results = sim::run_table(table);

  ordered_json cells = ordered_json::array();
  for (const auto& r : results) {
    ordered_json c;
    c["hypothesis"] = r.hypothesis;
    c["row"] = r.row;
    c["column"] = r.column;
    c["replicates"] = r.replicates;
    c["completed"] = r.completed;
    c["failed"] = r.failed;
    c["rejections"] = r.rejections;
    c["rate_percent"] = number_or_null(r.rate_percent);
    c["se_percent"] = number_or_null(r.se_percent);
    if (r.ssnr_mean) {
      c["ssnr_mean"] = *r.ssnr_mean;
      c["ssnr_sd"] = number_or_null(r.ssnr_sd.value_or(NAN));
    }
    c["flags"] = r.flags;
    cells.push_back(std::move(c));
  }

  ordered_json flags;
  flags["table"] = a.table ? ordered_json(*a.table) : ordered_json();
  flags["config"] = a.config ? ordered_json(*a.config) : ordered_json();
  flags["replicates"] = table.settings.replicates;
  flags["permutations"] = table.settings.permutations;
  flags["alpha"] = table.settings.alpha;
  flags["only"] = a.only;

  ordered_json j;
  j["command"] = "simulate";
  j["table"] = table.id;
  j["title"] = table.title;
  j["settings"] = {{"replicates", table.settings.replicates},
                   {"permutations", table.settings.permutations},
                   {"alpha", table.settings.alpha}};
  j["cells"] = std::move(cells);
  j["manifest"] = manifest("simulate", std::move(inputs), std::move(flags), seed, a.workers, started);

  err << sim::render_text(table, results);
  out << j.dump(2) << "\n";
  return kSuccess;
}

}  // namespace

std::optional<std::string> system_getenv(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const GetEnv& getenv) {
  CLI::App app{"Permutation tests for covariance and correlation matrices", "covtest"};
  app.set_version_flag("--version", COVTEST_VERSION);
  app.require_subcommand(1);

  TestArgs test_args;
  auto* test = app.add_subcommand("test", "Run a permutation test on CSV data");
  test->add_option("test", test_args.test, "Test to run")
      ->required()
      ->check(CLI::IsMember({"sphericity", "identity", "compound-symmetry", "two-sample", "k-sample",
                             "uncorrelation"}));
  test->add_option("files", test_args.files, "CSV file(s), one per sample")->required();
  test->add_option("-r,--permutations", test_args.permutations, "Number of permutations")
      ->capture_default_str();
  test->add_option("--seed", test_args.seed, "Master seed (falls back to COVTEST_SEED)");
  test->add_option("--matrix-kind", test_args.matrix_kind, "covariance or correlation")
      ->check(CLI::IsMember({"covariance", "correlation"}))
      ->capture_default_str();
  test->add_option("--method", test_args.method, "Correlation method (correlation kind only)")
      ->check(CLI::IsMember({"pearson", "spearman", "kendall"}));
  test->add_option("--blocks", test_args.blocks, "Block sizes, e.g. 2,3 (uncorrelation only)")
      ->delimiter(',');
  test->add_option("--workers", test_args.workers, "Worker threads")->capture_default_str();
  test->add_flag("--emit-permuted", test_args.emit_permuted, "Include every permuted statistic");
  test->add_flag("--header", test_args.header, "First CSV row is a header");
  test->add_flag("--drop-incomplete", test_args.drop_incomplete,
                 "Drop rows with empty or non-numeric cells");
  test->add_flag("--strict", test_args.strict,
                 "Reject designs with fewer distinct arrangements than permutations");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Run a type I error or power study");
  simulate->add_option("--table", sim_args.table, "Published table id (1-7)")
      ->check(CLI::Range(1, 7));
  simulate->add_option("--config", sim_args.config, "Study configuration file (key = value)");
  simulate->add_option("--replicates", sim_args.replicates, "Replicates per cell");
  simulate->add_option("-r,--permutations", sim_args.permutations, "Permutations per test");
  simulate->add_option("--alpha", sim_args.alpha, "Significance level");
  simulate->add_option("--seed", sim_args.seed, "Master seed (falls back to COVTEST_SEED)");
  simulate->add_option("--workers", sim_args.workers, "Worker threads")->capture_default_str();
  simulate->add_option("--only", sim_args.only,
                       "Keep cells whose 'hypothesis | row | column' contains this text");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kInputError;
  }

  try {
    if (test->parsed()) return run_test_command(test_args, out, err, getenv);
    return run_simulate_command(sim_args, out, err, getenv);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const DegenerateStatisticError& e) {
    err << "error: " << e.what() << "\n";
    return kDegenerateStatistic;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
}

}  // namespace covtest::cli
