#pragma once

// CLI invocations frozen as golden JSON files under tests/golden. Paths are
// relative to the tests directory.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"

namespace golden {

struct Case {
  std::string name;
  std::vector<std::string> args;
};

inline std::vector<Case> cases() {
  const std::vector<std::string> common{"--seed", "42", "-r", "99"};
  auto with = [&](std::vector<std::string> args) {
    args.insert(args.end(), common.begin(), common.end());
    return args;
  };
  return {
      {"sphericity", with({"test", "sphericity", "fixtures/small6x3.csv"})},
      {"identity_covariance", with({"test", "identity", "fixtures/small6x3.csv"})},
      {"identity_kendall",
       with({"test", "identity", "fixtures/likert.csv", "--matrix-kind", "correlation", "--method", "kendall"})},
      {"compound_symmetry_spearman", with({"test", "compound-symmetry", "fixtures/likert.csv", "--matrix-kind",
                                           "correlation", "--method", "spearman"})},
      {"two_sample", with({"test", "two-sample", "fixtures/sample_a.csv", "fixtures/sample_b.csv"})},
      {"k_sample_correlation", with({"test", "k-sample", "fixtures/sample_a.csv", "fixtures/sample_b.csv",
                                     "fixtures/sample_c.csv", "--matrix-kind", "correlation"})},
      {"uncorrelation", with({"test", "uncorrelation", "fixtures/four_col.csv", "--header", "--blocks", "2,2"})},
      {"drop_incomplete",
       with({"test", "sphericity", "fixtures/with_na.csv", "--header", "--drop-incomplete", "--emit-permuted"})},
      {"simulate_config", {"simulate", "--config", "fixtures/study.conf", "--seed", "42"}},
      {"simulate_table6",
       {"simulate", "--table", "6", "--only", "null | gamma(4,0.5) | gamma(4,0.5) | p=50", "--replicates", "4",
        "-r", "19", "--seed", "42"}},
  };
}

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

inline Outcome run(const std::vector<std::string>& args, const covtest::cli::GetEnv& env = [](const std::string&) {
  return std::optional<std::string>();
}) {
  std::ostringstream out, err;
  Outcome o;
  o.code = covtest::cli::run(args, out, err, env);
  o.out = out.str();
  o.err = err.str();
  return o;
}

/// JSON output with the run-dependent manifest.runtime removed.
inline std::string stable(const std::string& json_text) {
  auto j = nlohmann::ordered_json::parse(json_text);
  j["manifest"].erase("runtime");
  return j.dump(2) + "\n";
}

inline std::vector<std::string> with_workers(std::vector<std::string> args, std::size_t workers) {
  args.push_back("--workers");
  args.push_back(std::to_string(workers));
  return args;
}

inline std::string path(const std::string& name) { return "golden/" + name + ".json"; }

inline std::string read(const std::string& file) {
  std::ifstream in(file);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace golden
