#pragma once

// Replicate loops for type-I-error and power studies, and the default
// designs of the seven published simulation tables.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "covtest/datagen.hpp"
#include "covtest/permutation.hpp"

namespace covtest::sim {

/// What one simulation cell generates and tests.
struct StudyDesign {
  TestKind test = TestKind::Sphericity;
  /// One generator per sample.
  std::vector<datagen::GeneratorSpec> samples;
  /// Rows per sample, parallel to `samples`.
  std::vector<Index> n;
  TestOptions options;
  /// Sparse generators: draw Sigma* once per cell and Delta once per replicate.
  bool redraw_sparse_delta = false;
  /// Record the SSNR of the first sample's generated entries.
  bool track_ssnr = false;
};

struct Cell {
  std::string hypothesis;  // "null" or "alternative"
  std::string row;
  std::string column;
  StudyDesign design;
  /// Non-empty when the cell cannot run; reported instead of a rate.
  std::string infeasible;
};

struct RunSettings {
  std::size_t replicates = 2000;
  std::size_t permutations = 100;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct CellResult {
  std::string hypothesis;
  std::string row;
  std::string column;
  std::size_t replicates = 0;
  /// Replicates whose test ran to completion.
  std::size_t completed = 0;
  std::size_t failed = 0;
  std::size_t rejections = 0;
  /// Percentages over completed replicates; NaN when none completed.
  double rate_percent = 0.0;
  double se_percent = 0.0;
  std::optional<double> ssnr_mean;
  std::optional<double> ssnr_sd;
  std::vector<std::string> flags;
};

struct TableSpec {
  std::string id;
  std::string title;
  std::vector<Cell> cells;
  RunSettings settings;
};

/// Table 1..7 with the published grids and the default settings.
TableSpec default_table(int id);

/// Seed for a cell: the master seed mixed with a hash of the cell's labels,
/// so a cell run alone reproduces its value inside the full table.
std::uint64_t cell_seed(std::uint64_t master, const std::string& table_id, const Cell& cell);

CellResult run_cell(const std::string& table_id, const Cell& cell, const RunSettings& settings);

std::vector<CellResult> run_table(const TableSpec& table);

/// A one-cell study from "key = value" text: generator keys (prefixed by
/// "sampleK." when samples differ) plus test, samples, n, replicates,
/// permutations, alpha, blocks, matrix_kind, method.
TableSpec study_from_config(std::string_view text);

/// Pivoted text table: rows are (hypothesis, row), columns the cell columns.
std::string render_text(const TableSpec& table, const std::vector<CellResult>& results);

}  // namespace covtest::sim
