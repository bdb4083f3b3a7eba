#include "covtest/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <array>
#include <map>
#include <set>
#include <sstream>

#include "covtest/parallel.hpp"

namespace covtest::sim {
namespace {

using datagen::Distribution;
using datagen::GeneratorSpec;

constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fmt(double v, int precision) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << v;
  return out.str();
}

std::string np_label(Index n, Index p) { return "n=" + std::to_string(n) + " p=" + std::to_string(p); }

const std::vector<Index> kSphericityN{20, 40, 60, 80};
const std::vector<Index> kSphericityP{38, 55, 89, 159, 181, 331, 343, 642};
const std::vector<std::pair<Index, Index>> kBlockGrid{
    {100, 24}, {100, 32}, {100, 64}, {100, 76}, {100, 92},
    {4, 100},  {4, 200},  {4, 300},  {4, 500},  {4, 700}, {4, 1000}};

TableSpec sphericity_table(int id) {
  TableSpec t;
  t.id = std::to_string(id);
  const char* hypothesis = id == 1 ? "null" : "alternative";
  t.title = id == 1   ? "Sphericity test, type I error (%), Sigma = I"
            : id == 2 ? "Sphericity test, power (%), Sigma = I + diag(I_[p/8], 0)"
                      : "Sphericity test, power (%), Sigma = 0.9 I + 0.2 J";
  const std::vector<Distribution> dists{datagen::Normal{0, 1}, datagen::Gamma{4, 0.5}};
  for (Index p : kSphericityP) {
    MatrixX<double> gamma;
    if (id == 1) gamma = MatrixX<double>::Identity(p, p);
    else if (id == 2) gamma = datagen::sigma_alternative_diag(p, 0.125, 1.0, 1.0).gamma;
    else gamma = datagen::sigma_alternative_cs(p, 0.1, 1.0, 2.0).gamma;
    for (const auto& dist : dists) {
      for (Index n : kSphericityN) {
        Cell c;
        c.hypothesis = hypothesis;
        c.row = "p=" + std::to_string(p);
        c.column = dist.to_string() + " n=" + std::to_string(n);
        c.design.test = TestKind::Sphericity;
        c.design.samples = {datagen::ChenLinearMap{gamma, dist}};
        c.design.n = {n};
        t.cells.push_back(std::move(c));
      }
    }
  }
  return t;
}

std::vector<std::pair<std::string, std::array<Distribution, 4>>> block_rows() {
  const Distribution normal = datagen::Normal{0, 1};
  const Distribution lognormal = datagen::LogNormal{0, 1};
  const Distribution t5 = datagen::StudentT{5};
  const Distribution gumbel = datagen::Gumbel{10, 2};
  auto same = [](const Distribution& d) { return std::array<Distribution, 4>{d, d, d, d}; };
  return {{normal.to_string(), same(normal)},
          {lognormal.to_string(), same(lognormal)},
          {t5.to_string(), same(t5)},
          {gumbel.to_string(), same(gumbel)},
          {"hybrid", {normal, lognormal, t5, gumbel}}};
}

Cell block_cell(TestKind test, const std::string& hypothesis, const std::string& row,
                const std::array<Distribution, 4>& dists, Index n, Index p,
                std::vector<double> rhos, bool second_grid_is_small, MatrixKind kind) {
  Cell c;
  c.design.options.kind = kind;
  c.hypothesis = hypothesis;
  c.row = row;
  const Index shown_n = second_grid_is_small && n == 4 ? 20 : n;
  c.column = np_label(shown_n, p);
  c.design.test = test;
  for (double rho : rhos) {
    c.design.samples.push_back(datagen::BlockDiagonal{p / 4, rho, dists});
    c.design.n.push_back(shown_n);
  }
  if (p % 4 != 0) c.infeasible = "block-diagonal model needs p divisible by 4";
  return c;
}

TableSpec identity_table() {
  TableSpec t;
  t.id = "4";
  // Pearson correlation: this is the reading under which the published
  // rates are reproduced; the covariance statistic gives markedly different power.
  t.title = "Identity test (Pearson correlation), block-diagonal model, rho = 0 / 0.15, %";
  for (const auto& [hyp, rho] : {std::pair<std::string, double>{"null", 0.0}, {"alternative", 0.15}})
    for (const auto& [row, dists] : block_rows())
      for (const auto& [n, p] : kBlockGrid)
        t.cells.push_back(block_cell(TestKind::Identity, hyp, row, dists, n, p, {rho}, false,
                                     MatrixKind::Correlation));
  return t;
}

TableSpec two_sample_table() {
  TableSpec t;
  t.id = "5";
  t.title = "Two-sample test, block-diagonal model, rho 0.15 vs 0.15 (null) and 0.15 vs 0.30, %";
  for (const auto& [hyp, rho2] :
       {std::pair<std::string, double>{"null", 0.15}, {"alternative", 0.30}})
    for (const auto& [row, dists] : block_rows())
      for (const auto& [n, p] : kBlockGrid)
        t.cells.push_back(
            block_cell(TestKind::TwoSample, hyp, row, dists, n, p, {0.15, rho2}, true,
                       MatrixKind::Covariance));
  return t;
}

TableSpec moving_average_table() {
  TableSpec t;
  t.id = "6";
  t.title = "Two-sample test, moving-average models, n1 = n2 = 20, %";
  const Distribution g4 = datagen::Gamma{4, 0.5};
  const Distribution g05 = datagen::Gamma{0.5, std::sqrt(2.0)};
  const std::vector<std::pair<Distribution, Distribution>> pairs{{g4, g05}, {g05, g05}, {g4, g4}};
  for (const auto& [hyp, order2] : {std::pair<std::string, int>{"null", 2}, {"alternative", 3}}) {
    for (const auto& [d1, d2] : pairs) {
      for (Index p : {50, 100, 200, 300, 600, 800}) {
        Cell c;
        c.hypothesis = hyp;
        c.row = d1.to_string() + " | " + d2.to_string();
        c.column = "p=" + std::to_string(p);
        c.design.test = TestKind::TwoSample;
        c.design.samples = {datagen::MovingAverage{2, p, d1}, datagen::MovingAverage{order2, p, d2}};
        c.design.n = {20, 20};
        t.cells.push_back(std::move(c));
      }
    }
  }
  return t;
}

TableSpec sparse_table() {
  TableSpec t;
  t.id = "7";
  t.title = "Two-sample test, sparse alternative, n1 = n2 = 30, %";
  const std::vector<Distribution> dists{
      datagen::Normal{0, 1},   datagen::Normal{2, 1},     datagen::Normal{4, 1},
      datagen::Gamma{5, 1},    datagen::Gamma{10, 1},     datagen::Poisson{5},
      datagen::Poisson{10},    datagen::LogNormal{0, 0.4}, datagen::LogNormal{0, 0.3}};
  for (bool alternative : {false, true}) {
    for (const auto& dist : dists) {
      for (Index p : {50, 100, 200, 400, 800}) {
        Cell c;
        c.hypothesis = alternative ? "alternative" : "null";
        c.row = dist.to_string();
        c.column = "p=" + std::to_string(p);
        c.design.test = TestKind::TwoSample;
        c.design.samples = {datagen::SparseCai{p, 0, 0, dist, false},
                            datagen::SparseCai{p, 0, 0, dist, alternative}};
        c.design.n = {30, 30};
        c.design.redraw_sparse_delta = true;
        c.design.track_ssnr = true;
        t.cells.push_back(std::move(c));
      }
    }
  }
  return t;
}

struct ReplicateOutcome {
  bool completed = false;
  bool rejected = false;
  double ssnr = std::numeric_limits<double>::quiet_NaN();
  std::string error;
  std::vector<std::string> warnings;
};

void check_design(const StudyDesign& d) {
  if (d.samples.empty() || d.samples.size() != d.n.size()) {
    throw InputError("design needs one row count per sample");
  }
  validate_test_options(d.test, d.options, d.samples.size());
  for (const auto& s : d.samples) datagen::validate(s);
  const Index p = datagen::dimension(d.samples.front());
  for (const auto& s : d.samples) {
    if (datagen::dimension(s) != p) throw InputError("samples generate different dimensions");
  }
  if (d.test == TestKind::Uncorrelation) BlockPartition(d.options.blocks, p);
}

}  // namespace

TableSpec default_table(int id) {
  switch (id) {
    case 1:
    case 2:
    case 3: return sphericity_table(id);
    case 4: return identity_table();
    case 5: return two_sample_table();
    case 6: return moving_average_table();
    case 7: return sparse_table();
    default: throw InputError("table id must be 1..7, got " + std::to_string(id));
  }
}

std::uint64_t cell_seed(std::uint64_t master, const std::string& table_id, const Cell& cell) {
  const std::string key = table_id + "|" + cell.hypothesis + "|" + cell.row + "|" + cell.column;
  return rng::derive_seed(master, {fnv1a(key)});
}

CellResult run_cell(const std::string& table_id, const Cell& cell, const RunSettings& settings) {
  CellResult result;
  result.hypothesis = cell.hypothesis;
  result.row = cell.row;
  result.column = cell.column;
  result.replicates = settings.replicates;
  result.rate_percent = std::numeric_limits<double>::quiet_NaN();
  result.se_percent = std::numeric_limits<double>::quiet_NaN();

  if (!cell.infeasible.empty()) {
    result.flags.push_back("infeasible: " + cell.infeasible);
    return result;
  }
  try {
    check_design(cell.design);
  } catch (const InputError& e) {
    result.flags.push_back(std::string("infeasible: ") + e.what());
    return result;
  }
  if (settings.replicates < 1) throw InputError("replicates must be >= 1");
  if (!(settings.alpha > 0.0 && settings.alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");

  const std::uint64_t seed = cell_seed(settings.seed, table_id, cell);
  const std::uint64_t structure_seed = rng::derive_seed(seed, {4});
  std::vector<ReplicateOutcome> outcomes(settings.replicates);

  const auto failure = parallel_for(settings.replicates, settings.workers, [&](std::size_t j) {
    ReplicateOutcome& out = outcomes[j];
    const std::uint64_t delta_seed = rng::derive_seed(seed, {3, j});
    try {
      std::vector<DataMatrixd> data;
      data.reserve(cell.design.samples.size());
      for (std::size_t k = 0; k < cell.design.samples.size(); ++k) {
        GeneratorSpec spec = cell.design.samples[k];
        if (auto* sparse = std::get_if<datagen::SparseCai>(&spec);
            sparse && cell.design.redraw_sparse_delta) {
          sparse->structure_seed = structure_seed;
          sparse->delta_seed = delta_seed;
        }
        data.push_back(datagen::generate(spec, cell.design.n[k], rng::derive_seed(seed, {1, j, k})));
      }
      if (cell.design.track_ssnr) {
        const auto& x = data.front().values();
        out.ssnr = datagen::ssnr(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
      }
      PermutationConfig cfg;
      cfg.r = settings.permutations;
      cfg.seed = rng::derive_seed(seed, {2, j});
      const TestResult test = run_test(cell.design.test, data, cell.design.options, cfg);
      out.completed = true;
      out.rejected = test.p_value <= settings.alpha;
      out.warnings = test.warnings;
    } catch (const InternalError&) {
      throw;
    } catch (const Error& e) {
      out.error = e.what();
    }
  });
  if (failure) std::rethrow_exception(failure->error);

  std::set<std::string> seen;
  std::vector<double> ssnrs;
  for (std::size_t j = 0; j < outcomes.size(); ++j) {
    const auto& o = outcomes[j];
    if (o.completed) {
      ++result.completed;
      if (o.rejected) ++result.rejections;
      for (const auto& w : o.warnings)
        if (seen.insert(w).second) result.flags.push_back(w);
    } else {
      if (result.failed == 0) {
        result.flags.push_back("replicate " + std::to_string(j) + " failed: " + o.error);
      }
      ++result.failed;
    }
    if (std::isfinite(o.ssnr)) ssnrs.push_back(o.ssnr);
  }
  if (result.failed > 0) {
    result.flags.push_back(std::to_string(result.failed) + " replicate(s) failed and were excluded");
  }
  if (result.completed > 0) {
    const double rate = static_cast<double>(result.rejections) / static_cast<double>(result.completed);
    result.rate_percent = 100.0 * rate;
    result.se_percent = 100.0 * std::sqrt(rate * (1.0 - rate) / static_cast<double>(result.completed));
  }
  if (ssnrs.size() >= 2) {
    const Eigen::Map<const VectorX<double>> v(ssnrs.data(), static_cast<Index>(ssnrs.size()));
    result.ssnr_mean = v.mean();
    result.ssnr_sd =
        std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
  }
  return result;
}

std::vector<CellResult> run_table(const TableSpec& table) {
  std::vector<CellResult> results;
  results.reserve(table.cells.size());
  for (const auto& cell : table.cells) results.push_back(run_cell(table.id, cell, table.settings));
  return results;
}

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw InputError("empty entry in list '" + text + "'");
    out.push_back(item.substr(first, last - first + 1));
  }
  return out;
}

std::uint64_t parse_count(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw InputError("config key '" + key + "' must be a non-negative integer, got '" + text + "'");
  }
  return v;
}

}  // namespace

TableSpec study_from_config(std::string_view text) {
  const auto pairs = datagen::parse_key_values(text);
  const std::set<std::string> study_keys{"test",  "samples", "n",           "replicates",
                                         "permutations", "alpha", "blocks", "matrix_kind",
                                         "method", "redraw_delta", "ssnr", "label"};
  std::map<std::string, std::string> study;
  std::vector<std::pair<std::string, std::string>> shared;
  std::map<std::size_t, std::vector<std::pair<std::string, std::string>>> per_sample;
  for (const auto& [key, value] : pairs) {
    if (study_keys.count(key)) {
      study[key] = value;
    } else if (key.rfind("sample", 0) == 0 && key.find('.') != std::string::npos) {
      const auto dot = key.find('.');
      const std::size_t k = parse_count(key, key.substr(6, dot - 6));
      if (k < 1) throw InputError("sample prefixes are 1-based: '" + key + "'");
      per_sample[k].emplace_back(key.substr(dot + 1), value);
    } else {
      shared.emplace_back(key, value);
    }
  }
  if (!study.count("test")) throw InputError("config is missing key 'test'");

  Cell cell;
  StudyDesign& d = cell.design;
  d.test = parse_test_kind(study["test"]);
  std::size_t samples = d.test == TestKind::TwoSample ? 2 : 1;
  if (study.count("samples")) samples = parse_count("samples", study["samples"]);
  if (samples < 1) throw InputError("samples must be >= 1");
  for (const auto& [k, kv] : per_sample) {
    if (k > samples) throw InputError("config names sample " + std::to_string(k) + " but samples = " +
                                      std::to_string(samples));
  }
  for (std::size_t k = 1; k <= samples; ++k) {
    std::map<std::string, std::string> merged(shared.begin(), shared.end());
    for (const auto& [key, value] : per_sample[k]) merged[key] = value;
    std::string gen;
    for (const auto& [key, value] : merged) gen += key + " = " + value + "\n";
    d.samples.push_back(datagen::from_config(gen));
  }

  if (!study.count("n")) throw InputError("config is missing key 'n'");
  for (const auto& v : split_list(study["n"])) d.n.push_back(static_cast<Index>(parse_count("n", v)));
  if (d.n.size() == 1) d.n.assign(samples, d.n.front());
  if (d.n.size() != samples) throw InputError("n needs one value or one value per sample");

  if (study.count("matrix_kind")) d.options.kind = parse_matrix_kind(study["matrix_kind"]);
  if (study.count("method")) d.options.method = parse_correlation_method(study["method"]);
  if (study.count("blocks")) {
    for (const auto& v : split_list(study["blocks"]))
      d.options.blocks.push_back(static_cast<Index>(parse_count("blocks", v)));
  }
  auto flag = [&](const char* key) {
    if (!study.count(key)) return false;
    if (study[key] == "true") return true;
    if (study[key] == "false") return false;
    throw InputError(std::string("config key '") + key + "' must be true or false");
  };
  d.redraw_sparse_delta = flag("redraw_delta");
  d.track_ssnr = flag("ssnr");

  TableSpec table;
  table.id = "config";
  table.title = "Custom study: " + to_string(d.test);
  if (study.count("replicates")) table.settings.replicates = parse_count("replicates", study["replicates"]);
  if (study.count("permutations"))
    table.settings.permutations = parse_count("permutations", study["permutations"]);
  if (study.count("alpha")) {
    const std::string& a = study["alpha"];
    double alpha = 0;
    const auto res = std::from_chars(a.data(), a.data() + a.size(), alpha);
    if (res.ec != std::errc() || res.ptr != a.data() + a.size()) throw InputError("alpha must be a number");
    table.settings.alpha = alpha;
  }
  cell.hypothesis = "study";
  cell.row = study.count("label") ? study["label"] : to_string(d.test);
  std::string column;
  for (std::size_t k = 0; k < d.n.size(); ++k) column += (k ? "," : "n=") + std::to_string(d.n[k]);
  cell.column = column + " p=" + std::to_string(datagen::dimension(d.samples.front()));
  table.cells.push_back(std::move(cell));
  return table;
}

std::string render_text(const TableSpec& table, const std::vector<CellResult>& results) {
  std::vector<std::string> columns;
  std::vector<std::pair<std::string, std::string>> rows;
  std::map<std::pair<std::string, std::string>, std::map<std::string, const CellResult*>> grid;
  for (const auto& r : results) {
    if (std::find(columns.begin(), columns.end(), r.column) == columns.end()) columns.push_back(r.column);
    const auto key = std::make_pair(r.hypothesis, r.row);
    if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
    grid[key][r.column] = &r;
  }
  const bool any_ssnr = std::any_of(results.begin(), results.end(),
                                    [](const CellResult& r) { return r.ssnr_mean.has_value(); });

  std::size_t label_width = 0;
  for (const auto& [h, row] : rows) label_width = std::max(label_width, h.size() + row.size() + 3);
  std::vector<std::size_t> widths;
  for (const auto& c : columns) widths.push_back(std::max<std::size_t>(c.size(), 6));

  std::ostringstream out;
  out << "Table " << table.id << ": " << table.title << "\n"
      << "replicates = " << table.settings.replicates
      << ", permutations = " << table.settings.permutations << ", alpha = " << table.settings.alpha
      << ", seed = " << table.settings.seed << "\n";
  out << std::left << std::setw(static_cast<int>(label_width)) << "";
  if (any_ssnr) out << std::right << std::setw(13) << "SSNR";
  for (std::size_t c = 0; c < columns.size(); ++c)
    out << "  " << std::right << std::setw(static_cast<int>(widths[c])) << columns[c];
  out << "\n";

  std::vector<std::string> notes;
  for (const auto& key : rows) {
    out << std::left << std::setw(static_cast<int>(label_width)) << (key.first + " | " + key.second);
    if (any_ssnr) {
      double sum = 0, sd = 0;
      int count = 0;
      for (const auto& [col, r] : grid[key]) {
        if (r->ssnr_mean) {
          sum += *r->ssnr_mean;
          sd += *r->ssnr_sd;
          ++count;
        }
      }
      const std::string s = count ? fmt(sum / count, 1) + " (" + fmt(sd / count, 1) + ")" : "-";
      out << std::right << std::setw(13) << s;
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
      std::string cell = "";
      const auto it = grid[key].find(columns[c]);
      if (it != grid[key].end()) {
        const CellResult& r = *it->second;
        cell = std::isfinite(r.rate_percent) ? fmt(r.rate_percent, 1) : "n/a";
        if (!r.flags.empty()) {
          cell += "*";
          for (const auto& f : r.flags)
            notes.push_back(key.first + " | " + key.second + " | " + columns[c] + ": " + f);
        }
      }
      out << "  " << std::right << std::setw(static_cast<int>(widths[c])) << cell;
    }
    out << "\n";
  }
  for (const auto& n : notes) out << "* " << n << "\n";
  return out.str();
}

}  // namespace covtest::sim
