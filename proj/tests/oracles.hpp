#pragma once

// Reference implementations for tests. Plain loops over std::vector, written
// from the textbook definitions and sharing no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;  // rows[i][j]: subject i, variable j
using Square = std::vector<std::vector<double>>;

inline std::vector<double> column(const Rows& d, std::size_t j) {
  std::vector<double> c;
  for (const auto& row : d) c.push_back(row[j]);
  return c;
}

inline double mean(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline Square covariance(const Rows& d) {
  const std::size_t n = d.size(), p = d[0].size();
  std::vector<double> mu(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) mu[j] = mean(column(d, j));
  Square s(p, std::vector<double>(p, 0.0));
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) {
      double acc = 0;
      for (std::size_t i = 0; i < n; ++i) acc += (d[i][a] - mu[a]) * (d[i][b] - mu[b]);
      s[a][b] = acc / static_cast<double>(n - 1);
    }
  return s;
}

inline Square pearson(const Rows& d) {
  Square s = covariance(d);
  const std::size_t p = s.size();
  Square r(p, std::vector<double>(p, 0.0));
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) r[a][b] = s[a][b] / std::sqrt(s[a][a] * s[b][b]);
  return r;
}

/// Mid-rank of each value: (#smaller) + (#equal + 1) / 2.
inline std::vector<double> midranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double v : x) {
      if (v < x[i]) ++less;
      if (v == x[i]) ++equal;
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

inline Square spearman(const Rows& d) {
  Rows ranked = d;
  const std::size_t p = d[0].size();
  for (std::size_t j = 0; j < p; ++j) {
    const auto r = midranks(column(d, j));
    for (std::size_t i = 0; i < d.size(); ++i) ranked[i][j] = r[i];
  }
  return pearson(ranked);
}

/// Kendall tau-b from an O(n^2) pair count.
inline double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  double concordant = 0, discordant = 0, ties_x_only = 0, ties_y_only = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) ++ties_x_only;
      else if (dy == 0) ++ties_y_only;
      else if ((dx > 0) == (dy > 0)) ++concordant;
      else ++discordant;
    }
  return (concordant - discordant) /
         std::sqrt((concordant + discordant + ties_x_only) * (concordant + discordant + ties_y_only));
}

inline Square kendall(const Rows& d) {
  const std::size_t p = d[0].size();
  Square r(p, std::vector<double>(p, 1.0));
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b)
      if (a != b) r[a][b] = kendall_tau_b(column(d, a), column(d, b));
  return r;
}

/// Lower triangle, column by column; `diagonal` false gives vech*.
inline std::vector<double> half_vec(const Square& s, bool diagonal = true) {
  std::vector<double> v;
  for (std::size_t j = 0; j < s.size(); ++j)
    for (std::size_t i = diagonal ? j : j + 1; i < s.size(); ++i) v.push_back(s[i][j]);
  return v;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  return ab / std::sqrt(aa * bb);
}

inline Square identity(std::size_t p) {
  Square s(p, std::vector<double>(p, 0.0));
  for (std::size_t i = 0; i < p; ++i) s[i][i] = 1.0;
  return s;
}

inline double sphericity(const Square& s) { return 1 - cosine(half_vec(s), half_vec(identity(s.size()))); }

inline double two_sample_covariance(const Square& a, const Square& b) {
  return 1 - cosine(half_vec(a), half_vec(b));
}

/// Calls visit(first_rows, second_rows) for every split of `pooled` into
/// n1 + (n - n1) rows.
inline void for_each_split(const Rows& pooled, std::size_t n1,
                           const std::function<void(const Rows&, const Rows&)>& visit) {
  const std::size_t n = pooled.size();
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(n1), true);
  do {
    Rows a, b;
    for (std::size_t i = 0; i < n; ++i) (pick[i] ? a : b).push_back(pooled[i]);
    visit(a, b);
  } while (std::prev_permutation(pick.begin(), pick.end()));
}

/// Exact permutation distribution of the two-sample covariance statistic:
/// the statistic of every split, in enumeration order.
inline std::vector<double> two_sample_null_distribution(const Rows& first, const Rows& second) {
  Rows pooled = first;
  pooled.insert(pooled.end(), second.begin(), second.end());
  std::vector<double> stats;
  for_each_split(pooled, first.size(), [&](const Rows& a, const Rows& b) {
    stats.push_back(two_sample_covariance(covariance(a), covariance(b)));
  });
  return stats;
}

/// P(T >= observed) under a uniformly random split.
inline double exact_p_value(const std::vector<double>& null_stats, double observed) {
  double count = 0;
  for (double t : null_stats)
    if (t >= observed - 1e-12) ++count;
  return count / static_cast<double>(null_stats.size());
}

}  // namespace oracle
