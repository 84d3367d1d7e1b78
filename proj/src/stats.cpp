#include "cseval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cseval::stats {

void PairedSeries::check_aligned() const {
  if (m1.size() != m2.size())
    throw UsageError("paired series lengths differ: " + std::to_string(m1.size()) + " vs " +
                     std::to_string(m2.size()));
}

double kendall_tau(const PairedSeries& s, TauVariant variant) {
  s.check_aligned();
  const size_t n = s.n();
  if (n < 2) throw UsageError("kendall_tau needs at least 2 observations");
  long long concordant = 0, discordant = 0;
  long long ties1 = 0, ties2 = 0;  // pairs tied in m1 / in m2
  for (size_t i = 0; i + 1 < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      double d1 = s.m1[i] - s.m1[j];
      double d2 = s.m2[i] - s.m2[j];
      if (d1 == 0.0) ++ties1;
      if (d2 == 0.0) ++ties2;
      double prod = d1 * d2;
      if (prod > 0.0)
        ++concordant;
      else if (prod < 0.0)
        ++discordant;
    }
  }
  if (variant == TauVariant::plain) {
    long long denom = concordant + discordant;
    if (denom == 0)
      throw ValidationError("kendall_tau undefined: every pair is tied");
    return static_cast<double>(concordant - discordant) / static_cast<double>(denom);
  }
  // tau-b
  long long total = static_cast<long long>(n) * (n - 1) / 2;
  double d1 = static_cast<double>(total - ties1);
  double d2 = static_cast<double>(total - ties2);
  if (d1 <= 0.0 || d2 <= 0.0)
    throw ValidationError("kendall_tau undefined: a series is constant");
  double tau = static_cast<double>(concordant - discordant) / std::sqrt(d1 * d2);
  return std::clamp(tau, -1.0, 1.0);
}

std::vector<double> rank_with_average_ties(const std::vector<double>& values) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(const PairedSeries& s) {
  s.check_aligned();
  const size_t n = s.n();
  if (n < 2) throw UsageError("pearson needs at least 2 observations");
  double mean1 = std::accumulate(s.m1.begin(), s.m1.end(), 0.0) / n;
  double mean2 = std::accumulate(s.m2.begin(), s.m2.end(), 0.0) / n;
  double cov = 0.0, var1 = 0.0, var2 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double a = s.m1[i] - mean1;
    double b = s.m2[i] - mean2;
    cov += a * b;
    var1 += a * a;
    var2 += b * b;
  }
  if (var1 == 0.0 || var2 == 0.0)
    throw ValidationError("pearson undefined: a series is constant");
  double r = cov / std::sqrt(var1 * var2);
  return std::clamp(r, -1.0, 1.0);
}

double spearman(const PairedSeries& s) {
  s.check_aligned();
  if (s.n() < 2) throw UsageError("spearman needs at least 2 observations");
  PairedSeries ranks{rank_with_average_ties(s.m1), rank_with_average_ties(s.m2)};
  return pearson(ranks);
}

double mae(const PairedSeries& s) {
  s.check_aligned();
  const size_t n = s.n();
  if (n < 1) throw UsageError("mae needs at least 1 observation");
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) sum += std::abs(s.m1[i] - s.m2[i]);
  return sum / static_cast<double>(n);
}

}  // namespace cseval::stats
