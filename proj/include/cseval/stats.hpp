#pragma once

#include <cstddef>
#include <vector>

#include "cseval/common.hpp"

namespace cseval::stats {

struct PairedSeries {
  std::vector<double> m1;
  std::vector<double> m2;
  size_t n() const { return m1.size(); }
  void check_aligned() const;
};

enum class TauVariant { plain, tie_corrected };

// (Concordant - Discordant) / (Concordant + Discordant); tied pairs count in
// neither term. The tie-corrected variant is tau-b. Throws ValidationError
// when every pair is tied (the ratio is undefined).
double kendall_tau(const PairedSeries& s, TauVariant variant = TauVariant::plain);

// Ranks 1..n; tied values share the mean of their positional ranks.
std::vector<double> rank_with_average_ties(const std::vector<double>& values);

// Pearson correlation of the two rank series. Throws on constant input.
double spearman(const PairedSeries& s);

// Population covariance over the product of population standard deviations,
// clamped to [-1, 1]. Throws on constant input.
double pearson(const PairedSeries& s);

double mae(const PairedSeries& s);

}  // namespace cseval::stats
