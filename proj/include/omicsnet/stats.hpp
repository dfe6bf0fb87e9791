#ifndef OMICSNET_STATS_HPP
#define OMICSNET_STATS_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace omicsnet::stats {

double mean(std::span<const double> x);

/// Sample variance, divisor n-1. Two-pass.
double variance(std::span<const double> x);

/// Pearson correlation; returns 0 when either vector has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Ranks starting at 1 with ties assigned their average rank.
std::vector<double> average_ranks(std::span<const double> x);

} // namespace omicsnet::stats

#endif
