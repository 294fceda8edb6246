#pragma once

#include <span>
#include <vector>

namespace llmrouter {

/// Sample Pearson correlation. Throws DomainError on length < 2, mismatched
/// lengths, or a constant input (undefined correlation).
double pearson(std::span<const double> xs, std::span<const double> ys);

/// Spearman rank correlation: Pearson of average ranks (ties share the mean
/// of the ranks they occupy).
double spearman(std::span<const double> xs, std::span<const double> ys);

/// Average ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> values);

double mean(std::span<const double> values);

/// Population standard deviation.
double population_sd(std::span<const double> values);

}  // namespace llmrouter
