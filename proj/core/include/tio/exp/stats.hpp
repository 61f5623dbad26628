#pragma once

#include <span>
#include <vector>

namespace tio::exp {

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|. Throws ContractError on an empty sample.
double ks_statistic(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> v);
/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::span<const double> v, double q);

/// True when more than half of the outcomes hold.
bool majority(const std::vector<bool>& outcomes);

}  // namespace tio::exp
