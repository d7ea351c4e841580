#ifndef SCALIMIT_CORE_STATS_HPP
#define SCALIMIT_CORE_STATS_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "core/errors.hpp"

namespace scalimit {

// Sample mean / variance / standard error of a batch of scalars.
struct McStat {
    double mean = 0;
    double var = 0;  // unbiased sample variance
    std::size_t n = 0;

    double se() const { return n > 1 ? std::sqrt(var / static_cast<double>(n)) : 0.0; }
};

McStat mc_stat(std::span<const double> sample);

// Exact two-sample Kolmogorov-Smirnov statistic (sorted-merge evaluation).
double ks_statistic(std::span<const double> a, std::span<const double> b);

// Exact 1-d Wasserstein-1 distance between empirical laws.
double wasserstein1(std::span<const double> a, std::span<const double> b);

}  // namespace scalimit

#endif
