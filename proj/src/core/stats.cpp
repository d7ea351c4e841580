#include "core/stats.hpp"

#include <algorithm>

namespace scalimit {

McStat mc_stat(std::span<const double> sample) {
    McStat s;
    s.n = sample.size();
    if (s.n == 0) return s;
    double mean = 0;
    for (double v : sample) mean += v;
    mean /= static_cast<double>(s.n);
    double ss = 0;
    for (double v : sample) ss += (v - mean) * (v - mean);
    s.mean = mean;
    s.var = s.n > 1 ? ss / static_cast<double>(s.n - 1) : 0.0;
    return s;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw domain_error("ks_statistic: empty sample");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < sa.size() && j < sb.size()) {
        double x = std::min(sa[i], sb[j]);
        while (i < sa.size() && sa[i] <= x) ++i;
        while (j < sb.size() && sb[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw domain_error("wasserstein1: empty sample");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    // integral of |F_a - F_b| over the merged support
    const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
    std::size_t i = 0, j = 0;
    double w = 0, prev = std::min(sa[0], sb[0]);
    while (i < sa.size() || j < sb.size()) {
        double x;
        if (j >= sb.size() || (i < sa.size() && sa[i] <= sb[j]))
            x = sa[i];
        else
            x = sb[j];
        w += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (x - prev);
        prev = x;
        while (i < sa.size() && sa[i] <= x) ++i;
        while (j < sb.size() && sb[j] <= x) ++j;
    }
    return w;
}

}  // namespace scalimit
