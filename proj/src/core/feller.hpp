#ifndef SCALIMIT_CORE_FELLER_HPP
#define SCALIMIT_CORE_FELLER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "core/model.hpp"

namespace scalimit {

// Discretized trajectory of the limit diffusion.  Values are nonnegative and
// identically 0 from absorbed_at on.
struct ContinuousPath {
    std::vector<double> grid;  // uniform, grid[0] = 0
    std::vector<double> X;
    std::optional<double> absorbed_at;

    double dt() const { return grid.size() > 1 ? grid[1] - grid[0] : 0.0; }
    double final_x() const { return X.back(); }
};

// Positivity-preserving Euler scheme for dX = f(X) dt + sigma(X) dB:
// full truncation at 0 plus permanent absorption once 0 is hit.
ContinuousPath euler_path(const PopulationModel& model, double x0, double T, double dt,
                          std::uint64_t seed);

// Same scheme with drift f - h(x, alpha(t, x)).
ContinuousPath controlled_euler_path(const PopulationModel& model, double x0, double T, double dt,
                                     const std::function<double(double, double)>& policy,
                                     const std::function<double(double, double)>& h,
                                     std::uint64_t seed);

// One exact draw of the linear Feller transition dX = b X dt + sqrt(sigma2 X) dW
// started from x0, via its Poisson-mixture-of-Gamma transition law.
double exact_feller_sample(double drift_slope, double sigma2, double x0, double t,
                           std::uint64_t seed);

// Same draw from a caller-owned stream (for batch sampling).
class CounterRng;
double exact_feller_sample(double drift_slope, double sigma2, double x0, double t, CounterRng& rng);

}  // namespace scalimit

#endif
