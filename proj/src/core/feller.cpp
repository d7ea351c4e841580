#include "core/feller.hpp"

#include <cmath>
#include <fmt/format.h>

#include "core/rng.hpp"

namespace scalimit {

namespace {

ContinuousPath euler_impl(const PopulationModel& model, double x0, double T, double dt,
                          std::uint64_t seed,
                          const std::function<double(double, double)>& drift_shift) {
    if (!(dt > 0)) throw domain_error("euler_path: dt must be > 0");
    if (!(x0 >= 0)) throw domain_error("euler_path: x0 must be >= 0");
    if (!(T > 0)) throw domain_error("euler_path: T must be > 0");
    const std::size_t n = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
    const double h = T / static_cast<double>(n);
    const double sqrt_h = std::sqrt(h);

    CounterRng rng(seed);
    ContinuousPath path;
    path.grid.resize(n + 1);
    path.X.resize(n + 1);
    double x = x0;
    path.grid[0] = 0;
    path.X[0] = x;
    if (x == 0) path.absorbed_at = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double t = static_cast<double>(k) * h;
        if (x > 0) {
            double mu = net_drift(model, x) - (drift_shift ? drift_shift(t, x) : 0.0);
            double next = x + mu * h + model.sigma(x) * sqrt_h * rng.normal();
            if (!std::isfinite(next))
                throw numeric_error(fmt::format("euler_path: non-finite state at step {}", k));
            x = std::max(0.0, next);
            if (x == 0 && !path.absorbed_at) path.absorbed_at = t + h;
        }
        path.grid[k + 1] = static_cast<double>(k + 1) * h;
        path.X[k + 1] = x;
    }
    path.grid[n] = T;
    return path;
}

}  // namespace

ContinuousPath euler_path(const PopulationModel& model, double x0, double T, double dt,
                          std::uint64_t seed) {
    return euler_impl(model, x0, T, dt, seed, nullptr);
}

ContinuousPath controlled_euler_path(const PopulationModel& model, double x0, double T, double dt,
                                     const std::function<double(double, double)>& policy,
                                     const std::function<double(double, double)>& h,
                                     std::uint64_t seed) {
    if (!policy || !h) throw domain_error("controlled_euler_path: policy and h are required");
    auto shift = [&policy, &h](double t, double x) { return h(x, policy(t, x)); };
    return euler_impl(model, x0, T, dt, seed, shift);
}

double exact_feller_sample(double drift_slope, double sigma2, double x0, double t,
                           CounterRng& rng) {
    if (!(sigma2 > 0)) throw domain_error("exact_feller_sample: sigma2 must be > 0");
    if (!(x0 >= 0)) throw domain_error("exact_feller_sample: x0 must be >= 0");
    if (!(t > 0)) throw domain_error("exact_feller_sample: t must be > 0");
    if (x0 == 0) return 0.0;
    // Laplace transform of the transition is exp(-x0 c e^{bt} theta / (c + theta))
    // with c = 2b / (sigma2 (e^{bt} - 1)); that is a Poisson(x0 c e^{bt}) number
    // of Exp(c) atoms, i.e. Gamma(N, 1/c) with an atom at 0.
    const double b = drift_slope;
    double c;
    if (std::abs(b) < 1e-12) {
        c = 2.0 / (sigma2 * t);
    } else {
        c = 2.0 * b / (sigma2 * std::expm1(b * t));
    }
    const double lambda = x0 * c * std::exp(b * t);
    const std::uint64_t n = rng.poisson(lambda);
    if (n == 0) return 0.0;
    return rng.gamma(static_cast<double>(n), 1.0 / c);
}

double exact_feller_sample(double drift_slope, double sigma2, double x0, double t,
                           std::uint64_t seed) {
    CounterRng rng(seed);
    return exact_feller_sample(drift_slope, sigma2, x0, t, rng);
}

}  // namespace scalimit
