#ifndef SCALIMIT_CORE_MODEL_HPP
#define SCALIMIT_CORE_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "core/errors.hpp"

namespace scalimit {

using RealMap = std::function<double(double)>;

// Birth/death population model.  The per-unit coefficient functions f^b, f^d
// and sigma^2 define the scaled jump intensities
//   lambda_b(K, x) = f^b(x) K + sigma^2(x) K^2 / 2,
//   lambda_d(K, x) = f^d(x) K + sigma^2(x) K^2 / 2,
// and the limit diffusion dX = f(X) dt + sigma(X) dB, f = f^b - f^d.
// All coefficients vanish on x <= 0 so the state 0 is absorbing.
class PopulationModel {
  public:
    enum class Kind { Linear, Custom };

    // Linear model: f^b = nu x, f^d = mu x, sigma^2(x) = sigma2 x.
    static PopulationModel linear(double nu, double mu, double sigma2);

    // Custom coefficient maps with user-supplied certificates for the linear
    // envelopes f^b <= nu x, f^d <= mu x, eta_lo x <= sigma^2 <= eta (1 + x).
    static PopulationModel custom(RealMap fb, RealMap fd, RealMap sig2,
                                  double nu, double mu, double eta, double eta_lo);

    Kind kind() const { return kind_; }
    double nu() const { return nu_; }
    double mu() const { return mu_; }
    double sigma2_slope() const { return sigma2_; }
    double eta() const { return eta_; }
    double eta_lo() const { return eta_lo_; }

    double fb(double x) const;
    double fd(double x) const;
    double sigma2(double x) const;
    double sigma(double x) const { return std::sqrt(sigma2(x)); }

  private:
    PopulationModel() = default;

    Kind kind_ = Kind::Linear;
    double nu_ = 0, mu_ = 0, sigma2_ = 0;
    double eta_ = 0, eta_lo_ = 0;
    RealMap fb_, fd_, sig2_;
};

// Scaling parameter, initial scaled population and horizon of one experiment.
// The integer initial count is round(K x0).
struct ScalingContext {
    double K = 1;
    double x0 = 0;
    double horizon_T = 1;

    ScalingContext(double K_, double x0_, double T_);
    long long initial_count() const { return std::llround(K * x0); }
    // Initial scaled state as actually representable on the 1/K lattice.
    double x0_lattice() const { return static_cast<double>(initial_count()) / K; }
};

double birth_intensity(const PopulationModel& model, double K, double x);
double death_intensity(const PopulationModel& model, double K, double x);
double net_drift(const PopulationModel& model, double x);

struct ValidationReport {
    struct Violation {
        double x;
        std::string what;
    };
    std::vector<Violation> violations;
    double max_slope_f = 0;       // finite-difference Lipschitz estimate for f
    double max_slope_sigma2 = 0;  // same for sigma^2

    bool ok() const { return violations.empty(); }
};

// Samples the model bounds of its standing assumption on x_grid.  Violations
// are report entries, never exceptions.
ValidationReport validate_model(const PopulationModel& model, std::span<const double> x_grid);

}  // namespace scalimit

#endif
