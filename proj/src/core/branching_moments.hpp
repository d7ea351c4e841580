#ifndef SCALIMIT_CORE_BRANCHING_MOMENTS_HPP
#define SCALIMIT_CORE_BRANCHING_MOMENTS_HPP

#include <cstdint>
#include <vector>

#include "core/model.hpp"
#include "core/table.hpp"

namespace scalimit {

// Parameters of the closed-form exponential moment
//   F(n, beta, t) = E_n[exp(beta1 int_0^t N_s ds + beta2 N_t)]
// of a linear branching process with birth rate nu and death rate mu,
// together with the derived quantities of its Riccati solution.
struct MomentParams {
    double nu = 0, mu = 0;
    double beta1 = 0, beta2 = 0;
    // derived
    double gamma = 0;      // (nu + mu - beta1) / (2 nu)
    double phi = 0;        // nu gamma^2 - mu
    double delta = 0;      // sqrt(nu/phi) (e^{beta2} - gamma)
    double alpha_log = 0;  // log((delta-1)/(delta+1)), -inf on the delta = 1 boundary
    double t_star = 0;     // -alpha_log / (2 sqrt(nu phi)), +inf on the boundary
    bool boundary = false; // delta = 1 up to rounding; the continuous extension applies
};

// Throws domain_error when phi <= 0 or delta < 1 (inadmissible exponents).
MomentParams make_moment_params(double nu, double mu, double beta1, double beta2);

// Exact formula value; requires 0 <= t < t_star.  Blow-up (t past the horizon
// or an overflowing power) raises numeric_error.
double closed_form_F(long long n, const MomentParams& params, double t);

double horizon_t_star(const MomentParams& params);

// K -> infinity limit of the moment exponents along nu_K = nu + aK,
// mu_K = mu + aK, beta_K = beta / K:  lim F(nK, beta_K, t) = e^{n Psi(beta, t)}.
struct LimitMoment {
    double psi = 0;
    double t_star = 0;
    double eta = 0;
    double lambda_inf = 0;
};

// Requires (nu - mu)^2 > 4 a beta1 and Lambda_inf >= 1 (boundary extension at 1).
LimitMoment limit_moment_psi(double a, double nu, double mu, double beta1, double beta2, double t);

// Monte-Carlo check of the uniform-in-K exponential moment: per-K estimates of
// E[exp(beta1 int X^K + beta2 X^K_T)] with closed-form and Psi-limit columns.
// Requires a linear model; flags an upward trend beyond CI overlap.
struct UniformMomentCheck {
    ExperimentTable table;
    bool upward_trend = false;
};

UniformMomentCheck uniform_moment_check(const PopulationModel& model,
                                        const std::vector<double>& K_list, double beta1,
                                        double beta2, double x0, double T, std::size_t n_paths,
                                        std::uint64_t seed, unsigned workers = 0);

}  // namespace scalimit

#endif
