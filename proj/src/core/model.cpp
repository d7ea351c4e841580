#include "core/model.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace scalimit {

namespace {

double checked(double v, const char* name, double x) {
    if (!std::isfinite(v))
        throw numeric_error(fmt::format("{}({}) is not finite", name, x));
    return v;
}

}  // namespace

PopulationModel PopulationModel::linear(double nu, double mu, double sigma2) {
    if (nu < 0 || mu < 0 || sigma2 < 0 || !std::isfinite(nu + mu + sigma2))
        throw domain_error("linear model rates must be finite and >= 0");
    PopulationModel m;
    m.kind_ = Kind::Linear;
    m.nu_ = nu;
    m.mu_ = mu;
    m.sigma2_ = sigma2;
    m.eta_ = sigma2;
    m.eta_lo_ = sigma2;
    return m;
}

PopulationModel PopulationModel::custom(RealMap fb, RealMap fd, RealMap sig2,
                                        double nu, double mu, double eta, double eta_lo) {
    if (!fb || !fd || !sig2) throw domain_error("custom model needs all three maps");
    if (nu < 0 || mu < 0 || eta < 0 || eta_lo < 0)
        throw domain_error("custom model certificates must be >= 0");
    PopulationModel m;
    m.kind_ = Kind::Custom;
    m.nu_ = nu;
    m.mu_ = mu;
    m.eta_ = eta;
    m.eta_lo_ = eta_lo;
    m.fb_ = std::move(fb);
    m.fd_ = std::move(fd);
    m.sig2_ = std::move(sig2);
    for (double x : {0.0, 0.5, 1.0, 10.0}) {  // hard error on NaN/inf maps up front
        checked(m.fb_(x), "f^b", x);
        checked(m.fd_(x), "f^d", x);
        checked(m.sig2_(x), "sigma^2", x);
    }
    return m;
}

double PopulationModel::fb(double x) const {
    if (x <= 0) return 0;
    return kind_ == Kind::Linear ? nu_ * x : checked(fb_(x), "f^b", x);
}

double PopulationModel::fd(double x) const {
    if (x <= 0) return 0;
    return kind_ == Kind::Linear ? mu_ * x : checked(fd_(x), "f^d", x);
}

double PopulationModel::sigma2(double x) const {
    if (x <= 0) return 0;
    return kind_ == Kind::Linear ? sigma2_ * x : checked(sig2_(x), "sigma^2", x);
}

ScalingContext::ScalingContext(double K_, double x0_, double T_)
    : K(K_), x0(x0_), horizon_T(T_) {
    if (!(K > 0) || !std::isfinite(K)) throw domain_error("ScalingContext: K must be > 0");
    if (!(x0 >= 0) || !std::isfinite(x0)) throw domain_error("ScalingContext: x0 must be >= 0");
    if (!(horizon_T > 0) || !std::isfinite(horizon_T))
        throw domain_error("ScalingContext: horizon_T must be > 0");
}

double birth_intensity(const PopulationModel& model, double K, double x) {
    if (x < 0) throw domain_error("birth_intensity: x must be >= 0");
    if (!(K > 0)) throw domain_error("birth_intensity: K must be > 0");
    return model.fb(x) * K + model.sigma2(x) * K * K / 2;
}

double death_intensity(const PopulationModel& model, double K, double x) {
    if (x < 0) throw domain_error("death_intensity: x must be >= 0");
    if (!(K > 0)) throw domain_error("death_intensity: K must be > 0");
    return model.fd(x) * K + model.sigma2(x) * K * K / 2;
}

double net_drift(const PopulationModel& model, double x) {
    if (x < 0) throw domain_error("net_drift: x must be >= 0");
    return model.fb(x) - model.fd(x);
}

ValidationReport validate_model(const PopulationModel& model, std::span<const double> x_grid) {
    if (x_grid.empty()) throw domain_error("validate_model: empty grid");
    ValidationReport rep;
    constexpr double tol = 1e-12;
    std::vector<double> grid(x_grid.begin(), x_grid.end());
    std::sort(grid.begin(), grid.end());
    std::vector<double> slopes_f, slopes_s;
    double prev_x = 0, prev_f = 0, prev_s = 0;
    bool have_prev = false;
    for (double x : grid) {
        if (x < 0) {
            rep.violations.push_back({x, "grid point below 0"});
            continue;
        }
        double fb = model.fb(x), fd = model.fd(x), s2 = model.sigma2(x);
        double scale = std::max(1.0, x);
        if (fb > model.nu() * x + tol * scale)
            rep.violations.push_back({x, fmt::format("f^b({:g}) = {:g} exceeds nu x = {:g}", x, fb, model.nu() * x)});
        if (fd > model.mu() * x + tol * scale)
            rep.violations.push_back({x, fmt::format("f^d({:g}) = {:g} exceeds mu x = {:g}", x, fd, model.mu() * x)});
        if (s2 < model.eta_lo() * x - tol * scale)
            rep.violations.push_back({x, fmt::format("sigma^2({:g}) = {:g} below eta_lo x = {:g}", x, s2, model.eta_lo() * x)});
        if (s2 > model.eta() * (1 + x) + tol * scale)
            rep.violations.push_back({x, fmt::format("sigma^2({:g}) = {:g} above eta (1+x) = {:g}", x, s2, model.eta() * (1 + x))});
        double f = fb - fd;
        if (have_prev && x > prev_x) {
            slopes_f.push_back(std::abs(f - prev_f) / (x - prev_x));
            slopes_s.push_back(std::abs(s2 - prev_s) / (x - prev_x));
        }
        prev_x = x;
        prev_f = f;
        prev_s = s2;
        have_prev = true;
    }
    auto flag_slopes = [&](std::vector<double>& s, const char* name, double& out_max) {
        if (s.empty()) return;
        out_max = *std::max_element(s.begin(), s.end());
        std::nth_element(s.begin(), s.begin() + s.size() / 2, s.end());
        double med = s[s.size() / 2];
        // Sampled Lipschitz diagnostic: a slope far above the median is the
        // usual footprint of an unbounded derivative.
        if (med > 0 && out_max > 10 * med)
            rep.violations.push_back(
                {prev_x, fmt::format("{} finite-difference slope {:g} is > 10x the median {:g}", name, out_max, med)});
    };
    flag_slopes(slopes_f, "f", rep.max_slope_f);
    flag_slopes(slopes_s, "sigma^2", rep.max_slope_sigma2);
    return rep;
}

}  // namespace scalimit
