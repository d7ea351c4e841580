#ifndef SCALIMIT_CORE_RNG_HPP
#define SCALIMIT_CORE_RNG_HPP

#include <cmath>
#include <cstdint>

#include "core/errors.hpp"

namespace scalimit {

// Counter-based stream: output i of stream s is a hash of (seed, s, i), so
// any (seed, stream) pair can be opened independently on any worker and
// always yields the same sequence.  The output function is the SplitMix64
// finalizer over a keyed counter.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(mix(seed + kGolden) ^ mix(stream * kGolden + 0x6a09e667f3bcc909ull))),
          ctr_(0) {}

    std::uint64_t next_u64() { return mix(key_ + (++ctr_) * kGolden); }

    // Uniform on (0,1); never returns 0 or 1.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    // Box-Muller pair, second value cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double c = std::cos(2.0 * kPi * u2), s = std::sin(2.0 * kPi * u2);
        spare_ = r * s;
        have_spare_ = true;
        return r * c;
    }

    // Exact Poisson: multiplication method below 30, Hormann's PTRS above.
    std::uint64_t poisson(double lambda) {
        if (lambda < 0 || !std::isfinite(lambda))
            throw domain_error("poisson: lambda must be finite and >= 0");
        if (lambda == 0) return 0;
        if (lambda < 30.0) {
            double limit = std::exp(-lambda), prod = uniform();
            std::uint64_t n = 0;
            while (prod > limit) {
                ++n;
                prod *= uniform();
            }
            return n;
        }
        return poisson_ptrs(lambda);
    }

    // Exact Gamma(shape, scale): Marsaglia-Tsang, with the usual boost for shape < 1.
    double gamma(double shape, double scale) {
        if (shape <= 0 || scale <= 0)
            throw domain_error("gamma: shape and scale must be > 0");
        if (shape < 1.0) {
            double u = uniform();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            double u = uniform();
            double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v * scale;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

  private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
    static constexpr double kPi = 3.14159265358979323846;

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t poisson_ptrs(double lambda) {
        const double slam = std::sqrt(lambda);
        const double loglam = std::log(lambda);
        const double b = 0.931 + 2.53 * slam;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double vr = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            double u = uniform() - 0.5;
            double v = uniform();
            double us = 0.5 - std::abs(u);
            double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
            if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
            if (k < 0 || (us < 0.013 && v > us)) continue;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                k * loglam - lambda - std::lgamma(k + 1.0))
                return static_cast<std::uint64_t>(k);
        }
    }

    std::uint64_t key_;
    std::uint64_t ctr_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace scalimit

#endif
