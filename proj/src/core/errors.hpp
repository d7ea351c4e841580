#ifndef SCALIMIT_CORE_ERRORS_HPP
#define SCALIMIT_CORE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace scalimit {

// Base class for everything thrown by the library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid mathematical input (negative rate, inadmissible parameters, ...).
struct domain_error : error {
    using error::error;
};

// Bad configuration: schema violations, unstable step sizes, inconsistent grids.
struct config_error : error {
    using error::error;
};

// Non-finite values, blow-ups, divergent iterations detected at run time.
struct numeric_error : error {
    using error::error;
};

// Work limits exceeded (event caps and the like).
struct resource_error : error {
    using error::error;
};

// A control made a jump intensity negative; carries the witness state.
struct admissibility_error : error {
    double t, x, alpha;
    admissibility_error(const std::string& msg, double t_, double x_, double alpha_)
        : error(msg), t(t_), x(x_), alpha(alpha_) {}
};

// Thinning-coupling precondition failed at a visited state.
struct coupling_error : error {
    double t;
    long long state;
    coupling_error(const std::string& msg, double t_, long long state_)
        : error(msg), t(t_), state(state_) {}
};

// Picard iteration distances stopped decaying.
struct contraction_error : error {
    using error::error;
};

}  // namespace scalimit

#endif
