#ifndef SCALIMIT_CORE_QUADRATURE_HPP
#define SCALIMIT_CORE_QUADRATURE_HPP

#include <array>

namespace scalimit {

// 16-point Gauss-Legendre rule; exact for polynomials of degree 31, which is
// far beyond the piecewise-linear-in-time integrands it is used on.
template <typename Fn>
double integrate_gl16(Fn&& f, double a, double b) {
    static constexpr std::array<double, 8> xs = {
        0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
        0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
    static constexpr std::array<double, 8> ws = {
        0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
        0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};
    const double c = (a + b) / 2, h = (b - a) / 2;
    double s = 0;
    for (int i = 0; i < 8; ++i)
        s += ws[static_cast<std::size_t>(i)] *
             (f(c - h * xs[static_cast<std::size_t>(i)]) + f(c + h * xs[static_cast<std::size_t>(i)]));
    return s * h;
}

}  // namespace scalimit

#endif
