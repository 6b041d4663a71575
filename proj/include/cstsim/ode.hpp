#ifndef CSTSIM_ODE_HPP
#define CSTSIM_ODE_HPP

#include <array>
#include <cmath>
#include <cstddef>

namespace cstsim {

/// One classical fourth-order Runge-Kutta step for x' = f(x).
template <std::size_t N, class Rhs>
std::array<double, N> rk4_step(const Rhs& f, const std::array<double, N>& x, double dt) {
    auto axpy = [](const std::array<double, N>& a, double h, const std::array<double, N>& k) {
        std::array<double, N> r;
        for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + h * k[i];
        return r;
    };
    const auto k1 = f(x);
    const auto k2 = f(axpy(x, 0.5 * dt, k1));
    const auto k3 = f(axpy(x, 0.5 * dt, k2));
    const auto k4 = f(axpy(x, dt, k3));
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

/// Number of fixed steps of size close to `dt` that land exactly on t_end.
inline std::size_t step_count(double t_end, double dt) {
    return static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
}

}  // namespace cstsim

#endif
