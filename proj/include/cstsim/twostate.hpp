#ifndef CSTSIM_TWOSTATE_HPP
#define CSTSIM_TWOSTATE_HPP

// Pseudospin-1/2 ground/excited-state model in the rotating frame:
//
//   dSg/dt = Wg x Sg + G Se - P Sg - gamma Sg + Sigma z
//   dSe/dt = We x Se - G Se + P Sg - gamma Se
//   dNg/dt = G Ne - P Ng,  dNe/dt = -G Ne + P Ng
//
// with static effective fields W = (Omega_z - omega) z + Omega_R x.
// Angular frequencies in rad/us, rates in 1/us.

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "cstsim/errors.hpp"
#include "cstsim/linalg.hpp"
#include "cstsim/ode.hpp"

namespace cstsim::twostate {

/// Splittings, signed Rabi amplitudes and drive frequency of one GS/ES
/// pseudospin pair. Rabi amplitudes of opposite sign mean a relative phase pi.
struct DrivePair {
    double omega_z_g = 0.0;
    double omega_z_e = 0.0;
    double omega_r_g = 0.0;
    double omega_r_e = 0.0;
    double omega = 0.0;

    double detuning_g() const noexcept { return omega_z_g - omega; }
    double detuning_e() const noexcept { return omega_z_e - omega; }

    DrivePair with_omega(double w) const noexcept {
        DrivePair d = *this;
        d.omega = w;
        return d;
    }
};

struct TwoStateRates {
    double pump_p = 0.0;       ///< P
    double decay_gamma = 0.0;  ///< Gamma
    double spin_gamma = 0.0;   ///< gamma
    double pump_sigma = 0.0;   ///< Sigma, along z

    void validate() const {
        if (pump_p < 0.0 || decay_gamma < 0.0 || spin_gamma < 0.0 || pump_sigma < 0.0)
            throw DomainError("two-state rates must be non-negative");
    }
};

struct SpinState {
    Vec3 s_g{};
    Vec3 s_e{};
    double n_g = 0.0;
    double n_e = 0.0;
};

inline std::pair<Vec3, Vec3> effective_fields(const DrivePair& d) {
    return {Vec3{d.omega_r_g, 0.0, d.detuning_g()}, Vec3{d.omega_r_e, 0.0, d.detuning_e()}};
}

namespace detail {

// Skew matrix of w x (.) written into `m` at (row, col).
inline void put_cross(Matrix& m, std::size_t at, const Vec3& w) {
    m(at + 0, at + 1) += -w[2];
    m(at + 0, at + 2) += w[1];
    m(at + 1, at + 0) += w[2];
    m(at + 1, at + 2) += -w[0];
    m(at + 2, at + 0) += -w[1];
    m(at + 2, at + 1) += w[0];
}

inline Matrix spin_matrix(const DrivePair& d, const TwoStateRates& r) {
    const auto [wg, we] = effective_fields(d);
    Matrix m(6, 6);
    put_cross(m, 0, wg);
    put_cross(m, 3, we);
    for (std::size_t i = 0; i < 3; ++i) {
        m(i, i) += -(r.pump_p + r.spin_gamma);
        m(i, 3 + i) += r.decay_gamma;
        m(3 + i, 3 + i) += -(r.decay_gamma + r.spin_gamma);
        m(3 + i, i) += r.pump_p;
    }
    return m;
}

}  // namespace detail

/// Steady state by dense 6x6 Gaussian elimination. Occupancies follow the
/// two-level balance N_e/N_g = P/Gamma with N_g + N_e = 1.
inline SpinState steady_state(const DrivePair& d, const TwoStateRates& r) {
    r.validate();
    if (!(r.spin_gamma > 0.0)) throw DomainError("steady state requires gamma > 0");
    if (!(r.pump_p + r.decay_gamma > 0.0)) throw DomainError("steady state requires P + Gamma > 0");
    const Matrix m = detail::spin_matrix(d, r);
    std::vector<double> rhs(6, 0.0);
    rhs[2] = -r.pump_sigma;
    const auto x = solve_linear(m, rhs);
    SpinState s;
    s.s_g = {x[0], x[1], x[2]};
    s.s_e = {x[3], x[4], x[5]};
    const double tot = r.pump_p + r.decay_gamma;
    s.n_g = r.decay_gamma / tot;
    s.n_e = r.pump_p / tot;
    return s;
}

/// R = 1 - gamma (S_gz + S_ez) / Sigma at steady state.
inline double sr_signal(const DrivePair& d, const TwoStateRates& r) {
    if (!(r.pump_sigma > 0.0)) throw DomainError("SR signal requires Sigma > 0");
    const auto s = steady_state(d, r);
    return 1.0 - r.spin_gamma * (s.s_g[2] + s.s_e[2]) / r.pump_sigma;
}

/// Isolated GS resonance, Gamma ~ P >> gamma.
inline double sr_lorentzian_gs(const DrivePair& d, const TwoStateRates& r) {
    const double p = r.pump_p, g = r.decay_gamma;
    const double k = p * g / (g + p) * d.omega_r_g * d.omega_r_g / r.spin_gamma;
    const double dw = d.detuning_g();
    return k / (dw * dw + p * p + k);
}

/// Isolated ES resonance. The power-broadening term carries the GS Rabi
/// amplitude, as in the closed form this reproduces.
inline double sr_lorentzian_es(const DrivePair& d, const TwoStateRates& r) {
    const double p = r.pump_p, g = r.decay_gamma;
    const double k = p * g / (g + p) * d.omega_r_g * d.omega_r_g / r.spin_gamma;
    const double dw = d.detuning_e();
    return k / (dw * dw + g * g + k);
}

/// Overlapping GS/ES resonances. Valid for weak drive: the saturation term
/// in the denominator is not scaled by the prefactor.
inline double sr_overlap(const DrivePair& d, const TwoStateRates& r) {
    const double p = r.pump_p, g = r.decay_gamma;
    const double dg = d.detuning_g(), de = d.detuning_e();
    const double mix = dg * d.omega_r_e - de * d.omega_r_g;
    const double num = mix * mix;
    const double lin = g * dg + p * de;
    const double den = lin * lin + dg * dg * de * de + num;
    if (num == 0.0) return 0.0;
    return g * p / (r.spin_gamma * (g + p)) * num / den;
}

/// Drive frequency at which the GS and ES effective fields are collinear.
inline double cst_frequency(const DrivePair& d) {
    const double dr = d.omega_r_e - d.omega_r_g;
    if (dr == 0.0) throw UndefinedCst("trapping frequency undefined for equal GS and ES Rabi amplitudes");
    return (d.omega_z_g * d.omega_r_e - d.omega_z_e * d.omega_r_g) / dr;
}

/// Small-angle tilt of the trapped spin from z.
inline double cst_angle(const DrivePair& d) {
    const double dz = d.omega_z_e - d.omega_z_g;
    if (dz == 0.0) throw DomainError("trap angle undefined for equal GS and ES splittings");
    return (d.omega_r_e - d.omega_r_g) / dz;
}

/// R at the trapping frequency in the gamma -> 0 limit, 1 - cos^2(theta).
inline double cst_dip_depth(const DrivePair& d) {
    const double dz = d.omega_z_e - d.omega_z_g;
    const double dr = d.omega_r_e - d.omega_r_g;
    const double den = dz * dz + dr * dr;
    return den == 0.0 ? 0.0 : dr * dr / den;
}

/// Dyakonov-Perel-like dephasing from random GS <-> ES switching.
inline double dephasing_rate(const DrivePair& d, const TwoStateRates& r) {
    const double tot = r.decay_gamma + r.pump_p;
    if (!(tot > 0.0)) throw DomainError("dephasing rate requires Gamma + P > 0");
    const double dz = d.omega_z_e - d.omega_z_g;
    const double dr = d.omega_r_e - d.omega_r_g;
    return (dz * dz + dr * dr) / tot;
}

struct Trajectory {
    double dt = 0.0;  ///< actual step, t_end / (states.size() - 1)
    std::vector<SpinState> states;
};

namespace detail {

using Packed = std::array<double, 8>;  // ng, ne, sg(3), se(3)

inline Packed pack(const SpinState& s) {
    return {s.n_g, s.n_e, s.s_g[0], s.s_g[1], s.s_g[2], s.s_e[0], s.s_e[1], s.s_e[2]};
}

inline SpinState unpack(const Packed& x) {
    return {{x[2], x[3], x[4]}, {x[5], x[6], x[7]}, x[0], x[1]};
}

}  // namespace detail

/// Fixed-step RK4 in the rotating frame, sampled every step (including t=0).
inline Trajectory time_evolution(const DrivePair& d, const TwoStateRates& r, const SpinState& s0, double t_end, double dt) {
    r.validate();
    if (!(dt > 0.0)) throw StepSizeError("dt must be positive");
    if (!(t_end >= 0.0)) throw DomainError("t_end must be non-negative");
    const auto [wg, we] = effective_fields(d);
    const double fastest = std::max({r.pump_p, r.decay_gamma, r.spin_gamma, norm(wg), norm(we)});
    if (dt * fastest >= 0.1) throw StepSizeError("dt * max(rate, frequency) must be below 0.1");

    const double p = r.pump_p, g = r.decay_gamma, gm = r.spin_gamma, sig = r.pump_sigma;
    auto rhs = [&](const detail::Packed& x) {
        const Vec3 sg{x[2], x[3], x[4]};
        const Vec3 se{x[5], x[6], x[7]};
        const Vec3 pg = cross(wg, sg);
        const Vec3 pe = cross(we, se);
        detail::Packed dx;
        dx[0] = g * x[1] - p * x[0];
        dx[1] = -g * x[1] + p * x[0];
        for (int i = 0; i < 3; ++i) {
            dx[2 + i] = pg[i] + g * se[i] - (p + gm) * sg[i];
            dx[5 + i] = pe[i] - (g + gm) * se[i] + p * sg[i];
        }
        dx[4] += sig;
        return dx;
    };

    const std::size_t steps = step_count(t_end, dt);
    Trajectory traj;
    traj.dt = steps == 0 ? 0.0 : t_end / static_cast<double>(steps);
    traj.states.reserve(steps + 1);
    auto x = detail::pack(s0);
    traj.states.push_back(s0);
    for (std::size_t i = 0; i < steps; ++i) {
        x = rk4_step(rhs, x, traj.dt);
        traj.states.push_back(detail::unpack(x));
    }
    return traj;
}

}  // namespace cstsim::twostate

#endif
