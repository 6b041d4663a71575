#ifndef CSTSIM_THREESTATE_HPP
#define CSTSIM_THREESTATE_HPP

// Ground / excited / metastable model with spin-selective ES -> MS decay.
//
// Populations:
//   dNe/dt = -G Ne - Gm1 (Ne + 2 eta Sez) + P Ng
//   dNg/dt =  G Ne - P Ng + Gm2 Nm
//   dNm/dt =  Gm1 (Ne + 2 eta Sez) - Gm2 Nm
// Spins:
//   dSe/dt = We x Se - ge Se - G Se - Gm1 (Se + eta Ne z / 2) + P Sg
//   dSg/dt = Wg x Sg - gg Sg + G Se - P Sg + Gm2 Sm
//   dSm/dt = -gm Sm + Gm1 (Se + eta Ne z / 2) - Gm2 Sm
//
// The metastable state has no Hamiltonian; with `metastable_far_detuned`
// its transverse spin is clamped to zero.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "cstsim/errors.hpp"
#include "cstsim/linalg.hpp"
#include "cstsim/ode.hpp"
#include "cstsim/twostate.hpp"

namespace cstsim::threestate {

using twostate::DrivePair;

struct ThreeStateRates {
    double pump_p = 0.0;
    double decay_gamma = 0.0;
    double gamma_m1 = 0.0;  ///< ES -> MS
    double gamma_m2 = 0.0;  ///< MS -> GS
    double eta = 0.0;       ///< spin selectivity of ES -> MS
    double gamma_g = 0.0;
    double gamma_e = 0.0;
    double gamma_m = 0.0;
    double w_g = 0.0;  ///< inhomogeneous GS broadening, rad/us

    /// Throws on negative rates; returns soft warnings.
    std::vector<std::string> validate() const {
        for (double v : {pump_p, decay_gamma, gamma_m1, gamma_m2, gamma_g, gamma_e, gamma_m, w_g}) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("three-state rates must be finite and non-negative");
        }
        if (!std::isfinite(eta)) throw DomainError("eta must be finite");
        std::vector<std::string> warnings;
        if (std::abs(eta) > 0.2) warnings.emplace_back("|eta| > 0.2: expansion in small eta is questionable");
        return warnings;
    }
};

struct ThreeStateState {
    double n_g = 0.0;
    double n_e = 0.0;
    double n_m = 0.0;
    Vec3 s_g{};
    Vec3 s_e{};
    Vec3 s_m{};
};

struct ModelOptions {
    bool metastable_far_detuned = true;
};

/// gamma_m = 0 is replaced by this value so the linear system stays regular.
inline constexpr double kGammaMFloor = 1e-9;

namespace detail {

// Layout: ng ne nm | sg(3) | se(3) | sm(3)
enum : std::size_t { NG = 0, NE = 1, NM = 2, SG = 3, SE = 6, SM = 9, DIM = 12 };

// N_e at eta = 0; 0 when nothing is pumped
inline double ne0_or_zero(const ThreeStateRates& r) {
    const double p = r.pump_p, g = r.decay_gamma, g1 = r.gamma_m1, g2 = r.gamma_m2;
    const double den = g1 * (g2 + p) + g2 * (g + p);
    return den > 0.0 ? g2 * p / den : 0.0;
}

inline Matrix generator(const ThreeStateRates& r, const DrivePair& d) {
    const auto [wg, we] = twostate::effective_fields(d);
    const double p = r.pump_p, g = r.decay_gamma, g1 = r.gamma_m1, g2 = r.gamma_m2, eta = r.eta;
    const double gm = r.gamma_m == 0.0 ? kGammaMFloor : r.gamma_m;
    Matrix m(DIM, DIM);

    m(NE, NE) = -g - g1;
    m(NE, SE + 2) = -2.0 * eta * g1;
    m(NE, NG) = p;
    m(NG, NE) = g;
    m(NG, NG) = -p;
    m(NG, NM) = g2;
    m(NM, NE) = g1;
    m(NM, SE + 2) = 2.0 * eta * g1;
    m(NM, NM) = -g2;

    twostate::detail::put_cross(m, SE, we);
    twostate::detail::put_cross(m, SG, wg);
    for (std::size_t i = 0; i < 3; ++i) {
        m(SE + i, SE + i) += -(r.gamma_e + g + g1);
        m(SE + i, SG + i) += p;
        m(SG + i, SG + i) += -(r.gamma_g + p);
        m(SG + i, SE + i) += g;
        m(SG + i, SM + i) += g2;
        m(SM + i, SM + i) += -(gm + g2);
        m(SM + i, SE + i) += g1;
    }
    // spin generation from the eta = 0 ES population; times N_g + N_e + N_m (= 1)
    // so the generator stays homogeneous
    const double ne0 = eta * g1 == 0.0 ? 0.0 : detail::ne0_or_zero(r);
    for (std::size_t c : {NG, NE, NM}) {
        m(SE + 2, c) += -0.5 * eta * g1 * ne0;
        m(SM + 2, c) += 0.5 * eta * g1 * ne0;
    }
    return m;
}

/// Steady-state system: the Ng row becomes the normalisation sum N = 1,
/// clamped transverse MS components become identity rows.
inline Matrix steady_system(Matrix m, const ModelOptions& opt) {
    for (std::size_t c = 0; c < DIM; ++c) m(NG, c) = 0.0;
    m(NG, NG) = m(NG, NE) = m(NG, NM) = 1.0;
    if (opt.metastable_far_detuned) {
        for (std::size_t k : {SM + 0, SM + 1}) {
            for (std::size_t c = 0; c < DIM; ++c) m(k, c) = 0.0;
            m(k, k) = 1.0;
        }
    }
    return m;
}

inline ThreeStateState unpack(std::span<const double> x) {
    ThreeStateState s;
    s.n_g = x[NG];
    s.n_e = x[NE];
    s.n_m = x[NM];
    s.s_g = {x[SG], x[SG + 1], x[SG + 2]};
    s.s_e = {x[SE], x[SE + 1], x[SE + 2]};
    s.s_m = {x[SM], x[SM + 1], x[SM + 2]};
    return s;
}

inline std::array<double, DIM> pack(const ThreeStateState& s) {
    return {s.n_g, s.n_e, s.n_m, s.s_g[0], s.s_g[1], s.s_g[2], s.s_e[0], s.s_e[1], s.s_e[2], s.s_m[0], s.s_m[1], s.s_m[2]};
}

inline DrivePair undriven(const DrivePair& d) {
    DrivePair u = d;
    u.omega_r_g = 0.0;
    u.omega_r_e = 0.0;
    return u;
}

}  // namespace detail

/// ES population at eta = 0 with total population 1.
inline double excited_population_eta0(const ThreeStateRates& r) {
    const double p = r.pump_p, g = r.decay_gamma, g1 = r.gamma_m1, g2 = r.gamma_m2;
    if (g1 == 0.0) {
        if (!(p + g > 0.0)) throw DegenerateNetwork("no open transfer path between GS and ES");
        return p / (g + p);
    }
    const double den = g1 * (g2 + p) + g2 * (g + p);
    if (!(den > 0.0)) throw DegenerateNetwork("population network has no steady state");
    return g2 * p / den;
}

/// Full 12-dimensional steady state.
inline ThreeStateState spins_steady(const ThreeStateRates& r, const DrivePair& d, const ModelOptions& opt = {}) {
    r.validate();
    const Matrix a = detail::steady_system(detail::generator(r, d), opt);
    std::vector<double> rhs(detail::DIM, 0.0);
    rhs[detail::NG] = 1.0;
    return detail::unpack(solve_linear(a, rhs));
}

/// Steady populations (n_g, n_e, n_m). Closed form at eta = 0; otherwise the
/// undriven full model, which carries the 2 eta S_ez correction.
inline std::array<double, 3> populations_steady(const ThreeStateRates& r, const ModelOptions& opt = {}) {
    r.validate();
    const double p = r.pump_p, g = r.decay_gamma, g1 = r.gamma_m1, g2 = r.gamma_m2;
    if (p == 0.0 && g == 0.0 && g1 == 0.0 && g2 == 0.0) throw DegenerateNetwork("all transfer rates vanish");
    if (r.eta == 0.0) {
        if (g1 == 0.0) {
            const double ne = excited_population_eta0(r);
            return {1.0 - ne, ne, 0.0};
        }
        const double den = g1 * (g2 + p) + g2 * (g + p);
        if (!(den > 0.0)) throw DegenerateNetwork("population network has no steady state");
        return {g2 * (g + g1) / den, g2 * p / den, g1 * p / den};
    }
    const auto s = spins_steady(r, DrivePair{}, opt);
    return {s.n_g, s.n_e, s.n_m};
}

/// Zero-drive spin polarisations (S_ez, S_gz, S_mz). Exact for the linear model,
/// whose spin generation uses the eta = 0 ES population.
inline Vec3 zero_drive_polarization(const ThreeStateRates& r) {
    const double p = r.pump_p, g = r.decay_gamma, g1 = r.gamma_m1, g2 = r.gamma_m2;
    const double gg = r.gamma_g, ge = r.gamma_e, gm = r.gamma_m;
    const double ne0 = excited_population_eta0(r);
    const double den = gg * gm * (g + ge + g1) + gg * g2 * (g + ge + g1) + gm * p * (ge + g1) + ge * g2 * p;
    if (den == 0.0) throw SingularSystem("zero-drive polarisation undefined for these rates");
    const double f = 0.5 * r.eta * ne0 * g1 / den;
    return {-(gg * g2 + gm * p + gg * gm) * f, (ge * g2 - gm * g) * f, (gg * g + ge * p + gg * ge) * f};
}

inline double pl_intensity(const ThreeStateState& s, const ThreeStateRates& r) { return r.decay_gamma * s.n_e; }

/// (I_PL(on) - I_PL(off)) / I_PL(off) from the full model. The on-state is
/// solved as a correction to the off-state, A_on dx = -(A_on - A_off) x_off,
/// so weak-drive signals do not cancel catastrophically.
inline double odmr_signal_numeric(const ThreeStateRates& r, const DrivePair& d, const ModelOptions& opt = {}) {
    r.validate();
    if (!(r.eta > 0.0)) throw DomainError("ODMR signal requires eta > 0");
    const Matrix g_on = detail::generator(r, d);
    const Matrix g_off = detail::generator(r, detail::undriven(d));

    std::vector<double> rhs(detail::DIM, 0.0);
    rhs[detail::NG] = 1.0;
    const auto x_off = solve_linear(detail::steady_system(g_off, opt), rhs);

    Matrix delta(detail::DIM, detail::DIM);
    for (std::size_t i = 0; i < detail::DIM; ++i)
        for (std::size_t j = 0; j < detail::DIM; ++j) delta(i, j) = g_on(i, j) - g_off(i, j);
    auto src = delta * x_off;
    for (auto& v : src) v = -v;
    src[detail::NG] = 0.0;
    if (opt.metastable_far_detuned) src[detail::SM] = src[detail::SM + 1] = 0.0;
    const auto dx = solve_linear(detail::steady_system(g_on, opt), src);
    if (x_off[detail::NE] == 0.0) throw DomainError("no PL without drive: ES is empty");
    return dx[detail::NE] / x_off[detail::NE];
}

/// Weak-drive closed form for Gamma_m1, Gamma_m2 -> 0 and gamma_m = 0,
/// including the eta^2 factor. Proportional to the numeric signal; see
/// analytic_scale for the constant.
inline double odmr_signal_analytic(const ThreeStateRates& r, const DrivePair& d) {
    const double p = r.pump_p, g = r.decay_gamma, gg = r.gamma_g, ge = r.gamma_e, w = r.w_g;
    const double rg = d.omega_r_g, re = d.omega_r_e;
    const double dg = d.detuning_g(), de = d.detuning_e();
    const double ggw = gg + w;
    const double a = (g + ge) * ggw + ge * p;
    const double pre = gg * (g + ge) + ge * p;
    const double den = pre * pre *
        (de * de * (dg * dg + (ggw + p) * (ggw + p)) + 2.0 * de * dg * g * p + dg * dg * (g + ge) * (g + ge) + a * a);
    const double bracket = ge * p * rg * rg * (de * de * (ggw + p) + (g + ge) * a) +
        p * rg * re * (ge * (gg + p) - g * gg) * (-de * dg + a) -
        gg * re * re * (gg + p) * (dg * dg * (g + ge) + (ggw + p) * a);
    if (bracket == 0.0) return 0.0;
    return r.eta * r.eta * bracket / den;
}

/// numeric / analytic at one calibration point.
inline double analytic_scale(const ThreeStateRates& r, const DrivePair& calibration, const ModelOptions& opt = {}) {
    const double an = odmr_signal_analytic(r, calibration);
    if (an == 0.0) throw DomainError("analytic signal vanishes at the calibration point");
    return odmr_signal_numeric(r, calibration, opt) / an;
}

struct GsWidths {
    double width = 0.0;      ///< at the requested gap
    double width_far = 0.0;  ///< gap -> infinity
    double width_cst = 0.0;  ///< gap = 0
};

/// GS resonance width versus the ES - GS splitting gap (rad/us).
inline GsWidths gs_width(const ThreeStateRates& r, double splitting_gap) {
    const double k = r.decay_gamma + r.gamma_m1 + r.gamma_e;
    if (!(k > 0.0)) throw DomainError("gs_width requires Gamma + Gamma_m1 + gamma_e > 0");
    GsWidths w;
    w.width = r.gamma_g + r.pump_p * (1.0 - r.decay_gamma * k / (splitting_gap * splitting_gap + k * k)) + r.w_g;
    w.width_far = r.gamma_g + r.pump_p + r.w_g;
    w.width_cst = r.gamma_g + (r.gamma_m1 + r.gamma_e) / k * r.pump_p + r.w_g;
    return w;
}

/// Fixed-step RK4 of the full model. Clamped transverse MS components stay 0.
inline std::vector<ThreeStateState> time_evolution(const ThreeStateRates& r, const DrivePair& d, const ThreeStateState& s0,
                                                   double t_end, double dt, const ModelOptions& opt = {}) {
    r.validate();
    if (!(dt > 0.0)) throw StepSizeError("dt must be positive");
    Matrix m = detail::generator(r, d);
    if (opt.metastable_far_detuned) {
        for (std::size_t k : {detail::SM + 0, detail::SM + 1})
            for (std::size_t c = 0; c < detail::DIM; ++c) m(k, c) = 0.0;
    }
    double fastest = 0.0;
    for (std::size_t i = 0; i < detail::DIM; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < detail::DIM; ++j) row += std::abs(m(i, j));
        fastest = std::max(fastest, row);
    }
    if (dt * fastest >= 0.1) throw StepSizeError("dt * max(rate, frequency) must be below 0.1");

    auto rhs = [&m](const std::array<double, detail::DIM>& x) {
        std::array<double, detail::DIM> dx{};
        for (std::size_t i = 0; i < detail::DIM; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < detail::DIM; ++j) s += m(i, j) * x[j];
            dx[i] = s;
        }
        return dx;
    };
    auto x = detail::pack(s0);
    if (opt.metastable_far_detuned) x[detail::SM] = x[detail::SM + 1] = 0.0;
    const std::size_t steps = step_count(t_end, dt);
    const double h = steps == 0 ? 0.0 : t_end / static_cast<double>(steps);
    std::vector<ThreeStateState> out;
    out.reserve(steps + 1);
    out.push_back(detail::unpack(x));
    for (std::size_t i = 0; i < steps; ++i) {
        x = rk4_step(rhs, x, h);
        out.push_back(detail::unpack(x));
    }
    return out;
}

}  // namespace cstsim::threestate

#endif
