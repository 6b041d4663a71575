#ifndef CSTSIM_SPECTRA_HPP
#define CSTSIM_SPECTRA_HPP

// Field and temperature sweeps of the ODMR signal. Each Delta m = +-2 level
// pair is treated as an independent GS/ES pseudospin pair and the signals of
// the pairs are summed.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "cstsim/errors.hpp"
#include "cstsim/levels.hpp"
#include "cstsim/parallel.hpp"
#include "cstsim/threestate.hpp"
#include "cstsim/units.hpp"

namespace cstsim::spectra {

using levels::SpinProjection;
using threestate::ThreeStateRates;

enum class Broadening { additive, convolution };
enum class SignalModel { analytic, numeric };

struct LevelPair {
    SpinProjection a;
    SpinProjection b;
};

inline std::vector<LevelPair> default_pairs() {
    return {{SpinProjection::from_twice(-3), SpinProjection::from_twice(1)},
            {SpinProjection::from_twice(3), SpinProjection::from_twice(-1)}};
}

struct SpectrumConfig {
    double temperature = 125.0;  ///< K
    double f_drive = 921.0;      ///< MHz
    double g_factor = 2.0;
    Vec3 b_axis{0.0, 1.0, 0.0};  ///< perpendicular to the c axis (z)
    std::vector<double> b_grid;  ///< mT, strictly increasing
    std::vector<LevelPair> transitions = default_pairs();
    double rabi_g = 1.0;        ///< rad/us
    double rabi_ratio = -460.0; ///< signed Omega_R(e) / Omega_R(g)
    ThreeStateRates rates;
    levels::ZfsTemperatureModel zfs;
    Broadening broadening = Broadening::additive;
    SignalModel model = SignalModel::analytic;
    threestate::ModelOptions options;

    void validate() const {
        if (!(f_drive > 0.0)) throw DomainError("f_drive must be positive");
        if (!(norm(b_axis) > 0.0)) throw DomainError("b_axis must be non-zero");
        if (b_grid.empty()) throw DomainError("b_grid is empty");
        for (std::size_t i = 1; i < b_grid.size(); ++i)
            if (!(b_grid[i] > b_grid[i - 1])) throw DomainError("b_grid must be strictly increasing");
        if (transitions.empty()) throw DomainError("no transitions selected");
        if (!std::isfinite(rabi_g) || !std::isfinite(rabi_ratio)) throw DomainError("Rabi amplitudes must be finite");
        rates.validate();
        levels::d_e_of_temperature(zfs, temperature);
        if (model == SignalModel::numeric && broadening == Broadening::additive && rates.w_g != 0.0)
            throw DomainError("the numeric model has no additive W_g; use convolution broadening or set W_g = 0");
    }
};

struct Spectrum {
    std::vector<double> x;
    std::vector<double> y;
    std::map<std::string, std::string> meta;
};

/// Evenly spaced grid from lo to hi inclusive.
inline std::vector<double> linear_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi > lo)) throw DomainError("grid needs hi > lo and step > 0");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    std::vector<double> g(n + 1);
    for (std::size_t i = 0; i <= n; ++i) g[i] = lo + step * static_cast<double>(i);
    return g;
}

/// (Omega_z(g), Omega_z(e)) in rad/us for every configured level pair.
inline std::vector<std::pair<double, double>> pair_splittings(const SpectrumConfig& cfg, double b) {
    const Vec3 unit = (1.0 / norm(cfg.b_axis)) * cfg.b_axis;
    const Vec3 field = b * unit;
    const auto gs = levels::eigenlevels({cfg.zfs.d_g(), cfg.g_factor, field});
    const auto es = levels::eigenlevels({levels::d_e_of_temperature(cfg.zfs, cfg.temperature), cfg.g_factor, field});
    std::vector<std::pair<double, double>> out;
    out.reserve(cfg.transitions.size());
    for (const auto& t : cfg.transitions) {
        out.emplace_back(mhz_to_angular(levels::transition_frequency(gs, t.a, t.b)),
                         mhz_to_angular(levels::transition_frequency(es, t.a, t.b)));
    }
    return out;
}

namespace detail {

// 7-point Gauss-Hermite rule for weight exp(-x^2).
inline constexpr std::array<double, 7> kGhNodes{-2.6519613568352334, -1.6735516287674714, -0.8162878828589647, 0.0,
                                                0.8162878828589647,  1.6735516287674714,  2.6519613568352334};
inline constexpr std::array<double, 7> kGhWeights{0.0009717812450995192, 0.05451558281912703, 0.4256072526101278,
                                                  0.8102646175568073,    0.4256072526101278,  0.05451558281912703,
                                                  0.0009717812450995192};

inline double point_signal(const ThreeStateRates& r, const twostate::DrivePair& d, SignalModel model,
                           const threestate::ModelOptions& opt) {
    return model == SignalModel::analytic ? threestate::odmr_signal_analytic(r, d)
                                          : threestate::odmr_signal_numeric(r, d, opt);
}

}  // namespace detail

/// Signal of one level pair with given splittings.
inline double pair_signal(const SpectrumConfig& cfg, double omega_z_g, double omega_z_e) {
    twostate::DrivePair d{omega_z_g, omega_z_e, cfg.rabi_g, cfg.rabi_ratio * cfg.rabi_g, mhz_to_angular(cfg.f_drive)};
    if (cfg.broadening == Broadening::additive) return detail::point_signal(cfg.rates, d, cfg.model, cfg.options);

    // Gaussian spread of the GS splitting, sigma = W_g
    ThreeStateRates r = cfg.rates;
    const double sigma = r.w_g;
    r.w_g = 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < detail::kGhNodes.size(); ++k) {
        twostate::DrivePair dk = d;
        dk.omega_z_g = omega_z_g + std::sqrt(2.0) * sigma * detail::kGhNodes[k];
        acc += detail::kGhWeights[k] * detail::point_signal(r, dk, cfg.model, cfg.options);
    }
    return acc / std::sqrt(std::numbers::pi);
}

inline std::map<std::string, std::string> describe(const SpectrumConfig& cfg) {
    char buf[64];
    std::map<std::string, std::string> m;
    auto put = [&](const char* k, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        m[k] = buf;
    };
    put("temperature_K", cfg.temperature);
    put("f_drive_MHz", cfg.f_drive);
    put("rabi_g", cfg.rabi_g);
    put("rabi_ratio", cfg.rabi_ratio);
    m["model"] = cfg.model == SignalModel::analytic ? "analytic" : "numeric";
    m["broadening"] = cfg.broadening == Broadening::additive ? "additive" : "convolution";
    return m;
}

/// dPL/PL versus field, summed over the configured level pairs.
inline Spectrum spectrum_vs_b(const SpectrumConfig& cfg) {
    cfg.validate();
    Spectrum s;
    s.x = cfg.b_grid;
    s.meta = describe(cfg);
    s.y = parallel_map(cfg.b_grid.size(), [&](std::size_t i) {
        double sum = 0.0;
        for (const auto& [zg, ze] : pair_splittings(cfg, cfg.b_grid[i])) sum += pair_signal(cfg, zg, ze);
        return sum;
    });
    return s;
}

/// One temperature row: rates and signed Rabi ratio valid at `temperature`.
struct TemperatureRow {
    double temperature = 300.0;
    double rabi_ratio = -1.0;
    ThreeStateRates rates;
};

/// One spectrum per row, on the part of cfg.b_grid inside `b_window`.
inline std::vector<Spectrum> spectrum_vs_t(const SpectrumConfig& cfg, const std::vector<TemperatureRow>& rows,
                                           std::pair<double, double> b_window) {
    std::vector<double> grid;
    for (double b : cfg.b_grid)
        if (b >= b_window.first && b <= b_window.second) grid.push_back(b);
    if (grid.empty()) throw DomainError("field window holds no grid points");
    std::vector<Spectrum> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        SpectrumConfig c = cfg;
        c.temperature = row.temperature;
        c.rabi_ratio = row.rabi_ratio;
        c.rates = row.rates;
        c.b_grid = grid;
        out.push_back(spectrum_vs_b(c));
    }
    return out;
}

/// One row of the temperature fit table; rates in MHz.
struct FitTableRow {
    double temperature;
    double rabi_ratio;
    double pump_p;
    double decay_gamma;
    double w_g;
    double gamma_g;
    double gamma_e;
};

inline const std::array<FitTableRow, 4>& fit_table() {
    static const std::array<FitTableRow, 4> rows{{
        {175.0, -460.0, 0.38, 86.0, 7.7, 4e-5, 0.4},
        {225.0, -490.0, 0.65, 260.0, 10.7, 1.2e-4, 1.2},
        {255.0, -350.0, 0.76, 240.0, 9.3, 2.1e-4, 2.1},
        {300.0, -120.0, 1.0, 250.0, 10.0, 4.6e-4, 4.6},
    }};
    return rows;
}

/// Converts a table row to rates in rad/us. Shelving rates are not in the
/// table; they default to 1e-3 Gamma, as small as the closed form assumes.
inline TemperatureRow to_row(const FitTableRow& t, double eta = 0.05, double shelving_fraction = 1e-3) {
    TemperatureRow row;
    row.temperature = t.temperature;
    row.rabi_ratio = t.rabi_ratio;
    auto& r = row.rates;
    r.pump_p = mhz_to_angular(t.pump_p);
    r.decay_gamma = mhz_to_angular(t.decay_gamma);
    r.gamma_m1 = shelving_fraction * r.decay_gamma;
    r.gamma_m2 = shelving_fraction * r.decay_gamma;
    r.eta = eta;
    r.gamma_g = mhz_to_angular(t.gamma_g);
    r.gamma_e = mhz_to_angular(t.gamma_e);
    r.gamma_m = 0.0;
    r.w_g = mhz_to_angular(t.w_g);
    return row;
}

/// Trapezoid integral of |y| over each window, with linear interpolation at
/// the window edges. Overlapping windows are reported through `warnings`.
inline std::vector<double> resonance_areas(const Spectrum& s, const std::vector<std::pair<double, double>>& windows,
                                           std::vector<std::string>* warnings = nullptr) {
    if (s.x.size() != s.y.size() || s.x.size() < 2) throw DomainError("spectrum needs at least two samples");
    const double xmin = s.x.front(), xmax = s.x.back();
    auto at = [&](double x) {
        auto it = std::upper_bound(s.x.begin(), s.x.end(), x);
        if (it == s.x.end()) return std::abs(s.y.back());
        if (it == s.x.begin()) return std::abs(s.y.front());
        const std::size_t j = static_cast<std::size_t>(it - s.x.begin());
        const double t = (x - s.x[j - 1]) / (s.x[j] - s.x[j - 1]);
        return (1.0 - t) * std::abs(s.y[j - 1]) + t * std::abs(s.y[j]);
    };
    std::vector<double> out;
    for (std::size_t w = 0; w < windows.size(); ++w) {
        auto [lo, hi] = windows[w];
        if (!(lo < hi) || lo < xmin || hi > xmax) throw DomainError("window outside the spectrum range");
        for (std::size_t v = 0; v < w; ++v) {
            if (warnings && lo < windows[v].second && windows[v].first < hi)
                warnings->push_back("windows " + std::to_string(v) + " and " + std::to_string(w) + " overlap");
        }
        double area = 0.0;
        double px = lo, py = at(lo);
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (s.x[i] <= lo) continue;
            if (s.x[i] >= hi) break;
            area += 0.5 * (py + std::abs(s.y[i])) * (s.x[i] - px);
            px = s.x[i];
            py = std::abs(s.y[i]);
        }
        area += 0.5 * (py + at(hi)) * (hi - px);
        out.push_back(area);
    }
    return out;
}

}  // namespace cstsim::spectra

#endif
