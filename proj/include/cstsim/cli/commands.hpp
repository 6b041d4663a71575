#ifndef CSTSIM_CLI_COMMANDS_HPP
#define CSTSIM_CLI_COMMANDS_HPP

// The four tool commands as library functions: config in, text out.
// Frequencies and rates in configs are ordinary MHz (converted by 2 pi),
// fields in mT, temperatures in K.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cstsim/errors.hpp"
#include "cstsim/fanofit.hpp"
#include "cstsim/io/config.hpp"
#include "cstsim/io/csv.hpp"
#include "cstsim/io/svg.hpp"
#include "cstsim/levels.hpp"
#include "cstsim/spectra.hpp"
#include "cstsim/threestate.hpp"
#include "cstsim/twostate.hpp"
#include "cstsim/units.hpp"

namespace cstsim::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kConfigError = 1, kNoConvergence = 2, kUndefinedCst = 3 };

struct CommandOutput {
    std::string text;                  ///< CSV or JSON
    std::optional<std::string> svg;    ///< when a plot makes sense
    std::optional<std::string> sidecar;  ///< JSON envelope next to CSV output
    int exit_code = kOk;
};

using nlohmann::json;

namespace detail {

inline const io::Schema& schema_for(const std::string& command) {
    static const std::set<std::string> zfs{"two_d_g", "two_d_e_ref", "slope", "t_ref"};
    static const std::set<std::string> sample{"temperature"};
    static const std::set<std::string> field{"axis", "b_min", "b_max", "b_step", "g_factor"};
    static const std::set<std::string> drive{"f_mhz", "rabi_g_mhz", "rabi_ratio", "transitions"};
    static const std::set<std::string> rates{"pump_p", "decay_gamma", "gamma_m1", "gamma_m2", "eta",
                                             "gamma_g", "gamma_e", "gamma_m", "w_g"};
    static const std::set<std::string> model{"signal", "broadening", "metastable_far_detuned"};
    static const std::map<std::string, io::Schema> schemas{
        {"levels", {{"zfs", zfs}, {"sample", sample}, {"field", field}, {"drive", {"f_mhz", "delta_m"}}, {"levels", {"states"}}}},
        {"spectrum", {{"zfs", zfs}, {"sample", sample}, {"field", field}, {"drive", drive}, {"rates", rates}, {"model", model}}},
        {"fit", {{"fit", {"data", "lines", "baseline", "max_iterations", "seeds"}}}},
        {"cst",
         {{"cst",
           {"omega_z_g", "omega_z_e", "rabi_g", "rabi_e", "pump_p", "decay_gamma", "spin_gamma", "pump_sigma",
            "scan_halfwidth", "scan_points"}}}},
    };
    auto it = schemas.find(command);
    if (it == schemas.end()) throw ConfigError("unknown command '" + command + "'");
    return it->second;
}

inline std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline levels::ZfsTemperatureModel zfs_from(const io::Config& c) {
    levels::ZfsTemperatureModel z;
    z.two_d_g = c.get_double("zfs", "two_d_g", z.two_d_g);
    z.two_d_e_ref = c.get_double("zfs", "two_d_e_ref", z.two_d_e_ref);
    z.slope = c.get_double("zfs", "slope", z.slope);
    z.t_ref = c.get_double("zfs", "t_ref", z.t_ref);
    return z;
}

struct FieldSpec {
    Vec3 axis{0.0, 1.0, 0.0};
    double lo = 0.0, hi = 25.0, step = 0.01, g = 2.0;

    std::vector<double> grid() const {
        if (hi == lo) return {lo};
        return spectra::linear_grid(lo, hi, step);
    }
};

inline FieldSpec field_from(const io::Config& c) {
    FieldSpec f;
    f.axis = c.get_vec3("field", "axis", f.axis);
    f.lo = c.get_double("field", "b_min", f.lo);
    f.hi = c.get_double("field", "b_max", f.hi);
    f.step = c.get_double("field", "b_step", f.step);
    f.g = c.get_double("field", "g_factor", f.g);
    if (!(norm(f.axis) > 0.0)) throw ConfigError("field.axis must be non-zero", c.line_of("field", "axis"));
    if (f.hi < f.lo) throw ConfigError("field.b_max below field.b_min", c.line_of("field", "b_max"));
    if (!(f.step > 0.0)) throw ConfigError("field.b_step must be positive", c.line_of("field", "b_step"));
    if (!(f.g > 0.0)) throw ConfigError("field.g_factor must be positive", c.line_of("field", "g_factor"));
    return f;
}

inline std::vector<spectra::LevelPair> pairs_from(const io::Config& c) {
    const auto* e = c.find("drive", "transitions");
    if (!e) return spectra::default_pairs();
    std::vector<spectra::LevelPair> out;
    for (const auto& item : io::split(e->value, ',')) {
        const auto ends = io::split(item, ':');
        if (ends.size() != 2) throw ConfigError("drive.transitions: expected 'm1:m2' items, got '" + item + "'", e->line);
        try {
            out.push_back({levels::SpinProjection::parse(ends[0]), levels::SpinProjection::parse(ends[1])});
        } catch (const std::exception& ex) {
            throw ConfigError(std::string("drive.transitions: ") + ex.what(), e->line);
        }
    }
    return out;
}

inline int integer_from(const io::Config& c, const std::string& s, const std::string& k, int fallback) {
    const double v = c.get_double(s, k, fallback);
    if (v != std::floor(v)) throw ConfigError(s + "." + k + " must be an integer", c.line_of(s, k));
    return static_cast<int>(v);
}

inline threestate::ThreeStateRates rates_from(const io::Config& c) {
    threestate::ThreeStateRates r;
    r.pump_p = mhz_to_angular(c.require_double("rates", "pump_p"));
    r.decay_gamma = mhz_to_angular(c.require_double("rates", "decay_gamma"));
    r.gamma_m1 = mhz_to_angular(c.get_double("rates", "gamma_m1", 1e-3 * angular_to_mhz(r.decay_gamma)));
    r.gamma_m2 = mhz_to_angular(c.get_double("rates", "gamma_m2", 1e-3 * angular_to_mhz(r.decay_gamma)));
    r.eta = c.get_double("rates", "eta", 0.05);
    r.gamma_g = mhz_to_angular(c.require_double("rates", "gamma_g"));
    r.gamma_e = mhz_to_angular(c.require_double("rates", "gamma_e"));
    r.gamma_m = mhz_to_angular(c.get_double("rates", "gamma_m", 0.0));
    r.w_g = mhz_to_angular(c.get_double("rates", "w_g", 0.0));
    try {
        r.validate();
    } catch (const DomainError& ex) {
        throw ConfigError(std::string("[rates]: ") + ex.what(), c.line_of("rates", "pump_p"));
    }
    return r;
}

inline double temperature_from(const io::Config& c) {
    const double t = c.get_double("sample", "temperature", 300.0);
    if (!(t > 0.0 && t < 600.0)) throw ConfigError("sample.temperature must lie in (0, 600) K", c.line_of("sample", "temperature"));
    return t;
}

inline json envelope(const std::string& command, const io::Config& c, json payload) {
    return json{{"version", kVersion},
                {"command", command},
                {"config", {{"hash", c.hash()}, {"text", c.canonical()}}},
                {"timestamp", timestamp_utc()},
                {"payload", std::move(payload)}};
}

inline std::string fmt(double v) { return io::format_double(v); }

}  // namespace detail

/// Spectrum configuration from the [zfs], [sample], [field], [drive],
/// [rates] and [model] sections.
inline spectra::SpectrumConfig spectrum_config_from(const io::Config& c) {
    c.check(detail::schema_for("spectrum"));
    spectra::SpectrumConfig cfg;
    cfg.zfs = detail::zfs_from(c);
    cfg.temperature = detail::temperature_from(c);
    const auto f = detail::field_from(c);
    cfg.b_axis = f.axis;
    cfg.g_factor = f.g;
    cfg.b_grid = f.grid();
    cfg.f_drive = c.get_double("drive", "f_mhz", 921.0);
    cfg.rabi_g = mhz_to_angular(c.get_double("drive", "rabi_g_mhz", 0.16));
    cfg.rabi_ratio = c.get_double("drive", "rabi_ratio", -460.0);
    cfg.transitions = detail::pairs_from(c);
    cfg.rates = detail::rates_from(c);
    const auto signal = c.get_string("model", "signal", "analytic");
    if (signal == "analytic") cfg.model = spectra::SignalModel::analytic;
    else if (signal == "numeric") cfg.model = spectra::SignalModel::numeric;
    else throw ConfigError("model.signal must be analytic or numeric", c.line_of("model", "signal"));
    const auto broad = c.get_string("model", "broadening", "additive");
    if (broad == "additive") cfg.broadening = spectra::Broadening::additive;
    else if (broad == "convolution") cfg.broadening = spectra::Broadening::convolution;
    else throw ConfigError("model.broadening must be additive or convolution", c.line_of("model", "broadening"));
    cfg.options.metastable_far_detuned = c.get_bool("model", "metastable_far_detuned", true);
    if (!(cfg.f_drive > 0.0)) throw ConfigError("drive.f_mhz must be positive", c.line_of("drive", "f_mhz"));
    try {
        cfg.validate();
    } catch (const DomainError& ex) {
        throw ConfigError(ex.what());
    }
    return cfg;
}

/// Energies of GS and/or ES versus field plus the resonance fields.
inline CommandOutput cmd_levels(const io::Config& c) {
    c.check(detail::schema_for("levels"));
    const auto zfs = detail::zfs_from(c);
    const double t = detail::temperature_from(c);
    const auto f = detail::field_from(c);
    const double f_drive = c.get_double("drive", "f_mhz", 921.0);
    if (!(f_drive > 0.0)) throw ConfigError("drive.f_mhz must be positive", c.line_of("drive", "f_mhz"));
    const int dm = detail::integer_from(c, "drive", "delta_m", 2);
    const auto states = c.get_string("levels", "states", "both");
    std::vector<std::pair<std::string, double>> ds;
    if (states == "ground" || states == "both") ds.emplace_back("GS", zfs.d_g());
    if (states == "excited" || states == "both") ds.emplace_back("ES", levels::d_e_of_temperature(zfs, t));
    if (ds.empty()) throw ConfigError("levels.states must be ground, excited or both", c.line_of("levels", "states"));
    const Vec3 unit = (1.0 / norm(f.axis)) * f.axis;
    std::optional<int> filter;
    if (dm != 0) filter = dm;

    std::ostringstream os;
    json rows = json::array();
    // header from the transition list at any field
    const auto names = levels::transitions(levels::eigenlevels({0.0, f.g, unit}), filter);
    os << "B_mT,state,E_-3/2,E_-1/2,E_+1/2,E_+3/2";
    for (const auto& tr : names) os << ",f_" << tr.from_label.str() << ":" << tr.to_label.str();
    os << '\n';
    const auto grid = f.grid();
    for (double b : grid) {
        for (const auto& [name, d] : ds) {
            const auto lv = levels::eigenlevels({d, f.g, b * unit});
            os << detail::fmt(b) << ',' << name;
            for (const auto& m : levels::all_projections()) os << ',' << detail::fmt(lv.energy_of(m));
            for (const auto& tr : levels::transitions(lv, filter)) os << ',' << detail::fmt(tr.frequency);
            os << '\n';
        }
    }
    os << "\nstate,from,to,delta_m,B_mT,f_MHz\n";
    json res = json::array();
    for (const auto& [name, d] : ds) {
        for (const auto& r : levels::resonance_fields(f_drive, {d, f.g, unit}, unit, {f.lo, f.hi}, dm)) {
            os << name << ',' << r.transition.from_label.str() << ',' << r.transition.to_label.str() << ','
               << r.transition.delta_m << ',' << detail::fmt(r.b) << ',' << detail::fmt(r.transition.frequency) << '\n';
            res.push_back({{"state", name},
                           {"from", r.transition.from_label.str()},
                           {"to", r.transition.to_label.str()},
                           {"delta_m", r.transition.delta_m},
                           {"B_mT", r.b},
                           {"f_MHz", r.transition.frequency}});
        }
    }
    CommandOutput out;
    out.text = os.str();
    out.sidecar = detail::envelope("levels", c, {{"resonances", res}, {"grid_points", grid.size()}}).dump(2);
    return out;
}

inline CommandOutput cmd_spectrum(const io::Config& c) {
    const auto cfg = spectrum_config_from(c);
    const auto s = spectra::spectrum_vs_b(cfg);
    std::ostringstream csv, svg;
    io::write_spectrum_csv(csv, s);
    io::write_svg(svg, s, "B (mT)", "dPL/PL");
    CommandOutput out;
    out.text = csv.str();
    out.svg = svg.str();
    json meta(s.meta);
    out.sidecar = detail::envelope("spectrum", c, {{"meta", meta}, {"B_mT", s.x}, {"dPL_over_PL", s.y}}).dump(2);
    return out;
}

/// Fits the CSV named by fit.data (relative paths resolve against base_dir).
inline CommandOutput cmd_fit(const io::Config& c, const std::filesystem::path& base_dir = {}) {
    c.check(detail::schema_for("fit"));
    std::filesystem::path data = c.require_string("fit", "data");
    if (data.is_relative() && !base_dir.empty()) data = base_dir / data;
    const auto spec = io::read_spectrum_csv(data.string());
    fanofit::FitOptions opt;
    opt.fit_baseline = c.get_bool("fit", "baseline", false);
    opt.max_iterations = detail::integer_from(c, "fit", "max_iterations", 200);

    std::vector<fanofit::FanoResonance> seeds;
    if (const auto* e = c.find("fit", "seeds")) {
        for (const auto& item : io::split(e->value, ';')) {
            if (item.empty()) continue;
            std::vector<double> v;
            std::istringstream is(item);
            std::string tok;
            while (is >> tok) v.push_back(io::parse_double(tok, e->line, "fit.seeds"));
            if (v.size() != 4) throw ConfigError("fit.seeds: each seed needs 'A Q B0 width'", e->line);
            seeds.push_back({v[0], v[1], v[2], v[3]});
        }
    } else {
        const int n = detail::integer_from(c, "fit", "lines", 1);
        if (n < 1) throw ConfigError("fit.lines must be at least 1", c.line_of("fit", "lines"));
        seeds = fanofit::seed_guess(spec, static_cast<std::size_t>(n));
    }
    if (spec.x.size() < 4 * seeds.size() + 1)
        throw ConfigError("data has " + std::to_string(spec.x.size()) + " rows, need at least " +
                          std::to_string(4 * seeds.size() + 1));
    const auto r = fanofit::fit(spec, seeds, opt);

    json lines = json::array();
    for (std::size_t k = 0; k < r.resonances.size(); ++k) {
        const auto& l = r.resonances[k];
        auto sd = [&](std::size_t i) { return std::sqrt(std::max(0.0, r.covariance(4 * k + i, 4 * k + i))); };
        lines.push_back({{"A", l.a},
                         {"Q", l.q},
                         {"B0_mT", l.b0},
                         {"width_mT", l.width},
                         {"sigma", {{"A", sd(0)}, {"Q", sd(1)}, {"B0_mT", sd(2)}, {"width_mT", sd(3)}}}});
    }
    json cov = json::array();
    for (std::size_t i = 0; i < r.covariance.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < r.covariance.cols(); ++j) {
            const double v = r.covariance(i, j);
            row.push_back(std::isfinite(v) ? json(v) : json(nullptr));
        }
        cov.push_back(row);
    }
    json payload{{"resonances", lines},
                 {"baseline", r.baseline},
                 {"covariance", cov},
                 {"residual_norm", r.residual_norm},
                 {"iterations", r.iterations},
                 {"converged", r.converged},
                 {"method",
                  {{"algorithm", "levenberg-marquardt"},
                   {"width_parameterisation", "log"},
                   {"baseline_fitted", r.baseline_fitted},
                   {"noise_model", "homoscedastic"},
                   {"seeding", c.has("fit", "seeds") ? "config" : "extrema"}}}};
    CommandOutput out;
    out.text = detail::envelope("fit", c, payload).dump(2) + "\n";
    out.exit_code = r.converged ? kOk : kNoConvergence;
    return out;
}

/// Nearest local minimum of R(omega) to `centre` on a grid, refined by
/// golden-section search.
inline std::pair<double, double> local_minimum_near(const twostate::DrivePair& d, const twostate::TwoStateRates& r,
                                                    double centre, double half, int points) {
    auto rr = [&](double w) { return twostate::sr_signal(d.with_omega(w), r); };
    std::vector<double> w(points), v(points);
    for (int i = 0; i < points; ++i) {
        w[i] = centre - half + 2.0 * half * i / (points - 1);
        v[i] = rr(w[i]);
    }
    int best = -1;
    for (int i = 1; i + 1 < points; ++i) {
        if (v[i] <= v[i - 1] && v[i] <= v[i + 1]) {
            if (best < 0 || std::abs(w[i] - centre) < std::abs(w[best] - centre)) best = i;
        }
    }
    if (best < 0) return {NAN, NAN};
    double a = w[best - 1], b = w[best + 1];
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = rr(x1), f2 = rr(x2);
    for (int it = 0; it < 100 && b - a > 1e-12 * std::max(1.0, std::abs(centre)); ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = rr(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = rr(x2);
        }
    }
    const double xm = 0.5 * (a + b);
    return {xm, rr(xm)};
}

inline CommandOutput cmd_cst(const io::Config& c) {
    c.check(detail::schema_for("cst"));
    twostate::DrivePair d;
    d.omega_z_g = mhz_to_angular(c.require_double("cst", "omega_z_g"));
    d.omega_z_e = mhz_to_angular(c.require_double("cst", "omega_z_e"));
    d.omega_r_g = mhz_to_angular(c.require_double("cst", "rabi_g"));
    d.omega_r_e = mhz_to_angular(c.require_double("cst", "rabi_e"));
    twostate::TwoStateRates r;
    r.pump_p = mhz_to_angular(c.require_double("cst", "pump_p"));
    r.decay_gamma = mhz_to_angular(c.require_double("cst", "decay_gamma"));
    r.spin_gamma = mhz_to_angular(c.require_double("cst", "spin_gamma"));
    r.pump_sigma = mhz_to_angular(c.get_double("cst", "pump_sigma", 1.0));
    try {
        r.validate();
    } catch (const DomainError& ex) {
        throw ConfigError(std::string("[cst]: ") + ex.what());
    }

    const double w_cst = twostate::cst_frequency(d);  // throws UndefinedCst
    const auto at = d.with_omega(w_cst);
    const double dz = d.omega_z_e - d.omega_z_g;
    const double default_half = dz != 0.0 ? 0.5 * std::abs(dz) : 10.0 * (r.pump_p + r.decay_gamma);
    const double half = mhz_to_angular(c.get_double("cst", "scan_halfwidth", angular_to_mhz(default_half)));
    const int points = detail::integer_from(c, "cst", "scan_points", 2001);
    if (points < 3) throw ConfigError("cst.scan_points must be at least 3", c.line_of("cst", "scan_points"));

    json payload{{"omega_cst_MHz", angular_to_mhz(w_cst)},
                 {"dip_depth", twostate::cst_dip_depth(d)},
                 {"dephasing_rate_per_us", twostate::dephasing_rate(d, r)},
                 {"sr_overlap_at_cst", twostate::sr_overlap(at, r)}};
    payload["theta_cst_rad"] = dz != 0.0 ? json(twostate::cst_angle(d)) : json(nullptr);
    const auto [w_min, r_min] = local_minimum_near(d, r, w_cst, half, points);
    json check{{"scan_halfwidth_MHz", angular_to_mhz(half)}, {"scan_points", points}, {"R_at_cst", twostate::sr_signal(at, r)}};
    if (std::isfinite(w_min)) {
        check["R_min_at_MHz"] = angular_to_mhz(w_min);
        check["R_min"] = r_min;
        check["relative_offset"] = std::abs(w_min - w_cst) / std::abs(w_cst);
    } else {
        check["R_min_at_MHz"] = nullptr;
    }
    payload["full_model"] = check;
    CommandOutput out;
    out.text = detail::envelope("cst", c, payload).dump(2) + "\n";
    return out;
}

/// Dispatch by name. Exceptions propagate; see exit_code_for.
inline CommandOutput run(const std::string& command, const io::Config& c, const std::filesystem::path& base_dir = {}) {
    if (command == "levels") return cmd_levels(c);
    if (command == "spectrum") return cmd_spectrum(c);
    if (command == "fit") return cmd_fit(c, base_dir);
    if (command == "cst") return cmd_cst(c);
    throw ConfigError("unknown command '" + command + "'");
}

inline int exit_code_for(const std::exception& ex) {
    if (dynamic_cast<const UndefinedCst*>(&ex)) return kUndefinedCst;
    return kConfigError;
}

}  // namespace cstsim::cli

#endif
