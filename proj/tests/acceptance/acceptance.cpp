// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cstsim/fanofit.hpp"
#include "cstsim/levels.hpp"
#include "cstsim/parallel.hpp"
#include "cstsim/spectra.hpp"
#include "cstsim/threestate.hpp"
#include "cstsim/twostate.hpp"

using namespace cstsim;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

// 1. resonance fields at 125 K
Outcome resonance_positions() {
    levels::ZfsTemperatureModel zfs;
    const Vec3 axis{0.0, 1.0, 0.0};
    std::vector<double> b;
    for (double d : {zfs.d_g(), levels::d_e_of_temperature(zfs, 125.0)})
        for (const auto& r : levels::resonance_fields(921.0, {d, 2.0, axis}, axis, {0.0, 25.0}, 2)) b.push_back(r.b);
    std::sort(b.begin(), b.end());
    Outcome o;
    const std::vector<double> target{4.0, 16.0, 17.0, 18.0};
    if (b.size() != target.size()) return {false, "found " + std::to_string(b.size()) + " fields, expected 4"};
    for (std::size_t i = 0; i < b.size(); ++i) {
        o.detail += fmt("%.3f ", b[i]);
        if (std::abs(b[i] - target[i]) > 1.5) o.pass = false;
    }
    o.detail += "mT vs {4, 16, 17, 18} +-1.5";
    return o;
}

twostate::DrivePair random_drive(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    twostate::DrivePair d;
    d.omega_z_g = 100.0 * u(rng);
    d.omega_z_e = 100.0 * u(rng);
    d.omega_r_g = 10.0 * (u(rng) - 0.5);
    d.omega_r_e = 10.0 * (u(rng) - 0.5);
    d.omega = 100.0 * u(rng);
    return d;
}

twostate::TwoStateRates random_two_rates(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    twostate::TwoStateRates r;
    r.pump_p = 0.1 + 10.0 * u(rng);
    r.decay_gamma = 0.1 + 10.0 * u(rng);
    r.spin_gamma = 0.05 + u(rng);
    r.pump_sigma = 0.1 + u(rng);
    return r;
}

// 2. overlap zero and collinear fields at the trapping frequency
Outcome cst_zero() {
    std::mt19937_64 rng(2024);
    double worst_r = 0.0, worst_x = 0.0;
    for (int k = 0; k < 1000; ++k) {
        auto d = random_drive(rng);
        const auto r = random_two_rates(rng);
        if (d.omega_r_g == d.omega_r_e) continue;
        d.omega = twostate::cst_frequency(d);
        worst_r = std::max(worst_r, std::abs(twostate::sr_overlap(d, r)));
        const auto [wg, we] = twostate::effective_fields(d);
        worst_x = std::max(worst_x, norm(cross(wg, we)) / (norm(wg) * norm(we)));
    }
    return {worst_r < 1e-12 && worst_x < 1e-9, fmt("max |R| %.2e, max |cross| %.2e", worst_r, worst_x)};
}

// 3. steady states vs time integration, closed form vs linear solve
Outcome oracle_equivalence() {
    std::mt19937_64 rng(77);
    std::vector<std::pair<twostate::DrivePair, twostate::TwoStateRates>> draws;
    for (int k = 0; k < 100; ++k) {
        auto d = random_drive(rng);
        draws.emplace_back(d, random_two_rates(rng));
    }
    const auto errs = parallel_map(draws.size(), [&](std::size_t i) {
        const auto& [d, r] = draws[i];
        const auto s = twostate::steady_state(d, r);
        const auto [wg, we] = twostate::effective_fields(d);
        const double fastest = std::max({r.pump_p, r.decay_gamma, r.spin_gamma, norm(wg), norm(we)});
        const double dt = 0.02 / fastest;
        const double t_end = 25.0 / r.spin_gamma;
        twostate::SpinState x{{}, {}, s.n_g, s.n_e};
        const int chunks = 50;
        for (int c = 0; c < chunks; ++c) x = twostate::time_evolution(d, r, x, t_end / chunks, dt).states.back();
        const double e1 = norm(x.s_g - s.s_g) / norm(s.s_g);
        const double e2 = norm(x.s_e - s.s_e) / norm(s.s_e);
        return std::max(e1, e2);
    });
    const double two = *std::max_element(errs.begin(), errs.end());

    std::uniform_real_distribution<double> u(0.0, 1.0);
    double three = 0.0;
    for (int k = 0; k < 100; ++k) {
        threestate::ThreeStateRates r;
        r.pump_p = 0.1 + 5.0 * u(rng);
        r.decay_gamma = 10.0 + 300.0 * u(rng);
        r.gamma_m1 = 0.1 + 20.0 * u(rng);
        r.gamma_m2 = 0.1 + 10.0 * u(rng);
        r.eta = 0.1 * (u(rng) - 0.5);
        r.gamma_g = 1e-3 + u(rng);
        r.gamma_e = 0.1 + 5.0 * u(rng);
        r.gamma_m = 0.01 + 2.0 * u(rng);
        if (r.eta == 0.0) continue;
        const auto s = threestate::spins_steady(r, twostate::DrivePair{});
        const auto cf = threestate::zero_drive_polarization(r);
        three = std::max({three, std::abs(s.s_e[2] / cf[0] - 1.0), std::abs(s.s_g[2] / cf[1] - 1.0),
                          std::abs(s.s_m[2] / cf[2] - 1.0)});
    }
    return {two < 1e-8 && three < 1e-8, fmt("two-state max rel %.2e, three-state max rel %.2e", two, three)};
}

// 4. analytic vs numeric lineshape
Outcome odmr_consistency() {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        threestate::ThreeStateRates r;
        r.decay_gamma = 50.0 + 250.0 * u(rng);
        r.pump_p = 0.3 + 1.7 * u(rng);
        r.gamma_e = 0.2 + 4.8 * u(rng);
        r.gamma_g = r.gamma_e * 1e-4 * (0.5 + 1.5 * u(rng));
        r.gamma_m1 = r.gamma_m2 = 1e-3 * r.decay_gamma;
        r.eta = 0.05;
        const double width = r.gamma_g + r.pump_p;
        const double gap = (6.0 * u(rng) - 3.0) * r.decay_gamma;
        twostate::DrivePair d{1000.0, 1000.0 + gap, 1e-3 * width, 0.0, 0.0};
        d.omega_r_e = (1000.0 * u(rng) - 500.0) * d.omega_r_g;
        std::vector<double> an, nu;
        for (int i = -100; i <= 100; ++i) {
            const auto di = d.with_omega(1000.0 + 0.1 * i * width);
            an.push_back(threestate::odmr_signal_analytic(r, di));
            nu.push_back(threestate::odmr_signal_numeric(r, di));
        }
        std::size_t pk = 0;
        for (std::size_t i = 0; i < nu.size(); ++i)
            if (std::abs(nu[i]) > std::abs(nu[pk])) pk = i;
        const double k = nu[pk] / an[pk];
        double dev = 0.0;
        for (std::size_t i = 0; i < nu.size(); ++i) dev = std::max(dev, std::abs(k * an[i] - nu[i]));
        worst = std::max(worst, dev / std::abs(nu[pk]));
    }
    return {worst <= 0.02, fmt("max deviation %.3f%% over 20 rate sets", 100.0 * worst)};
}

// 5. signs and the temperature series
Outcome sign_phenomenology() {
    Outcome o;
    // (a) far-detuned signs when Gm2 / gm > Gamma / ge
    const auto row = spectra::to_row(spectra::fit_table()[0]).rates;
    auto r = row;
    r.gamma_m = 0.0;
    r.w_g = 0.0;
    const bool cond = r.gamma_m2 / threestate::kGammaMFloor > r.decay_gamma / r.gamma_e;
    const double w = r.gamma_g + r.pump_p;
    const twostate::DrivePair gs{1000.0, 1000.0 + 1e6, 1e-2 * w, 0.0, 1000.0};
    const twostate::DrivePair es{1000.0 + 1e6, 1000.0, 0.0, 1e-2 * w, 1000.0};
    const double sg = threestate::odmr_signal_numeric(r, gs), se = threestate::odmr_signal_numeric(r, es);
    const bool signs = cond && sg > 0.0 && se < 0.0;
    o.detail = fmt("GS %+.2e ES %+.2e; ", sg, se);

    // (b) simulated 14-21 mT series, 17 mT line amplitude normalised by the 16 mT line
    spectra::SpectrumConfig cfg;
    cfg.rabi_g = 1.0;
    cfg.b_grid = spectra::linear_grid(14.0, 21.0, 0.02);
    std::vector<spectra::TemperatureRow> rows;
    for (const auto& t : spectra::fit_table()) rows.push_back(spectra::to_row(t));
    const auto series = spectra::spectrum_vs_t(cfg, rows, {14.0, 21.0});
    std::vector<fanofit::FitResult> fits;
    std::vector<double> temps;
    for (std::size_t k = 0; k < series.size(); ++k) {
        auto s = series[k];
        double peak = 0.0;
        for (double y : s.y) peak = std::max(peak, std::abs(y));
        for (double& y : s.y) y /= peak;
        const std::vector<fanofit::FanoResonance> seeds{
            {0.5, 0.0, 15.8, 0.2}, {-0.3, 0.0, 17.0, 0.2}, {-0.5, 0.0, 19.0, 3.0}};
        fits.push_back(fanofit::fit(s, seeds, {.fit_baseline = true, .max_iterations = 1000}));
        temps.push_back(rows[k].temperature);
    }
    const auto track = fanofit::amplitude_track(fits, temps, 0);
    bool neg = true;
    for (std::size_t k = 0; k < track.size(); ++k) {
        o.detail += fmt("%.0f K: %+.2f ", track[k].temperature, track[k].a_norm[1]);
        if (track[k].temperature < 260.0 && !(track[k].a_norm[1] < 0.0)) neg = false;
    }
    const double a255 = track[2].a_norm[1], a300 = track[3].a_norm[1];
    const bool near_zero = std::abs(a300) <= 0.2;
    const bool crossing = a255 < 0.0 && a300 >= 0.0;
    o.detail += std::string("; signs ") + (signs ? "ok" : "bad") + ", 175-255 K negative " + (neg ? "yes" : "no") +
                ", |A(300 K)| <= 0.2 " + (near_zero ? "yes" : "no") + ", crossing 255-300 K " + (crossing ? "yes" : "no");
    o.pass = signs && neg && near_zero && crossing;
    return o;
}

// half width at half maximum of f(dw) for dw > 0, by bisection in log dw
double hwhm(const std::function<double(double)>& f, double scale) {
    const double half = 0.5 * f(0.0);
    double lo = std::log(1e-9 * scale), hi = std::log(100.0 * scale);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (std::abs(f(std::exp(mid))) > std::abs(half)) lo = mid;
        else hi = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

// 6. narrowing at zero gap
Outcome linewidth_narrowing() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    bool ordered = true;
    for (int k = 0; k < 1000; ++k) {
        threestate::ThreeStateRates r;
        r.pump_p = 1e-3 + 10.0 * u(rng);
        r.decay_gamma = 1e-3 + 500.0 * u(rng);
        r.gamma_m1 = 20.0 * u(rng);
        r.gamma_e = 10.0 * u(rng);
        r.gamma_g = u(rng);
        const auto w = threestate::gs_width(r, 0.0);
        if (!(w.width_cst < w.width_far)) ordered = false;
    }
    Outcome o;
    double worst = 0.0;
    bool num_ordered = true;
    const double table[4][4] = {{1, 250, 4.6, 4.6e-4}, {0.38, 86, 0.4, 4e-5}, {5, 100, 10, 1e-3}, {2, 50, 1, 0.01}};
    for (const auto& t : table) {
        threestate::ThreeStateRates r;
        r.pump_p = t[0];
        r.decay_gamma = t[1];
        r.gamma_e = t[2];
        r.gamma_g = t[3];
        r.gamma_m1 = r.gamma_m2 = 1e-3 * r.decay_gamma;
        r.eta = 0.05;
        double h[2];
        const double gaps[2] = {0.0, 1e3 * r.decay_gamma};
        for (int g = 0; g < 2; ++g) {
            const double expect = threestate::gs_width(r, gaps[g]).width;
            const double rabi = 1e-2 * std::sqrt(r.gamma_g * expect);
            auto f = [&](double dw) {
                return threestate::odmr_signal_numeric(r, {1000.0, 1000.0 + gaps[g], rabi, 0.0, 1000.0 - dw});
            };
            h[g] = hwhm(f, expect);
            worst = std::max(worst, std::abs(h[g] / expect - 1.0));
        }
        if (!(h[0] < h[1])) num_ordered = false;
        o.detail += fmt("%.3g/%.3g ", h[0], h[1]);
    }
    o.pass = ordered && num_ordered && worst <= 0.1;
    o.detail = std::string("formula ordering ") + (ordered ? "holds" : "broken") + " for 1000 draws; numeric HWHM gap 0/far " +
               o.detail + fmt("; worst deviation from formula %.1f%%", 100.0 * worst);
    return o;
}

// 7. four-line recovery under 1% noise
Outcome fano_recovery() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> errs(16);
    int failures = 0;
    const auto x = spectra::linear_grid(12.0, 21.0, 0.01);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<fanofit::FanoResonance> truth;
        const double centres[4] = {14.5, 15.8, 17.0, 18.5};
        for (double c : centres) {
            const double a = (u(rng) < 0.5 ? -1.0 : 1.0) * (0.3 + 0.7 * u(rng));
            truth.push_back({a, 0.3 * std::abs(a) * (2.0 * u(rng) - 1.0), c + 0.2 * (u(rng) - 0.5), 0.15 + 0.25 * u(rng)});
        }
        spectra::Spectrum s;
        s.x = x;
        double peak = 0.0;
        for (double b : x) {
            s.y.push_back(fanofit::fano_eval(truth, 0.0, b));
            peak = std::max(peak, std::abs(s.y.back()));
        }
        for (double& y : s.y) y += 0.01 * peak * gauss(rng);
        auto seeds = truth;
        for (auto& l : seeds) {
            auto jig = [&] { return 1.0 + 0.2 * (u(rng) - 0.5); };
            l.q = l.q * jig() + 0.05 * l.a * (u(rng) - 0.5);
            l.a *= jig();
            l.b0 += 0.1 * l.width * (u(rng) - 0.5);
            l.width *= jig();
        }
        fanofit::FitResult r;
        try {
            r = fanofit::fit(s, seeds);
        } catch (const FitError&) {
            ++failures;
            continue;
        }
        if (!r.converged) ++failures;
        for (std::size_t j = 0; j < 4; ++j) {
            const auto& t = truth[j];
            const auto& g = r.resonances[j];
            errs[4 * j + 0].push_back(std::abs(g.a - t.a) / std::abs(t.a));
            errs[4 * j + 1].push_back(std::abs(g.q - t.q) / std::abs(t.a));
            errs[4 * j + 2].push_back(std::abs(g.b0 - t.b0) / t.width);
            errs[4 * j + 3].push_back(std::abs(g.width - t.width) / t.width);
        }
    }
    double med = 0.0, p95 = 0.0;
    for (const auto& e : errs) {
        if (e.empty()) continue;
        med = std::max(med, quantile(e, 0.5));
        p95 = std::max(p95, quantile(e, 0.95));
    }

    // Jacobian against central differences
    const std::vector<fanofit::FanoResonance> lines{{0.4, 0.1, 14.5, 0.2}, {-0.3, -0.05, 15.8, 0.3},
                                                    {0.6, 0.2, 17.0, 0.25}, {-0.5, 0.0, 18.5, 0.35}};
    const auto j = fanofit::fano_jacobian(lines, x, false);
    double jworst = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        for (int p = 0; p < 4; ++p) {
            auto field = [&](fanofit::FanoResonance& l) -> double& {
                return p == 0 ? l.a : p == 1 ? l.q : p == 2 ? l.b0 : l.width;
            };
            auto plus = lines, minus = lines;
            const double h = 1e-6 * std::max(1.0, std::abs(field(plus[k])));
            field(plus[k]) += h;
            field(minus[k]) -= h;
            for (std::size_t i = 0; i < x.size(); i += 7) {
                const double fd = (fanofit::fano_eval(plus, 0.0, x[i]) - fanofit::fano_eval(minus, 0.0, x[i])) / (2.0 * h);
                jworst = std::max(jworst, std::abs(j(i, 4 * k + static_cast<std::size_t>(p)) - fd) /
                                              std::max(1.0, std::abs(fd)));
            }
        }
    }
    Outcome o;
    o.pass = failures == 0 && med <= 0.05 && p95 <= 0.15 && jworst <= 1e-5;
    o.detail = fmt("worst per-parameter median %.2f%%, 95th pct %.2f%%", 100.0 * med, 100.0 * p95) +
               fmt(", %.0f failed fits, Jacobian max rel %.1e", failures, jworst);
    return o;
}

// 8. excited vs ground windowed area at 125 K
Outcome area_hierarchy() {
    spectra::SpectrumConfig cfg;
    const auto row = spectra::to_row(spectra::fit_table()[0]);
    cfg.temperature = 125.0;
    cfg.rates = row.rates;
    cfg.rabi_ratio = row.rabi_ratio;
    cfg.rabi_g = 1.0;
    cfg.b_grid = spectra::linear_grid(0.05, 25.0, 0.02);
    const auto s = spectra::spectrum_vs_b(cfg);
    const auto a = spectra::resonance_areas(s, {{0.05, 10.0}, {15.2, 16.4}});
    const double ratio = a[0] / a[1];
    return {ratio >= 10.0, fmt("ES [0.05, 10] / GS [15.2, 16.4] area ratio %.1f (|rabi ratio| %.0f)", ratio, 460.0)};
}

}  // namespace

int main() {
    struct Item {
        int id;
        Outcome (*run)();
    };
    const Item items[] = {{1, resonance_positions}, {2, cst_zero},         {3, oracle_equivalence},
                          {4, odmr_consistency},    {5, sign_phenomenology}, {6, linewidth_narrowing},
                          {7, fano_recovery},       {8, area_hierarchy}};
    int failed = 0;
    for (const auto& it : items) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = it.run();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %d: %s - %s (%.1f s)\n", it.id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    std::printf("criterion 9: EXCLUDED - absolute contrast and measured spectra are instrument data; covered by the "
                "property checks above\n");
    std::printf("%d of 8 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
