#ifndef CSTSIM_FANOFIT_HPP
#define CSTSIM_FANOFIT_HPP

// Sums of Fano-like lines
//   f(B) = c + sum_j (A_j w_j^2 + Q_j (B - B_j) w_j) / ((B - B_j)^2 + w_j^2)
// and a Levenberg-Marquardt fitter. Widths are fitted as log(w).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cstsim/errors.hpp"
#include "cstsim/linalg.hpp"
#include "cstsim/spectra.hpp"

namespace cstsim::fanofit {

struct FanoResonance {
    double a = 0.0;      ///< symmetric amplitude
    double q = 0.0;      ///< antisymmetric amplitude
    double b0 = 0.0;     ///< centre, mT
    double width = 1.0;  ///< half width, mT
};

struct FitOptions {
    bool fit_baseline = false;
    int max_iterations = 200;
    double tolerance = 1e-10;  ///< relative change of the residual sum of squares
};

struct FitResult {
    std::vector<FanoResonance> resonances;
    double baseline = 0.0;
    bool baseline_fitted = false;
    /// Over (A, Q, B0, width) per line, then the baseline if fitted.
    Matrix covariance;
    double residual_norm = 0.0;  ///< sqrt of the residual sum of squares
    int iterations = 0;
    bool converged = false;
    std::vector<double> ssr_history;  ///< residual sum of squares after each accepted step, seed first
};

inline double fano_term(const FanoResonance& l, double b) {
    const double u = b - l.b0;
    const double w = l.width;
    return (l.a * w * w + l.q * u * w) / (u * u + w * w);
}

inline double fano_eval(std::span<const FanoResonance> lines, double baseline, double b) {
    double s = baseline;
    for (const auto& l : lines) s += fano_term(l, b);
    return s;
}

/// Jacobian rows over x in natural parameters (A, Q, B0, width) per line,
/// plus a trailing baseline column when `with_baseline`.
inline Matrix fano_jacobian(std::span<const FanoResonance> lines, std::span<const double> x, bool with_baseline) {
    const std::size_t np = 4 * lines.size() + (with_baseline ? 1 : 0);
    Matrix j(x.size(), np);
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t k = 0; k < lines.size(); ++k) {
            const auto& l = lines[k];
            const double u = x[i] - l.b0, w = l.width;
            const double den = u * u + w * w;
            const double num = l.a * w * w + l.q * u * w;
            j(i, 4 * k + 0) = w * w / den;
            j(i, 4 * k + 1) = u * w / den;
            j(i, 4 * k + 2) = -(l.q * w / den - num * 2.0 * u / (den * den));
            j(i, 4 * k + 3) = (2.0 * l.a * w + l.q * u) / den - num * 2.0 * w / (den * den);
        }
        if (with_baseline) j(i, np - 1) = 1.0;
    }
    return j;
}

namespace detail {

inline std::vector<double> pack(std::span<const FanoResonance> lines, double baseline, bool with_baseline) {
    std::vector<double> p;
    for (const auto& l : lines) {
        p.push_back(l.a);
        p.push_back(l.q);
        p.push_back(l.b0);
        p.push_back(std::log(l.width));
    }
    if (with_baseline) p.push_back(baseline);
    return p;
}

inline std::vector<FanoResonance> unpack(std::span<const double> p, std::size_t n) {
    std::vector<FanoResonance> lines(n);
    for (std::size_t k = 0; k < n; ++k) lines[k] = {p[4 * k], p[4 * k + 1], p[4 * k + 2], std::exp(p[4 * k + 3])};
    return lines;
}

inline void check_centres(std::span<const FanoResonance> lines) {
    for (std::size_t i = 0; i < lines.size(); ++i)
        for (std::size_t k = i + 1; k < lines.size(); ++k)
            if (std::abs(lines[i].b0 - lines[k].b0) < 1e-6)
                throw FitError("line centres " + std::to_string(i) + " and " + std::to_string(k) +
                               " collapsed; Jacobian is singular");
}

struct Eval {
    std::vector<double> r;
    double ssr = 0.0;
};

inline Eval residuals(const spectra::Spectrum& s, std::span<const FanoResonance> lines, double baseline) {
    Eval e;
    e.r.resize(s.x.size());
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        e.r[i] = fano_eval(lines, baseline, s.x[i]) - s.y[i];
        e.ssr += e.r[i] * e.r[i];
    }
    return e;
}

// Jacobian in fit parameters: width column scaled by w (d/dlog w).
inline Matrix fit_jacobian(const spectra::Spectrum& s, std::span<const FanoResonance> lines, bool with_baseline) {
    Matrix j = fano_jacobian(lines, s.x, with_baseline);
    for (std::size_t i = 0; i < j.rows(); ++i)
        for (std::size_t k = 0; k < lines.size(); ++k) j(i, 4 * k + 3) *= lines[k].width;
    return j;
}

}  // namespace detail

/// Levenberg-Marquardt least squares. Returns the best point reached; check
/// `converged`. Throws FitError on bad input or collapsed centres.
inline FitResult fit(const spectra::Spectrum& spec, std::vector<FanoResonance> seeds, const FitOptions& opt = {}) {
    if (seeds.empty()) throw FitError("no seed lines");
    const std::size_t n_lines = seeds.size();
    const std::size_t np = 4 * n_lines + (opt.fit_baseline ? 1 : 0);
    if (spec.x.size() != spec.y.size()) throw FitError("x and y lengths differ");
    if (spec.x.size() < 4 * n_lines + 1)
        throw FitError("need at least " + std::to_string(4 * n_lines + 1) + " points, got " + std::to_string(spec.x.size()));
    for (const auto& l : seeds)
        if (!(l.width > 0.0) || !std::isfinite(l.width)) throw FitError("seed widths must be positive");
    std::sort(seeds.begin(), seeds.end(), [](const FanoResonance& a, const FanoResonance& b) { return a.b0 < b.b0; });
    detail::check_centres(seeds);

    auto p = detail::pack(seeds, 0.0, opt.fit_baseline);
    auto lines = seeds;
    double baseline = 0.0;
    auto cur = detail::residuals(spec, lines, baseline);

    FitResult res;
    res.baseline_fitted = opt.fit_baseline;
    res.ssr_history.push_back(cur.ssr);
    double lambda = 1e-3;
    int it = 0;
    bool converged = cur.ssr == 0.0;
    Matrix jac = detail::fit_jacobian(spec, lines, opt.fit_baseline);

    while (!converged && it < opt.max_iterations) {
        ++it;
        Matrix jtj(np, np);
        std::vector<double> g(np, 0.0);
        for (std::size_t i = 0; i < jac.rows(); ++i) {
            const auto row = jac.row(i);
            for (std::size_t a = 0; a < np; ++a) {
                g[a] -= row[a] * cur.r[i];
                for (std::size_t b = a; b < np; ++b) jtj(a, b) += row[a] * row[b];
            }
        }
        for (std::size_t a = 0; a < np; ++a)
            for (std::size_t b = 0; b < a; ++b) jtj(a, b) = jtj(b, a);

        Matrix damped = jtj;
        for (std::size_t a = 0; a < np; ++a) damped(a, a) += lambda * std::max(jtj(a, a), 1e-300);
        std::vector<double> step;
        try {
            step = solve_linear(damped, g, std::numeric_limits<double>::infinity());
        } catch (const SingularSystem&) {
            lambda *= 10.0;
            continue;
        }

        // predicted reduction of the linearised model
        const auto js = jac * step;
        double predicted = 0.0;
        for (std::size_t i = 0; i < js.size(); ++i) predicted -= js[i] * (2.0 * cur.r[i] + js[i]);

        std::vector<double> trial = p;
        for (std::size_t a = 0; a < np; ++a) trial[a] += step[a];
        const auto trial_lines = detail::unpack(trial, n_lines);
        const double trial_base = opt.fit_baseline ? trial.back() : 0.0;
        bool finite = std::all_of(trial.begin(), trial.end(), [](double v) { return std::isfinite(v); });
        const auto next = finite ? detail::residuals(spec, trial_lines, trial_base) : detail::Eval{{}, INFINITY};

        if (std::isfinite(next.ssr) && next.ssr < cur.ssr) {
            detail::check_centres(trial_lines);
            const double rel = (cur.ssr - next.ssr) / cur.ssr;
            p = std::move(trial);
            lines = trial_lines;
            baseline = trial_base;
            cur = next;
            res.ssr_history.push_back(cur.ssr);
            jac = detail::fit_jacobian(spec, lines, opt.fit_baseline);
            lambda = std::max(lambda / 10.0, 1e-12);
            if (rel < opt.tolerance || cur.ssr == 0.0) converged = true;
        } else {
            if (predicted <= opt.tolerance * cur.ssr) converged = true;  // already at the minimum
            lambda *= 10.0;
            if (lambda > 1e20) break;
        }
    }

    res.resonances = lines;
    res.baseline = baseline;
    res.residual_norm = std::sqrt(cur.ssr);
    res.iterations = it;
    res.converged = converged;

    // covariance in natural parameters: s^2 (J^T J)^-1 with J in (A, Q, B0, w)
    const Matrix jn = fano_jacobian(lines, spec.x, opt.fit_baseline);
    Matrix jtj(np, np);
    for (std::size_t i = 0; i < jn.rows(); ++i)
        for (std::size_t a = 0; a < np; ++a)
            for (std::size_t b = 0; b < np; ++b) jtj(a, b) += jn(i, a) * jn(i, b);
    const double dof = spec.x.size() > np ? static_cast<double>(spec.x.size() - np) : 1.0;
    const double s2 = cur.ssr / dof;
    res.covariance = Matrix(np, np, std::numeric_limits<double>::quiet_NaN());
    try {
        const Matrix inv = LuDecomposition(jtj, std::numeric_limits<double>::infinity()).inverse();
        for (std::size_t a = 0; a < np; ++a)
            for (std::size_t b = 0; b < np; ++b) res.covariance(a, b) = s2 * 0.5 * (inv(a, b) + inv(b, a));
    } catch (const SingularSystem&) {
        // left as NaN
    }
    return res;
}

/// Seeds from the largest local extrema of |y - median|. Widths from the
/// half-prominence crossing, Q = 0, centres ascending.
inline std::vector<FanoResonance> seed_guess(const spectra::Spectrum& s, std::size_t n_lines) {
    if (n_lines == 0) throw FitError("n_lines must be at least 1");
    const std::size_t n = s.y.size();
    if (n < 3 || s.x.size() != n) throw FitError("spectrum too short for seeding");
    std::vector<double> sorted = s.y;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2), sorted.end());
    const double med = sorted[n / 2];
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = s.y[i] - med;

    std::vector<std::size_t> cand;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const bool peak = d[i] > 0.0 && d[i] >= d[i - 1] && d[i] > d[i + 1];
        const bool dip = d[i] < 0.0 && d[i] <= d[i - 1] && d[i] < d[i + 1];
        if (peak || dip) cand.push_back(i);
    }
    if (cand.size() < n_lines)
        throw FitError("found " + std::to_string(cand.size()) + " extrema, need " + std::to_string(n_lines));
    std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) > std::abs(d[b]); });

    std::vector<FanoResonance> out;
    for (std::size_t k = 0; k < n_lines; ++k) {
        const std::size_t i = cand[k];
        const double half = 0.5 * std::abs(d[i]);
        auto crossing = [&](int dir) {
            std::size_t j = i;
            while (true) {
                if ((dir < 0 && j == 0) || (dir > 0 && j + 1 == n)) return s.x[j];
                const std::size_t nj = dir < 0 ? j - 1 : j + 1;
                const double v = std::copysign(1.0, d[i]) * d[nj];
                if (v < half) {
                    const double vj = std::copysign(1.0, d[i]) * d[j];
                    const double t = (vj - half) / (vj - v);
                    return s.x[j] + t * (s.x[nj] - s.x[j]);
                }
                j = nj;
            }
        };
        double w = 0.5 * (crossing(+1) - crossing(-1));
        if (!(w > 0.0)) w = s.x[1] - s.x[0];
        out.push_back({d[i], 0.0, s.x[i], w});
    }
    std::sort(out.begin(), out.end(), [](const FanoResonance& a, const FanoResonance& b) { return a.b0 < b.b0; });
    return out;
}

struct TrackRow {
    double temperature = 0.0;
    std::vector<double> a_norm;
    std::vector<double> q_norm;
};

/// A_j / A_ref and Q_j / A_ref per fit, where ref is line `normalizer_line`.
inline std::vector<TrackRow> amplitude_track(const std::vector<FitResult>& fits, const std::vector<double>& temperatures,
                                             std::size_t normalizer_line) {
    if (fits.size() != temperatures.size()) throw DomainError("one temperature per fit required");
    std::vector<TrackRow> out;
    const std::size_t n_lines = fits.empty() ? 0 : fits.front().resonances.size();
    for (std::size_t f = 0; f < fits.size(); ++f) {
        const auto& res = fits[f].resonances;
        if (res.size() != n_lines) throw DomainError("fits have different line counts");
        if (normalizer_line >= n_lines) throw DomainError("normaliser line index out of range");
        const double ref = res[normalizer_line].a;
        if (std::abs(ref) < 1e-12) throw DomainError("reference amplitude too small to normalise by");
        TrackRow row;
        row.temperature = temperatures[f];
        for (const auto& l : res) {
            row.a_norm.push_back(l.a / ref);
            row.q_norm.push_back(l.q / ref);
        }
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace cstsim::fanofit

#endif
