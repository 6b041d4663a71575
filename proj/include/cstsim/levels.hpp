#ifndef CSTSIM_LEVELS_HPP
#define CSTSIM_LEVELS_HPP

// Spin-3/2 level structure: operators, the uniaxial Hamiltonian
//   H = D (Sz^2 - 5/4) + g muB B.S
// eigenlevels labelled by their high-field spin projection, transition
// frequencies, and resonance fields for a fixed drive frequency.
//
// Energies are E/h in MHz, fields in mT.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cstsim/errors.hpp"
#include "cstsim/linalg.hpp"
#include "cstsim/units.hpp"

namespace cstsim::levels {

using Complex = std::complex<double>;
using CMatrix4 = std::array<std::array<Complex, 4>, 4>;
using CVector4 = std::array<Complex, 4>;

/// Spin projection m in {-3/2, -1/2, +1/2, +3/2}, stored as 2m.
class SpinProjection {
public:
    constexpr SpinProjection() = default;

    static SpinProjection from_twice(int twice_m) {
        if (twice_m != -3 && twice_m != -1 && twice_m != 1 && twice_m != 3)
            throw DomainError("spin projection 2m=" + std::to_string(twice_m) + " is not a spin-3/2 projection");
        SpinProjection p;
        p.twice_ = twice_m;
        return p;
    }

    /// Parses "-3/2", "+1/2", "1/2", "-1.5".
    static SpinProjection parse(const std::string& text) {
        const auto slash = text.find('/');
        if (slash != std::string::npos) {
            if (text.substr(slash + 1) != "2") throw DomainError("bad spin projection '" + text + "'");
            return from_twice(std::stoi(text.substr(0, slash)));
        }
        const double v = std::stod(text);
        return from_twice(static_cast<int>(std::lround(2.0 * v)));
    }

    constexpr int twice() const noexcept { return twice_; }
    constexpr double value() const noexcept { return 0.5 * twice_; }

    /// Index into the Sz eigenbasis ordered (+3/2, +1/2, -1/2, -3/2).
    constexpr int basis_index() const noexcept { return (3 - twice_) / 2; }

    std::string str() const { return (twice_ > 0 ? "+" : "") + std::to_string(twice_) + "/2"; }

    friend constexpr auto operator<=>(SpinProjection, SpinProjection) = default;

private:
    int twice_ = 1;
};

inline const std::array<SpinProjection, 4>& all_projections() {
    static const std::array<SpinProjection, 4> v{SpinProjection::from_twice(-3), SpinProjection::from_twice(-1),
                                                  SpinProjection::from_twice(1), SpinProjection::from_twice(3)};
    return v;
}

struct SpinMatrices {
    CMatrix4 sx{};
    CMatrix4 sy{};
    CMatrix4 sz{};
};

/// Standard spin-3/2 matrices in the Sz eigenbasis, Sz = diag(3/2, 1/2, -1/2, -3/2).
inline SpinMatrices spin_matrices() {
    constexpr double s = 1.5;
    constexpr std::array<double, 4> m{1.5, 0.5, -0.5, -1.5};
    SpinMatrices out;
    for (int i = 0; i < 4; ++i) out.sz[i][i] = m[i];
    // <m+1|S+|m> = sqrt(s(s+1) - m(m+1))
    for (int i = 1; i < 4; ++i) {
        const double sp = std::sqrt(s * (s + 1.0) - m[i] * (m[i] + 1.0));
        out.sx[i - 1][i] = 0.5 * sp;
        out.sx[i][i - 1] = 0.5 * sp;
        out.sy[i - 1][i] = Complex(0.0, -0.5 * sp);
        out.sy[i][i - 1] = Complex(0.0, 0.5 * sp);
    }
    return out;
}

struct HamiltonianParams {
    double d = 0.0;         ///< half the zero-field splitting, MHz
    double g_factor = 2.0;
    Vec3 b{0.0, 0.0, 0.0};  ///< mT

    void validate() const {
        if (!(g_factor > 0.0) || !std::isfinite(g_factor)) throw DomainError("g_factor must be positive");
        if (!std::isfinite(d) || !std::isfinite(b[0]) || !std::isfinite(b[1]) || !std::isfinite(b[2]))
            throw DomainError("Hamiltonian parameters must be finite");
    }
};

/// Linear temperature model of the excited-state zero-field splitting.
struct ZfsTemperatureModel {
    double two_d_g = 70.0;       ///< MHz, temperature independent
    double two_d_e_ref = 430.0;  ///< MHz at t_ref
    double slope = 2.1;          ///< MHz/K increase of 2D(e) on cooling
    double t_ref = 300.0;        ///< K

    double d_g() const noexcept { return 0.5 * two_d_g; }
};

/// D(e)(T) in MHz. Valid for 0 < t < 600 K.
inline double d_e_of_temperature(const ZfsTemperatureModel& m, double t) {
    if (!(t > 0.0 && t < 600.0)) throw DomainError("temperature " + std::to_string(t) + " K outside (0, 600)");
    return 0.5 * (m.two_d_e_ref + m.slope * (m.t_ref - t));
}

inline CMatrix4 build_hamiltonian(const HamiltonianParams& p) {
    p.validate();
    static const SpinMatrices s = spin_matrices();
    const double z = p.g_factor * kMuBOverH;
    CMatrix4 h{};
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            h[i][j] = z * (p.b[0] * s.sx[i][j] + p.b[1] * s.sy[i][j] + p.b[2] * s.sz[i][j]);
        }
        const double m = s.sz[i][i].real();
        h[i][i] += p.d * (m * m - 1.25);
    }
    return h;
}

/// Eigen-decomposition of a Hermitian 4x4 matrix; vectors stored as columns,
/// values ascending.
struct HermitianEigen {
    std::array<double, 4> values{};
    CMatrix4 vectors{};

    CVector4 column(int j) const {
        return {vectors[0][j], vectors[1][j], vectors[2][j], vectors[3][j]};
    }
};

/// Cyclic Jacobi sweeps until every off-diagonal modulus is below
/// 1e-12 * max|H|. Each rotation first removes the phase of the pivot
/// element, then applies a real Givens rotation.
inline HermitianEigen jacobi_eigen(CMatrix4 a) {
    double scale = 0.0;
    for (const auto& row : a)
        for (const auto& v : row) scale = std::max(scale, std::abs(v));

    HermitianEigen out;
    for (int i = 0; i < 4; ++i) out.vectors[i][i] = 1.0;
    const double tol = 1e-12 * scale;

    auto off_max = [&a] {
        double m = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                if (i != j) m = std::max(m, std::abs(a[i][j]));
        return m;
    };

    constexpr int kMaxSweeps = 100;
    int sweep = 0;
    while (scale > 0.0 && off_max() >= tol) {
        if (++sweep > kMaxSweeps) throw Error("Jacobi eigen-solver did not converge");
        for (int p = 0; p < 3; ++p) {
            for (int q = p + 1; q < 4; ++q) {
                const double mag = std::abs(a[p][q]);
                if (mag < tol) continue;

                // Phase step: conjugate by diag(1, .., e^{-i phi} at q, ..)
                const Complex ph = a[p][q] / mag;  // e^{i phi}
                for (int k = 0; k < 4; ++k) {
                    a[q][k] *= ph;
                    a[k][q] *= std::conj(ph);
                    out.vectors[k][q] *= std::conj(ph);
                }
                a[q][q] = a[q][q].real();

                const double app = a[p][p].real();
                const double aqq = a[q][q].real();
                const double tau = (aqq - app) / (2.0 * mag);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (int k = 0; k < 4; ++k) {
                    const Complex akp = a[k][p];
                    const Complex akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 4; ++k) {
                    const Complex apk = a[p][k];
                    const Complex aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                a[p][p] = a[p][p].real();
                a[q][q] = a[q][q].real();
                for (int k = 0; k < 4; ++k) {
                    const Complex vkp = out.vectors[k][p];
                    const Complex vkq = out.vectors[k][q];
                    out.vectors[k][p] = c * vkp - s * vkq;
                    out.vectors[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::array<int, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(), [&a](int i, int j) { return a[i][i].real() < a[j][j].real(); });
    HermitianEigen sorted;
    for (int j = 0; j < 4; ++j) {
        sorted.values[j] = a[order[j]][order[j]].real();
        for (int i = 0; i < 4; ++i) sorted.vectors[i][j] = out.vectors[i][order[j]];
    }
    return sorted;
}

struct LevelSet {
    std::array<double, 4> energies{};  ///< MHz, ascending
    std::array<SpinProjection, 4> labels{};

    double energy_of(SpinProjection m) const {
        for (int i = 0; i < 4; ++i)
            if (labels[i] == m) return energies[i];
        throw DomainError("no level labelled " + m.str());
    }
};

struct Transition {
    SpinProjection from_label;
    SpinProjection to_label;
    int delta_m = 0;         ///< to - from
    double frequency = 0.0;  ///< MHz, |E_to - E_from|
};

namespace detail {

inline double overlap(const CVector4& a, const CVector4& b) {
    Complex s = 0.0;
    for (int i = 0; i < 4; ++i) s += std::conj(a[i]) * b[i];
    return std::abs(s);
}

/// For each reference vector, the index of the best-overlapping column of
/// `next`. Throws on near-ties or when the result is not a permutation.
inline std::array<int, 4> match_columns(const std::array<CVector4, 4>& reference, const HermitianEigen& next,
                                        double field) {
    std::array<int, 4> match{};
    std::array<bool, 4> used{};
    for (int i = 0; i < 4; ++i) {
        double best = -1.0;
        double second = -1.0;
        int best_j = -1;
        for (int j = 0; j < 4; ++j) {
            const double o = overlap(reference[i], next.column(j));
            if (o > best) {
                second = best;
                best = o;
                best_j = j;
            } else if (o > second) {
                second = o;
            }
        }
        if (best - second < 1e-6 || used[best_j])
            throw LabelingAmbiguity("level labels ambiguous at |B| = " + std::to_string(field) + " mT");
        used[best_j] = true;
        match[i] = best_j;
    }
    return match;
}

}  // namespace detail

/// Eigenlevels with adiabatic labels. Labels are assigned from field-axis
/// Zeeman states at a strong field, max(10|b|, 10|d|/(g muB)), and carried
/// down to |b| along a geometric path by eigenvector overlap. At b = 0 the
/// Sz projections are used.
inline LevelSet eigenlevels(const HamiltonianParams& p) {
    const auto eig = jacobi_eigen(build_hamiltonian(p));
    const double bnorm = norm(p.b);
    LevelSet out;
    out.energies = eig.values;

    if (bnorm == 0.0) {
        std::array<CVector4, 4> basis{};
        for (int k = 0; k < 4; ++k) basis[k][k] = 1.0;
        const auto match = detail::match_columns(basis, eig, 0.0);
        for (int k = 0; k < 4; ++k) out.labels[match[k]] = SpinProjection::from_twice(3 - 2 * k);
        return out;
    }

    const Vec3 axis = (1.0 / bnorm) * p.b;
    const auto zeeman = jacobi_eigen(build_hamiltonian({0.0, 1.0 / kMuBOverH, axis}));
    std::array<CVector4, 4> reference{};
    for (int k = 0; k < 4; ++k) reference[k] = zeeman.column(k);  // m = -3/2 .. +3/2

    const double zeeman_per_mt = p.g_factor * kMuBOverH;
    const double b_start = std::max(10.0 * bnorm, 10.0 * std::abs(p.d) / zeeman_per_mt);

    HamiltonianParams q = p;
    q.b = b_start * axis;
    auto current = jacobi_eigen(build_hamiltonian(q));
    std::array<SpinProjection, 4> labels{};
    {
        const auto match = detail::match_columns(reference, current, b_start);
        for (int k = 0; k < 4; ++k) labels[match[k]] = all_projections()[k];
    }

    const double ratio = bnorm / b_start;
    const int steps = std::max(16, static_cast<int>(std::ceil(std::log(1.0 / ratio) / std::log(1.05))));
    for (int s = 1; s <= steps; ++s) {
        q.b = (s == steps) ? p.b : (b_start * std::pow(ratio, static_cast<double>(s) / steps)) * axis;
        auto next = (s == steps) ? eig : jacobi_eigen(build_hamiltonian(q));
        std::array<CVector4, 4> prev{};
        for (int k = 0; k < 4; ++k) prev[k] = current.column(k);
        const auto match = detail::match_columns(prev, next, norm(q.b));
        std::array<SpinProjection, 4> carried{};
        for (int k = 0; k < 4; ++k) carried[match[k]] = labels[k];
        labels = carried;
        current = std::move(next);
    }
    out.labels = labels;
    return out;
}

/// Every level pair (from the lower to the higher projection), optionally
/// filtered by |delta m|.
inline std::vector<Transition> transitions(const LevelSet& levels, std::optional<int> delta_m_filter = std::nullopt) {
    std::vector<Transition> out;
    const auto& ms = all_projections();
    const int want = delta_m_filter ? std::abs(delta_m_filter.value()) : -1;
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            Transition t;
            t.from_label = ms[i];
            t.to_label = ms[j];
            t.delta_m = (ms[j].twice() - ms[i].twice()) / 2;
            if (want >= 0 && std::abs(t.delta_m) != want) continue;
            t.frequency = std::abs(levels.energy_of(ms[j]) - levels.energy_of(ms[i]));
            out.push_back(t);
        }
    }
    return out;
}

inline std::vector<Transition> transitions(const HamiltonianParams& p, std::optional<int> delta_m_filter = std::nullopt) {
    return transitions(eigenlevels(p), delta_m_filter);
}

/// |E_to - E_from| in MHz for one labelled pair.
inline double transition_frequency(const LevelSet& levels, SpinProjection a, SpinProjection b) {
    return std::abs(levels.energy_of(b) - levels.energy_of(a));
}

struct ResonanceField {
    double b = 0.0;  ///< signed field along the axis, mT
    Transition transition;
};

/// All fields in `b_range` where a transition of the requested |delta m|
/// matches `f_drive`: sign changes on a 0.01 mT grid, bisection to 1e-4 mT,
/// and a final secant step inside the last bracket.
inline std::vector<ResonanceField> resonance_fields(double f_drive, const HamiltonianParams& p_template, const Vec3& axis,
                                                    std::pair<double, double> b_range, int delta_m) {
    if (!(f_drive > 0.0)) throw DomainError("f_drive must be positive");
    if (!std::isfinite(b_range.first) || !std::isfinite(b_range.second))
        throw DomainError("field range must be finite");
    const double an = norm(axis);
    if (!(an > 0.0)) throw DomainError("field axis must be non-zero");
    const Vec3 unit = (1.0 / an) * axis;
    const double lo = std::min(b_range.first, b_range.second);
    const double hi = std::max(b_range.first, b_range.second);

    constexpr double kGrid = 0.01;
    constexpr double kTol = 1e-4;

    // b = 0 falls back to Sz labels; transition frequencies are continuous there
    auto levels_at = [&](double b) {
        HamiltonianParams q = p_template;
        q.b = b * unit;
        return eigenlevels(q);
    };
    auto pairs = transitions(levels_at(lo), delta_m);
    std::vector<ResonanceField> out;
    if (hi <= lo) return out;

    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / kGrid - 1e-9));
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid[i] = std::min(hi, lo + kGrid * static_cast<double>(i));
    std::vector<LevelSet> lv;
    lv.reserve(grid.size());
    for (double b : grid) lv.push_back(levels_at(b));

    for (const auto& t : pairs) {
        auto excess = [&](const LevelSet& l) { return transition_frequency(l, t.from_label, t.to_label) - f_drive; };
        double prev = excess(lv[0]);
        if (prev == 0.0) out.push_back({grid[0], t});
        for (std::size_t i = 1; i < grid.size(); ++i) {
            const double cur = excess(lv[i]);
            if (cur == 0.0) {
                out.push_back({grid[i], t});
            } else if (prev != 0.0 && (prev < 0.0) != (cur < 0.0)) {
                double a = grid[i - 1], b = grid[i];
                double fa = prev, fb = cur;
                while (b - a > kTol) {
                    const double m = 0.5 * (a + b);
                    const double fm = excess(levels_at(m));
                    if (fm == 0.0) {
                        a = b = m;
                        fa = fb = 0.0;
                        break;
                    }
                    if ((fm < 0.0) == (fa < 0.0)) {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                        fb = fm;
                    }
                }
                const double root = (fa == fb) ? a : a - fa * (b - a) / (fb - fa);
                out.push_back({root, t});
            }
            prev = cur;
        }
    }
    for (auto& r : out) {
        const auto l = levels_at(r.b);
        r.transition.frequency = transition_frequency(l, r.transition.from_label, r.transition.to_label);
    }
    std::stable_sort(out.begin(), out.end(), [](const ResonanceField& x, const ResonanceField& y) { return x.b < y.b; });
    return out;
}

}  // namespace cstsim::levels

#endif
