#pragma once

// Deterministic functionals of the diffusion built from s, S and 1/(g s):
// hitting probabilities, the extinction criterion, Green/occupation integrals,
// excursion-measure functionals, the expected total area, and the solvers for
// the Malthusian parameter alpha and the survival fixed point q.
//
// All values use the normalization s(0) = 1.  Excursion-measure functionals
// are therefore in "Q_Y units" where the mass of excursions reaching eps is
// 1 / S(eps).

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vim/bvp.hpp"
#include "vim/errors.hpp"
#include "vim/quadrature.hpp"
#include "vim/scale_table.hpp"

namespace vim {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using Fn = std::function<double(double)>;

namespace detail {

/// int_lo^hi F(point) dy for F taking a ScalePoint.  Whole elements reuse the
/// tabulated Kronrod points; the partial end pieces use adaptive quadrature.
template <class F>
Estimate integrate_table(const ScaleTable& t, F&& f, double lo, double hi) {
    if (hi <= lo) return {};
    const auto& nodes = t.nodes();
    hi = std::min(hi, t.effective_cap());
    if (hi <= lo) return {};
    auto at_f = [&](double y) { return f(t.at(y)); };
    // first node >= lo and last node <= hi
    const std::size_t e_lo = static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), lo) - nodes.begin());
    const std::size_t e_hi =
        static_cast<std::size_t>(std::upper_bound(nodes.begin(), nodes.end(), hi) - nodes.begin()) - 1;
    if (e_lo > e_hi || e_lo == nodes.size()) return integrate(at_f, lo, hi, 1e-12, 12);
    Estimate out = t.integrate_range(f, e_lo, e_hi);
    if (lo < nodes[e_lo]) {
        const Estimate p = integrate(at_f, lo, nodes[e_lo], 1e-12, 12);
        out.value += p.value;
        out.error += p.error;
    }
    if (hi > nodes[e_hi]) {
        const Estimate p = integrate(at_f, nodes[e_hi], hi, 1e-12, 12);
        out.value += p.value;
        out.error += p.error;
    }
    return out;
}

/// Running head H(z) = int_0^z S rho and tail R(z) = int_z^cap rho at every
/// fine point, rho = f/(g s).
struct HeadTail {
    std::vector<double> head, tail;
};

inline HeadTail head_tail(const ScaleTable& t, const Fn& f) {
    HeadTail out;
    out.head = t.cumulative([&](const ScalePoint& p) { return p.S * f(p.y) * p.speed(); });
    const auto rho = t.cumulative([&](const ScalePoint& p) { return f(p.y) * p.speed(); });
    out.tail.resize(rho.size());
    // summing increments from the top keeps small tails accurate
    out.tail.back() = 0.0;
    for (std::size_t i = rho.size() - 1; i-- > 0;) out.tail[i] = out.tail[i + 1] + (rho[i + 1] - rho[i]);
    return out;
}

}  // namespace detail

/// (S(y) - S(c)) / (S(b) - S(c)): probability of reaching b before c from y.
inline double hitting_probability(const ScaleTable& t, double y, double c, double b) {
    if (!(0.0 <= c && c <= y && y <= b && c < b)) throw DomainError("hitting_probability needs 0 <= c <= y <= b, c < b");
    const double Sc = t.S(c), Sb = t.S(b);
    return (t.S(y) - Sc) / (Sb - Sc);
}

/// theta = int_0^inf a/(g s).  Returns +inf when the table shows divergence.
inline Estimate extinction_criterion(const ScaleTable& t) {
    Estimate e = t.integrate([](const ScalePoint& p) { return p.c.a * p.speed(); });
    if (!std::isfinite(e.value) || e.value > kDivergenceBound || (t.truncated() && e.error > 1e-3 * e.value))
        return {kInf, 0.0};
    return e;
}

/// E^y int_0^{T_0 ^ T_b} f(Y_s) ds.
inline Estimate green_occupation(const ScaleTable& t, double y, double b, const Fn& f) {
    if (!(0.0 <= y && y <= b)) throw DomainError("green_occupation needs 0 <= y <= b");
    if (y == 0.0 || b == 0.0) return {};
    const double Sy = t.S(y);
    const double Sb = std::isinf(b) ? kInf : t.S(b);
    // (Sb - S)/Sb, which tends to 1 as b -> inf
    auto ratio = [&](double S) { return std::isinf(Sb) ? 1.0 : (Sb - S) / Sb; };
    auto below = [&](const ScalePoint& p) { return f(p.y) * ratio(Sy) * p.S * p.speed(); };
    auto above = [&](const ScalePoint& p) { return f(p.y) * ratio(p.S) * Sy * p.speed(); };
    const Estimate lo = detail::integrate_table(t, below, 0.0, y);
    const Estimate hi = detail::integrate_table(t, above, y, b);
    return {lo.value + hi.value, lo.error + hi.error};
}

/// w_f(x) = int_0^inf S(x ^ z) f(z)/(g s)(z) dz.
inline Estimate w_functional(const ScaleTable& t, double x, const Fn& f) {
    if (!(x >= 0.0)) throw DomainError("w_functional needs x >= 0");
    if (x == 0.0) return {};
    const double Sx = t.S(x);
    const Estimate lo = detail::integrate_table(t, [&](const ScalePoint& p) { return f(p.y) * p.S * p.speed(); }, 0.0, x);
    const Estimate hi = detail::integrate_table(t, [&](const ScalePoint& p) { return f(p.y) * p.speed(); }, x, t.effective_cap());
    const Estimate out{lo.value + Sx * hi.value, lo.error + Sx * hi.error};
    if (!std::isfinite(out.value)) throw NumericalError("w_functional: divergent tail");
    return out;
}

/// w_f'(0) = int_0^inf f/(g s).
inline Estimate w_derivative_at_zero(const ScaleTable& t, const Fn& f) {
    return t.integrate([&](const ScalePoint& p) { return f(p.y) * p.speed(); });
}

enum class Regime { Subcritical, Critical, Supercritical };

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::Subcritical: return "Subcritical";
        case Regime::Critical: return "Critical";
        default: return "Supercritical";
    }
}

/// Classification with tolerance max(1e-6, 3 * quadrature error).
inline Regime classify(const Estimate& theta) {
    if (!std::isfinite(theta.value)) return Regime::Supercritical;
    const double tol = std::max(1e-6, 3.0 * theta.error);
    if (theta.value > 1.0 + tol) return Regime::Supercritical;
    if (theta.value < 1.0 - tol) return Regime::Subcritical;
    return Regime::Critical;
}

/// Expected area under the total mass process; +inf unless subcritical.
inline Estimate expected_total_area(const ScaleTable& t, double x) {
    const Estimate theta = extinction_criterion(t);
    if (classify(theta) != Regime::Subcritical) return {kInf, 0.0};
    if (x == 0.0) return {};
    const Fn id = [](double y) { return y; };
    const Fn a = [&t](double y) { return t.coeffs().a(y); };
    const Estimate w_id = w_functional(t, x, id);
    const Estimate w_id0 = w_derivative_at_zero(t, id);
    const Estimate w_a = w_functional(t, x, a);
    const double d = 1.0 - theta.value;
    const double v = w_id.value + w_id0.value * w_a.value / d;
    const double err = w_id.error + (w_id0.error * w_a.value + w_id0.value * w_a.error) / d +
                       w_id0.value * w_a.value * theta.error / (d * d);
    return {v, err};
}

/// w_id'(0) w_a(x) / int w_a/(g s): the time-averaged area in the critical case.
inline Estimate critical_time_average(const ScaleTable& t, double x) {
    if (classify(extinction_criterion(t)) != Regime::Critical)
        throw PreconditionError("critical_time_average needs a critical model");
    if (x == 0.0) return {};
    const Fn id = [](double y) { return y; };
    const Fn a = [&t](double y) { return t.coeffs().a(y); };
    const auto ht = detail::head_tail(t, a);
    // w_a at every fine point, then int w_a/(g s) with the element Kronrod points
    std::size_t i = 0;
    auto w_a_at = [&](const ScalePoint& p) { return ht.head[i] + p.S * ht.tail[i]; };
    double denom = 0.0, denom_err = 0.0;
    {
        const auto& xk = ScaleTable::kronrod_weights();
        const auto& wg = ScaleTable::gauss_weights();
        const auto& nodes = t.nodes();
        for (std::size_t e = 0; e < t.elements(); ++e) {
            const double half = 0.5 * (nodes[e + 1] - nodes[e]);
            double k15 = 0.0, g7 = 0.0;
            for (std::size_t k = 0; k < ScaleTable::kKronrod; ++k) {
                i = e * ScaleTable::kStride + 1 + k;
                const ScalePoint& p = t.fine_point(i);
                const std::size_t idx = k < 7 ? 7 - k : k - 7;
                const double v = w_a_at(p) * p.speed();
                k15 += xk[idx] * v;
                if (idx % 2 == 0) g7 += wg[idx / 2] * v;
            }
            denom += half * k15;
            denom_err += half * std::abs(k15 - g7);
        }
    }
    if (!std::isfinite(denom) || denom > kDivergenceBound || (t.truncated() && denom_err > 1e-3 * denom)) return {};
    const Estimate w_id0 = w_derivative_at_zero(t, id);
    const Estimate w_ax = w_functional(t, x, a);
    const double v = w_id0.value * w_ax.value / denom;
    return {v, v * (w_id0.error / w_id0.value + w_ax.error / w_ax.value + denom_err / denom)};
}

/// True unless the table indicates S(inf) < inf (s decaying at the domain cap).
inline bool scale_function_unbounded(const ScaleTable& t) {
    if (!t.truncated()) return true;
    const double cap = t.effective_cap();
    return t.log_s(cap) >= t.log_s(0.5 * cap) - 1e-9;
}

/// int (int f(chi_s) ds)^m Q_Y(d chi) for m = 1, 2.
inline Estimate q_functional(const ScaleTable& t, const Fn& f, int m) {
    if (m != 1 && m != 2) throw DomainError("q_functional: m must be 1 or 2");
    if (!scale_function_unbounded(t)) throw PreconditionError("q_functional needs S(inf) = inf");
    if (m == 1) {
        const Estimate e = w_derivative_at_zero(t, f);
        if (!std::isfinite(e.value) || e.value > kDivergenceBound) return {kInf, 0.0};
        return e;
    }
    const auto ht = detail::head_tail(t, f);
    double total = 0.0;
    std::size_t i = 0;
    const auto& nodes = t.nodes();
    const auto& wk = ScaleTable::kronrod_weights();
    for (std::size_t e = 0; e < t.elements(); ++e) {
        const double half = 0.5 * (nodes[e + 1] - nodes[e]);
        double k15 = 0.0;
        for (std::size_t k = 0; k < ScaleTable::kKronrod; ++k) {
            i = e * ScaleTable::kStride + 1 + k;
            const ScalePoint& p = t.fine_point(i);
            const double w1 = ht.head[i] + p.S * ht.tail[i];
            k15 += wk[k < 7 ? 7 - k : k - 7] * 2.0 * f(p.y) * w1 * p.speed();
        }
        total += half * k15;
    }
    if (!std::isfinite(total) || total > kDivergenceBound) return {kInf, 0.0};
    return {total, 1e-10 * total + ht.tail.front() * 1e-12};
}

/// Second assembly of the m = 2 functional: 4 int rho S R with R the tail of rho.
inline Estimate q_functional_m2_symmetric(const ScaleTable& t, const Fn& f) {
    const auto ht = detail::head_tail(t, f);
    std::size_t i = 0;
    const auto& nodes = t.nodes();
    const auto& wk = ScaleTable::kronrod_weights();
    double total = 0.0;
    for (std::size_t e = 0; e < t.elements(); ++e) {
        const double half = 0.5 * (nodes[e + 1] - nodes[e]);
        double k15 = 0.0;
        for (std::size_t k = 0; k < ScaleTable::kKronrod; ++k) {
            i = e * ScaleTable::kStride + 1 + k;
            const ScalePoint& p = t.fine_point(i);
            k15 += wk[k < 7 ? 7 - k : k - 7] * 4.0 * f(p.y) * p.speed() * p.S * ht.tail[i];
        }
        total += half * k15;
    }
    return {total, 1e-10 * total};
}

/// int (int s f(chi_s) ds) Q_Y(d chi) = int w_1/(g s).
inline Estimate q_time_weighted(const ScaleTable& t, const Fn& f) {
    if (!scale_function_unbounded(t)) throw PreconditionError("q_time_weighted needs S(inf) = inf");
    const auto ht = detail::head_tail(t, f);
    std::size_t i = 0;
    const auto& nodes = t.nodes();
    const auto& wk = ScaleTable::kronrod_weights();
    double total = 0.0;
    for (std::size_t e = 0; e < t.elements(); ++e) {
        const double half = 0.5 * (nodes[e + 1] - nodes[e]);
        double k15 = 0.0;
        for (std::size_t k = 0; k < ScaleTable::kKronrod; ++k) {
            i = e * ScaleTable::kStride + 1 + k;
            const ScalePoint& p = t.fine_point(i);
            k15 += wk[k < 7 ? 7 - k : k - 7] * (ht.head[i] + p.S * ht.tail[i]) * p.speed();
        }
        total += half * k15;
    }
    if (!std::isfinite(total) || total > kDivergenceBound) return {kInf, 0.0};
    return {total, 1e-10 * total};
}

/// Resolvent and Feynman-Kac solvers on one table, with a coarse twin mesh for
/// error bars (Richardson: the discretization error is O(h^2)).
class ScaleSolver {
public:
    explicit ScaleSolver(const ScaleTable& t) : table_(&t), fine_(t, 1), coarse_(t, 2) {}

    /// F(alpha) = u_alpha'(0) for g u'' + b u' - alpha u = -a.
    [[nodiscard]] double F(double alpha) const { return fine_.solve(alpha, 0.0, 1.0).flux0; }
    [[nodiscard]] double F_coarse(double alpha) const { return coarse_.solve(alpha, 0.0, 1.0).flux0; }

    /// k(z) = v_z'(0) for g v'' + b v' + z a (1 - v) = 0.
    [[nodiscard]] double k(double z) const { return fine_.solve(0.0, z, z).flux0; }
    [[nodiscard]] double k_coarse(double z) const { return coarse_.solve(0.0, z, z).flux0; }

    /// v_z on the fine mesh: v_z(y) = E^y[1 - exp(-z int a(Y_s) ds)].
    [[nodiscard]] ScaleBvp::Solution survival_profile(double z) const { return fine_.solve(0.0, z, z); }
    /// u_alpha on the fine mesh.
    [[nodiscard]] ScaleBvp::Solution resolvent(double alpha) const { return fine_.solve(alpha, 0.0, 1.0); }

    [[nodiscard]] const ScaleTable& table() const { return *table_; }

private:
    const ScaleTable* table_;
    ScaleBvp fine_, coarse_;
};

namespace detail {

template <class G>
double solve_root(G&& g, double lo, double hi, double tol) {
    std::uintmax_t iters = 200;
    auto tolerance = [tol](double a, double b) { return std::abs(b - a) <= tol * std::max(1.0, std::abs(a)); };
    const auto r = boost::math::tools::toms748_solve(g, lo, hi, tolerance, iters);
    return 0.5 * (r.first + r.second);
}

}  // namespace detail

/// alpha > 0 with F(alpha) = 1.  Requires F(0) = theta > 1.
inline Estimate malthusian_alpha(const ScaleSolver& solver, double tol = 1e-10) {
    const double f0 = solver.F(0.0);
    if (!(f0 > 1.0)) throw PreconditionError("malthusian_alpha needs a supercritical model (F(0) > 1)");
    double hi = 1.0;
    while (solver.F(hi) >= 1.0) {
        hi *= 2.0;
        if (hi > 1e8) throw NumericalError("malthusian_alpha: no bracket");
    }
    const double lo = hi == 1.0 ? 0.0 : 0.5 * hi;
    const double alpha = detail::solve_root([&](double x) { return solver.F(x) - 1.0; }, lo, hi, tol);
    double coarse = alpha;
    try {
        coarse = detail::solve_root([&](double x) { return solver.F_coarse(x) - 1.0; }, lo, hi, tol);
    } catch (const std::exception&) {
    }
    return {alpha, std::abs(alpha - coarse) / 3.0 + tol * alpha};
}

/// Largest fixed point of k; 0 when k'(0) = theta <= 1.
inline Estimate fixed_point_q(const ScaleSolver& solver, double tol = 1e-10) {
    const Estimate theta = extinction_criterion(solver.table());
    if (classify(theta) != Regime::Supercritical) return {0.0, 0.0};
    double hi = 1.0;
    while (solver.k(hi) > hi) {
        hi *= 2.0;
        if (hi > 1e8) throw NumericalError("fixed_point_q: no bracket");
    }
    // k(z) - z > 0 just above 0 by concavity and k'(0) > 1
    double lo = 0.5 * hi;
    while (lo > 1e-12 && solver.k(lo) <= lo) lo *= 0.5;
    if (lo <= 1e-12) throw NumericalError("fixed_point_q: no positive bracket");
    const double q = detail::solve_root([&](double z) { return solver.k(z) - z; }, lo, hi, tol);
    double coarse = q;
    try {
        coarse = detail::solve_root([&](double z) { return solver.k_coarse(z) - z; }, 0.5 * lo, 2.0 * hi, tol);
    } catch (const std::exception&) {
    }
    return {q, std::abs(q - coarse) / 3.0 + tol * q};
}

struct AnalysisReport {
    Estimate theta;
    Regime regime = Regime::Critical;
    std::optional<Estimate> alpha;
    std::optional<Estimate> q;
    std::optional<Estimate> expected_area;
    std::optional<Estimate> critical_ratio;
    std::map<std::string, std::string> errors;  ///< field -> message for fields that failed
};

/// Full deterministic analysis at start state x.
inline AnalysisReport analyze(const ScaleTable& t, double x, double tol = 1e-10) {
    AnalysisReport r;
    r.theta = extinction_criterion(t);
    r.regime = classify(r.theta);
    try {
        r.expected_area = expected_total_area(t, x);
    } catch (const std::exception& e) {
        r.errors["expected_area"] = e.what();
    }
    if (r.regime == Regime::Critical) {
        try {
            r.critical_ratio = critical_time_average(t, x);
        } catch (const std::exception& e) {
            r.errors["critical_ratio"] = e.what();
        }
    }
    if (r.regime == Regime::Supercritical && std::isfinite(r.theta.value)) {
        const ScaleSolver solver(t);
        try {
            r.alpha = malthusian_alpha(solver, tol);
        } catch (const std::exception& e) {
            r.errors["alpha"] = e.what();
        }
        try {
            r.q = fixed_point_q(solver, tol);
        } catch (const std::exception& e) {
            r.errors["q"] = e.what();
        }
    } else {
        r.q = Estimate{0.0, 0.0};
    }
    return r;
}

}  // namespace vim
