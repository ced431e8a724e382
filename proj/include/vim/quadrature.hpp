#pragma once

// Quadrature helpers on top of Boost.Math.
//
// Improper integrals are decided by dyadic panels: [x 2^k, x 2^(k+1)] towards
// infinity, [x 2^-(k+1), x 2^-k] towards zero.  Each panel is integrated by
// adaptive Gauss-Kronrod.  The integral is declared divergent when the partial
// sum exceeds kDivergenceBound, or when the panels stop shrinking before the
// end of the range (the last panel ratio stays above kMaxPanelRatio).

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "vim/errors.hpp"

namespace vim {

/// A deterministic numerical value with an absolute error estimate.
struct Estimate {
    double value = 0.0;
    double error = 0.0;
};

inline constexpr double kDivergenceBound = 1e12;
inline constexpr double kMaxPanelRatio = 0.99;

namespace detail {

/// K15 and embedded G7 on [a, b]; returns {K15, |K15 - G7|}.
template <class F>
Estimate kronrod15(F& f, double a, double b) {
    using boost::math::quadrature::gauss;
    using boost::math::quadrature::gauss_kronrod;
    const auto& x = gauss_kronrod<double, 15>::abscissa();
    const auto& wk = gauss_kronrod<double, 15>::weights();
    const auto& wg = gauss<double, 7>::weights();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const double f0 = f(c);
    double k = wk[0] * f0, g = wg[0] * f0;
    for (std::size_t i = 1; i < 8; ++i) {
        const double v = f(c - h * x[i]) + f(c + h * x[i]);
        k += wk[i] * v;
        if (i % 2 == 0) g += wg[i / 2] * v;
    }
    return {h * k, h * std::abs(k - g)};
}

template <class F>
Estimate adaptive_kronrod(F& f, double a, double b, double abs_tol, double rel_tol, unsigned depth) {
    const Estimate e = kronrod15(f, a, b);
    if (depth == 0 || e.error <= std::max(abs_tol, rel_tol * std::abs(e.value)) || !std::isfinite(e.value))
        return e;
    const double m = 0.5 * (a + b);
    const Estimate l = adaptive_kronrod(f, a, m, 0.5 * abs_tol, rel_tol, depth - 1);
    const Estimate r = adaptive_kronrod(f, m, b, 0.5 * abs_tol, rel_tol, depth - 1);
    return {l.value + r.value, l.error + r.error};
}

}  // namespace detail

/// Adaptive 15-point Gauss-Kronrod on a finite interval, bisecting until the
/// local |K15 - G7| is below rel_tol times the whole-interval estimate.
/// (Boost's own driver compares an unscaled error with a scaled tolerance and
/// bisects short intervals to max_depth, so only its nodes are used here.)
template <class F>
Estimate integrate(F&& f, double a, double b, double rel_tol = 1e-12, unsigned max_depth = 15) {
    if (a == b) return {};
    const Estimate first = detail::kronrod15(f, a, b);
    if (first.error <= rel_tol * std::abs(first.value) || max_depth == 0 || !std::isfinite(first.value))
        return first;
    const double abs_tol = rel_tol * std::abs(first.value);
    const double m = 0.5 * (a + b);
    const Estimate l = detail::adaptive_kronrod(f, a, m, 0.5 * abs_tol, rel_tol, max_depth - 1);
    const Estimate r = detail::adaptive_kronrod(f, m, b, 0.5 * abs_tol, rel_tol, max_depth - 1);
    return {l.value + r.value, l.error + r.error};
}

/// Double-exponential quadrature for integrands with endpoint singularities.
template <class F>
Estimate integrate_singular(F&& f, double a, double b, double rel_tol = 1e-12) {
    if (a == b) return {};
    thread_local boost::math::quadrature::tanh_sinh<double> rule;
    double err = 0.0, l1 = 0.0;
    auto g = [&f](double x) -> double { return f(x); };
    const double v = rule.integrate(g, a, b, rel_tol, &err, &l1);
    return {v, err};
}

struct ImproperIntegral {
    double value = 0.0;
    double error = 0.0;       ///< quadrature error of the panels summed
    double truncation = 0.0;  ///< estimated contribution beyond the last panel
    bool divergent = false;
    std::vector<double> panels;  ///< per-panel contributions, in visiting order

    [[nodiscard]] bool finite() const { return !divergent; }
};

namespace detail {

inline void classify_panels(ImproperIntegral& out, bool reached_end_of_range) {
    if (out.divergent) return;
    const auto& p = out.panels;
    if (!std::isfinite(out.value) || std::abs(out.value) > kDivergenceBound) {
        out.divergent = true;
        return;
    }
    if (p.size() < 2 || !reached_end_of_range) return;
    const double last = std::abs(p.back());
    const double prev = std::abs(p[p.size() - 2]);
    if (last <= std::numeric_limits<double>::min() || last <= 1e-300 + 1e-15 * std::abs(out.value)) return;
    const double ratio = prev > 0 ? last / prev : INFINITY;
    if (ratio >= kMaxPanelRatio) {
        out.divergent = true;
        return;
    }
    out.truncation = last * ratio / (1.0 - ratio);
}

template <class F>
ImproperIntegral improper_panels(F& f, double x, double end, double tol, bool upward) {
    if (!(x > 0.0)) throw DomainError("improper integral needs a positive start point");
    ImproperIntegral out;
    double cur = x;
    bool reached_end = true;
    for (;;) {
        const double next = upward ? 2.0 * cur : 0.5 * cur;
        const bool full = upward ? next <= end : next >= end;
        const double stop = full ? next : end;
        if (cur == stop) break;
        const Estimate e = upward ? integrate(f, cur, stop, 1e-10, 10) : integrate(f, stop, cur, 1e-10, 10);
        out.value += e.value;
        out.error += e.error;
        if (!std::isfinite(out.value) || std::abs(out.value) > kDivergenceBound) {
            out.divergent = true;
            return out;
        }
        if (!full) break;
        out.panels.push_back(e.value);
        // Cauchy criterion: three consecutive negligible panels end the search.
        const std::size_t n = out.panels.size();
        if (n >= 3) {
            bool small = true;
            for (std::size_t k = n - 3; k < n; ++k)
                small = small && std::abs(out.panels[k]) <= tol * (1.0 + std::abs(out.value));
            if (small) {
                reached_end = false;
                break;
            }
        }
        cur = next;
    }
    classify_panels(out, reached_end);
    return out;
}

}  // namespace detail

/// Integral of f over [x, cap] by doubling panels, with the divergence heuristic.
/// A final partial panel is integrated but left out of the panel sequence, so
/// it cannot distort the ratio test.
template <class F>
ImproperIntegral improper_upper(F&& f, double x, double cap, double tol = 1e-10) {
    return detail::improper_panels(f, x, cap, tol, true);
}

/// Integral of f over [floor, x] by halving panels towards zero.
template <class F>
ImproperIntegral improper_lower(F&& f, double x, double floor = 1e-14, double tol = 1e-10) {
    return detail::improper_panels(f, x, floor, tol, false);
}

}  // namespace vim
