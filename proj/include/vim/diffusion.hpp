#pragma once

// Euler-Maruyama simulation of dY = (-a(Y) + h(Y)) dt + sqrt(2 g(Y)) dB with
// zero as a trap, and trapezoid functionals of the simulated paths.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "vim/coeffs.hpp"
#include "vim/errors.hpp"
#include "vim/parallel.hpp"
#include "vim/random.hpp"
#include "vim/stats.hpp"

namespace vim {

/// A trajectory on the uniform grid t_i = i dt.  An absorbed path ends with
/// its first zero; later grid values are implicitly 0.
struct DiffusionPath {
    double dt = 0.0;
    double horizon = 0.0;
    std::vector<double> values;
    std::optional<double> absorption_time;
    StreamKey stream;

    [[nodiscard]] double time(std::size_t i) const { return static_cast<double>(i) * dt; }
    /// Value at time t (piecewise linear between grid points, 0 after absorption).
    [[nodiscard]] double at(double t) const {
        if (t < 0.0 || values.empty()) return 0.0;
        const double x = t / dt;
        const std::size_t i = static_cast<std::size_t>(x);
        if (i + 1 >= values.size()) return i + 1 == values.size() ? values.back() : (absorption_time ? 0.0 : values.back());
        const double w = x - static_cast<double>(i);
        return (1.0 - w) * values[i] + w * values[i + 1];
    }
};

inline double absorb_eps(double y0) { return 1e-9 * std::max(1.0, y0); }

/// One Euler step with full truncation at 0 and at the domain cap.
inline double euler_step(const CoefficientSet& c, double y, double dt, double normal) {
    const auto v = c.eval(y);
    double next = y + v.drift() * dt + std::sqrt(2.0 * std::max(v.g, 0.0) * dt) * normal;
    if (!(next > 0.0)) next = 0.0;
    return std::min(next, c.domain_cap());
}

/// Simulates without storing: visit(i, y) is called for every grid value
/// including y0 at i = 0.  Returns the absorption time if it occurred.
template <class Visit>
std::optional<double> run_path(const CoefficientSet& c, double y0, double dt, double horizon, Stream& rng,
                               Visit&& visit) {
    if (!(y0 >= 0.0)) throw DomainError("initial state must be >= 0");
    if (!(dt > 0.0) || !(horizon > 0.0)) throw DomainError("dt and horizon must be positive");
    const double eps = absorb_eps(y0);
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
    double y = y0;
    visit(std::size_t{0}, y);
    if (y0 == 0.0) return 0.0;
    for (std::size_t i = 1; i <= steps; ++i) {
        y = euler_step(c, y, dt, rng.normal());
        if (y <= eps) {
            visit(i, 0.0);
            return static_cast<double>(i) * dt;
        }
        visit(i, y);
    }
    return std::nullopt;
}

inline DiffusionPath simulate_path(const CoefficientSet& c, double y0, double dt, double horizon, Stream rng) {
    DiffusionPath p;
    p.dt = dt;
    p.horizon = horizon;
    p.stream = rng.key();
    p.values.reserve(static_cast<std::size_t>(std::min(horizon / dt, 1e6)) + 1);
    p.absorption_time = run_path(c, y0, dt, horizon, rng, [&](std::size_t, double y) { p.values.push_back(y); });
    return p;
}

/// First grid time with value >= b.
inline std::optional<double> first_hitting(const DiffusionPath& p, double b) {
    if (!(b > 0.0)) throw DomainError("first_hitting needs b > 0");
    for (std::size_t i = 0; i < p.values.size(); ++i)
        if (p.values[i] >= b) return p.time(i);
    return std::nullopt;
}

/// Probability that the continuous path reaches b before absorption, given the
/// grid values: each step below b is bridged by a Brownian bridge with the
/// frozen diffusion coefficient 2 g(y_i), whose crossing probability is
/// exp(-(b - y_i)(b - y_{i+1}) / (g(y_i) dt)).  Removes the O(sqrt(dt))
/// undercount of on-grid monitoring.
inline double bridge_hit_probability(const DiffusionPath& p, const CoefficientSet& c, double b) {
    if (!(b > 0.0)) throw DomainError("bridge_hit_probability needs b > 0");
    double miss = 1.0;
    for (std::size_t i = 0; i + 1 < p.values.size(); ++i) {
        const double y0 = p.values[i], y1 = p.values[i + 1];
        if (y0 >= b || y1 >= b) return 1.0;
        if (y1 == 0.0) break;
        const double g = c.g(y0);
        if (g > 0.0) miss *= -std::expm1(-(b - y0) * (b - y1) / (g * p.dt));
    }
    if (!p.values.empty() && p.values.front() >= b) return 1.0;
    return 1.0 - miss;
}

/// Time weights for path functionals.
struct Weight {
    enum class Kind { Plain, TimeWeighted, ExpAlpha } kind = Kind::Plain;
    double alpha = 0.0;

    static Weight plain() { return {}; }
    static Weight time_weighted() { return {Kind::TimeWeighted, 0.0}; }
    static Weight exp_alpha(double a) { return {Kind::ExpAlpha, a}; }

    [[nodiscard]] double operator()(double t) const {
        switch (kind) {
            case Kind::TimeWeighted: return t;
            case Kind::ExpAlpha: return std::exp(-alpha * t);
            default: return 1.0;
        }
    }
};

/// Trapezoid approximation of int f(chi_t) w(t) dt over a sampled path.
template <class F>
double trapezoid_functional(const std::vector<double>& values, double dt, F&& f, Weight w, double t0 = 0.0) {
    if (values.size() < 2) return 0.0;
    double acc = 0.5 * (f(values.front()) * w(t0) + f(values.back()) * w(t0 + dt * static_cast<double>(values.size() - 1)));
    for (std::size_t i = 1; i + 1 < values.size(); ++i) acc += f(values[i]) * w(t0 + dt * static_cast<double>(i));
    return acc * dt;
}

template <class F>
double path_functional(const DiffusionPath& p, F&& f, Weight w = Weight::plain()) {
    return trapezoid_functional(p.values, p.dt, f, w);
}

/// Runs n independent paths from y0 (stream i = key.sub(i)) and folds
/// reduce(i, path) into per-path results.  Results depend only on i.
template <class Reduce>
auto map_paths(const CoefficientSet& c, double y0, double dt, double horizon, std::size_t n, StreamKey key,
               unsigned threads, Reduce&& reduce) {
    using R = decltype(reduce(std::size_t{0}, std::declval<const DiffusionPath&>()));
    std::vector<R> out(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const DiffusionPath p = simulate_path(c, y0, dt, horizon, Stream(key.sub(i)));
        out[i] = reduce(i, p);
    });
    return out;
}

}  // namespace vim
