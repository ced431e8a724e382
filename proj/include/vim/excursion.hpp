#pragma once

// Sampling from the excursion measure Q_Y, restricted to excursions that reach
// a level eps.  That class has Q_Y-mass 1/S(eps), and conditioned on it an
// excursion is the diffusion conditioned to avoid 0 (Doob transform with S)
// run from near 0 up to T_eps, followed by an independent copy of Y from eps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "vim/diffusion.hpp"
#include "vim/errors.hpp"
#include "vim/parallel.hpp"
#include "vim/random.hpp"
#include "vim/scale_table.hpp"
#include "vim/stats.hpp"

namespace vim {

/// Drift of the conditioned diffusion: (-a + h) + 2 g s / S.
inline double up_drift(const ScaleTable& t, double y) {
    if (!(y > 0.0)) throw DomainError("up_drift needs y > 0");
    const ScalePoint p = t.at(y);
    return p.c.drift() + 2.0 * p.c.g * p.s() / p.S;
}

struct ExcursionOptions {
    double dt = 1e-3;
    double horizon = 100.0;
    double start_eps_factor = 1e-3;  ///< start of the conditioned phase, as a fraction of eps
    int retry_cap = 100;
    /// Recorded path length.  The ascent to eps may run past it (up to
    /// `horizon`); the returned path is then cut here and marked truncated.
    double window = std::numeric_limits<double>::infinity();
};

struct Excursion {
    double epsilon = 0.0;
    double dt = 0.0;
    double weight = 0.0;             ///< 1 / S(eps)
    std::vector<double> values;      ///< grid values from the start of the excursion
    std::size_t eps_index = 0;       ///< grid index of T_eps
    std::optional<double> lifetime;  ///< T_0 when absorbed before the horizon
    bool truncated = false;
    int attempts = 1;
    StreamKey stream;

    [[nodiscard]] double t_eps() const { return static_cast<double>(eps_index) * dt; }
    [[nodiscard]] double max() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }
    [[nodiscard]] double duration() const { return values.empty() ? 0.0 : static_cast<double>(values.size() - 1) * dt; }
};

/// One excursion reaching eps.  The conditioned phase is reflected at 0 (the
/// conditioned process never hits it) and stopped exactly at eps, so the
/// unconditioned phase starts from eps without overshoot.
inline Excursion sample_excursion(const ScaleTable& t, double eps, const ExcursionOptions& opt, Stream rng) {
    if (!(eps > 0.0) || !(eps < t.coeffs().domain_cap())) throw DomainError("sample_excursion needs 0 < eps < domain_cap");
    if (!(opt.dt > 0.0) || !(opt.horizon > 0.0)) throw DomainError("sample_excursion needs dt, horizon > 0");
    const CoefficientSet& c = t.coeffs();
    const double y_start = opt.start_eps_factor * eps;
    if (!(opt.window > 0.0)) throw DomainError("sample_excursion needs window > 0");
    const auto steps = static_cast<std::size_t>(std::ceil(opt.horizon / opt.dt - 1e-9));
    const auto kept = static_cast<std::size_t>(std::ceil(std::min(opt.window, opt.horizon) / opt.dt - 1e-9));
    Excursion ex;
    ex.epsilon = eps;
    ex.dt = opt.dt;
    ex.weight = 1.0 / t.S(eps);
    for (int attempt = 0; attempt < opt.retry_cap; ++attempt) {
        Stream up = attempt == 0 ? rng : rng.substream(1000 + static_cast<std::uint64_t>(attempt));
        ex.values.clear();
        ex.values.push_back(y_start);
        double y = y_start;
        std::size_t i = 0;
        bool reached = false;
        while (i < steps) {
            ++i;
            const auto v = c.eval(y);
            const double drift = up_drift(t, y);
            double next = y + drift * opt.dt + std::sqrt(2.0 * v.g * opt.dt) * up.normal();
            if (next <= 0.0) next = next < 0.0 ? -next : 0.5 * y;
            if (next >= eps) {
                ex.values.push_back(eps);
                reached = true;
                break;
            }
            ex.values.push_back(next);
            y = next;
        }
        if (!reached) continue;
        ex.eps_index = i;
        ex.attempts = attempt + 1;
        ex.stream = up.key();
        if (i > kept) {
            ex.values.resize(kept + 1);
            ex.truncated = true;
            return ex;
        }
        // unconditioned phase from eps, same scheme as the plain diffusion
        Stream down = up.substream(1);
        const double floor = absorb_eps(eps);
        y = eps;
        while (i < kept) {
            ++i;
            y = euler_step(c, y, opt.dt, down.normal());
            if (y <= floor) {
                ex.values.push_back(0.0);
                ex.lifetime = static_cast<double>(i) * opt.dt;
                return ex;
            }
            ex.values.push_back(y);
        }
        ex.truncated = true;
        return ex;
    }
    throw ResourceError("sample_excursion: eps not reached within the horizon after retry_cap attempts");
}

/// Samples n excursions (stream i = key.sub(i)) and maps each through reduce.
template <class Reduce>
auto map_excursions(const ScaleTable& t, double eps, std::size_t n, const ExcursionOptions& opt, StreamKey key,
                    unsigned threads, Reduce&& reduce) {
    using R = decltype(reduce(std::size_t{0}, std::declval<const Excursion&>()));
    std::vector<R> out(n);
    parallel_for(n, threads, [&](std::size_t i) { out[i] = reduce(i, sample_excursion(t, eps, opt, Stream(key.sub(i)))); });
    return out;
}

inline std::vector<Excursion> sample_excursions(const ScaleTable& t, double eps, std::size_t n,
                                                const ExcursionOptions& opt, StreamKey key, unsigned threads = 1) {
    return map_excursions(t, eps, n, opt, key, threads, [](std::size_t, const Excursion& e) { return e; });
}

/// int f(chi_s) w(s) ds for one excursion.
template <class F>
double excursion_functional(const Excursion& e, F&& f, Weight w = Weight::plain()) {
    return trapezoid_functional(e.values, e.dt, f, w);
}

/// weight * mean of (int f(chi_s) w(s) ds)^m over samples sharing one eps.
template <class F>
McEstimate mc_q_functional(std::span<const Excursion> samples, F&& f, int m, Weight w = Weight::plain()) {
    if (samples.empty()) throw DomainError("mc_q_functional: no samples");
    if (m < 1) throw DomainError("mc_q_functional: m must be >= 1");
    const double eps = samples.front().epsilon;
    RunningStats st;
    for (const auto& e : samples) {
        if (e.epsilon != eps) throw DomainError("mc_q_functional: samples mix eps values");
        st.add(std::pow(excursion_functional(e, f, w), m));
    }
    return st.estimate(samples.front().weight);
}

/// Pointwise weighted estimate of int f(chi_t) Q_Y(d chi) on a time grid.
struct CurvePoint {
    double t = 0.0;
    double value = 0.0;
    double std_error = 0.0;
};

template <class F>
std::vector<CurvePoint> estimate_fQ_curve(std::span<const Excursion> samples, F&& f, std::span<const double> times) {
    if (samples.empty()) throw DomainError("estimate_fQ_curve: no samples");
    std::vector<RunningStats> st(times.size());
    for (const auto& e : samples) {
        for (std::size_t k = 0; k < times.size(); ++k) {
            const double x = times[k] / e.dt;
            const std::size_t i = static_cast<std::size_t>(x);
            double y = 0.0;
            if (times[k] >= 0.0 && i + 1 < e.values.size()) {
                const double w = x - static_cast<double>(i);
                y = (1.0 - w) * e.values[i] + w * e.values[i + 1];
            } else if (i + 1 == e.values.size()) {
                y = e.values.back();
            }
            st[k].add(f(y));
        }
    }
    std::vector<CurvePoint> out(times.size());
    const double w = samples.front().weight;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const McEstimate m = st[k].estimate(w);
        out[k] = {times[k], m.value, m.std_error};
    }
    return out;
}

struct AAlphaStats {
    McEstimate mean_A;       ///< int A_alpha dQ over the eps-class
    McEstimate mean_A_logA;  ///< int A_alpha log+ A_alpha dQ over the eps-class
};

/// A_alpha(chi) = int a(chi_s) e^{-alpha s} ds.
inline AAlphaStats estimate_A_alpha_stats(std::span<const Excursion> samples, const CoefficientSet& c, double alpha) {
    if (!(alpha >= 0.0)) throw DomainError("estimate_A_alpha_stats needs alpha >= 0");
    if (samples.empty()) throw DomainError("estimate_A_alpha_stats: no samples");
    RunningStats a, alog;
    for (const auto& e : samples) {
        const double A = excursion_functional(e, [&](double y) { return c.a(y); }, Weight::exp_alpha(alpha));
        a.add(A);
        alog.add(A > 1.0 ? A * std::log(A) : 0.0);
    }
    const double w = samples.front().weight;
    return {a.estimate(w), alog.estimate(w)};
}

/// eps-sweep: estimates at a decreasing list of eps and their weighted linear
/// extrapolation to eps = 0 (the bias from excursions below eps is O(eps)).
struct SweepPoint {
    double epsilon = 0.0;
    McEstimate estimate;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    Extrapolation extrapolated;
};

inline SweepResult extrapolate_sweep(std::vector<SweepPoint> points, int degree = 1) {
    std::vector<double> x, y, se;
    for (const auto& p : points) {
        x.push_back(p.epsilon);
        y.push_back(p.estimate.value);
        se.push_back(p.estimate.std_error);
    }
    SweepResult r;
    r.extrapolated = extrapolate_to_zero(x, y, se, degree);
    r.points = std::move(points);
    return r;
}

/// Runs `per_eps(eps, key)` -> McEstimate for each eps with independent
/// streams and extrapolates.
template <class PerEps>
SweepResult eps_sweep(std::span<const double> eps_list, StreamKey key, PerEps&& per_eps, int degree = 1) {
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1])) throw DomainError("eps list must be strictly decreasing");
    std::vector<SweepPoint> pts;
    for (std::size_t i = 0; i < eps_list.size(); ++i) pts.push_back({eps_list[i], per_eps(eps_list[i], key.sub(i))});
    return extrapolate_sweep(std::move(pts), degree);
}

}  // namespace vim
