#pragma once

// Renewal equations m(t) = f(t) + int_0^t m(t - s) mu(s) ds on a uniform grid,
// and the long-time ratios they predict.

#include <cmath>
#include <cstddef>
#include <vector>

#include "vim/errors.hpp"

namespace vim {

struct RenewalInput {
    std::vector<double> f;   ///< f(i dt)
    std::vector<double> mu;  ///< density of mu at i dt
    double dt = 0.0;

    [[nodiscard]] double horizon() const { return f.empty() ? 0.0 : dt * static_cast<double>(f.size() - 1); }

    void validate() const {
        if (!(dt > 0.0)) throw DomainError("renewal input needs dt > 0");
        if (f.size() != mu.size() || f.empty()) throw DomainError("renewal input grids must be aligned and non-empty");
        for (std::size_t i = 0; i < f.size(); ++i)
            if (!(f[i] >= 0.0) || !(mu[i] >= 0.0)) throw DomainError("renewal input samples must be >= 0");
    }
};

/// Trapezoid convolution.  m appears in its own first cell with weight
/// dt mu(0) / 2, which is solved for directly.
inline std::vector<double> solve_renewal(const RenewalInput& in) {
    in.validate();
    const std::size_t n = in.f.size();
    const double dt = in.dt;
    std::vector<double> m(n);
    m[0] = in.f[0];
    const double implicit = 1.0 - 0.5 * dt * in.mu[0];
    if (!(implicit > 0.0)) throw NumericalError("renewal: dt * mu(0) too large for the implicit first cell");
    for (std::size_t i = 1; i < n; ++i) {
        double conv = 0.5 * m[0] * in.mu[i];
        for (std::size_t j = 1; j < i; ++j) conv += m[i - j] * in.mu[j];
        m[i] = (in.f[i] + dt * conv) / implicit;
    }
    return m;
}

namespace detail {

template <class W>
double trapezoid_sum(const std::vector<double>& v, double dt, W&& w) {
    if (v.size() < 2) return 0.0;
    double acc = 0.5 * (v.front() * w(0.0) + v.back() * w(dt * static_cast<double>(v.size() - 1)));
    for (std::size_t i = 1; i + 1 < v.size(); ++i) acc += v[i] * w(dt * static_cast<double>(i));
    return acc * dt;
}

}  // namespace detail

struct AsymptoticRatio {
    double tail_ratio = 0.0;  ///< mean of e^{-alpha t} m(t) over the last tenth of the grid
    double predicted = 0.0;   ///< int e^{-alpha s} f / int s e^{-alpha s} mu(ds)
    [[nodiscard]] double gap() const { return std::abs(tail_ratio / predicted - 1.0); }
};

inline AsymptoticRatio asymptotic_ratios(const std::vector<double>& m, double alpha, const RenewalInput& in) {
    if (!(alpha > 0.0)) throw PreconditionError("asymptotic_ratios needs alpha > 0 (supercritical)");
    in.validate();
    if (m.size() != in.f.size()) throw DomainError("asymptotic_ratios: m and input grids differ");
    const std::size_t n = m.size();
    const std::size_t first = n - std::max<std::size_t>(1, n / 10);
    double tail = 0.0;
    for (std::size_t i = first; i < n; ++i) tail += std::exp(-alpha * in.dt * static_cast<double>(i)) * m[i];
    AsymptoticRatio r;
    r.tail_ratio = tail / static_cast<double>(n - first);
    const double num = detail::trapezoid_sum(in.f, in.dt, [&](double s) { return std::exp(-alpha * s); });
    const double den = detail::trapezoid_sum(in.mu, in.dt, [&](double s) { return s * std::exp(-alpha * s); });
    r.predicted = num / den;
    return r;
}

/// Critical case: (1/T) int_0^T m against int f / int s mu(ds).  The
/// prediction is 0 when the mean of mu is infinite, which a finite grid can
/// only approximate.
struct CesaroRatio {
    double average = 0.0;
    double predicted = 0.0;
    [[nodiscard]] double gap() const { return std::abs(average / predicted - 1.0); }
};

inline CesaroRatio cesaro_ratio(const std::vector<double>& m, const RenewalInput& in) {
    in.validate();
    if (m.size() != in.f.size()) throw DomainError("cesaro_ratio: m and input grids differ");
    const double T = in.horizon();
    if (!(T > 0.0)) throw DomainError("cesaro_ratio needs more than one grid point");
    CesaroRatio r;
    r.average = detail::trapezoid_sum(m, in.dt, [](double) { return 1.0; }) / T;
    r.predicted = detail::trapezoid_sum(in.f, in.dt, [](double) { return 1.0; }) /
                  detail::trapezoid_sum(in.mu, in.dt, [](double s) { return s; });
    return r;
}

}  // namespace vim
