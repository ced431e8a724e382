#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "vim/errors.hpp"

namespace vim {

/// A Monte Carlo estimate with its standard error.
struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

/// Welford accumulator.
class RunningStats {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    void merge(const RunningStats& o) {
        if (o.n_ == 0) return;
        const double n = static_cast<double>(n_ + o.n_);
        const double d = o.mean_ - mean_;
        mean_ += d * static_cast<double>(o.n_) / n;
        m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
        n_ += o.n_;
    }
    [[nodiscard]] std::size_t count() const { return n_; }
    [[nodiscard]] double mean() const { return mean_; }
    [[nodiscard]] double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    [[nodiscard]] double std_error() const {
        return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }
    [[nodiscard]] McEstimate estimate(double scale = 1.0) const {
        return {scale * mean(), std::abs(scale) * std_error(), n_};
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

inline McEstimate mean_estimate(std::span<const double> xs, double scale = 1.0) {
    RunningStats s;
    for (double x : xs) s.add(x);
    return s.estimate(scale);
}

/// |a - b| measured in units of the combined standard error.
inline double z_score(double a, double se_a, double b, double se_b = 0.0) {
    const double se = std::hypot(se_a, se_b);
    if (se == 0.0) return a == b ? 0.0 : INFINITY;
    return std::abs(a - b) / se;
}

/// Weighted least-squares fit of y = c0 + c1 x (+ c2 x^2) and the value at x = 0.
/// Weights are 1/se^2; the returned standard error is the propagated one.
struct Extrapolation {
    double value = 0.0;
    double std_error = 0.0;
    std::vector<double> coefficients;
};

inline Extrapolation extrapolate_to_zero(std::span<const double> x, std::span<const double> y,
                                         std::span<const double> se, int degree = 1) {
    const std::size_t n = x.size();
    const std::size_t p = static_cast<std::size_t>(degree) + 1;
    if (y.size() != n || se.size() != n || degree < 0 || n < p)
        throw DomainError("extrapolate_to_zero: need at least degree+1 aligned points");
    // normal equations (p <= 3), solved by Gauss-Jordan on the augmented matrix
    std::vector<double> a(p * (p + 1), 0.0);
    auto at = [&](std::size_t r, std::size_t c) -> double& { return a[r * (p + 1) + c]; };
    for (std::size_t i = 0; i < n; ++i) {
        const double w = se[i] > 0 ? 1.0 / (se[i] * se[i]) : 1e30;
        std::vector<double> basis(p, 1.0);
        for (std::size_t k = 1; k < p; ++k) basis[k] = basis[k - 1] * x[i];
        for (std::size_t r = 0; r < p; ++r) {
            for (std::size_t c = 0; c < p; ++c) at(r, c) += w * basis[r] * basis[c];
            at(r, p) += w * basis[r] * y[i];
        }
    }
    // inverse via Gauss-Jordan on [A | I]
    std::vector<double> inv(p * p, 0.0), m(p * p);
    for (std::size_t r = 0; r < p; ++r) {
        inv[r * p + r] = 1.0;
        for (std::size_t c = 0; c < p; ++c) m[r * p + c] = at(r, c);
    }
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::abs(m[r * p + col]) > std::abs(m[piv * p + col])) piv = r;
        if (m[piv * p + col] == 0.0) throw NumericalError("extrapolate_to_zero: singular design");
        for (std::size_t c = 0; c < p; ++c) {
            std::swap(m[col * p + c], m[piv * p + c]);
            std::swap(inv[col * p + c], inv[piv * p + c]);
        }
        const double d = m[col * p + col];
        for (std::size_t c = 0; c < p; ++c) {
            m[col * p + c] /= d;
            inv[col * p + c] /= d;
        }
        for (std::size_t r = 0; r < p; ++r) {
            if (r == col) continue;
            const double f = m[r * p + col];
            for (std::size_t c = 0; c < p; ++c) {
                m[r * p + c] -= f * m[col * p + c];
                inv[r * p + c] -= f * inv[col * p + c];
            }
        }
    }
    Extrapolation out;
    out.coefficients.assign(p, 0.0);
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t c = 0; c < p; ++c) out.coefficients[r] += inv[r * p + c] * at(c, p);
    out.value = out.coefficients[0];
    out.std_error = std::sqrt(std::max(0.0, inv[0]));
    return out;
}

/// Ordinary least-squares slope of y on x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw DomainError("ols_slope: need two aligned points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw DomainError("ols_slope: degenerate abscissae");
    return sxy / sxx;
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = na * nb / (na + nb);
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    if (lambda < 0.2) return {d, 1.0};
    double q = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
        q += term;
        if (std::abs(term) < 1e-12) break;
    }
    return {d, std::clamp(q, 0.0, 1.0)};
}

}  // namespace vim
