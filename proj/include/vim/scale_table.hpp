#pragma once

// Scale density s(y) = exp(-int_0^y (-a+h)/g), scale function S(y) = int_0^y s
// and the speed-type density 1/(g s), tabulated for fast and accurate reuse.
//
// The table is a partition 0 = y_0 < y_1 < ... < y_E into elements.  Each
// element carries its 15 Gauss-Kronrod points, so any integral of the form
// int F(y, s(y), S(y)) dy is a composite G7/K15 sum with a built-in error
// estimate.  log s and S are stored at every node and Kronrod point ("fine
// points"); between fine points they are recovered by cubic Hermite
// interpolation using the exact derivatives -(-a+h)/g and s.
//
// The partition is geometric near 0, uniform in the bulk, and stops at the
// effective cap where log s exceeds log_s_cut + 2 log(1+y): beyond it every
// integrand carrying 1/s is below e^-log_s_cut and is dropped.  When the
// domain cap is reached first the table is marked truncated and the last
// element's contribution is reported as truncation error.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "vim/coeffs.hpp"
#include "vim/errors.hpp"
#include "vim/quadrature.hpp"

namespace vim {

struct GridSpec {
    double y_min = 1e-12;         ///< first positive node
    double rel_step = 0.025;      ///< element growth ratio near 0
    double h_bulk = 0.005;        ///< element width in the bulk
    double y_far = 50.0;          ///< beyond this, widths grow like h_bulk * y / y_far
    double log_s_resolution = 0.05;  ///< max change of log s across an element
    double log_s_cut = 60.0;
    std::size_t max_elements = 400000;
};

/// Values of the scale objects at one state.
struct ScalePoint {
    double y = 0.0;
    double log_s = 0.0;
    double S = 0.0;
    CoefficientValues c;

    [[nodiscard]] double s() const { return std::exp(log_s); }
    /// 1 / (g s)
    [[nodiscard]] double speed() const { return std::exp(-log_s) / c.g; }
    [[nodiscard]] double rate() const { return c.drift() / c.g; }
};

class ScaleTable {
public:
    static constexpr std::size_t kKronrod = 15;
    static constexpr std::size_t kStride = kKronrod + 1;

    ScaleTable(CoefficientSet coeffs, GridSpec spec = {}, double tol = 1e-12)
        : coeffs_(std::move(coeffs)), spec_(spec), tol_(tol) {
        build_nodes();
        build_fine_points();
    }

    [[nodiscard]] const CoefficientSet& coeffs() const { return coeffs_; }
    [[nodiscard]] const GridSpec& grid_spec() const { return spec_; }
    [[nodiscard]] double tolerance() const { return tol_; }

    [[nodiscard]] std::size_t elements() const { return nodes_.size() - 1; }
    [[nodiscard]] const std::vector<double>& nodes() const { return nodes_; }
    [[nodiscard]] std::size_t fine_count() const { return pts_.size(); }
    [[nodiscard]] const ScalePoint& fine_point(std::size_t i) const { return pts_[i]; }
    [[nodiscard]] const ScalePoint& node_point(std::size_t node) const { return pts_[node * kStride]; }

    /// Largest tabulated state.
    [[nodiscard]] double effective_cap() const { return nodes_.back(); }
    /// True when the domain cap was hit before the scale function blew up.
    [[nodiscard]] bool truncated() const { return truncated_; }
    /// Accumulated quadrature error in log s along the table.
    [[nodiscard]] double log_s_error() const { return log_s_error_; }

    [[nodiscard]] ScalePoint at(double y) const {
        if (!(y >= 0.0)) throw DomainError("scale table queried at negative state");
        if (y == 0.0) return pts_.front();
        if (y > effective_cap()) return extrapolate(y);
        if (y <= nodes_[1]) return first_element_point(y);
        const auto it = std::upper_bound(fine_y_.begin(), fine_y_.end(), y);
        const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - fine_y_.begin()), pts_.size() - 1) - 1;
        return interpolate(i, y);
    }

    [[nodiscard]] double s(double y) const { return at(y).s(); }
    [[nodiscard]] double S(double y) const { return at(y).S; }
    [[nodiscard]] double log_s(double y) const { return at(y).log_s; }
    [[nodiscard]] double speed(double y) const { return at(y).speed(); }

    /// int_0^cap F(point) dy by composite Gauss-Kronrod over the elements.
    /// `error` sums |K15 - G7| per element plus the truncation estimate.
    template <class F>
    [[nodiscard]] Estimate integrate(F&& f) const {
        return integrate_range(f, 0, elements());
    }

    /// Same, restricted to elements [first, last).
    template <class F>
    [[nodiscard]] Estimate integrate_range(F&& f, std::size_t first, std::size_t last) const {
        const auto& wk = kronrod_weights();
        const auto& wg = gauss_weights();
        double total = 0.0, err = 0.0, last_elem = 0.0;
        for (std::size_t e = first; e < last; ++e) {
            const double half = 0.5 * (nodes_[e + 1] - nodes_[e]);
            double k15 = 0.0, g7 = 0.0;
            for (std::size_t k = 0; k < kKronrod; ++k) {
                const std::size_t idx = k < 7 ? 7 - k : k - 7;
                const double v = f(pts_[e * kStride + 1 + k]);
                k15 += wk[idx] * v;
                if (idx % 2 == 0) g7 += wg[idx / 2] * v;
            }
            k15 *= half;
            g7 *= half;
            total += k15;
            err += std::abs(k15 - g7);
            last_elem = k15;
        }
        if (truncated_ && last == elements()) err += std::abs(last_elem);
        return {total, err};
    }

    /// Running integrals int_0^{y_i} F dy at every fine point i.
    template <class F>
    [[nodiscard]] std::vector<double> cumulative(F&& f) const {
        const auto& gx = gauss5_abscissa();
        const auto& gw = gauss5_weights();
        std::vector<double> out(pts_.size(), 0.0);
        for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
            const double lo = pts_[i].y, hi = pts_[i + 1].y;
            const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
            double acc = 0.0;
            for (std::size_t k = 0; k < 5; ++k) {
                const double y = c + h * gx[k];
                const ScalePoint p = i < kStride ? first_element_point(y) : interpolate(i, y);
                acc += gw[k] * f(p);
            }
            out[i + 1] = out[i] + h * acc;
        }
        return out;
    }

    /// Copy with (s, S) replaced by (c s, c S); every scale-invariant formula
    /// must give the same answer on the copy.
    [[nodiscard]] ScaleTable rescaled(double c) const {
        if (!(c > 0)) throw DomainError("rescale factor must be positive");
        ScaleTable t = *this;
        const double lc = std::log(c);
        for (auto& p : t.pts_) {
            p.log_s += lc;
            p.S *= c;
        }
        t.log_offset_ += lc;
        return t;
    }

    static const std::array<double, 8>& kronrod_abscissa() {
        return boost::math::quadrature::gauss_kronrod<double, 15>::abscissa();
    }
    static const std::array<double, 8>& kronrod_weights() {
        return boost::math::quadrature::gauss_kronrod<double, 15>::weights();
    }
    static const std::array<double, 4>& gauss_weights() {
        return boost::math::quadrature::gauss<double, 7>::weights();
    }
    /// Position of Kronrod point k (0..14, ascending) inside [lo, hi].
    static double kronrod_point(double lo, double hi, std::size_t k) {
        const auto& x = kronrod_abscissa();
        const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
        return k < 7 ? c - h * x[7 - k] : c + h * x[k - 7];
    }

private:
    static const std::array<double, 5>& gauss5_abscissa() {
        static const std::array<double, 5> x = [] {
            const auto& a = boost::math::quadrature::gauss<double, 5>::abscissa();
            return std::array<double, 5>{-a[2], -a[1], a[0], a[1], a[2]};
        }();
        return x;
    }
    static const std::array<double, 5>& gauss5_weights() {
        static const std::array<double, 5> w = [] {
            const auto& a = boost::math::quadrature::gauss<double, 5>::weights();
            return std::array<double, 5>{a[2], a[1], a[0], a[1], a[2]};
        }();
        return w;
    }

    [[nodiscard]] double step(double y) const {
        const double rate = std::abs(coeffs_.scale_rate(y));
        double h = std::min(spec_.rel_step * y, spec_.h_bulk * std::max(1.0, y / spec_.y_far));
        if (rate > 0 && std::isfinite(rate)) h = std::min(h, spec_.log_s_resolution / rate);
        return std::max(h, 1e-15 * std::max(1.0, y));
    }

    void build_nodes() {
        const double cap = coeffs_.domain_cap();
        nodes_ = {0.0, std::min(spec_.y_min, cap)};
        double log_s = -integrate_singular([this](double u) { return coeffs_.scale_rate(u); }, 0.0, nodes_[1], 1e-13).value;
        while (nodes_.back() < cap) {
            const double y = nodes_.back();
            const double next = std::min(cap, y + step(y));
            log_s -= vim::integrate([this](double u) { return coeffs_.scale_rate(u); }, y, next, 1e-13).value;
            nodes_.push_back(next);
            if (!std::isfinite(log_s)) throw NumericalError("scale density is not finite on the domain");
            if (log_s >= spec_.log_s_cut + 2.0 * std::log1p(next)) return;
            if (nodes_.size() > spec_.max_elements + 1)
                throw NumericalError("scale table exceeds max_elements; coarsen GridSpec");
        }
        truncated_ = true;
    }

    void build_fine_points() {
        const std::size_t E = elements();
        pts_.assign(E * kStride + 1, ScalePoint{});
        fine_y_.assign(pts_.size(), 0.0);
        for (std::size_t e = 0; e < E; ++e) {
            for (std::size_t k = 0; k < kKronrod; ++k)
                pts_[e * kStride + 1 + k].y = kronrod_point(nodes_[e], nodes_[e + 1], k);
            pts_[e * kStride].y = nodes_[e];
        }
        pts_.back().y = nodes_.back();
        for (std::size_t i = 0; i < pts_.size(); ++i) {
            fine_y_[i] = pts_[i].y;
            pts_[i].c = coeffs_.eval(pts_[i].y);
        }
        auto rate = [this](double u) { return coeffs_.scale_rate(u); };
        // element 0 touches the possibly singular end y = 0
        pts_[0].log_s = 0.0;
        pts_[0].S = 0.0;
        for (std::size_t i = 1; i <= kStride; ++i) {
            const double y = pts_[i].y;
            const Estimate l = integrate_singular(rate, 0.0, y, 1e-13);
            pts_[i].log_s = -l.value;
            log_s_error_ = std::max(log_s_error_, l.error);
            pts_[i].S = integrate_singular(
                            [&](double u) { return std::exp(-integrate_singular(rate, 0.0, u, 1e-13).value); }, 0.0, y, 1e-12)
                            .value;
        }
        double err = log_s_error_;
        for (std::size_t i = kStride + 1; i < pts_.size(); ++i) {
            const Estimate l = vim::integrate(rate, pts_[i - 1].y, pts_[i].y, 1e-13, 8);
            pts_[i].log_s = pts_[i - 1].log_s - l.value;
            err += l.error;
        }
        log_s_error_ = err;
        const auto& gx = gauss5_abscissa();
        const auto& gw = gauss5_weights();
        for (std::size_t i = kStride + 1; i < pts_.size(); ++i) {
            const double lo = pts_[i - 1].y, hi = pts_[i].y;
            const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
            double acc = 0.0;
            for (std::size_t k = 0; k < 5; ++k) acc += gw[k] * std::exp(hermite_log_s(i - 1, c + h * gx[k]));
            pts_[i].S = pts_[i - 1].S + h * acc;
        }
    }

    [[nodiscard]] double hermite_log_s(std::size_t i, double y) const {
        const ScalePoint& p0 = pts_[i];
        const ScalePoint& p1 = pts_[i + 1];
        const double h = p1.y - p0.y;
        const double t = (y - p0.y) / h;
        const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
        const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
        return h00 * p0.log_s + h10 * h * (-p0.rate()) + h01 * p1.log_s + h11 * h * (-p1.rate());
    }

    /// Hermite interpolation inside fine interval [pts_[i], pts_[i+1]], i >= kStride.
    [[nodiscard]] ScalePoint interpolate(std::size_t i, double y) const {
        const ScalePoint& p0 = pts_[i];
        const ScalePoint& p1 = pts_[i + 1];
        const double h = p1.y - p0.y;
        const double t = (y - p0.y) / h;
        const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
        const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
        ScalePoint p;
        p.y = y;
        p.c = coeffs_.eval(y);
        p.log_s = h00 * p0.log_s + h10 * h * (-p0.rate()) + h01 * p1.log_s + h11 * h * (-p1.rate());
        p.S = h00 * p0.S + h10 * h * p0.s() + h01 * p1.S + h11 * h * p1.s();
        return p;
    }

    [[nodiscard]] ScalePoint first_element_point(double y) const {
        auto rate = [this](double u) { return coeffs_.scale_rate(u); };
        ScalePoint p;
        p.y = y;
        p.c = coeffs_.eval(y);
        if (y == 0.0) return p;
        p.log_s = log_offset_ - integrate_singular(rate, 0.0, y, 1e-13).value;
        p.S = std::exp(log_offset_) *
              integrate_singular([&](double u) { return std::exp(-integrate_singular(rate, 0.0, u, 1e-13).value); }, 0.0,
                                 y, 1e-12)
                  .value;
        return p;
    }

    [[nodiscard]] ScalePoint extrapolate(double y) const {
        if (truncated_) throw DomainError("state beyond the domain cap");
        const ScalePoint& last = pts_.back();
        ScalePoint p;
        p.y = y;
        p.c = coeffs_.eval(y);
        const double slope = -last.rate();
        p.log_s = last.log_s + slope * (y - last.y);
        const double dy = y - last.y;
        p.S = last.S + last.s() * (slope > 1e-12 ? std::expm1(slope * dy) / slope : dy);
        return p;
    }

    CoefficientSet coeffs_;
    GridSpec spec_;
    double tol_;
    std::vector<double> nodes_;
    std::vector<ScalePoint> pts_;
    std::vector<double> fine_y_;
    bool truncated_ = false;
    double log_s_error_ = 0.0;
    double log_offset_ = 0.0;
};

}  // namespace vim
