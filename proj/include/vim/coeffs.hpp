#pragma once

// Model coefficients (a, h, g) of the island diffusion
//     dY = (-a(Y) + h(Y)) dt + sqrt(2 g(Y)) dB,
// and numerical checks of the standing assumptions on them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "vim/errors.hpp"
#include "vim/quadrature.hpp"

namespace vim {

/// a = kappa y, h = gamma y (K - y), g = beta y.
struct LogisticFeller {
    double kappa = 1.0;
    double gamma = 0.0;
    double K = 0.0;
    double beta = 1.0;
};

/// a = c1 y, h = c2 y^k1 - c3 y^k2, g = c4 y^k3.
struct PowerLaw {
    double c1 = 1.0, c2 = 0.0, c3 = 0.0, c4 = 1.0;
    double k1 = 1.0, k2 = 2.0, k3 = 1.0;
};

/// Piecewise-linear coefficients on an ascending grid starting at 0.
/// c1, c2 are the claimed linear bounds c1 y <= a(y) <= c2 y.
struct Tabulated {
    std::vector<double> y, a, h, g;
    double c1 = 0.0, c2 = 0.0;
};

struct CoefficientValues {
    double a = 0.0, h = 0.0, g = 0.0;
    [[nodiscard]] double drift() const { return -a + h; }
    friend bool operator==(const CoefficientValues&, const CoefficientValues&) = default;
};

namespace detail {

inline double power(double y, double k) {
    if (k == 1.0) return y;
    if (k == 2.0) return y * y;
    if (k == 3.0) return y * y * y;
    return std::pow(y, k);
}

inline void require(bool ok, const std::string& what) {
    if (!ok) throw DomainError(what);
}

}  // namespace detail

class CoefficientSet {
public:
    using Family = std::variant<LogisticFeller, PowerLaw, Tabulated>;

    explicit CoefficientSet(Family family, double domain_cap = 1e4)
        : family_(std::move(family)), domain_cap_(domain_cap) {
        detail::require(std::isfinite(domain_cap_) && domain_cap_ > 0, "domain_cap must be positive");
        std::visit([this](const auto& f) { check(f); }, family_);
    }

    [[nodiscard]] CoefficientValues eval(double y) const {
        if (!(y >= 0.0)) throw DomainError("coefficients evaluated at negative state");
        return std::visit([y](const auto& f) { return values(f, y); }, family_);
    }

    [[nodiscard]] double a(double y) const { return eval(y).a; }
    [[nodiscard]] double h(double y) const { return eval(y).h; }
    [[nodiscard]] double g(double y) const { return eval(y).g; }

    /// (-a + h) / g, the log-derivative of 1/s.
    [[nodiscard]] double scale_rate(double y) const {
        const auto v = eval(y);
        return v.drift() / v.g;
    }

    [[nodiscard]] const Family& family() const { return family_; }
    [[nodiscard]] double domain_cap() const { return domain_cap_; }

    /// Linear band constants (c1, c2) of the emigration rate.
    [[nodiscard]] std::pair<double, double> emigration_band() const {
        return std::visit(
            [](const auto& f) -> std::pair<double, double> {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, LogisticFeller>) return {f.kappa, f.kappa};
                else if constexpr (std::is_same_v<T, PowerLaw>) return {f.c1, f.c1};
                else return {f.c1, f.c2};
            },
            family_);
    }

    [[nodiscard]] std::string family_name() const {
        return std::visit(
            [](const auto& f) -> std::string {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, LogisticFeller>) return "LogisticFeller";
                else if constexpr (std::is_same_v<T, PowerLaw>) return "PowerLaw";
                else return "Tabulated";
            },
            family_);
    }

private:
    static void check(const LogisticFeller& f) {
        detail::require(f.kappa >= 0 && f.gamma >= 0 && f.K >= 0 && f.beta > 0,
                        "LogisticFeller needs kappa>=0, gamma>=0, K>=0, beta>0");
    }
    static void check(const PowerLaw& f) {
        detail::require(f.c1 >= 0 && f.c2 >= 0 && f.c3 >= 0 && f.c4 > 0,
                        "PowerLaw needs c1,c2,c3>=0 and c4>0");
        detail::require(f.k1 >= 1 && f.k2 > f.k1 && f.k3 > 0,
                        "PowerLaw needs k1>=1, k2>k1, k3>0");
    }
    void check(const Tabulated& f) {
        const std::size_t n = f.y.size();
        detail::require(n >= 2 && f.a.size() == n && f.h.size() == n && f.g.size() == n,
                        "Tabulated needs >= 2 aligned samples");
        detail::require(f.y[0] == 0.0, "Tabulated grid must start at 0");
        for (std::size_t i = 1; i < n; ++i) detail::require(f.y[i] > f.y[i - 1], "Tabulated grid must ascend");
        for (std::size_t i = 0; i < n; ++i)
            detail::require(std::isfinite(f.a[i]) && std::isfinite(f.h[i]) && std::isfinite(f.g[i]),
                            "Tabulated samples must be finite");
        detail::require(f.a[0] == 0.0 && f.h[0] == 0.0 && f.g[0] == 0.0,
                        "Tabulated coefficients must vanish at 0");
        domain_cap_ = std::min(domain_cap_, f.y.back());
    }

    static CoefficientValues values(const LogisticFeller& f, double y) {
        return {f.kappa * y, f.gamma * y * (f.K - y), f.beta * y};
    }
    static CoefficientValues values(const PowerLaw& f, double y) {
        return {f.c1 * y, f.c2 * detail::power(y, f.k1) - f.c3 * detail::power(y, f.k2),
                f.c4 * detail::power(y, f.k3)};
    }
    static CoefficientValues values(const Tabulated& f, double y) {
        if (y > f.y.back()) throw DomainError("state outside the tabulated grid");
        const auto it = std::upper_bound(f.y.begin(), f.y.end(), y);
        const std::size_t j = it == f.y.end() ? f.y.size() - 1 : static_cast<std::size_t>(it - f.y.begin());
        const std::size_t i = j - 1;
        const double w = (y - f.y[i]) / (f.y[j] - f.y[i]);
        auto lerp = [&](const std::vector<double>& v) { return v[i] + w * (v[j] - v[i]); };
        return {lerp(f.a), lerp(f.h), lerp(f.g)};
    }

    Family family_;
    double domain_cap_;
};

/// Outcome of numerically checking the standing assumptions.
struct AssumptionReport {
    struct Witness {
        double value = 0.0;
        double error = 0.0;
        bool finite = true;
    };

    bool a1_ok = false;    ///< vanishing at 0, g > 0, linear band for a, linear growth of h+ and sqrt(g)
    bool a2_ok = false;    ///< int_0^1 Sbar / (g sbar) finite
    bool sbar_ok = false;  ///< int_eps^1 (-a+h)/g converges as eps -> 0
    bool mh_ok = false;    ///< int_1^inf a / (g sbar) finite
    bool mh2_ok = false;   ///< int_1^inf a (y + w_a) / (g sbar) finite
    std::map<std::string, Witness> witnesses;
    std::vector<std::string> notes;

    [[nodiscard]] bool all_ok() const { return a1_ok && a2_ok && sbar_ok && mh_ok && mh2_ok; }
};

namespace detail {

/// log sbar(y) = -int_1^y (-a+h)/g and Sbar(y) = int_0^y sbar on a geometric
/// grid, with quadrature between grid points for off-grid queries.
class NormalizedScale {
public:
    NormalizedScale(const CoefficientSet& c, double floor, double per_decade = 64.0) : c_(c) {
        const double cap = c.domain_cap();
        const double ratio = std::pow(10.0, 1.0 / per_decade);
        for (double y = floor; y < cap; y *= ratio) y_.push_back(y);
        y_.push_back(cap);
        const auto it = std::lower_bound(y_.begin(), y_.end(), 1.0);
        if (it != y_.end() && *it != 1.0 && 1.0 > floor) y_.insert(it, 1.0);
        ref_ = static_cast<std::size_t>(std::lower_bound(y_.begin(), y_.end(), std::min(1.0, cap)) - y_.begin());
        const std::size_t n = y_.size();
        log_s_.assign(n, 0.0);
        rate_.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) rate_[i] = c_.scale_rate(y_[i]);
        auto rate = [this](double y) { return c_.scale_rate(y); };
        for (std::size_t i = ref_ + 1; i < n; ++i)
            log_s_[i] = log_s_[i - 1] - integrate(rate, y_[i - 1], y_[i], 1e-12, 6).value;
        for (std::size_t i = ref_; i-- > 0;)
            log_s_[i] = log_s_[i + 1] + integrate(rate, y_[i], y_[i + 1], 1e-12, 6).value;
        // stop where sbar is astronomically large: every integrand below carries 1/sbar
        end_ = n;
        for (std::size_t i = ref_; i < n; ++i) {
            if (!std::isfinite(log_s_[i]) || log_s_[i] > 600.0) {
                end_ = i + 1;
                break;
            }
        }
        // below the floor sbar is treated as the power law y^p with p = -y rate(y)
        big_S_.assign(n, 0.0);
        const double p = -y_[0] * rate_[0];
        big_S_[0] = y_[0] * std::exp(log_s_[0]) / (p > -1.0 ? 1.0 + p : 1.0);
        static constexpr double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                         0.9061798459386640};
        static constexpr double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                         0.4786286704993665, 0.2369268850561891};
        for (std::size_t i = 1; i < end_; ++i) {
            const double c0 = 0.5 * (y_[i - 1] + y_[i]), h = 0.5 * (y_[i] - y_[i - 1]);
            double acc = 0.0;
            for (int k = 0; k < 5; ++k) acc += gw[k] * std::exp(hermite_log_s(i - 1, c0 + h * gx[k]));
            big_S_[i] = big_S_[i - 1] + h * acc;
        }
    }

    [[nodiscard]] double lower() const { return y_.front(); }
    [[nodiscard]] double upper() const { return y_[end_ - 1]; }

    [[nodiscard]] double log_s(double y) const { return hermite_log_s(index(y), y); }
    [[nodiscard]] double s(double y) const { return std::exp(log_s(y)); }
    [[nodiscard]] double S(double y) const {
        const std::size_t i = index(y);
        const double y0 = y_[i], y1 = y_[i + 1], h = y1 - y0, t = (y - y0) / h;
        const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
        const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
        return h00 * big_S_[i] + h10 * h * std::exp(log_s_[i]) + h01 * big_S_[i + 1] +
               h11 * h * std::exp(log_s_[i + 1]);
    }

private:
    [[nodiscard]] std::size_t index(double y) const {
        const auto last = y_.begin() + static_cast<std::ptrdiff_t>(end_ - 1);
        const auto it = std::upper_bound(y_.begin(), last, y);
        return it == y_.begin() ? 0 : static_cast<std::size_t>(it - y_.begin()) - 1;
    }
    [[nodiscard]] double hermite_log_s(std::size_t i, double y) const {
        const double y0 = y_[i], y1 = y_[i + 1], h = y1 - y0, t = (y - y0) / h;
        const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
        const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
        return h00 * log_s_[i] - h10 * h * rate_[i] + h01 * log_s_[i + 1] - h11 * h * rate_[i + 1];
    }

    const CoefficientSet& c_;
    std::vector<double> y_, log_s_, rate_, big_S_;
    std::size_t ref_ = 0, end_ = 0;
};

}  // namespace detail

/// Checks assumptions A1, A2, S_bar, finite man-hours and its squared variant.
/// Improper integrals use the dyadic-panel divergence heuristic in quadrature.hpp.
inline AssumptionReport validate_assumptions(const CoefficientSet& c, double tol = 1e-8) {
    AssumptionReport r;
    const double cap = c.domain_cap();
    const double floor = 1e-14;

    // --- A1 on a log-spaced sample of (0, cap]
    {
        bool ok = true;
        const auto v0 = c.eval(0.0);
        ok = ok && v0.a == 0.0 && v0.h == 0.0 && v0.g == 0.0;
        const auto [c1, c2] = c.emigration_band();
        ok = ok && c1 > 0 && c2 >= c1 && std::isfinite(c2);
        double min_ratio = INFINITY, max_ratio = 0.0, min_g = INFINITY;
        double growth_mid = 0.0, growth_end = 0.0;
        const int samples = 2000;
        const double lo = std::min(1e-8, cap * 1e-8);
        for (int k = 0; k <= samples; ++k) {
            const double y = lo * std::pow(cap / lo, static_cast<double>(k) / samples);
            const auto v = c.eval(y);
            min_ratio = std::min(min_ratio, v.a / y);
            max_ratio = std::max(max_ratio, v.a / y);
            min_g = std::min(min_g, v.g);
            const double growth = (std::max(0.0, v.h) + std::sqrt(std::max(0.0, v.g))) / y;
            if (k >= samples / 2 && k < 3 * samples / 4) growth_mid = std::max(growth_mid, growth);
            if (k >= 3 * samples / 4) growth_end = std::max(growth_end, growth);
        }
        ok = ok && min_g > 0.0;
        ok = ok && min_ratio >= c1 * (1.0 - tol) && max_ratio <= c2 * (1.0 + tol);
        // linear growth: the ratio must not keep increasing over the last quarter of decades
        const bool growth_ok = std::isfinite(growth_end) && growth_end <= 10.0 * growth_mid + 1.0;
        ok = ok && growth_ok;
        r.a1_ok = ok;
        r.witnesses["a_over_y_min"] = {min_ratio, 0.0, true};
        r.witnesses["a_over_y_max"] = {max_ratio, 0.0, true};
        r.witnesses["g_min"] = {min_g, 0.0, true};
        r.witnesses["growth_ratio_tail"] = {growth_end, 0.0, growth_ok};
        if (const auto* t = std::get_if<Tabulated>(&c.family())) {
            double lip = 0.0;
            for (std::size_t i = 1; i < t->y.size(); ++i) {
                const double dy = t->y[i] - t->y[i - 1];
                lip = std::max({lip, std::abs(t->a[i] - t->a[i - 1]) / dy, std::abs(t->h[i] - t->h[i - 1]) / dy,
                                std::abs(t->g[i] - t->g[i - 1]) / dy});
            }
            r.witnesses["grid_lipschitz_bound"] = {lip, 0.0, true};
            r.notes.push_back("tabulated coefficients: local Lipschitz continuity verified on the grid only");
        }
    }

    if (!r.a1_ok) {
        r.notes.push_back("A1 failed; remaining checks skipped");
        return r;
    }

    // --- S_bar: int_eps^1 (-a+h)/g has a limit as eps -> 0
    const double one = std::min(1.0, cap);
    {
        auto rate = [&](double y) { return c.scale_rate(y); };
        const auto inner = improper_lower(rate, one, floor, tol);
        r.sbar_ok = inner.finite();
        r.witnesses["sbar_inner_integral"] = {inner.value, inner.error + inner.truncation, inner.finite()};
    }

    const detail::NormalizedScale ns(c, floor);

    // --- A2: int_0^1 Sbar/(g sbar) finite
    {
        auto f = [&](double y) { return ns.S(y) / (c.g(y) * ns.s(y)); };
        const auto v = improper_lower(f, one, ns.lower(), tol);
        r.a2_ok = v.finite();
        r.witnesses["a2_integral"] = {v.value, v.error + v.truncation, v.finite()};
    }

    // --- finite man-hours: int_1^inf a/(g sbar)
    auto rho = [&](double y) {
        const auto v = c.eval(y);
        return v.a / v.g * std::exp(-ns.log_s(y));
    };
    ImproperIntegral mh;
    {
        mh = improper_upper(rho, one, ns.upper(), tol);
        r.mh_ok = mh.finite();
        r.witnesses["man_hours_integral"] = {mh.value, mh.error + mh.truncation, mh.finite()};
        if (ns.upper() < cap) r.notes.push_back("scale function exceeds e^600 before domain_cap; tail treated as zero");
    }

    // --- squared man-hours: int_1^inf a (y + w_a(y)) / (g sbar)
    if (r.mh_ok && r.a2_ok) {
        // w_a(y) = int_0^y Sbar rho + Sbar(y) int_y^inf rho, evaluated on dyadic knots
        std::vector<double> knots{one};
        while (knots.back() < ns.upper()) knots.push_back(std::min(2.0 * knots.back(), ns.upper()));
        const std::size_t m = knots.size();
        std::vector<double> head(m, 0.0), tail(m, 0.0);
        auto s_rho = [&](double y) { return ns.S(y) * rho(y); };
        head[0] = improper_lower(s_rho, one, ns.lower(), tol).value;
        for (std::size_t i = 1; i < m; ++i) head[i] = head[i - 1] + integrate(s_rho, knots[i - 1], knots[i], 1e-8, 8).value;
        for (std::size_t i = m - 1; i-- > 0;) tail[i] = tail[i + 1] + integrate(rho, knots[i], knots[i + 1], 1e-8, 8).value;
        auto w_a = [&](double y) {
            const auto it = std::upper_bound(knots.begin(), knots.end(), y);
            const std::size_t i = it == knots.begin() ? 0 : std::min<std::size_t>(it - knots.begin() - 1, m - 1);
            const double h_part = head[i] + integrate(s_rho, knots[i], y, 1e-6, 6).value;
            const double t_part = tail[i] - integrate(rho, knots[i], y, 1e-6, 6).value;
            return h_part + ns.S(y) * std::max(0.0, t_part);
        };
        auto f = [&](double y) { return rho(y) * (y + w_a(y)); };
        const auto v = improper_upper(f, one, ns.upper(), tol);
        r.mh2_ok = v.finite();
        r.witnesses["man_hours_squared_integral"] = {v.value, v.error + v.truncation, v.finite()};
    }
    return r;
}

}  // namespace vim
