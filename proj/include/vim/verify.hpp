#pragma once

// Cross-oracle checks: each compares a Monte Carlo or numerical result against
// an independent closed form, quadrature or simulation route.  Used by the
// acceptance runner and by the `verify` subcommand.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vim/diffusion.hpp"
#include "vim/excursion.hpp"
#include "vim/island_tree.hpp"
#include "vim/random.hpp"
#include "vim/renewal.hpp"
#include "vim/scale_analysis.hpp"
#include "vim/scale_table.hpp"
#include "vim/stats.hpp"

namespace vim {

struct CheckResult {
    CheckResult() = default;
    CheckResult(int id_, std::string name_, bool pass_ = false, std::string detail_ = {})
        : id(id_), name(std::move(name_)), pass(pass_), detail(std::move(detail_)) {}

    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;  ///< measured values, references and gaps
    double seconds = 0.0;
};

struct VerifyOptions {
    std::uint64_t seed = 20240521;
    unsigned threads = 1;
};

namespace verify {

namespace detail {

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline CoefficientSet feller(double kappa = 1.0, double beta = 1.0) { return CoefficientSet(LogisticFeller{kappa, 0, 0, beta}); }
inline CoefficientSet logistic() { return CoefficientSet(LogisticFeller{1, 1, 2, 1}); }
inline CoefficientSet competition() { return CoefficientSet(PowerLaw{1, 0, 1, 1, 1, 2, 1}); }

class Line {
public:
    Line() { os_.precision(6); }

    template <class T>
    Line& operator()(const std::string& k, T v) {
        if (!first_) os_ << ", ";
        first_ = false;
        os_ << k << '=' << v;
        return *this;
    }
    [[nodiscard]] std::string str() const { return os_.str(); }

private:
    std::ostringstream os_;
    bool first_ = true;
};

inline std::string fmt(double v, int prec = 6) {
    std::ostringstream o;
    o.precision(prec);
    o << v;
    return o.str();
}

inline std::string pm(const McEstimate& e) { return fmt(e.value) + "+-" + fmt(e.std_error, 3); }

inline McEstimate to_mc(const Extrapolation& x) { return {x.value, x.std_error}; }

inline double eps_dt(double eps) { return std::min(1e-3, 0.01 * eps); }

inline const std::vector<double>& sweep_eps() {
    static const std::vector<double> e{0.4, 0.2, 0.1, 0.05};
    return e;
}

}  // namespace detail

/// 1. Theta = 1 for a = kappa y, h = 0, g = beta y.
inline CheckResult critical_threshold(const VerifyOptions&) {
    CheckResult r{1, "critical threshold, closed form"};
    r.pass = true;
    detail::Line l;
    const double pairs[3][2] = {{1.0, 1.0}, {2.0, 0.5}, {0.3, 3.0}};
    for (const auto& p : pairs) {
        const ScaleTable t(detail::feller(p[0], p[1]));
        const double theta = extinction_criterion(t).value;
        const double gap = std::abs(theta - 1.0);
        r.pass = r.pass && gap <= 1e-6;
        l("kappa,beta=" + detail::fmt(p[0]) + "," + detail::fmt(p[1]) + " |theta-1|", detail::fmt(gap, 3));
    }
    r.detail = l("tol", 1e-6).str();
    return r;
}

/// 2. Theta for the logistic and the pure-competition families against
/// normal-cdf identities.
inline CheckResult supercritical_theta(const VerifyOptions&) {
    CheckResult r{2, "criterion values, error-function oracle"};
    const double e_half = std::exp(0.5), root = std::sqrt(2.0 * std::numbers::pi);
    const double ref_sup = root * e_half * detail::std_normal_cdf(1.0);
    const double ref_sub = root * e_half * (1.0 - detail::std_normal_cdf(1.0));
    const double sup = extinction_criterion(ScaleTable(detail::logistic())).value;
    const double sub = extinction_criterion(ScaleTable(detail::competition())).value;
    const double g1 = std::abs(sup / ref_sup - 1.0), g2 = std::abs(sub / ref_sub - 1.0);
    r.pass = g1 <= 1e-4 && g2 <= 1e-4;
    r.detail = detail::Line()("logistic", detail::fmt(sup, 10))("ref", detail::fmt(ref_sup, 10))("rel", detail::fmt(g1, 3))(
                   "competition", detail::fmt(sub, 10))("ref", detail::fmt(ref_sub, 10))("rel", detail::fmt(g2, 3))("tol", 1e-4)
                   .str();
    return r;
}

namespace detail {

struct FellerPaths {
    McEstimate hit, occupation;
};

inline FellerPaths feller_paths(const VerifyOptions& o) {
    const CoefficientSet c = feller();
    struct Out {
        double hit = 0.0, occ = 0.0;
    };
    const auto res = map_paths(c, 1.0, 1e-3, 50.0, 10000, StreamKey{o.seed, 3}, o.threads, [&](std::size_t, const DiffusionPath& p) {
        return Out{bridge_hit_probability(p, c, 2.0), path_functional(p, [&](double y) { return c.a(y); })};
    });
    RunningStats h, a;
    for (const auto& x : res) {
        h.add(x.hit);
        a.add(x.occ);
    }
    return {h.estimate(), a.estimate()};
}

}  // namespace detail

/// 3. P^1(T_2 < T_0) = 1/(e+1) for Feller kappa = beta = 1.
inline CheckResult hitting_law(const VerifyOptions& o) {
    CheckResult r{3, "hitting probability law"};
    const auto mc = detail::feller_paths(o).hit;
    const double ref = 1.0 / (std::numbers::e + 1.0);
    const double scale = hitting_probability(ScaleTable(detail::feller()), 1.0, 0.0, 2.0);
    const double z = z_score(mc.value, mc.std_error, ref);
    r.pass = z <= 3.0 && std::abs(scale - ref) < 1e-8;
    r.detail = detail::Line()("mc", detail::pm(mc))("closed_form", detail::fmt(ref, 8))("scale_function", detail::fmt(scale, 8))("z", detail::fmt(z, 3))
                   .str();
    return r;
}

/// 4. E^1 int a(Y) dt = 1 for Feller kappa = beta = 1.
inline CheckResult occupation_identity(const VerifyOptions& o) {
    CheckResult r{4, "occupation identity"};
    const auto mc = detail::feller_paths(o).occupation;
    const ScaleTable t(detail::feller());
    // mean ODE: E Y_t = e^{-t}, so E int a(Y) = int_0^inf e^{-t} dt
    const double ode = integrate([](double s) { return std::exp(-s); }, 0.0, 60.0).value;
    const double green = green_occupation(t, 1.0, kInf, [&](double y) { return t.coeffs().a(y); }).value;
    const double z = z_score(mc.value, mc.std_error, 1.0);
    r.pass = z <= 3.0 && std::abs(ode - 1.0) < 1e-8 && std::abs(green - 1.0) < 1e-6;
    r.detail = detail::Line()("mc", detail::pm(mc))("mean_ode", detail::fmt(ode, 10))("green", detail::fmt(green, 10))("z", detail::fmt(z, 3)).str();
    return r;
}

/// 5. eps-sweep of int (int a dchi) dQ against theta on two families.
inline CheckResult excursion_functionals(const VerifyOptions& o) {
    CheckResult r{5, "excursion-measure functionals"};
    r.pass = true;
    detail::Line l;
    const CoefficientSet fams[2] = {detail::feller(), detail::competition()};
    const char* names[2] = {"feller", "competition"};
    for (int f = 0; f < 2; ++f) {
        const ScaleTable t(fams[f]);
        const double theta = extinction_criterion(t).value;
        const auto sweep = eps_sweep(detail::sweep_eps(), StreamKey{o.seed, 50u + static_cast<unsigned>(f)}, [&](double e, StreamKey k) {
            ExcursionOptions eo;
            eo.dt = detail::eps_dt(e);
            eo.horizon = 200.0;
            const auto v = map_excursions(t, e, 50000, eo, k, o.threads, [&](std::size_t, const Excursion& x) {
                return excursion_functional(x, [&](double y) { return t.coeffs().a(y); });
            });
            return mean_estimate(v, 1.0 / t.S(e));
        });
        const double z = z_score(sweep.extrapolated.value, sweep.extrapolated.std_error, theta);
        r.pass = r.pass && z <= 3.0;
        l(std::string(names[f]) + "_mc", detail::pm(detail::to_mc(sweep.extrapolated)))("theta", detail::fmt(theta, 8))("z", detail::fmt(z, 3));
    }
    r.detail = l.str();
    return r;
}

/// 6. Mean of int_0^T V dt over subcritical trees against the expected-area
/// quadrature.
inline CheckResult subcritical_area(const VerifyOptions& o) {
    CheckResult r{6, "subcritical expected area"};
    const ScaleTable t(detail::competition());
    const Estimate ref = expected_total_area(t, 1.0);
    const auto sweep = eps_sweep(detail::sweep_eps(), StreamKey{o.seed, 6}, [&](double e, StreamKey k) {
        EnsembleSpec sp;
        sp.x0 = 1.0;
        sp.n_trees = 2000;
        sp.threads = o.threads;
        sp.tree.epsilon = e;
        sp.tree.dt = detail::eps_dt(e);
        sp.tree.horizon = 50.0;
        return extinction_experiment(t, sp, k).area;
    });
    const double z = z_score(sweep.extrapolated.value, sweep.extrapolated.std_error, ref.value, ref.error);
    r.pass = z <= 3.0;
    r.detail = detail::Line()("mc", detail::pm(detail::to_mc(sweep.extrapolated)))("quadrature", detail::fmt(ref.value, 8))("z", detail::fmt(z, 3)).str();
    return r;
}

/// 7. Survival frequency against E^1[1 - exp(-q int a(Y))].
inline CheckResult survival_probability(const VerifyOptions& o) {
    CheckResult r{7, "survival probability"};
    const ScaleTable t(detail::logistic());
    const ScaleSolver solver(t);
    const double q = fixed_point_q(solver).value;
    const auto& c = t.coeffs();
    const auto v = map_paths(c, 1.0, 1e-3, 60.0, 20000, StreamKey{o.seed, 70}, o.threads, [&](std::size_t, const DiffusionPath& p) {
        return -std::expm1(-q * path_functional(p, [&](double y) { return c.a(y); }));
    });
    const McEstimate oracle = mean_estimate(v);
    std::size_t stops = 0;
    const auto sweep = eps_sweep(detail::sweep_eps(), StreamKey{o.seed, 71}, [&](double e, StreamKey k) {
        EnsembleSpec sp;
        sp.x0 = 1.0;
        sp.n_trees = 2000;
        sp.delta = 1e-3;
        sp.threads = o.threads;
        sp.tree.epsilon = e;
        sp.tree.dt = detail::eps_dt(e);
        sp.tree.horizon = 30.0;
        sp.tree.frontier_cap = 40;
        const auto s = extinction_experiment(t, sp, k);
        stops += s.frontier_stops;
        return s.survival;
    });
    const double z = z_score(sweep.extrapolated.value, sweep.extrapolated.std_error, oracle.value, oracle.std_error);
    r.pass = z <= 3.0;
    r.detail = detail::Line()("mc", detail::pm(detail::to_mc(sweep.extrapolated)))("oracle", detail::pm(oracle))("q", detail::fmt(q, 8))(
                   "frontier_stops", stops)("z", detail::fmt(z, 3))
                   .str();
    return r;
}

/// 8. Malthusian parameter: root accuracy and growth of surviving trees.
inline CheckResult growth_rate(const VerifyOptions& o) {
    CheckResult r{8, "growth rate"};
    const ScaleTable t(detail::logistic());
    const ScaleSolver solver(t);
    const double alpha = malthusian_alpha(solver).value;
    const double theta = extinction_criterion(t).value;
    const double f_gap = std::abs(solver.F(alpha) - 1.0);
    const double f0_gap = std::abs(solver.F(0.0) - theta);

    const double T = 6.0, eps = 0.05, dt = detail::eps_dt(eps), step = 0.1;
    std::vector<double> grid;
    for (int i = 0; i <= static_cast<int>(T / step + 0.5); ++i) grid.push_back(step * i);
    struct Tree {
        std::optional<double> slope;
        double mid = 0.0, end = 0.0;  // e^{-alpha t} V_t at T/2 and T
    };
    std::vector<Tree> trees(150);
    parallel_for(trees.size(), o.threads, [&](std::size_t i) {
        TreeOptions to;
        to.epsilon = eps;
        to.dt = dt;
        to.horizon = T;
        MassCurveAccumulator acc(grid);
        simulate_tree(t, 1.0, to, StreamKey{o.seed, 8}.sub(i), [&](const IslandNode& n, std::span<const double> v) { acc.add(n.birth_time, dt, v); });
        const auto& V = acc.values();
        if (!(V.back() > 1e-3)) return;
        std::vector<double> x, y;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            if (grid[k] < 0.5 * T) continue;
            if (!(V[k] > 0.0)) return;
            x.push_back(grid[k]);
            y.push_back(std::log(V[k]));
        }
        trees[i].slope = ols_slope(x, y);
        trees[i].mid = std::exp(-alpha * 0.5 * T) * V[grid.size() / 2];
        trees[i].end = std::exp(-alpha * T) * V.back();
    });
    RunningStats slope;
    std::vector<double> mids, ends;
    for (const auto& tr : trees)
        if (tr.slope) {
            slope.add(*tr.slope);
            mids.push_back(tr.mid);
            ends.push_back(tr.end);
        }
    const McEstimate fit = slope.estimate();
    const double rel = std::abs(fit.value / alpha - 1.0);
    auto median = [](std::vector<double> v) {
        if (v.empty()) return 0.0;
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
        return v[v.size() / 2];
    };
    r.pass = slope.count() >= 20 && rel <= 0.10 && f_gap < 1e-6 && f0_gap < 1e-6;
    r.detail = detail::Line()("alpha", detail::fmt(alpha, 10))("|F(alpha)-1|", detail::fmt(f_gap, 3))("|F(0)-theta|", detail::fmt(f0_gap, 3))(
                   "survivors", slope.count())("slope", detail::pm(fit))("rel", detail::fmt(rel, 3))("median_W(T/2)", detail::fmt(median(mids), 4))(
                   "median_W(T)", detail::fmt(median(ends), 4))
                   .str();
    return r;
}

namespace detail {

/// L1 distance between the renewal solution for mu = c delta_tau and the
/// geometric series, on [0, horizon].
inline double lattice_l1(double dt, double c = 1.3, double tau = 0.5, double horizon = 3.0) {
    const auto n = static_cast<std::size_t>(horizon / dt + 0.5) + 1;
    const auto k = static_cast<std::size_t>(tau / dt + 0.5);
    RenewalInput in;
    in.dt = dt;
    for (std::size_t i = 0; i < n; ++i) {
        in.f.push_back(std::exp(-dt * static_cast<double>(i)));
        in.mu.push_back(i == k ? c / dt : 0.0);
    }
    const auto m = solve_renewal(in);
    double l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = dt * static_cast<double>(i);
        double exact = 0.0;
        for (int j = 0; j * tau <= s + 1e-12; ++j) exact += std::pow(c, j) * std::exp(-(s - j * tau));
        l1 += std::abs(m[i] - exact) * dt;
    }
    return l1;
}

}  // namespace detail

/// 9. Renewal solution from Monte Carlo (f^Q, mu^Q) against excursion-rooted
/// tree means; lattice kernel against its geometric series.
inline CheckResult renewal_consistency(const VerifyOptions& o) {
    CheckResult r{9, "renewal consistency"};
    const ScaleTable t(detail::feller());
    const double eps = 0.1, dt = 1e-3, T = 3.0, cdt = 0.01;
    std::vector<double> grid;
    for (int i = 0; i <= static_cast<int>(T / cdt + 0.5); ++i) grid.push_back(cdt * i);
    const double times[2] = {1.0, 3.0};
    ExcursionOptions eo;
    eo.dt = dt;
    eo.horizon = 100.0;
    eo.window = T;
    const std::size_t batches = 10, per_batch = 10000;
    std::vector<std::vector<double>> m_batch;
    for (std::size_t b = 0; b < batches; ++b) {
        const auto ex = sample_excursions(t, eps, per_batch, eo, StreamKey{o.seed, 90}.sub(b), o.threads);
        const auto f = estimate_fQ_curve(ex, [](double y) { return y; }, grid);
        const auto mu = estimate_fQ_curve(ex, [&](double y) { return t.coeffs().a(y); }, grid);
        RenewalInput in;
        in.dt = cdt;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            in.f.push_back(f[i].value);
            in.mu.push_back(mu[i].value);
        }
        m_batch.push_back(solve_renewal(in));
    }
    const std::size_t n_trees = 20000;
    std::vector<std::array<double, 2>> v(n_trees);
    parallel_for(n_trees, o.threads, [&](std::size_t i) {
        TreeOptions to;
        to.epsilon = eps;
        to.dt = dt;
        to.horizon = T + 0.5 * dt;
        std::array<double, 2> acc{0.0, 0.0};
        simulate_excursion_tree(t, to, StreamKey{o.seed, 91}.sub(i), [&](const IslandNode& n, std::span<const double> vals) {
            for (int k = 0; k < 2; ++k) acc[k] += vim::detail::sample_linear(vals, dt, times[k] - n.birth_time);
        });
        v[i] = acc;
    });
    r.pass = true;
    detail::Line l;
    const double w = 1.0 / t.S(eps);
    for (int k = 0; k < 2; ++k) {
        const auto idx = static_cast<std::size_t>(times[k] / cdt + 0.5);
        RunningStats ren, tree;
        for (const auto& m : m_batch) ren.add(m[idx]);
        for (const auto& x : v) tree.add(x[k]);
        const McEstimate a = ren.estimate(), b = tree.estimate(w);
        const double z = z_score(a.value, a.std_error, b.value, b.std_error);
        r.pass = r.pass && z <= 3.0;
        l("t=" + detail::fmt(times[k]) + " renewal", detail::pm(a))("tree", detail::pm(b))("z", detail::fmt(z, 3));
    }
    // first order: halving dt halves the L1 error
    const double e1 = detail::lattice_l1(2e-3), e2 = detail::lattice_l1(1e-3);
    const double ratio = e1 / e2;
    r.pass = r.pass && ratio > 1.6 && ratio < 2.4;
    l("lattice_L1(dt=2e-3)", detail::fmt(e1, 3))("lattice_L1(dt=1e-3)", detail::fmt(e2, 3))("ratio", detail::fmt(ratio, 3));
    r.detail = l.str();
    return r;
}

namespace detail {

/// Summary of a small tree ensemble and path set, hashed bitwise.
inline std::uint64_t fingerprint(const ScaleTable& t, std::uint64_t seed, unsigned threads) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](double x) {
        std::uint64_t b;
        std::memcpy(&b, &x, sizeof b);
        h = (h ^ b) * 1099511628211ULL;
    };
    EnsembleSpec sp;
    sp.x0 = 1.0;
    sp.n_trees = 64;
    sp.threads = threads;
    sp.tree.epsilon = 0.2;
    sp.tree.horizon = 3.0;
    sp.fit_growth = true;
    sp.curve_step = 0.5;
    const auto s = extinction_experiment(t, sp, StreamKey{seed, 100});
    mix(s.survival.value);
    mix(s.area.value);
    mix(s.area.std_error);
    if (s.growth) mix(s.growth->value);
    const auto paths = map_paths(t.coeffs(), 1.0, 1e-3, 2.0, 64, StreamKey{seed, 101}, threads,
                                 [](std::size_t, const DiffusionPath& p) { return p.values.back(); });
    for (double x : paths) mix(x);
    return h;
}

}  // namespace detail

/// 10. Properties: S increasing with S(0) = 0, concavity of k, invariance of
/// Green occupation under rescaling of s, reproducibility across thread counts.
inline CheckResult properties(const VerifyOptions& o) {
    CheckResult r{10, "property suite"};
    detail::Line l;
    const ScaleTable logi(detail::logistic());

    bool increasing = logi.S(0.0) == 0.0;
    for (std::size_t i = 1; i < logi.fine_count(); ++i) increasing = increasing && logi.fine_point(i).S > logi.fine_point(i - 1).S;
    l("S_increasing", increasing);

    const ScaleSolver solver(logi);
    Stream rng(StreamKey{o.seed, 102});
    double worst = kInf;
    for (int i = 0; i < 50; ++i) {
        const double z1 = 5.0 * rng.uniform(), z2 = 5.0 * rng.uniform(), lam = rng.uniform();
        const double lhs = solver.k(lam * z1 + (1.0 - lam) * z2);
        const double rhs = lam * solver.k(z1) + (1.0 - lam) * solver.k(z2);
        worst = std::min(worst, lhs - rhs);
    }
    const bool concave = worst >= -1e-9;
    l("k_concavity_min_gap", detail::fmt(worst, 3));

    const ScaleTable feller(detail::feller());
    const ScaleTable scaled = feller.rescaled(7.3);
    const Fn a = [&](double y) { return feller.coeffs().a(y); };
    double inv = 0.0;
    for (double b : {2.0, 5.0, kInf}) {
        const double g1 = green_occupation(feller, 1.0, b, a).value, g2 = green_occupation(scaled, 1.0, b, a).value;
        inv = std::max(inv, std::abs(g2 / g1 - 1.0));
    }
    l("green_rescale_rel", detail::fmt(inv, 3));

    const std::uint64_t f1 = detail::fingerprint(logi, o.seed, 1), f4 = detail::fingerprint(logi, o.seed, 4);
    const std::uint64_t f1b = detail::fingerprint(logi, o.seed, 1);
    const bool identical = f1 == f4 && f1 == f1b;
    l("bit_identical_threads_1_4_rerun", identical);

    r.pass = increasing && concave && inv <= 1e-10 && identical;
    r.detail = l.str();
    return r;
}

using Check = std::function<CheckResult(const VerifyOptions&)>;

inline const std::vector<Check>& all_checks() {
    static const std::vector<Check> c{critical_threshold, supercritical_theta, hitting_law, occupation_identity,
                                      excursion_functionals, subcritical_area, survival_probability, growth_rate,
                                      renewal_consistency, properties};
    return c;
}

/// Runs the selected checks (all when `ids` is empty); exceptions become
/// failures carrying the message.
inline std::vector<CheckResult> run(const VerifyOptions& o, const std::vector<int>& ids = {},
                                    const std::function<void(const CheckResult&)>& on_result = {}) {
    std::vector<CheckResult> out;
    const auto& checks = all_checks();
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!ids.empty() && std::find(ids.begin(), ids.end(), id) == ids.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        CheckResult res;
        try {
            res = checks[i](o);
        } catch (const std::exception& e) {
            res = CheckResult{id, "check " + std::to_string(id), false, std::string("exception: ") + e.what()};
        }
        res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (on_result) on_result(res);
        out.push_back(std::move(res));
    }
    return out;
}

}  // namespace verify
}  // namespace vim
