#pragma once

// The Virgin Island Model, simulated with eps-thinning.  Island 0 carries the
// diffusion from x0.  While an island has mass chi, it emits colonists that
// found islands visible at level eps as a Poisson process with rate
// a(chi)/S(eps); each new island carries an independent excursion reaching
// eps.  Islands are processed in order of birth time, and every random draw
// comes from a stream derived from the island's ancestry, so the tree does not
// depend on processing order or thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "vim/diffusion.hpp"
#include "vim/errors.hpp"
#include "vim/excursion.hpp"
#include "vim/parallel.hpp"
#include "vim/random.hpp"
#include "vim/scale_table.hpp"
#include "vim/stats.hpp"

namespace vim {

struct TreeOptions {
    double epsilon = 0.1;
    double dt = 1e-3;
    double horizon = 10.0;
    std::size_t node_cap = 1'000'000;
    /// Stop once this many islands are alive at once (0 = never).  Used by
    /// survival experiments, where such a tree has survived with overwhelming
    /// probability; the tree is flagged `frontier_stop`.
    std::size_t frontier_cap = 0;
    bool keep_paths = false;
    double start_eps_factor = 1e-3;
    int retry_cap = 100;
    double ascent_horizon = 100.0;  ///< time allowed for an island's excursion to reach eps
};

struct IslandNode {
    std::size_t id = 0;
    std::int64_t parent = -1;  ///< -1 for the root
    double birth_time = 0.0;
    std::size_t generation = 0;
    double dt = 0.0;
    std::vector<double> values;  ///< empty unless keep_paths
    std::optional<double> lifetime;
    double excursion_max = 0.0;
    double emigration = 0.0;  ///< int a(chi_s) ds over the simulated path
    bool truncated = false;   ///< still alive at the horizon
    StreamKey key;
};

struct IslandTree {
    std::vector<IslandNode> nodes;
    double epsilon = 0.0;
    double horizon = 0.0;
    double x0 = 0.0;
    double dt = 0.0;
    bool frontier_stop = false;
    double stop_time = 0.0;  ///< horizon, or the birth time at which the frontier cap was hit
};

class TreeResourceError : public ResourceError {
public:
    TreeResourceError(const std::string& what, IslandTree partial)
        : ResourceError(what), partial_(std::move(partial)) {}
    [[nodiscard]] const IslandTree& partial() const { return partial_; }

private:
    IslandTree partial_;
};

/// Random characteristics phi(age, chi).
struct Characteristic {
    enum class Kind { TotalMass, Window, TailArea } kind = Kind::TotalMass;
    double t0 = std::numeric_limits<double>::infinity();

    static Characteristic total_mass() { return {}; }
    static Characteristic window(double t0) { return {Kind::Window, t0}; }
    static Characteristic tail_area() { return {Kind::TailArea, 0.0}; }
};

namespace detail {

inline double sample_linear(std::span<const double> v, double dt, double age) {
    if (age < 0.0 || v.empty()) return 0.0;
    const double x = age / dt;
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 < v.size()) {
        const double w = x - static_cast<double>(i);
        return (1.0 - w) * v[i] + w * v[i + 1];
    }
    return i + 1 == v.size() ? v.back() : 0.0;
}

}  // namespace detail

/// Accumulates sum over islands of phi(t - sigma, chi) on a fixed time grid,
/// without keeping island paths.
class MassCurveAccumulator {
public:
    MassCurveAccumulator(std::vector<double> times, Characteristic phi = Characteristic::total_mass())
        : times_(std::move(times)), phi_(phi), values_(times_.size(), 0.0) {}

    void add(double birth, double dt, std::span<const double> v) {
        const double end = birth + dt * static_cast<double>(v.size() > 0 ? v.size() - 1 : 0);
        auto first = std::lower_bound(times_.begin(), times_.end(), birth);
        if (phi_.kind == Characteristic::Kind::TailArea) {
            // suffix trapezoid areas, evaluated at grid ages
            std::vector<double> suffix(v.size() + 1, 0.0);
            for (std::size_t i = v.size(); i-- > 1;) suffix[i - 1] = suffix[i] + 0.5 * dt * (v[i - 1] + v[i]);
            for (auto it = first; it != times_.end() && *it <= end; ++it) {
                const double age = *it - birth;
                const double x = age / dt;
                const auto i = std::min(static_cast<std::size_t>(x), v.size() - 1);
                const double w = x - static_cast<double>(i);
                const double yi = v[i];
                const double ya = detail::sample_linear(v, dt, age);
                values_[static_cast<std::size_t>(it - times_.begin())] += suffix[i] - 0.5 * w * dt * (yi + ya);
            }
            return;
        }
        for (auto it = first; it != times_.end() && *it <= end; ++it) {
            const double age = *it - birth;
            if (phi_.kind == Characteristic::Kind::Window && age > phi_.t0) break;
            values_[static_cast<std::size_t>(it - times_.begin())] += detail::sample_linear(v, dt, age);
        }
    }

    [[nodiscard]] const std::vector<double>& times() const { return times_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> times_;
    Characteristic phi_;
    std::vector<double> values_;
};

/// Observer called once per island with its node record and grid values.
using IslandObserver = std::function<void(const IslandNode&, std::span<const double>)>;

namespace detail {

struct PendingIsland {
    double birth = 0.0;
    std::int64_t parent = -1;
    std::size_t generation = 0;
    StreamKey key;
    std::uint64_t order = 0;  ///< tie-break: parent id and child rank

    bool operator>(const PendingIsland& o) const {
        if (birth != o.birth) return birth > o.birth;
        return order > o.order;
    }
};

/// Colonization times of one island: Poisson with rate a(chi(u))/S(eps),
/// trapezoid hazard per grid cell, by inversion of the cumulative hazard.
inline std::vector<double> colonization_times(const CoefficientSet& c, std::span<const double> v, double dt,
                                              double birth, double horizon, double inv_S_eps, Stream rng) {
    std::vector<double> out;
    if (v.size() < 2) return out;
    double target = rng.exponential();
    double acc = 0.0;
    double a_prev = c.a(v[0]);
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double a_next = c.a(v[i]);
        const double cell = 0.5 * (a_prev + a_next) * dt * inv_S_eps;
        while (acc + cell >= target && cell > 0.0) {
            const double frac = (target - acc) / cell;
            const double t = birth + dt * (static_cast<double>(i - 1) + frac);
            if (t >= horizon) return out;
            out.push_back(t);
            target += rng.exponential();
        }
        acc += cell;
        a_prev = a_next;
    }
    return out;
}

}  // namespace detail

namespace detail {

inline IslandTree grow_tree(const ScaleTable& t, bool excursion_root, double x0, const TreeOptions& opt,
                            StreamKey key, const IslandObserver& observe) {
    if (!(x0 >= 0.0)) throw DomainError("simulate_tree needs x0 >= 0");
    if (!(opt.epsilon > 0.0)) throw DomainError("simulate_tree needs eps > 0");
    const CoefficientSet& c = t.coeffs();
    const double inv_S_eps = 1.0 / t.S(opt.epsilon);
    IslandTree tree;
    tree.epsilon = opt.epsilon;
    tree.horizon = opt.horizon;
    tree.x0 = x0;
    tree.dt = opt.dt;
    tree.stop_time = opt.horizon;

    std::priority_queue<detail::PendingIsland, std::vector<detail::PendingIsland>, std::greater<>> queue;
    std::priority_queue<double, std::vector<double>, std::greater<>> deaths;  // of processed islands
    queue.push({0.0, -1, 0, key, 0});
    std::vector<double> values;
    while (!queue.empty()) {
        const detail::PendingIsland p = queue.top();
        queue.pop();
        if (tree.nodes.size() >= opt.node_cap)
            throw TreeResourceError("island tree exceeds node_cap", std::move(tree));
        if (opt.frontier_cap > 0) {
            while (!deaths.empty() && deaths.top() <= p.birth) deaths.pop();
            if (deaths.size() >= opt.frontier_cap) {
                tree.frontier_stop = true;
                tree.stop_time = p.birth;
                return tree;
            }
        }
        IslandNode node;
        node.id = tree.nodes.size();
        node.parent = p.parent;
        node.birth_time = p.birth;
        node.generation = p.generation;
        node.dt = opt.dt;
        node.key = p.key;
        const double remaining = opt.horizon - p.birth;
        if (p.parent < 0 && !excursion_root) {
            if (x0 == 0.0) {
                values.assign(1, 0.0);
                node.lifetime = 0.0;
            } else {
                DiffusionPath path = simulate_path(c, x0, opt.dt, remaining, Stream(p.key.sub(0)));
                values = std::move(path.values);
                node.lifetime = path.absorption_time;
            }
        } else {
            ExcursionOptions eo;
            eo.dt = opt.dt;
            eo.horizon = std::max(remaining, opt.ascent_horizon);
            eo.window = remaining;
            eo.start_eps_factor = opt.start_eps_factor;
            eo.retry_cap = opt.retry_cap;
            Excursion ex = sample_excursion(t, opt.epsilon, eo, Stream(p.key.sub(0)));
            values = std::move(ex.values);
            node.lifetime = ex.lifetime;
        }
        node.truncated = !node.lifetime.has_value();
        node.excursion_max = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
        node.emigration = trapezoid_functional(values, opt.dt, [&](double y) { return c.a(y); }, Weight::plain());
        deaths.push(node.lifetime ? p.birth + *node.lifetime : std::numeric_limits<double>::infinity());

        const auto births =
            detail::colonization_times(c, values, opt.dt, p.birth, opt.horizon, inv_S_eps, Stream(p.key.sub(1)));
        for (std::size_t k = 0; k < births.size(); ++k)
            queue.push({births[k], static_cast<std::int64_t>(node.id), p.generation + 1, p.key.sub(2 + k),
                        (static_cast<std::uint64_t>(node.id) << 20) + k});
        if (observe) observe(node, values);
        if (opt.keep_paths) node.values = values;
        tree.nodes.push_back(std::move(node));
    }
    return tree;
}

}  // namespace detail

/// Simulates one tree whose root island carries the diffusion from x0.
/// `observe` sees each island once, in processing order.
inline IslandTree simulate_tree(const ScaleTable& t, double x0, const TreeOptions& opt, StreamKey key,
                                const IslandObserver& observe = {}) {
    return detail::grow_tree(t, false, x0, opt, key, observe);
}

/// Simulates one tree whose root island is an excursion reaching eps.
inline IslandTree simulate_excursion_tree(const ScaleTable& t, const TreeOptions& opt, StreamKey key,
                                          const IslandObserver& observe = {}) {
    return detail::grow_tree(t, true, 0.0, opt, key, observe);
}

/// V^phi on a time grid from a tree simulated with keep_paths.
inline std::vector<double> total_mass_curve(const IslandTree& tree, Characteristic phi, std::span<const double> times) {
    MassCurveAccumulator acc(std::vector<double>(times.begin(), times.end()), phi);
    for (const auto& n : tree.nodes) {
        if (n.values.empty())
            throw PreconditionError("total_mass_curve needs a tree simulated with keep_paths");
        acc.add(n.birth_time, n.dt, n.values);
    }
    return acc.values();
}

/// Ensemble summary.
struct ExtinctionSummary {
    McEstimate survival;  ///< fraction with V_T > delta (frontier-stopped trees count as surviving)
    McEstimate area;      ///< int_0^T V dt, over trees that ran to the horizon
    std::optional<McEstimate> growth;  ///< mean per-tree OLS slope of log V on [T/2, T] over survivors
    std::size_t trees = 0;
    std::size_t frontier_stops = 0;
    std::size_t survivors = 0;
};

struct EnsembleSpec {
    double x0 = 1.0;
    std::size_t n_trees = 100;
    double delta = 1e-3;
    double curve_step = 0.1;  ///< grid for V_t used by the growth fit
    bool fit_growth = false;
    unsigned threads = 1;
    TreeOptions tree;
};

inline ExtinctionSummary extinction_experiment(const ScaleTable& t, const EnsembleSpec& spec, StreamKey key) {
    if (spec.n_trees == 0) throw DomainError("extinction_experiment: empty ensemble");
    const double T = spec.tree.horizon;
    std::vector<double> grid;
    for (double s = 0.0; s <= T + 1e-12; s += spec.curve_step) grid.push_back(s);
    struct Result {
        bool survived = false, stopped = false;
        double area = 0.0;
        std::optional<double> slope;
    };
    std::vector<Result> res(spec.n_trees);
    parallel_for(spec.n_trees, spec.threads, [&](std::size_t i) {
        MassCurveAccumulator curve(grid);
        double area = 0.0, v_T = 0.0;
        const double dt = spec.tree.dt;
        auto obs = [&](const IslandNode& n, std::span<const double> v) {
            curve.add(n.birth_time, dt, v);
            area += trapezoid_functional(std::vector<double>(v.begin(), v.end()), dt, [](double y) { return y; },
                                         Weight::plain());
            const double age = T - n.birth_time;
            if (age >= 0.0) v_T += detail::sample_linear(v, dt, age);
        };
        const IslandTree tree = simulate_tree(t, spec.x0, spec.tree, key.sub(i), obs);
        Result& r = res[i];
        r.stopped = tree.frontier_stop;
        r.survived = tree.frontier_stop || v_T > spec.delta;
        r.area = area;
        if (spec.fit_growth && r.survived && !r.stopped) {
            std::vector<double> x, y;
            for (std::size_t k = 0; k < grid.size(); ++k) {
                if (grid[k] < 0.5 * T) continue;
                if (curve.values()[k] <= 0.0) return;
                x.push_back(grid[k]);
                y.push_back(std::log(curve.values()[k]));
            }
            if (x.size() >= 2) r.slope = ols_slope(x, y);
        }
    });
    ExtinctionSummary s;
    s.trees = spec.n_trees;
    RunningStats surv, area, slope;
    for (const auto& r : res) {
        surv.add(r.survived ? 1.0 : 0.0);
        if (!r.stopped) area.add(r.area);
        if (r.stopped) ++s.frontier_stops;
        if (r.survived) ++s.survivors;
        if (r.slope) slope.add(*r.slope);
    }
    s.survival = surv.estimate();
    s.area = area.estimate();
    if (slope.count() > 0) s.growth = slope.estimate();
    return s;
}

}  // namespace vim
