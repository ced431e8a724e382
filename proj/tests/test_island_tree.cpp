#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "vim/island_tree.hpp"

using namespace vim;

namespace {

const ScaleTable& feller() {
    static const ScaleTable t(CoefficientSet(LogisticFeller{1, 0, 0, 1}));
    return t;
}
const ScaleTable& competition() {
    static const ScaleTable t(CoefficientSet(PowerLaw{1, 0, 1, 1, 1, 2, 1}));
    return t;
}
const ScaleTable& logistic() {
    static const ScaleTable t(CoefficientSet(LogisticFeller{1, 1, 2, 1}));
    return t;
}

std::vector<double> grid(double step, double end) {
    std::vector<double> g;
    for (int i = 0; i * step <= end + 1e-12; ++i) g.push_back(i * step);
    return g;
}

}  // namespace

TEST(IslandTree, EmptyStartIsOneDeadIsland) {
    TreeOptions o;
    const auto tree = simulate_tree(feller(), 0.0, o, StreamKey{1, 0});
    ASSERT_EQ(tree.nodes.size(), 1u);
    EXPECT_EQ(tree.nodes[0].lifetime, 0.0);
    EXPECT_EQ(tree.nodes[0].parent, -1);
}

// Expected colonizations from one island: E^x int a(Y) ds / S(eps) = 1/S(eps) for Feller from x = 1.
TEST(IslandTree, ColonizationCountMatchesHazard) {
    const double eps = 0.5, inv_S = 1.0 / feller().S(eps);
    const auto n = map_paths(feller().coeffs(), 1.0, 1e-3, 30.0, 4000, StreamKey{2, 0}, 1,
                             [&](std::size_t i, const DiffusionPath& p) {
                                 return static_cast<double>(detail::colonization_times(feller().coeffs(), p.values, p.dt, 0.0, 30.0,
                                                                                       inv_S, Stream(StreamKey{2, 1}.sub(i)))
                                                                .size());
                             });
    const auto m = mean_estimate(n);
    EXPECT_LT(z_score(m.value, m.std_error, inv_S), 4.0) << m.value << " vs " << inv_S;
}

TEST(IslandTree, ColonizationTimesAreOrderedAndInRange) {
    const std::vector<double> v(1001, 1.0);
    const auto ts = detail::colonization_times(feller().coeffs(), v, 1e-3, 2.0, 2.5, 50.0, Stream(3, 0));
    ASSERT_FALSE(ts.empty());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        EXPECT_GE(ts[i], 2.0);
        EXPECT_LT(ts[i], 2.5);
        if (i > 0) {
            EXPECT_GE(ts[i], ts[i - 1]);
        }
    }
}

TEST(IslandTree, ParentsPrecedeChildren) {
    TreeOptions o;
    o.epsilon = 0.2;
    o.horizon = 5.0;
    std::size_t checked = 0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        const auto tree = simulate_tree(feller(), 1.0, o, StreamKey{4, 0}.sub(i));
        for (const auto& n : tree.nodes) {
            if (n.parent < 0) continue;
            const auto& p = tree.nodes[static_cast<std::size_t>(n.parent)];
            EXPECT_LT(p.id, n.id);
            EXPECT_EQ(n.generation, p.generation + 1);
            EXPECT_GE(n.birth_time, p.birth_time);
            EXPECT_LT(n.birth_time, tree.horizon);
            ++checked;
        }
    }
    EXPECT_GT(checked, 20u);
}

TEST(IslandTree, CharacteristicsOnOneTree) {
    TreeOptions o;
    o.epsilon = 0.2;
    o.horizon = 4.0;
    o.keep_paths = true;
    const auto tree = simulate_tree(feller(), 1.0, o, StreamKey{5, 0});
    const auto times = grid(0.1, 4.0);
    const auto mass = total_mass_curve(tree, Characteristic::total_mass(), times);
    EXPECT_DOUBLE_EQ(mass[0], 1.0);
    EXPECT_EQ(total_mass_curve(tree, Characteristic::window(std::numeric_limits<double>::infinity()), times), mass);
    // a window shorter than every age drops all islands born before t - t0
    const auto w = total_mass_curve(tree, Characteristic::window(0.0), times);
    for (std::size_t k = 1; k < times.size(); ++k) EXPECT_LE(w[k], mass[k] + 1e-12);
    // at t = 0 only the root is alive, so the tail area is its whole area
    const auto tail = total_mass_curve(tree, Characteristic::tail_area(), times);
    const auto& root = tree.nodes[0];
    EXPECT_NEAR(tail[0], trapezoid_functional(root.values, root.dt, [](double y) { return y; }, Weight::plain()), 1e-12);

    TreeOptions bare = o;
    bare.keep_paths = false;
    EXPECT_THROW((void)total_mass_curve(simulate_tree(feller(), 1.0, bare, StreamKey{5, 0}), Characteristic::total_mass(), times),
                 PreconditionError);
}

TEST(IslandTree, ObserverMatchesKeptPaths) {
    TreeOptions o;
    o.epsilon = 0.2;
    o.horizon = 3.0;
    o.keep_paths = true;
    const auto times = grid(0.05, 3.0);
    MassCurveAccumulator acc(times);
    const auto tree = simulate_tree(feller(), 1.0, o, StreamKey{6, 0},
                                    [&](const IslandNode& n, std::span<const double> v) { acc.add(n.birth_time, n.dt, v); });
    EXPECT_EQ(acc.values(), total_mass_curve(tree, Characteristic::total_mass(), times));
}

TEST(IslandTree, NodeCapKeepsPartialTree) {
    TreeOptions o;
    o.epsilon = 0.05;
    o.horizon = 20.0;
    o.node_cap = 50;
    int thrown = 0;
    for (std::uint64_t i = 0; i < 10; ++i) {
        try {
            const auto tree = simulate_tree(logistic(), 2.0, o, StreamKey{7, 0}.sub(i));
            EXPECT_LE(tree.nodes.size(), 50u);
        } catch (const TreeResourceError& e) {
            EXPECT_EQ(e.partial().nodes.size(), 50u);
            ++thrown;
        }
    }
    EXPECT_GT(thrown, 0);
}

TEST(IslandTree, FrontierCapStopsGrowth) {
    TreeOptions o;
    o.epsilon = 0.05;
    o.horizon = 20.0;
    o.frontier_cap = 10;
    const auto tree = simulate_tree(logistic(), 2.0, o, StreamKey{8, 0});
    ASSERT_TRUE(tree.frontier_stop);
    EXPECT_LT(tree.stop_time, o.horizon);
}

TEST(IslandTree, EnsembleIsThreadInvariant) {
    EnsembleSpec s;
    s.n_trees = 40;
    s.tree.epsilon = 0.2;
    s.tree.horizon = 3.0;
    s.fit_growth = true;
    const auto a = extinction_experiment(feller(), s, StreamKey{9, 0});
    s.threads = 4;
    const auto b = extinction_experiment(feller(), s, StreamKey{9, 0});
    EXPECT_EQ(a.survival.value, b.survival.value);
    EXPECT_EQ(a.area.value, b.area.value);
    EXPECT_EQ(a.survivors, b.survivors);
}

// The subtree below a first-generation island is distributed as an excursion tree.
TEST(IslandTree, SubtreesAreExcursionTrees) {
    TreeOptions o;
    o.epsilon = 0.2;
    o.horizon = 200.0;
    std::vector<double> child, fresh;
    for (std::uint64_t i = 0; child.size() < 500; ++i) {
        const auto tree = simulate_tree(competition(), 1.0, o, StreamKey{10, 0}.sub(i));
        std::vector<double> sub(tree.nodes.size(), 0.0);
        for (std::size_t k = tree.nodes.size(); k-- > 0;) {
            sub[k] += tree.nodes[k].emigration;
            if (tree.nodes[k].parent > 0) sub[static_cast<std::size_t>(tree.nodes[k].parent)] += sub[k];
        }
        for (std::size_t k = 1; k < tree.nodes.size() && child.size() < 500; ++k)
            if (tree.nodes[k].parent == 0) {
                child.push_back(sub[k]);
                break;
            }
    }
    for (std::uint64_t i = 0; i < 500; ++i) {
        double total = 0.0;
        for (const auto& n : simulate_excursion_tree(competition(), o, StreamKey{11, 0}.sub(i)).nodes) total += n.emigration;
        fresh.push_back(total);
    }
    EXPECT_GT(ks_two_sample(child, fresh).p_value, 1e-3);
}

// Conditioning on the root path: the children are independent excursion trees
// born at Poisson times, so with L(u) = E[1 - exp(-lambda V_u)] / S(eps) over
// excursion trees,
//   E[1 - exp(-lambda V_t)] = E^x[1 - exp(-lambda chi_t - int_0^t L(t - s) a(chi_s) ds)].
TEST(IslandTree, LaplaceRecursion) {
    const double eps = 0.2, dt = 1e-3, T = 3.0, step = 0.02;
    const double inv_S = 1.0 / feller().S(eps);
    const std::vector<double> lambdas = {0.5, 2.0}, targets = {1.0, 3.0};
    const auto times = grid(step, T);
    const std::size_t n_exc = 8000, n_tree = 6000, n_path = 6000, batches = 8;
    TreeOptions o;
    o.epsilon = eps;
    o.dt = dt;
    o.horizon = T;

    // L per lambda, batch and grid age
    std::vector<std::vector<std::vector<double>>> L(lambdas.size(),
                                                    std::vector<std::vector<double>>(batches, std::vector<double>(times.size())));
    for (std::size_t i = 0; i < n_exc; ++i) {
        MassCurveAccumulator acc(times);
        (void)simulate_excursion_tree(feller(), o, StreamKey{12, 0}.sub(i),
                                      [&](const IslandNode& n, std::span<const double> v) { acc.add(n.birth_time, dt, v); });
        for (std::size_t l = 0; l < lambdas.size(); ++l)
            for (std::size_t k = 0; k < times.size(); ++k)
                L[l][i % batches][k] += -std::expm1(-lambdas[l] * acc.values()[k]) * inv_S * batches / n_exc;
    }

    // left side from full trees
    std::vector<std::vector<RunningStats>> lhs(lambdas.size(), std::vector<RunningStats>(targets.size()));
    for (std::size_t i = 0; i < n_tree; ++i) {
        MassCurveAccumulator acc(targets);
        (void)simulate_tree(feller(), 1.0, o, StreamKey{13, 0}.sub(i),
                            [&](const IslandNode& n, std::span<const double> v) { acc.add(n.birth_time, dt, v); });
        for (std::size_t l = 0; l < lambdas.size(); ++l)
            for (std::size_t j = 0; j < targets.size(); ++j) lhs[l][j].add(-std::expm1(-lambdas[l] * acc.values()[j]));
    }

    // right side: per path, per batch of L
    auto L_at = [&](const std::vector<double>& Lb, double u) {
        const double x = u / step;
        const auto k = std::min(static_cast<std::size_t>(x), times.size() - 2);
        const double w = x - static_cast<double>(k);
        return (1.0 - w) * Lb[k] + w * Lb[k + 1];
    };
    std::vector<std::vector<std::vector<RunningStats>>> rhs(
        lambdas.size(), std::vector<std::vector<RunningStats>>(targets.size(), std::vector<RunningStats>(batches)));
    for (std::size_t i = 0; i < n_path; ++i) {
        const auto p = simulate_path(feller().coeffs(), 1.0, dt, T, Stream(StreamKey{14, 0}.sub(i)));
        for (std::size_t j = 0; j < targets.size(); ++j) {
            const double t = targets[j];
            const auto last = static_cast<std::size_t>(std::lround(t / dt));
            for (std::size_t l = 0; l < lambdas.size(); ++l)
                for (std::size_t b = 0; b < batches; ++b) {
                    double integral = 0.0;
                    for (std::size_t s = 0; s < last && s + 1 < p.values.size(); ++s) {
                        const double u0 = t - s * dt, u1 = t - (s + 1) * dt;
                        integral += 0.5 * dt * (L_at(L[l][b], u0) * p.values[s] + L_at(L[l][b], u1) * p.values[s + 1]);
                    }
                    rhs[l][j][b].add(-std::expm1(-lambdas[l] * p.at(t) - integral));
                }
        }
    }

    for (std::size_t l = 0; l < lambdas.size(); ++l)
        for (std::size_t j = 0; j < targets.size(); ++j) {
            RunningStats across;
            double path_se = 0.0;
            for (std::size_t b = 0; b < batches; ++b) {
                across.add(rhs[l][j][b].mean());
                path_se = std::max(path_se, rhs[l][j][b].std_error());
            }
            const double se = std::hypot(across.std_error(), path_se);
            const double z = z_score(lhs[l][j].mean(), lhs[l][j].std_error(), across.mean(), se);
            EXPECT_LT(z, 4.0) << "lambda=" << lambdas[l] << " t=" << targets[j] << " lhs=" << lhs[l][j].mean()
                              << " rhs=" << across.mean();
        }
}
