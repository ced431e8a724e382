// One island tree for the logistic model and its total mass on a coarse grid.
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "vim/vim.hpp"

int main(int argc, char** argv) {
    using namespace vim;
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 2;
    const ScaleTable t(CoefficientSet(LogisticFeller{1, 1, 2, 1}));

    TreeOptions o;
    o.epsilon = 0.1;
    o.horizon = 5.0;
    o.node_cap = 200000;
    std::vector<double> times;
    for (int k = 0; k <= 10; ++k) times.push_back(0.5 * k);
    MassCurveAccumulator mass(times);
    std::size_t islands = 0, generations = 0;

    const IslandTree tree = simulate_tree(t, 1.0, o, StreamKey{seed, 0}, [&](const IslandNode& n, std::span<const double> v) {
        mass.add(n.birth_time, n.dt, v);
        ++islands;
        generations = std::max(generations, n.generation);
    });
    std::printf("islands=%zu  deepest generation=%zu\n", islands, generations);
    for (std::size_t k = 0; k < times.size(); ++k) std::printf("t=%4.1f  V=%.4f\n", times[k], mass.values()[k]);
    (void)tree;
}
