// Expected total mass of a critical model through the renewal equation, with
// f and mu estimated from excursions.
#include <cstdio>
#include <vector>

#include "vim/vim.hpp"

int main() {
    using namespace vim;
    const ScaleTable t(CoefficientSet(LogisticFeller{1, 0, 0, 1}));
    const double eps = 0.1, T = 10.0, dt = 0.01;
    ExcursionOptions o;
    o.window = T;
    const auto ex = sample_excursions(t, eps, 20000, o, StreamKey{7, 0});

    std::vector<double> grid;
    for (int k = 0; k * dt <= T + 1e-12; ++k) grid.push_back(k * dt);
    const auto f = estimate_fQ_curve(ex, [](double y) { return y; }, grid);
    const auto mu = estimate_fQ_curve(ex, [&](double y) { return t.coeffs().a(y); }, grid);
    RenewalInput in;
    in.dt = dt;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        in.f.push_back(f[k].value);
        in.mu.push_back(mu[k].value);
    }
    const auto m = solve_renewal(in);
    for (std::size_t k = 0; k < grid.size(); k += 100) std::printf("t=%.1f  m=%.4f\n", grid[k], m[k]);
    // offspring mean of one island; 1 in the limit of small eps and dt
    std::printf("int mu = %.4f\n", detail::trapezoid_sum(in.mu, dt, [](double) { return 1.0; }));
    const auto c = cesaro_ratio(m, in);
    std::printf("running average %.4f, limit %.4f\n", c.average, c.predicted);
}
