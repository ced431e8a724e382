// Deterministic analysis of three coefficient families.
#include <cmath>
#include <cstdio>

#include "vim/vim.hpp"

int main() {
    using namespace vim;
    const struct {
        const char* name;
        CoefficientSet c;
    } models[] = {
        {"feller", CoefficientSet(LogisticFeller{1, 0, 0, 1})},
        {"logistic", CoefficientSet(LogisticFeller{1, 1, 2, 1})},
        {"competition", CoefficientSet(PowerLaw{1, 0, 1, 1, 1, 2, 1})},
    };
    for (const auto& m : models) {
        const ScaleTable t(m.c);
        const AnalysisReport r = analyze(t, 1.0);
        std::printf("%-12s theta=%.8f  %s\n", m.name, r.theta.value, to_string(r.regime).c_str());
        if (r.alpha) std::printf("%12s alpha=%.6f  q=%.6f\n", "", r.alpha->value, r.q->value);
        if (r.expected_area && std::isfinite(r.expected_area->value))
            std::printf("%12s E int V = %.6f\n", "", r.expected_area->value);
        if (r.critical_ratio) std::printf("%12s time average = %.6f\n", "", r.critical_ratio->value);
    }
}
