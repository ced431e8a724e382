#pragma once

// Boundary-value problems  g u'' + (-a+h) u' - c u = -r  on (0, cap),  u(0) = 0,
// with c = c0 + c1 a and r = r1 a, solved by linear finite elements in the
// natural scale S.  Writing the operator as (g s) d/dy (u'/s) = (g s) d/dS du/dS
// turns it into  -d^2u/dS^2 + c u/(g s) dy/dS = r/(g s) dy/dS,  whose stiffness
// matrix is exact for hats that are linear in S.  The right end carries the
// natural condition du/dS = 0, which is what boundedness of u reduces to once
// s has grown beyond e^60.
//
// The flux du/dS at 0 equals u'(0) because s(0) = 1.  It is read off the first
// row of the weak form, so at c = 0 it reproduces int r/(g s) exactly.

#include <boost/math/quadrature/gauss.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "vim/errors.hpp"
#include "vim/scale_table.hpp"

namespace vim {

class ScaleBvp {
public:
    struct Solution {
        std::vector<double> y;  ///< mesh nodes
        std::vector<double> u;  ///< nodal values, u[0] = 0
        double flux0 = 0.0;     ///< u'(0)
    };

    /// Mesh = every `stride`-th fine point of the table.
    explicit ScaleBvp(const ScaleTable& table, std::size_t stride = 1) : table_(&table) {
        if (stride == 0 || (table.fine_count() - 1) % stride != 0)
            throw PreconditionError("ScaleBvp: stride must divide the fine point count");
        const std::size_t n = (table.fine_count() - 1) / stride + 1;
        y_.resize(n);
        S_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const ScalePoint& p = table.fine_point(i * stride);
            y_[i] = p.y;
            S_[i] = p.S;
        }
        build_moments(stride);
    }

    [[nodiscard]] std::size_t size() const { return y_.size(); }
    [[nodiscard]] const std::vector<double>& nodes() const { return y_; }

    /// Solves with c = c0 + c1 a and r = r1 a.
    [[nodiscard]] Solution solve(double c0, double c1, double r1) const {
        const std::size_t n = y_.size();
        const std::size_t m = n - 1;  // unknowns u_1..u_{n-1}
        std::vector<double> diag(m), upper(m, 0.0), rhs(m);
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t i = k + 1;
            const std::size_t e_left = i - 1;
            double d = 1.0 / dS(e_left) + c0 * mom_[e_left].w_rr + c1 * mom_[e_left].a_rr;
            double r = r1 * mom_[e_left].a_r;
            if (i < m) {
                const std::size_t e = i;
                d += 1.0 / dS(e) + c0 * mom_[e].w_ll + c1 * mom_[e].a_ll;
                r += r1 * mom_[e].a_l;
                upper[k] = -1.0 / dS(e) + c0 * mom_[e].w_lr + c1 * mom_[e].a_lr;
            }
            diag[k] = d;
            rhs[k] = r;
        }
        // Thomas algorithm for the symmetric tridiagonal system
        for (std::size_t k = 1; k < m; ++k) {
            const double w = upper[k - 1] / diag[k - 1];
            diag[k] -= w * upper[k - 1];
            rhs[k] -= w * rhs[k - 1];
        }
        Solution out;
        out.y = y_;
        out.u.assign(n, 0.0);
        out.u[m] = rhs[m - 1] / diag[m - 1];
        for (std::size_t k = m - 1; k-- > 0;) out.u[k + 1] = (rhs[k] - upper[k] * out.u[k + 2]) / diag[k];
        for (double v : out.u)
            if (!std::isfinite(v)) throw NumericalError("ScaleBvp: non-finite solution");
        const double u1 = out.u[1];
        out.flux0 = u1 / dS(0) + r1 * mom_[0].a_l - (c0 * mom_[0].w_lr + c1 * mom_[0].a_lr) * u1;
        return out;
    }

private:
    struct Moments {
        // w_* use weight 1/(g s), a_* use a/(g s); ll, lr, rr are products of
        // the left/right hats, l and r single hats.
        double w_ll = 0, w_lr = 0, w_rr = 0;
        double a_ll = 0, a_lr = 0, a_rr = 0, a_l = 0, a_r = 0;
    };

    [[nodiscard]] double dS(std::size_t e) const { return S_[e + 1] - S_[e]; }

    void build_moments(std::size_t stride) {
        const auto& ax = boost::math::quadrature::gauss<double, 5>::abscissa();
        const auto& aw = boost::math::quadrature::gauss<double, 5>::weights();
        std::array<double, 5> gx{-ax[2], -ax[1], ax[0], ax[1], ax[2]};
        std::array<double, 5> gw{aw[2], aw[1], aw[0], aw[1], aw[2]};
        const ScaleTable& t = *table_;
        mom_.assign(y_.size() - 1, Moments{});
        for (std::size_t e = 0; e + 1 < y_.size(); ++e) {
            Moments& m = mom_[e];
            const double S0 = S_[e], dSe = dS(e);
            for (std::size_t j = e * stride; j < (e + 1) * stride; ++j) {
                const double lo = t.fine_point(j).y, hi = t.fine_point(j + 1).y;
                const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
                for (std::size_t k = 0; k < 5; ++k) {
                    const ScalePoint p = t.at(c + h * gx[k]);
                    const double phi_r = (p.S - S0) / dSe, phi_l = 1.0 - phi_r;
                    const double w = h * gw[k] * p.speed();
                    const double wa = w * p.c.a;
                    m.w_ll += w * phi_l * phi_l;
                    m.w_lr += w * phi_l * phi_r;
                    m.w_rr += w * phi_r * phi_r;
                    m.a_ll += wa * phi_l * phi_l;
                    m.a_lr += wa * phi_l * phi_r;
                    m.a_rr += wa * phi_r * phi_r;
                    m.a_l += wa * phi_l;
                    m.a_r += wa * phi_r;
                }
            }
        }
    }

    const ScaleTable* table_;
    std::vector<double> y_, S_;
    std::vector<Moments> mom_;
};

}  // namespace vim
