#pragma once

#include "decpomdp/error.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace decpomdp {

/**
 * Dense primal simplex for   max c.x  s.t.  A x <= b, x >= 0,  with b >= 0,
 * so the slack basis is feasible and no phase one is needed. Bland's rule
 * prevents cycling on the degenerate programs the dominance test produces.
 */
class SimplexLp {
public:
    SimplexLp(int num_vars, int num_rows)
        : n_(num_vars), m_(num_rows),
          tab_(static_cast<std::size_t>(num_rows + 1) * (num_vars + num_rows + 1), 0.0),
          basis_(num_rows) {
        for (int r = 0; r < m_; ++r) {
            at(r, n_ + r) = 1.0;
            basis_[r] = n_ + r;
        }
    }

    void set_objective(int var, double c) { at(m_, var) = -c; }
    void set_coefficient(int row, int var, double a) { at(row, var) = a; }
    void set_rhs(int row, double b) {
        if (b < 0.0) throw LpNumericalFailure("right-hand side must be non-negative");
        at(row, cols() - 1) = b;
    }

    /// Optimal objective value. Throws LpNumericalFailure when unbounded or
    /// when the iteration cap is hit.
    double solve(std::size_t max_iterations = 100000) {
        constexpr double eps = 1e-9;
        for (std::size_t it = 0; it < max_iterations; ++it) {
            int enter = -1;
            for (int j = 0; j < cols() - 1; ++j)
                if (at(m_, j) < -eps) {
                    enter = j;
                    break;
                }
            if (enter < 0) return at(m_, cols() - 1);
            double best = std::numeric_limits<double>::infinity();
            for (int r = 0; r < m_; ++r)
                if (at(r, enter) > eps) best = std::min(best, at(r, cols() - 1) / at(r, enter));
            if (best == std::numeric_limits<double>::infinity()) throw LpNumericalFailure("linear program is unbounded");
            int leave = -1;
            for (int r = 0; r < m_; ++r)
                if (at(r, enter) > eps && at(r, cols() - 1) / at(r, enter) <= best + 1e-12 &&
                    (leave < 0 || basis_[r] < basis_[leave]))
                    leave = r;
            pivot(leave, enter);
        }
        throw LpNumericalFailure("simplex iteration limit reached");
    }

    /// Value of a structural variable at the current basis.
    double value(int var) const {
        for (int r = 0; r < m_; ++r)
            if (basis_[r] == var) return at(r, cols() - 1);
        return 0.0;
    }

private:
    int cols() const { return n_ + m_ + 1; }
    double& at(int r, int c) { return tab_[static_cast<std::size_t>(r) * cols() + c]; }
    double at(int r, int c) const { return tab_[static_cast<std::size_t>(r) * cols() + c]; }

    void pivot(int row, int col) {
        const double p = at(row, col);
        for (int c = 0; c < cols(); ++c) at(row, c) /= p;
        for (int r = 0; r <= m_; ++r) {
            if (r == row) continue;
            const double f = at(r, col);
            if (f == 0.0) continue;
            for (int c = 0; c < cols(); ++c) {
                double& x = at(r, c);
                x -= f * at(row, c);
                if (std::abs(x) < 1e-14) x = 0.0;
            }
            if (r < m_ && at(r, cols() - 1) < 0.0) at(r, cols() - 1) = 0.0;
        }
        basis_[row] = col;
    }

    int n_;
    int m_;
    std::vector<double> tab_;
    std::vector<int> basis_;
};

} // namespace decpomdp
