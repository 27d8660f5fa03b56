#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace subx::lp {

enum class Relation { LessEq, Eq, GreaterEq };

struct Constraint {
    std::vector<std::pair<int, double>> terms;  // (variable, coefficient)
    Relation rel = Relation::LessEq;
    double rhs = 0;
};

enum class Status { Optimal, Infeasible, Unbounded };

struct Solution {
    Status status = Status::Infeasible;
    double objective = 0;
    std::vector<double> x;
};

/// Dense two-phase simplex for  min c.x  s.t. constraints, x >= 0.
/// Sized for the small exact problems in this project (hundreds of
/// variables); Bland's rule guards against cycling.
class Simplex {
public:
    explicit Simplex(int nvars) : nvars_(nvars), c_(nvars, 0.0) {}

    void set_objective(int var, double coeff) { c_.at(var) = coeff; }

    void add(Constraint cons) { rows_.push_back(std::move(cons)); }

    Solution solve() const {
        const int m = static_cast<int>(rows_.size());
        // columns: structural | slack/surplus | artificial
        int nslack = 0;
        for (const auto& r : rows_)
            if (r.rel != Relation::Eq) ++nslack;
        const int ncols = nvars_ + nslack + m;  // worst case one artificial per row
        std::vector<std::vector<double>> T(m, std::vector<double>(ncols + 1, 0.0));
        std::vector<int> basis(m, -1);
        int scol = nvars_;
        int acol = nvars_ + nslack;
        std::vector<bool> artificial(ncols, false);

        for (int i = 0; i < m; ++i) {
            const auto& r = rows_[i];
            double sign = 1.0;
            double rhs = r.rhs;
            Relation rel = r.rel;
            if (rhs < 0) {  // normalize to nonnegative rhs
                sign = -1.0;
                rhs = -rhs;
                if (rel == Relation::LessEq) rel = Relation::GreaterEq;
                else if (rel == Relation::GreaterEq) rel = Relation::LessEq;
            }
            for (const auto& [v, coef] : r.terms) T[i][v] += sign * coef;
            T[i][ncols] = rhs;
            if (rel == Relation::LessEq) {
                T[i][scol] = 1.0;
                basis[i] = scol++;
            } else if (rel == Relation::GreaterEq) {
                T[i][scol] = -1.0;
                ++scol;
                T[i][acol] = 1.0;
                artificial[acol] = true;
                basis[i] = acol++;
            } else {
                T[i][acol] = 1.0;
                artificial[acol] = true;
                basis[i] = acol++;
            }
        }

        // phase 1: minimize the sum of artificials
        std::vector<double> phase1(ncols, 0.0);
        for (int j = 0; j < ncols; ++j)
            if (artificial[j]) phase1[j] = 1.0;
        if (!run(T, basis, phase1, ncols)) return {Status::Unbounded, 0, {}};
        double art_sum = 0;
        for (int i = 0; i < m; ++i)
            if (artificial[basis[i]]) art_sum += T[i][ncols];
        if (art_sum > 1e-7) return {Status::Infeasible, 0, {}};
        // pivot remaining artificials out of the basis where possible
        for (int i = 0; i < m; ++i) {
            if (!artificial[basis[i]]) continue;
            int enter = -1;
            for (int j = 0; j < ncols && enter < 0; ++j)
                if (!artificial[j] && std::abs(T[i][j]) > 1e-9) enter = j;
            if (enter >= 0) pivot(T, basis, i, enter, ncols);
        }

        // phase 2
        std::vector<double> cost(ncols, 0.0);
        for (int j = 0; j < nvars_; ++j) cost[j] = c_[j];
        for (int j = 0; j < ncols; ++j)
            if (artificial[j]) cost[j] = 0.0;  // kept at zero; rows with stuck artificials are degenerate
        if (!run(T, basis, cost, ncols, &artificial)) return {Status::Unbounded, 0, {}};

        Solution sol;
        sol.status = Status::Optimal;
        sol.x.assign(nvars_, 0.0);
        for (int i = 0; i < m; ++i)
            if (basis[i] < nvars_) sol.x[basis[i]] = T[i][ncols];
        sol.objective = 0;
        for (int j = 0; j < nvars_; ++j) sol.objective += c_[j] * sol.x[j];
        return sol;
    }

private:
    static void pivot(std::vector<std::vector<double>>& T, std::vector<int>& basis,
                      int row, int col, int ncols) {
        const int m = static_cast<int>(T.size());
        const double piv = T[row][col];
        for (int j = 0; j <= ncols; ++j) T[row][j] /= piv;
        for (int i = 0; i < m; ++i) {
            if (i == row) continue;
            const double f = T[i][col];
            if (f == 0.0) continue;
            for (int j = 0; j <= ncols; ++j) T[i][j] -= f * T[row][j];
        }
        basis[row] = col;
    }

    /// Returns false on unboundedness.
    static bool run(std::vector<std::vector<double>>& T, std::vector<int>& basis,
                    const std::vector<double>& cost, int ncols,
                    const std::vector<bool>* blocked = nullptr) {
        const int m = static_cast<int>(T.size());
        std::vector<double> z(ncols, 0.0);
        long iterations = 0;
        const long bland_after = 2000;
        for (;;) {
            // reduced costs
            for (int j = 0; j < ncols; ++j) {
                double zj = 0;
                for (int i = 0; i < m; ++i) zj += cost[basis[i]] * T[i][j];
                z[j] = cost[j] - zj;
            }
            int enter = -1;
            if (iterations < bland_after) {
                double best = -1e-9;
                for (int j = 0; j < ncols; ++j) {
                    if (blocked && (*blocked)[j]) continue;
                    if (z[j] < best) {
                        best = z[j];
                        enter = j;
                    }
                }
            } else {  // Bland
                for (int j = 0; j < ncols && enter < 0; ++j) {
                    if (blocked && (*blocked)[j]) continue;
                    if (z[j] < -1e-9) enter = j;
                }
            }
            if (enter < 0) return true;
            int leave = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) {
                if (T[i][enter] > 1e-11) {
                    const double ratio = T[i][ncols] / T[i][enter];
                    if (ratio < best_ratio - 1e-12 ||
                        (ratio < best_ratio + 1e-12 && (leave < 0 || basis[i] < basis[leave]))) {
                        best_ratio = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0) return false;
            pivot(T, basis, leave, enter, ncols);
            if (++iterations > 200000) throw std::runtime_error("simplex: iteration limit");
        }
    }

    int nvars_;
    std::vector<double> c_;
    std::vector<Constraint> rows_;
};

}  // namespace subx::lp
