#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "lp.hpp"
#include "source.hpp"

namespace subx {

/// Exact statistical distance from src to the nearest distribution with
/// min-entropy >= k: the mass above the 2^-k cap. Redistribution room
/// always exists over {0,1}^n for k <= n.
inline double distance_to_min_entropy(const ExplicitSource& src, double k) {
    if (k < 0) throw std::invalid_argument("distance_to_min_entropy: negative k");
    if (k > src.n() + 1e-12) throw std::invalid_argument("distance_to_min_entropy: k > n");
    if (is_integral(k)) {
        const Rational cap = pow2_rational(-static_cast<int>(std::llround(k)));
        Rational excess = 0;
        for (const auto& [s, p] : src.atoms())
            if (p > cap) excess += p - cap;
        return to_double(excess);
    }
    const double cap = std::exp2(-k);
    double excess = 0;
    for (const auto& [s, p] : src.atoms()) {
        const double pd = to_double(p);
        if (pd > cap) excess += pd - cap;
    }
    return excess;
}

namespace detail {

/// LP value of the distance from src to the k-block-source polytope.
/// Variables cover the explicit support; shed mass parks in per-row fill
/// variables (unused columns of used rows, spread uniformly) and one
/// aggregate for untouched rows, which is as feasible as any arrangement.
inline double block_distance_lp(const ExplicitSource& src, double k) {
    const int n = src.n();
    if (n % 2 != 0) throw std::invalid_argument("block distance: n must be even");
    if (k > n / 2.0 + 1e-12) throw std::invalid_argument("block distance: k > n/2 infeasible");
    if (k <= 0) return 0.0;
    const double cap = std::exp2(-k);
    const int h = n / 2;
    const double total_rows = std::exp2(h);

    std::map<BitString, int> row_of;
    std::vector<std::vector<int>> row_atoms;
    const auto& atoms = src.atoms();
    const int S = static_cast<int>(atoms.size());
    for (int i = 0; i < S; ++i) {
        const BitString a = atoms[i].first.slice(0, h);
        auto [it, fresh] = row_of.emplace(a, static_cast<int>(row_atoms.size()));
        if (fresh) row_atoms.emplace_back();
        row_atoms[it->second].push_back(i);
    }
    const int R = static_cast<int>(row_atoms.size());
    const double unused_rows = total_rows - R;

    // variable layout: q_0..q_{S-1}, s_0..s_{S-1}, f_0..f_{R-1}, [F]
    const int qv = 0, sv = S, fv = 2 * S;
    const bool with_outside = unused_rows > 0.5;
    const int Fv = fv + R;
    const int nvars = Fv + (with_outside ? 1 : 0);

    lp::Simplex lp(nvars);
    for (int i = 0; i < S; ++i) lp.set_objective(sv + i, 1.0);

    for (int i = 0; i < S; ++i) {
        lp::Constraint c;  // q_i + s_i >= p_i
        c.terms = {{qv + i, 1.0}, {sv + i, 1.0}};
        c.rel = lp::Relation::GreaterEq;
        c.rhs = to_double(atoms[i].second);
        lp.add(std::move(c));
    }
    for (int a = 0; a < R; ++a) {
        const double free_cols = total_rows - static_cast<double>(row_atoms[a].size());
        {
            lp::Constraint c;  // row mass + fill <= cap
            for (int i : row_atoms[a]) c.terms.emplace_back(qv + i, 1.0);
            c.terms.emplace_back(fv + a, 1.0);
            c.rel = lp::Relation::LessEq;
            c.rhs = cap;
            lp.add(std::move(c));
        }
        for (int i : row_atoms[a]) {
            lp::Constraint c;  // q_i <= cap * (row mass + fill)
            c.terms.emplace_back(qv + i, 1.0);
            for (int j : row_atoms[a]) c.terms.emplace_back(qv + j, -cap);
            c.terms.emplace_back(fv + a, -cap);
            c.rel = lp::Relation::LessEq;
            c.rhs = 0.0;
            lp.add(std::move(c));
        }
        if (free_cols < 0.5) {
            lp::Constraint c;  // no room in this row: fill forced to zero
            c.terms.emplace_back(fv + a, 1.0);
            c.rel = lp::Relation::LessEq;
            c.rhs = 0.0;
            lp.add(std::move(c));
        } else if (1.0 / free_cols > cap) {
            lp::Constraint c;  // uniform fill atoms obey the conditional cap
            c.terms.emplace_back(fv + a, 1.0 / free_cols - cap);
            for (int j : row_atoms[a]) c.terms.emplace_back(qv + j, -cap);
            c.rel = lp::Relation::LessEq;
            c.rhs = 0.0;
            lp.add(std::move(c));
        }
    }
    if (with_outside) {
        lp::Constraint c;  // aggregate outside mass, uniform over unused rows
        c.terms.emplace_back(Fv, 1.0);
        c.rel = lp::Relation::LessEq;
        c.rhs = unused_rows * cap;
        lp.add(std::move(c));
    }
    {
        lp::Constraint c;  // total mass
        for (int i = 0; i < S; ++i) c.terms.emplace_back(qv + i, 1.0);
        for (int a = 0; a < R; ++a) c.terms.emplace_back(fv + a, 1.0);
        if (with_outside) c.terms.emplace_back(Fv, 1.0);
        c.rel = lp::Relation::Eq;
        c.rhs = 1.0;
        lp.add(std::move(c));
    }

    const lp::Solution sol = lp.solve();
    if (sol.status != lp::Status::Optimal)
        throw std::runtime_error("block distance: LP did not reach an optimum");
    return std::max(0.0, sol.objective);
}

}  // namespace detail

/// Minimum statistical distance from src to any exact k-block-source.
/// Zero exactly when block_report(src).is_block(k).
inline double distance_to_block_source(const ExplicitSource& src, double k) {
    if (src.n() % 2 != 0) throw std::invalid_argument("distance_to_block_source: n must be even");
    if (k > src.n() / 2.0 + 1e-12)
        throw std::invalid_argument("distance_to_block_source: k > n/2 infeasible");
    if (k <= 0) return 0.0;
    if (block_report(src).is_block(k)) return 0.0;
    return detail::block_distance_lp(src, k);
}

}  // namespace subx
