#pragma once

#include <cstddef>
#include <iosfwd>
#include <utility>
#include <vector>

namespace kexp {

enum class Sense { LessEqual, Equal, GreaterEqual };

struct LinearConstraint {
    std::vector<std::pair<std::size_t, double>> terms;
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
};

/// maximize objective . x  subject to rows, x >= 0.
struct LinearProgram {
    std::size_t n_vars = 0;
    std::vector<double> objective;
    std::vector<LinearConstraint> rows;

    explicit LinearProgram(std::size_t n = 0) : n_vars(n), objective(n, 0.0) {}

    void add_row(std::vector<std::pair<std::size_t, double>> terms, Sense sense, double rhs) {
        rows.push_back({std::move(terms), sense, rhs});
    }

    /// Dense coefficient matrix, one vector per row.
    std::vector<std::vector<double>> dense_rows() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(LpStatus status);

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
    std::size_t iterations = 0;
};

struct SimplexOptions {
    double pivot_tolerance = 1e-9;
    double feasibility_tolerance = 1e-9;
    double optimality_tolerance = 1e-9;
    /// 0 selects a limit proportional to the tableau size.
    std::size_t max_iterations = 0;
    /// Consecutive degenerate pivots after which pricing switches from
    /// largest-coefficient to Bland's rule until progress resumes.
    std::size_t degenerate_switch = 25;
};

/// Dense two-phase tableau simplex. Bland's rule guards against cycling.
LpResult solve_lp(const LinearProgram& lp, const SimplexOptions& options = {});

/// Plain-text dump: `maximize n m`, the objective row, then one
/// `coefficients... <=|=|>= rhs` line per constraint.
void write_lp(std::ostream& out, const LinearProgram& lp);

}  // namespace kexp
