#include "kexp/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "kexp/errors.hpp"

namespace kexp {

const char* to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::IterationLimit: return "iteration-limit";
    }
    return "unknown";
}

std::vector<std::vector<double>> LinearProgram::dense_rows() const {
    std::vector<std::vector<double>> dense(rows.size(), std::vector<double>(n_vars, 0.0));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (const auto& [col, coef] : rows[r].terms) dense[r][col] += coef;
    }
    return dense;
}

namespace {

enum class ColumnKind : unsigned char { Structural, Slack, Artificial };

// Row-major tableau with the right-hand side in the last column and the
// reduced-cost row kept separately. cost_[j] = c_j - c_B . column_j, so a
// column may enter when its reduced cost is positive (maximization).
class Tableau {
public:
    Tableau(const LinearProgram& lp, const SimplexOptions& options) : options_(options) {
        m_ = lp.rows.size();
        n_struct_ = lp.n_vars;
        std::size_t n_slack = 0, n_art = 0;
        for (const auto& row : lp.rows) {
            const bool flip = row.rhs < 0.0;
            const Sense sense = flip ? mirror(row.sense) : row.sense;
            if (sense != Sense::Equal) ++n_slack;
            if (sense != Sense::LessEqual) ++n_art;
        }
        cols_ = n_struct_ + n_slack + n_art;
        stride_ = cols_ + 1;
        data_.assign(m_ * stride_, 0.0);
        kind_.assign(cols_, ColumnKind::Structural);
        basis_.assign(m_, 0);

        std::size_t next_slack = n_struct_;
        std::size_t next_art = n_struct_ + n_slack;
        for (std::size_t r = 0; r < m_; ++r) {
            const auto& row = lp.rows[r];
            const bool flip = row.rhs < 0.0;
            const double sign = flip ? -1.0 : 1.0;
            const Sense sense = flip ? mirror(row.sense) : row.sense;
            for (const auto& [col, coef] : row.terms) {
                if (col >= n_struct_) throw InputError("constraint references an unknown variable");
                at(r, col) += sign * coef;
            }
            rhs(r) = sign * row.rhs;
            if (sense == Sense::LessEqual) {
                kind_[next_slack] = ColumnKind::Slack;
                at(r, next_slack) = 1.0;
                basis_[r] = next_slack++;
            } else {
                if (sense == Sense::GreaterEqual) {
                    kind_[next_slack] = ColumnKind::Slack;
                    at(r, next_slack++) = -1.0;
                }
                kind_[next_art] = ColumnKind::Artificial;
                at(r, next_art) = 1.0;
                basis_[r] = next_art++;
            }
        }
        limit_ = options_.max_iterations ? options_.max_iterations
                                         : std::max<std::size_t>(20000, 50 * (m_ + cols_));
    }

    bool has_artificials() const {
        return std::any_of(kind_.begin(), kind_.end(),
                           [](ColumnKind k) { return k == ColumnKind::Artificial; });
    }

    // Phase 1: maximize -sum(artificials). cost_rhs_ then holds the remaining sum.
    LpStatus phase_one() {
        std::vector<double> c(cols_, 0.0);
        for (std::size_t j = 0; j < cols_; ++j) {
            if (kind_[j] == ColumnKind::Artificial) c[j] = -1.0;
        }
        set_cost(c);
        const LpStatus status = iterate(/*allow_artificial=*/true);
        if (status != LpStatus::Optimal) return status;
        if (cost_rhs_ > options_.feasibility_tolerance * std::max<double>(1.0, static_cast<double>(m_))) {
            return LpStatus::Infeasible;
        }
        drive_out_artificials();
        return LpStatus::Optimal;
    }

    LpStatus phase_two(const std::vector<double>& objective) {
        std::vector<double> c(cols_, 0.0);
        std::copy(objective.begin(), objective.end(), c.begin());
        set_cost(c);
        return iterate(/*allow_artificial=*/false);
    }

    std::vector<double> solution() const {
        std::vector<double> x(n_struct_, 0.0);
        for (std::size_t r = 0; r < m_; ++r) {
            if (basis_[r] < n_struct_) x[basis_[r]] = std::max(0.0, rhs_at(r));
        }
        return x;
    }

    std::size_t iterations() const { return iterations_; }

private:
    static Sense mirror(Sense s) {
        switch (s) {
            case Sense::LessEqual: return Sense::GreaterEqual;
            case Sense::GreaterEqual: return Sense::LessEqual;
            case Sense::Equal: return Sense::Equal;
        }
        return s;
    }

    double& at(std::size_t r, std::size_t c) { return data_[r * stride_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * stride_ + c]; }
    double& rhs(std::size_t r) { return data_[r * stride_ + cols_]; }
    double rhs_at(std::size_t r) const { return data_[r * stride_ + cols_]; }

    void set_cost(const std::vector<double>& c) {
        cost_ = c;
        cost_rhs_ = 0.0;
        for (std::size_t r = 0; r < m_; ++r) {
            const double cb = c[basis_[r]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j < cols_; ++j) cost_[j] -= cb * at(r, j);
            cost_rhs_ -= cb * rhs_at(r);
        }
    }

    void pivot(std::size_t pr, std::size_t pc) {
        double* prow = &data_[pr * stride_];
        const double inv = 1.0 / prow[pc];
        for (std::size_t j = 0; j < stride_; ++j) prow[j] *= inv;
        prow[pc] = 1.0;
        for (std::size_t r = 0; r < m_; ++r) {
            if (r == pr) continue;
            double* row = &data_[r * stride_];
            const double factor = row[pc];
            if (factor == 0.0) continue;
            for (std::size_t j = 0; j < stride_; ++j) row[j] -= factor * prow[j];
            row[pc] = 0.0;
            if (row[cols_] < 0.0 && row[cols_] > -2 * options_.feasibility_tolerance) row[cols_] = 0.0;
        }
        const double factor = cost_[pc];
        if (factor != 0.0) {
            for (std::size_t j = 0; j < cols_; ++j) cost_[j] -= factor * prow[j];
            cost_rhs_ -= factor * prow[cols_];
            cost_[pc] = 0.0;
        }
        basis_[pr] = pc;
        ++iterations_;
    }

    LpStatus iterate(bool allow_artificial) {
        std::size_t degenerate_run = 0;
        while (true) {
            if (iterations_ >= limit_) return LpStatus::IterationLimit;
            const bool bland = degenerate_run >= options_.degenerate_switch;
            std::size_t enter = cols_;
            double best = options_.optimality_tolerance;
            for (std::size_t j = 0; j < cols_; ++j) {
                if (!allow_artificial && kind_[j] == ColumnKind::Artificial) continue;
                if (cost_[j] > best) {
                    enter = j;
                    if (bland) break;
                    best = cost_[j];
                }
            }
            if (enter == cols_) return LpStatus::Optimal;

            // Harris two-pass ratio test: bound the step with relaxed
            // feasibility, then take the largest pivot within that bound
            // (lowest basic index under Bland's rule).
            double bound = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < m_; ++r) {
                const double coef = at(r, enter);
                if (coef <= options_.pivot_tolerance) continue;
                bound = std::min(bound, (std::max(0.0, rhs_at(r)) + options_.feasibility_tolerance) / coef);
            }
            if (!std::isfinite(bound)) return LpStatus::Unbounded;
            double largest = 0.0;
            for (std::size_t r = 0; r < m_; ++r) {
                const double coef = at(r, enter);
                if (coef > options_.pivot_tolerance && std::max(0.0, rhs_at(r)) / coef <= bound) {
                    largest = std::max(largest, coef);
                }
            }
            std::size_t leave = m_;
            double best_ratio = 0.0;
            for (std::size_t r = 0; r < m_; ++r) {
                const double coef = at(r, enter);
                if (coef <= options_.pivot_tolerance || coef < 1e-4 * largest) continue;
                const double ratio = std::max(0.0, rhs_at(r)) / coef;
                if (ratio > bound) continue;
                const bool better = leave == m_ || (bland ? basis_[r] < basis_[leave] : coef > at(leave, enter));
                if (better) {
                    leave = r;
                    best_ratio = ratio;
                }
            }
            degenerate_run = best_ratio <= options_.feasibility_tolerance ? degenerate_run + 1 : 0;
            pivot(leave, enter);
        }
    }

    void drive_out_artificials() {
        for (std::size_t r = 0; r < m_; ++r) {
            if (kind_[basis_[r]] != ColumnKind::Artificial) continue;
            std::size_t best_col = cols_;
            double best_mag = options_.pivot_tolerance;
            for (std::size_t j = 0; j < cols_; ++j) {
                if (kind_[j] == ColumnKind::Artificial) continue;
                const double mag = std::abs(at(r, j));
                if (mag > best_mag) {
                    best_mag = mag;
                    best_col = j;
                }
            }
            // No candidate means the row is redundant; its artificial stays basic at zero.
            if (best_col != cols_) pivot(r, best_col);
        }
    }

    SimplexOptions options_;
    std::size_t m_ = 0, n_struct_ = 0, cols_ = 0, stride_ = 0;
    std::vector<double> data_;
    std::vector<ColumnKind> kind_;
    std::vector<std::size_t> basis_;
    std::vector<double> cost_;
    double cost_rhs_ = 0.0;
    std::size_t iterations_ = 0;
    std::size_t limit_ = 0;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, const SimplexOptions& options) {
    if (lp.objective.size() != lp.n_vars) throw InputError("objective length differs from n_vars");
    Tableau tableau(lp, options);
    LpResult result;
    if (tableau.has_artificials()) {
        result.status = tableau.phase_one();
        if (result.status != LpStatus::Optimal) {
            result.iterations = tableau.iterations();
            if (result.status == LpStatus::Unbounded) result.status = LpStatus::Infeasible;
            return result;
        }
    }
    result.status = tableau.phase_two(lp.objective);
    result.iterations = tableau.iterations();
    if (result.status == LpStatus::Optimal) {
        result.x = tableau.solution();
        result.objective = 0.0;
        for (std::size_t j = 0; j < lp.n_vars; ++j) result.objective += lp.objective[j] * result.x[j];
    }
    return result;
}

void write_lp(std::ostream& out, const LinearProgram& lp) {
    out << "maximize " << lp.n_vars << ' ' << lp.rows.size() << '\n';
    for (std::size_t j = 0; j < lp.n_vars; ++j) out << (j ? " " : "") << fmt::format("{}", lp.objective[j]);
    out << '\n';
    const auto dense = lp.dense_rows();
    for (std::size_t r = 0; r < lp.rows.size(); ++r) {
        for (std::size_t j = 0; j < lp.n_vars; ++j) out << fmt::format("{}", dense[r][j]) << ' ';
        switch (lp.rows[r].sense) {
            case Sense::LessEqual: out << "<="; break;
            case Sense::Equal: out << "="; break;
            case Sense::GreaterEqual: out << ">="; break;
        }
        out << ' ' << fmt::format("{}", lp.rows[r].rhs) << '\n';
    }
}

}  // namespace kexp
