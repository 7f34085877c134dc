#include "renewal/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "renewal/core.hpp"

namespace renewal {

std::string to_string(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
        case LpStatus::solver_failure: return "solver_failure";
    }
    return "unknown";
}

namespace {

inline void scale_pivot_row(Tableau& t, std::size_t r, std::size_t c) {
    double* pr = t.row(r);
    const double piv = pr[c];
    for (std::size_t j = 0; j < t.cols; ++j) pr[j] /= piv;
    pr[c] = 1.0;
}

inline void eliminate_row(Tableau& t, std::size_t i, std::size_t r, std::size_t c) {
    double* ri = t.row(i);
    const double f = ri[c];
    if (f == 0.0) return;
    const double* pr = t.row(r);
    for (std::size_t j = 0; j < t.cols; ++j) ri[j] -= f * pr[j];
    ri[c] = 0.0;
}

void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw DimensionError(std::string(what) + " has a non-finite entry");
    }
}

void check_shape(const Matrix& M, const std::vector<double>& rhs, std::size_t n,
                 const char* what) {
    if (M.size() != rhs.size()) {
        throw DimensionError(std::string(what) + ": " + std::to_string(M.size()) +
                             " rows but right-hand side of length " +
                             std::to_string(rhs.size()));
    }
    for (const auto& row : M) {
        if (row.size() != n) {
            throw DimensionError(std::string(what) + ": row of length " +
                                 std::to_string(row.size()) + ", expected " + std::to_string(n));
        }
        check_finite(row, what);
    }
    check_finite(rhs, what);
}

class Simplex {
public:
    Simplex(const LpProblem& p, const LpOptions& opt) : p_(p), opt_(opt) {}

    LpSolution solve();

private:
    enum class PhaseResult { optimal, unbounded, failure };

    void build();
    PhaseResult run_phase(std::size_t cost_row);
    void pivot(std::size_t r, std::size_t c);
    bool lex_less(std::size_t i, std::size_t k, std::size_t enter) const;
    bool drive_out_artificials();
    std::vector<double> extract_solution() const;
    void refine(std::vector<double>& x) const;

    const LpProblem& p_;
    const LpOptions& opt_;
    std::size_t n_ = 0;       // original variables
    std::size_t n_slack_ = 0;
    std::size_t n_art_ = 0;
    std::size_t m_ = 0;       // live constraint rows
    std::size_t rhs_ = 0;     // rhs column index
    Tableau t_;
    Matrix original_rows_;    // sign-normalized constraint rows incl. rhs
    std::vector<std::size_t> row_origin_;
    std::vector<std::size_t> basis_;
    std::vector<std::size_t> initial_basis_;
    std::vector<char> allowed_;
    std::size_t iterations_ = 0;
    std::size_t max_iterations_ = 0;
};

void Simplex::build() {
    n_ = p_.num_vars();
    const std::size_t m_eq = p_.A.size();
    const std::size_t m_in = p_.G.size();
    n_slack_ = m_in;
    m_ = m_eq + m_in;

    std::vector<char> needs_art(m_, 0);
    std::vector<double> sign(m_, 1.0);
    for (std::size_t i = 0; i < m_eq; ++i) {
        needs_art[i] = 1;
        if (p_.b[i] < 0.0) sign[i] = -1.0;
    }
    for (std::size_t k = 0; k < m_in; ++k) {
        if (p_.h[k] < 0.0) {
            sign[m_eq + k] = -1.0;
            needs_art[m_eq + k] = 1;
        }
    }
    n_art_ = static_cast<std::size_t>(std::count(needs_art.begin(), needs_art.end(), 1));
    const std::size_t total = n_ + n_slack_ + n_art_;
    rhs_ = total;
    const std::size_t cells = (m_ + 2) * (total + 1);
    if (cells > opt_.max_tableau_cells) {
        throw CapacityError("LP tableau of " + std::to_string(m_ + 2) + " x " +
                            std::to_string(total + 1) + " exceeds the dense capacity limit");
    }
    t_ = Tableau(m_ + 2, total + 1);
    basis_.assign(m_, 0);
    allowed_.assign(total, 1);
    row_origin_.resize(m_);

    std::size_t art = n_ + n_slack_;
    for (std::size_t i = 0; i < m_; ++i) {
        row_origin_[i] = i;
        double* row = t_.row(i);
        const std::vector<double>& src = i < m_eq ? p_.A[i] : p_.G[i - m_eq];
        const double rhs = i < m_eq ? p_.b[i] : p_.h[i - m_eq];
        for (std::size_t j = 0; j < n_; ++j) row[j] = sign[i] * src[j];
        if (i >= m_eq) row[n_ + (i - m_eq)] = sign[i];
        row[rhs_] = sign[i] * rhs;
        if (needs_art[i]) {
            row[art] = 1.0;
            basis_[i] = art++;
        } else {
            basis_[i] = n_ + (i - m_eq);
        }
    }
    initial_basis_ = basis_;
    original_rows_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
        original_rows_[i].assign(t_.row(i), t_.row(i) + t_.cols);
    }

    // Row m_: phase-2 reduced costs. Row m_+1: phase-1 reduced costs.
    double* cost2 = t_.row(m_);
    for (std::size_t j = 0; j < n_; ++j) cost2[j] = p_.c[j];
    double* cost1 = t_.row(m_ + 1);
    for (std::size_t j = n_ + n_slack_; j < total; ++j) cost1[j] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
        if (basis_[i] >= n_ + n_slack_) {
            const double* row = t_.row(i);
            for (std::size_t j = 0; j <= total; ++j) cost1[j] -= row[j];
        }
    }

    max_iterations_ = opt_.max_iterations ? opt_.max_iterations : 50 * (m_ + total) + 1000;
}

void Simplex::pivot(std::size_t r, std::size_t c) {
    if (opt_.parallel && t_.rows * t_.cols >= opt_.parallel_min_cells) {
        pivot_rows_parallel(t_, r, c);
    } else {
        pivot_rows_serial(t_, r, c);
    }
    basis_[r] = c;
    ++iterations_;
}

// Lexicographic ratio-test tie break: compares the rows of the inverse of
// the current basis (the initial identity columns) scaled by the pivot column.
bool Simplex::lex_less(std::size_t i, std::size_t k, std::size_t enter) const {
    const double ai = t_.at(i, enter);
    const double ak = t_.at(k, enter);
    for (std::size_t col : initial_basis_) {
        const double vi = t_.at(i, col) / ai;
        const double vk = t_.at(k, col) / ak;
        if (vi < vk - 1e-12) return true;
        if (vi > vk + 1e-12) return false;
    }
    return basis_[i] < basis_[k];
}

Simplex::PhaseResult Simplex::run_phase(std::size_t cost_row) {
    const bool bland = opt_.pricing == LpPricing::bland;
    const std::size_t total = rhs_;
    while (true) {
        if (iterations_ >= max_iterations_) return PhaseResult::failure;
        const double* d = t_.row(cost_row);

        std::size_t enter = total;
        if (bland) {
            for (std::size_t j = 0; j < total; ++j) {
                if (allowed_[j] && d[j] < -opt_.cost_tol) {
                    enter = j;
                    break;
                }
            }
        } else {
            double most = -opt_.cost_tol;
            for (std::size_t j = 0; j < total; ++j) {
                if (allowed_[j] && d[j] < most) {
                    most = d[j];
                    enter = j;
                }
            }
        }
        if (enter == total) return PhaseResult::optimal;

        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m_; ++i) {
            const double a = t_.at(i, enter);
            if (a <= 1e-9) continue;
            best_ratio = std::min(best_ratio, std::max(t_.at(i, rhs_), 0.0) / a);
        }
        std::size_t leave = m_;
        if (std::isfinite(best_ratio)) {
            const double slack = 1e-12 * (1.0 + best_ratio);
            for (std::size_t i = 0; i < m_; ++i) {
                const double a = t_.at(i, enter);
                if (a <= 1e-9 || std::max(t_.at(i, rhs_), 0.0) / a > best_ratio + slack) continue;
                if (leave == m_ || lex_less(i, leave, enter)) leave = i;
            }
        }
        if (leave == m_) return PhaseResult::unbounded;

        pivot(leave, enter);
        if (!std::isfinite(t_.at(leave, rhs_))) return PhaseResult::failure;
    }
}

bool Simplex::drive_out_artificials() {
    const std::size_t first_art = n_ + n_slack_;
    std::vector<std::size_t> redundant;
    for (std::size_t i = 0; i < m_; ++i) {
        if (basis_[i] < first_art) continue;
        std::size_t best = first_art;
        double best_abs = 1e-9;
        const double* row = t_.row(i);
        for (std::size_t j = 0; j < first_art; ++j) {
            if (std::abs(row[j]) > best_abs) {
                best_abs = std::abs(row[j]);
                best = j;
            }
        }
        if (best == first_art) {
            redundant.push_back(i);
        } else {
            pivot(i, best);
        }
    }
    if (!redundant.empty()) {
        Tableau kept(t_.rows - redundant.size(), t_.cols);
        std::vector<std::size_t> basis;
        std::vector<std::size_t> origin;
        std::size_t out = 0;
        std::size_t k = 0;
        for (std::size_t i = 0; i < t_.rows; ++i) {
            if (k < redundant.size() && redundant[k] == i) {
                ++k;
                continue;
            }
            std::copy(t_.row(i), t_.row(i) + t_.cols, kept.row(out++));
            if (i < m_) {
                basis.push_back(basis_[i]);
                origin.push_back(row_origin_[i]);
            }
        }
        t_ = std::move(kept);
        m_ -= redundant.size();
        basis_ = std::move(basis);
        row_origin_ = std::move(origin);
    }
    for (std::size_t j = first_art; j < rhs_; ++j) allowed_[j] = 0;
    return true;
}

std::vector<double> Simplex::extract_solution() const {
    std::vector<double> x(n_ + n_slack_ + n_art_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) x[basis_[i]] = t_.at(i, rhs_);
    return x;
}

// Recomputes basic values from the original rows to remove drift
// accumulated over many pivots.
void Simplex::refine(std::vector<double>& x) const {
    if (m_ == 0) return;
    Eigen::MatrixXd B(m_, m_);
    Eigen::VectorXd rhs(m_);
    for (std::size_t i = 0; i < m_; ++i) {
        const auto& row = original_rows_[row_origin_[i]];
        for (std::size_t k = 0; k < m_; ++k) B(i, k) = row[basis_[k]];
        rhs(i) = row[rhs_];
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    const Eigen::VectorXd xb = lu.solve(rhs);
    for (std::size_t k = 0; k < m_; ++k) {
        if (!std::isfinite(xb(k)) || xb(k) < -opt_.feas_tol) return;
    }
    if ((B * xb - rhs).lpNorm<Eigen::Infinity>() > 1e-10 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) {
        return;
    }
    for (std::size_t k = 0; k < m_; ++k) x[basis_[k]] = std::max(xb(k), 0.0);
}

LpSolution Simplex::solve() {
    build();
    LpSolution sol;

    if (n_art_ > 0) {
        const PhaseResult r1 = run_phase(m_ + 1);
        if (r1 != PhaseResult::optimal) {
            sol.status = LpStatus::solver_failure;
            sol.iterations = iterations_;
            return sol;
        }
        double bnorm = 0.0;
        for (std::size_t i = 0; i < m_; ++i) bnorm = std::max(bnorm, std::abs(t_.at(i, rhs_)));
        const double infeas = -t_.at(m_ + 1, rhs_);
        if (infeas > opt_.feas_tol * (1.0 + bnorm)) {
            sol.status = LpStatus::infeasible;
            sol.iterations = iterations_;
            return sol;
        }
        drive_out_artificials();
    }

    const PhaseResult r2 = run_phase(m_);
    sol.iterations = iterations_;
    if (r2 == PhaseResult::unbounded) {
        sol.status = LpStatus::unbounded;
        return sol;
    }
    if (r2 == PhaseResult::failure) {
        sol.status = LpStatus::solver_failure;
        return sol;
    }
    std::vector<double> full = extract_solution();
    refine(full);
    sol.x.assign(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(n_));
    for (double& v : sol.x) {
        if (v < 0.0 && v > -1e-9) v = 0.0;
    }
    sol.objective_value = 0.0;
    for (std::size_t j = 0; j < n_; ++j) sol.objective_value += p_.c[j] * sol.x[j];
    const LpResiduals res = residuals(p_, sol.x);
    const double tol = 1e-8;
    sol.status = (std::isfinite(sol.objective_value) && res.eq <= tol && res.ineq <= tol &&
                  res.neg <= 1e-12)
                     ? LpStatus::optimal
                     : LpStatus::solver_failure;
    return sol;
}

}  // namespace

void pivot_rows_serial(Tableau& t, std::size_t r, std::size_t c) {
    scale_pivot_row(t, r, c);
    for (std::size_t i = 0; i < t.rows; ++i) {
        if (i != r) eliminate_row(t, i, r, c);
    }
}

void pivot_rows_parallel(Tableau& t, std::size_t r, std::size_t c) {
    scale_pivot_row(t, r, c);
    const auto rows = static_cast<std::ptrdiff_t>(t.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        if (static_cast<std::size_t>(i) != r) eliminate_row(t, static_cast<std::size_t>(i), r, c);
    }
}

LpResiduals residuals(const LpProblem& p, const std::vector<double>& x) {
    LpResiduals res;
    for (std::size_t i = 0; i < p.A.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) s += p.A[i][j] * x[j];
        res.eq = std::max(res.eq, std::abs(s - p.b[i]));
    }
    for (std::size_t i = 0; i < p.G.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) s += p.G[i][j] * x[j];
        res.ineq = std::max(res.ineq, s - p.h[i]);
    }
    for (double v : x) res.neg = std::max(res.neg, -v);
    return res;
}

LpSolution solve_lp(const LpProblem& p, const LpOptions& options) {
    const std::size_t n = p.num_vars();
    if (n == 0) throw DimensionError("LP has no variables");
    check_finite(p.c, "objective");
    check_shape(p.A, p.b, n, "equality constraints");
    check_shape(p.G, p.h, n, "inequality constraints");
    Simplex s(p, options);
    return s.solve();
}

}  // namespace renewal
