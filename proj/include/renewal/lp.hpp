#pragma once

// Dense two-phase tableau simplex for   min c'x  s.t.  A x = b,  G x <= h,  x >= 0.

#include <cstddef>
#include <string>
#include <vector>

namespace renewal {

using Matrix = std::vector<std::vector<double>>;

struct LpProblem {
    std::vector<double> c;
    Matrix A;
    std::vector<double> b;
    Matrix G;
    std::vector<double> h;

    std::size_t num_vars() const { return c.size(); }
};

enum class LpStatus { optimal, infeasible, unbounded, solver_failure };

std::string to_string(LpStatus s);

struct LpSolution {
    std::vector<double> x;
    double objective_value = 0.0;
    LpStatus status = LpStatus::solver_failure;
    std::size_t iterations = 0;
};

// Entering-variable rule. The leaving variable is always chosen by the
// lexicographic ratio test, which rules out cycling under either rule.
enum class LpPricing { dantzig, bland };

struct LpOptions {
    double feas_tol = 1e-8;
    double cost_tol = 1e-9;
    LpPricing pricing = LpPricing::dantzig;
    std::size_t max_iterations = 0;  // 0 picks a size-based cap
    bool parallel = true;
    std::size_t parallel_min_cells = 1u << 15;
    std::size_t max_tableau_cells = 60'000'000;
};

// Row-major tableau storage used by the pivot kernels.
struct Tableau {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> cells;

    Tableau() = default;
    Tableau(std::size_t r, std::size_t c) : rows(r), cols(c), cells(r * c, 0.0) {}
    double& at(std::size_t i, std::size_t j) { return cells[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return cells[i * cols + j]; }
    double* row(std::size_t i) { return cells.data() + i * cols; }
    const double* row(std::size_t i) const { return cells.data() + i * cols; }
};

// Gauss-Jordan pivot on (r, c): scales row r so the pivot is 1 and
// eliminates column c from every other row. The two variants perform the
// same per-row arithmetic and produce bitwise-identical tableaus.
void pivot_rows_serial(Tableau& t, std::size_t r, std::size_t c);
void pivot_rows_parallel(Tableau& t, std::size_t r, std::size_t c);

// Throws DimensionError on inconsistent shapes or non-finite data and
// CapacityError if the tableau would exceed options.max_tableau_cells.
LpSolution solve_lp(const LpProblem& p, const LpOptions& options = {});

struct LpResiduals {
    double eq = 0.0;     // max |A x - b|
    double ineq = 0.0;   // max (G x - h)_+
    double neg = 0.0;    // max (-x)_+
};
LpResiduals residuals(const LpProblem& p, const std::vector<double>& x);

}  // namespace renewal
