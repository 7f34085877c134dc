#pragma once

// LP formulations of optimal stationary benchmarks.

#include <cstddef>
#include <vector>

#include "renewal/lp.hpp"
#include "renewal/mdp.hpp"

namespace renewal {

// Expected per-frame penalty y, metric vector z and frame length T of one action.
struct RatioAction {
    double y = 0.0;
    std::vector<double> z;
    double T = 1.0;
};

// Charnes-Cooper form of the best mixed ratio over one action set:
//   min sum q_i y_i  s.t.  sum q_i T_i = 1,  sum q_i (z_il - d_l T_i) <= 0.
// The LP optimum equals the optimal stationary ratio.
LpProblem fractional_to_lp(const std::vector<RatioAction>& actions,
                           const std::vector<double>& constraint_rates);

// N systems coupled through time-average constraints:
//   min sum_n sum_i w_ni y_ni  s.t.  sum_i w_ni T_ni = 1 for each n,
//   sum_n sum_i w_ni z_nil <= d_l.
// Variables are laid out system by system.
LpProblem coupled_fractional_lp(const std::vector<std::vector<RatioAction>>& systems,
                                const std::vector<double>& constraint_rates);

// One observed random event per frame with probability prob, and a list of
// actions available under it.
struct EventActions {
    double prob = 0.0;
    std::vector<RatioAction> actions;
};

// Best stationary ratio E[y]/E[T] subject to E[z_l] <= c_l E[T] when the
// action may depend on the observed event. Variables w(e,a) event by event,
// followed by the scale s.
LpProblem event_fractional_lp(const std::vector<EventActions>& events,
                              const std::vector<double>& budgets);

// Factor MDP for the composite-state benchmark. Action 0 is the passive
// action; any other action counts against the activation limit.
struct FactorMdp {
    MdpSpec mdp;
    Matrix reward;                       // [s][a], maximized
    std::vector<Matrix> costs;           // per resource constraint, [s][a]
    std::vector<std::vector<char>> allowed;  // [s][a]
};

struct CoupledMdpResult {
    LpStatus status = LpStatus::solver_failure;
    double value = 0.0;  // optimal time-average total reward
    std::size_t composite_states = 0;
    std::size_t state_action_pairs = 0;
    std::size_t constraints = 0;
    std::size_t variables_with_slack = 0;
};

struct CoupledMdpLimits {
    std::size_t max_composite_states = 10'000;
    std::size_t max_state_action_pairs = 200'000;
};

// Occupation-measure LP on the product chain: balance, normalization and
// one row per resource budget (sum theta * cost <= budget). Joint actions
// with more than max_active non-passive components are excluded.
CoupledMdpResult coupled_mdp_optimal(const std::vector<FactorMdp>& factors,
                                     const std::vector<double>& budgets,
                                     std::size_t max_active, const LpOptions& options = {},
                                     const CoupledMdpLimits& limits = {});

struct StationaryBaseline {
    LpStatus status = LpStatus::solver_failure;
    double value = 0.0;
    std::vector<std::vector<double>> theta;  // per MDP
};

// min sum_k <f_k, theta_k>  s.t.  sum_k <g_ik, theta_k> <= 0,  theta_k in Theta_k.
// mean_g[k][i] is the expected constraint function i of MDP k.
StationaryBaseline stationary_baseline(const std::vector<PolyhedronTheta>& polys,
                                       const std::vector<std::vector<double>>& mean_f,
                                       const std::vector<std::vector<std::vector<double>>>& mean_g,
                                       const LpOptions& options = {});

// Largest s <= 1 with sum_k <g_ik, theta_k> + s <= 0 for every i over the
// product polyhedron. Strictly positive means the coupling is strictly feasible.
double slater_margin(const std::vector<PolyhedronTheta>& polys,
                     const std::vector<std::vector<std::vector<double>>>& mean_g,
                     const LpOptions& options = {});

}  // namespace renewal
