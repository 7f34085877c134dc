#pragma once

// Online control of K weakly coupled constrained MDPs: per-MDP projected
// updates over the state-action polyhedron, virtual queues over the m
// coupling constraints, policy recovery and regret / violation accounting.

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "renewal/core.hpp"
#include "renewal/lp_models.hpp"
#include "renewal/mdp.hpp"
#include "renewal/metrics.hpp"

namespace renewal {

// Euclidean projection onto Theta by Dykstra's alternating projections
// between the affine hull and the nonnegative orthant.
class ThetaProjector {
public:
    struct Options {
        double step_tol = 1e-10;      // infinity-norm change between iterates
        double affine_tol = 1e-9;     // required affine residual at exit
        std::size_t max_iterations = 100000;
    };

    ThetaProjector() = default;
    explicit ThetaProjector(const PolyhedronTheta& poly);

    // Throws SolverError with the residual when the iteration cap is hit.
    std::vector<double> project(const std::vector<double>& x) const;
    std::vector<double> project(const std::vector<double>& x, const Options& options,
                                std::size_t* iterations = nullptr) const;
    std::vector<double> project_affine(const std::vector<double>& x) const;
    double affine_residual(const std::vector<double>& x) const;
    const PolyhedronTheta& polyhedron() const { return poly_; }

private:
    PolyhedronTheta poly_;
    Eigen::MatrixXd E_;
    Eigen::VectorXd r_;
    Eigen::MatrixXd correction_;  // E' (E E')^+
};

std::vector<double> project_onto_theta(const PolyhedronTheta& poly, const std::vector<double>& x);

struct OcmdpMdp {
    MdpSpec mdp;
    std::vector<double> f_mean;               // [s * A + a]
    std::vector<std::vector<double>> g_mean;  // [i][s * A + a]
    double f_noise = 0.0;                     // half-width of uniform noise on f
    double g_noise = 0.0;                     // half-width of uniform noise on g
};

struct OcmdpInstance {
    std::vector<OcmdpMdp> mdps;
    // f_t = f_mean * (1 + drift_amplitude * sin(2 pi t / drift_period)).
    double drift_amplitude = 0.0;
    double drift_period = 1000.0;
    // Bound on |f| and |g| for every realization.
    double psi = 1.0;

    void validate() const;
    std::size_t constraints() const;
    std::uint64_t hash() const;
    double drift_factor(std::int64_t t) const;
};

struct OcmdpBaseline {
    std::uint64_t instance_hash = 0;
    StationaryBaseline stationary;
};

OcmdpBaseline ocmdp_baseline(const OcmdpInstance& inst, const LpOptions& options = {});
double ocmdp_slater_margin(const OcmdpInstance& inst, const LpOptions& options = {});

// Realized functions of one slot for one MDP.
struct SlotFunctions {
    std::vector<double> f;               // [s * A + a]
    std::vector<std::vector<double>> g;  // [i][s * A + a]
};

SlotFunctions draw_functions(const OcmdpMdp& m, double drift_factor, Rng& rng);

struct OcmdpState {
    std::vector<std::vector<double>> theta;  // per MDP
    std::vector<double> Q;                   // per constraint
    std::vector<std::size_t> s;              // true state per MDP
    std::int64_t t = 0;
};

OcmdpState initial_ocmdp_state(const OcmdpInstance& inst, const std::vector<ThetaProjector>& proj);

// One update at slot t >= 1 given the functions revealed at t-1:
// theta_t = P(theta_{t-1} - (V f + sum_i Q_i g_i) / (2 alpha)), then
// Q_i(t+1) = max{Q_i(t) + sum_k <g_ik, theta_t^k>, 0}.
void ocmdp_update(const std::vector<ThetaProjector>& proj, OcmdpState& state,
                  const std::vector<SlotFunctions>& previous, double V, double alpha,
                  bool parallel);

struct OcmdpRunOptions {
    bool parallel = true;
    std::int64_t record_every = 0;
    double baseline_value = 0.0;  // per-slot stationary value for regret_partial
};

struct OcmdpRunLog {
    std::uint64_t instance_hash = 0;
    std::int64_t T = 0;
    double f_sum = 0.0;                 // realized penalty, all MDPs
    std::vector<double> g_sum;          // realized constraint values
    double drift_factor_sum = 0.0;      // sum_t drift_factor(t)
    double max_membership_residual = 0.0;
    double max_Q = 0.0;
    MetricsLog log;
};

OcmdpRunLog run_ocmdp(const OcmdpInstance& inst, double V, double alpha, std::int64_t T,
                      std::uint64_t seed, const OcmdpRunOptions& options = {});

struct RegretReport {
    double regret = 0.0;
    std::vector<double> violations;
};

// Throws InputError when the log and baseline come from different instances.
RegretReport measure_regret(const OcmdpRunLog& log, const OcmdpBaseline& baseline);

// Two-MDP instance used for scaling studies: 3 states, 4 actions, one
// coupling constraint that binds at a vertex of the product polyhedron.
OcmdpInstance scaling_instance();

// Random instance with per-(s,a) means uniform in [-psi, psi].
OcmdpInstance random_ocmdp_instance(std::size_t K, std::size_t S, std::size_t A, std::size_t m,
                                    double psi, std::uint64_t seed);

MdpSpec random_mdp(std::size_t S, std::size_t A, Rng& rng);

}  // namespace renewal
