#pragma once

// Power-constrained multi-user file downloading over binary file-state
// users, its single-user ratio algorithm, and the Max-lambda special case.

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "renewal/core.hpp"
#include "renewal/lp_models.hpp"
#include "renewal/metrics.hpp"

namespace renewal {

struct BanditAction {
    double phi = 0.0;    // per-slot completion probability
    double power = 0.0;  // power spent in the slot
};

// File sizes: memoryless completion with probability phi per served slot.
struct MemorylessFiles {};
// Packet counts uniform on [lo, hi]; each served slot delivers a packet with
// probability phi / mu.
struct UniformPacketFiles {
    std::int64_t lo = 1;
    std::int64_t hi = 1;
};
// Packet counts 1 + Poisson(mean - 1).
struct PoissonPacketFiles {
    double mean = 1.0;
};
using FileSizeModel = std::variant<MemorylessFiles, UniformPacketFiles, PoissonPacketFiles>;

struct UserSpec {
    double lambda = 0.5;     // idle -> active probability per slot
    double mu = 1.0;         // per-slot completion parameter; mean file = 1 / mu
    double weight = 1.0;     // c_n
    std::vector<BanditAction> actions;  // actions[0] is the zero action
    FileSizeModel sizes = MemorylessFiles{};

    double mean_file() const { return 1.0 / mu; }
    double min_positive_power() const;
    double max_power() const;
    void validate() const;
};

// (V * weight * B * phi - Q * p) / (1 + phi / lambda)
double user_index_value(const UserSpec& u, std::size_t action, double Q, double V, double weight);

// argmax over actions of the single-user ratio (weight 1); ties -> lowest index.
std::size_t single_user_select(const UserSpec& u, double Q, double V);

// Q' = max{Q + p - beta * T, 0}
double single_user_queue_update(double Q, double power, std::int64_t frame_len, double beta);

double single_user_queue_bound(const UserSpec& u, double V, double beta);

struct SingleUserResult {
    double throughput_avg = 0.0;  // expected file units per slot
    double power_avg = 0.0;
    double max_Q = 0.0;
    double Q_bound = 0.0;
    std::size_t bound_violations = 0;
    std::int64_t slots = 0;
    MetricsLog log{{"frame", "throughput_avg", "power_avg", "Q"}};
};

SingleUserResult run_single_user(const UserSpec& u, double beta, double V, std::int64_t frames,
                                 std::uint64_t seed, std::int64_t record_every = 0);

struct BanditConfig {
    std::vector<UserSpec> users;
    std::size_t max_active = 1;  // M
    double beta = 1.0;           // time-average power budget
    void validate() const;
};

struct BanditState {
    std::vector<int> file;                   // F_n
    std::vector<std::int64_t> packets_left;  // for packet-based file sizes
    double Q = 0.0;
    std::int64_t slot = 0;
};

BanditState initial_bandit_state(const BanditConfig& cfg, Rng& rng);

struct BanditSlot {
    std::vector<std::size_t> chosen;  // chosen action per user (0 when idle)
    double reward = 0.0;              // sum of weight * B * phi over served users
    double power = 0.0;
    std::size_t completions = 0;
};

// Index policy for one slot: users with F = 1 compete; the min(M, |N(t)|)
// largest indices are scheduled with their maximizing actions.
std::vector<std::size_t> multi_user_decide(const BanditConfig& cfg, const BanditState& s, double V);

BanditSlot multi_user_step(const BanditConfig& cfg, BanditState& s, double V, Rng& rng);

double multi_user_queue_bound(const BanditConfig& cfg, double V);

struct BanditRunResult {
    double reward_avg = 0.0;
    double power_avg = 0.0;
    double completions_avg = 0.0;
    double max_Q = 0.0;
    double Q_bound = 0.0;
    std::size_t bound_violations = 0;
    MetricsLog log{{"slot", "throughput_avg", "power_avg", "Q"}};
};

BanditRunResult run_multi_user(const BanditConfig& cfg, double V, std::int64_t horizon,
                               std::uint64_t seed, std::int64_t record_every = 0);

// Table I instance (N=8, M=4, beta=5, binary actions).
BanditConfig table1_config();
// Table II instance (N=9, M=4, beta=5) with non-memoryless packet counts.
BanditConfig table2_config();

// Factor MDPs whose composite LP gives the optimal stationary reward.
std::vector<FactorMdp> bandit_factor_mdps(const BanditConfig& cfg);
CoupledMdpResult bandit_lp_optimum(const BanditConfig& cfg, const LpOptions& options = {});

enum class Priority { max_lambda, min_lambda };

struct MaxLambdaState {
    std::vector<int> full;
};

// Serve the at-most-M non-empty buffers with the largest (or smallest)
// arrival rates, then Bernoulli arrivals fill empty buffers. Returns the
// number of packets served.
std::size_t maxlambda_step(MaxLambdaState& s, const std::vector<double>& lambdas, std::size_t M,
                           Priority priority, Rng& rng);

double run_maxlambda(const std::vector<double>& lambdas, std::size_t M, Priority priority,
                     std::int64_t slots, std::uint64_t seed);

// Exact throughput of the two-buffer chain under strict priority to
// queue `priority_queue` (0 or 1).
double two_queue_markov_throughput(double lambda1, double lambda2, int priority_queue);

std::vector<FactorMdp> maxlambda_factor_mdps(const std::vector<double>& lambdas);

}  // namespace renewal
