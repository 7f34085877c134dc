#pragma once

// Shared types for every renewal simulator: error kinds, the small
// distribution menu used by frame samplers, virtual queues, and the two
// drift-plus-penalty action selectors.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace renewal {

using Rng = std::mt19937_64;

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Counter-based stream derivation (splitmix64 finalizer over
// master + golden * (stream + 1)). Stable across platforms.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);
Rng make_rng(std::uint64_t master, std::uint64_t stream);

double uniform01(Rng& rng);
bool bernoulli(Rng& rng, double p);
// Number of trials up to and including the first success, mean `mean` >= 1.
std::int64_t geometric_at_least_one(Rng& rng, double mean);
// Poisson draw truncated at `cap`.
std::int64_t poisson(Rng& rng, double rate, std::int64_t cap);

struct Deterministic {
    double value = 0.0;
};
// Support {1, 2, ...}.
struct Geometric {
    double mean = 1.0;
};
// Inclusive integer range.
struct UniformInt {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
};
using Distribution = std::variant<Deterministic, Geometric, UniformInt>;

double sample(const Distribution& dist, Rng& rng);
double mean_of(const Distribution& dist);
std::string describe(const Distribution& dist);

struct FrameOutcome {
    std::int64_t frame_len = 1;
    double penalty_total = 0.0;
    std::vector<double> metrics_total;
    // Slots before the idle tail; the lump penalty and metrics are emitted
    // on slot busy_len - 1 of the frame.
    std::int64_t busy_len = 1;
    double idle_cost_per_slot = 0.0;
};

// Stochastic description of one frame under a fixed action.
// frame_len = busy_len + idle_len; penalty_total = lump + idle_cost * idle_len.
struct FrameSampler {
    Distribution busy_len = Deterministic{1.0};
    Distribution idle_len = Deterministic{0.0};
    Distribution penalty = Deterministic{0.0};
    double idle_cost_per_slot = 0.0;
    std::vector<Distribution> metrics;
    // Every metric draw is multiplied by this factor.
    double metric_scale = 1.0;
};

struct ActionModel {
    int action_id = 0;
    double exp_penalty = 0.0;
    std::vector<double> exp_metrics;
    double exp_frame_len = 1.0;
    FrameSampler sampler;
};

// Deterministic action: frame of `frame_len` slots with the given totals.
ActionModel deterministic_action(int id, double penalty, std::vector<double> metrics,
                                 std::int64_t frame_len = 1);

FrameOutcome sample_outcome(const ActionModel& model, Rng& rng);

class VirtualQueues {
public:
    VirtualQueues() = default;
    explicit VirtualQueues(std::size_t dim) : q_(dim, 0.0) {}
    // Throws DimensionError on a negative or non-finite entry.
    static VirtualQueues from_values(std::vector<double> values);

    std::size_t size() const { return q_.size(); }
    double operator[](std::size_t i) const { return q_[i]; }
    std::span<const double> values() const { return q_; }
    double max() const;
    double sum() const;

    friend bool operator==(const VirtualQueues&, const VirtualQueues&) = default;

private:
    std::vector<double> q_;
};

// q_l' = max{q_l + z_sum_l - d_l, 0}
VirtualQueues queue_update_slot(const VirtualQueues& q, std::span<const double> z_sum,
                                std::span<const double> d);

// q_l' = max{q_l + z_l - d_l * T, 0}
VirtualQueues queue_update_frame(const VirtualQueues& q, const FrameOutcome& outcome,
                                 std::span<const double> d_rates);

double dot(std::span<const double> a, std::span<const double> b);

// (V * exp_penalty + <q, exp_metrics>) / exp_frame_len
double ratio_objective(const ActionModel& a, const VirtualQueues& q, double V);
// V * exp_penalty + <q, exp_metrics>
double linear_objective(const ActionModel& a, const VirtualQueues& q, double V);

// Index of the minimizing action; ties go to the lowest index.
std::size_t dpp_ratio_select(std::span<const ActionModel> actions, const VirtualQueues& q,
                             double V);
std::size_t dpp_linear_select(std::span<const ActionModel> actions, const VirtualQueues& q,
                              double V);

// First index attaining the minimum of score(i) over [0, n).
template <class Score>
std::size_t argmin_first(std::size_t n, Score&& score) {
    std::size_t best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double v = score(i);
        if (v < best_value) {
            best_value = v;
            best = i;
        }
    }
    return best;
}

template <class Score>
std::size_t argmax_first(std::size_t n, Score&& score) {
    return argmin_first(n, [&](std::size_t i) { return -score(i); });
}

}  // namespace renewal
