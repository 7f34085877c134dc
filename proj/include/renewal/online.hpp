#pragma once

// Renewal scheduling with a per-frame observed random event, unknown event
// statistics, per-frame virtual queues and the truncated pseudo-average
// feedback theta[n].

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "renewal/core.hpp"
#include "renewal/lp_models.hpp"
#include "renewal/metrics.hpp"

namespace renewal {

// Deterministic penalty and metrics; frame length 1 + B * G where
// B ~ Bernoulli(completion_prob) and G is geometric with mean idle_mean.
struct EventAction {
    double y = 0.0;
    std::vector<double> z;
    double completion_prob = 0.0;
    double idle_mean = 1.0;

    double expected_frame_len() const { return 1.0 + completion_prob * idle_mean; }
};

struct OnlineEvent {
    double prob = 0.0;
    std::string label;
    std::vector<EventAction> actions;
};

struct EventModel {
    std::vector<OnlineEvent> events;
    std::vector<double> budgets;  // c_l

    void validate() const;
    std::size_t constraints() const { return budgets.size(); }
    double max_penalty() const;
    double min_frame_len() const;
};

std::size_t sample_event(const EventModel& model, Rng& rng);
FrameOutcome sample_event_outcome(const EventAction& action, Rng& rng);

// argmin_a V (y - theta T) + sum_l Q_l (z_l - c_l T) with expected y, z, T.
std::size_t online_select(const EventModel& model, std::size_t event, const VirtualQueues& Q,
                          double theta, double V);

// Q_l' = max{Q_l + z_l - c_l T, 0}
VirtualQueues frame_queue_update(const VirtualQueues& Q, const FrameOutcome& outcome,
                                 const std::vector<double>& budgets);

struct PseudoAverage {
    double V = 1.0;
    double delta = 0.6;
    double theta_max = 1.0;
    double theta = 0.0;  // theta[n]
    double sum = 0.0;    // S_{n-1}
    std::int64_t n = 0;  // frames completed

    // Raw increment y - theta T + (1/V) sum_l Q_l (z_l - c_l T).
    double increment(const FrameOutcome& outcome, const VirtualQueues& Q,
                     const std::vector<double>& budgets) const;
    // Adds the increment of frame n (0-based) and sets
    // theta[n+1] = clamp(S_n / (n+1)^delta, 0, theta_max).
    void update(const FrameOutcome& outcome, const VirtualQueues& Q,
                const std::vector<double>& budgets);
};

// Recomputes the theta trajectory from a log of raw increments.
std::vector<double> replay_theta(const std::vector<double>& increments, double delta,
                                 double theta_max);

bool delta_in_theory_range(double delta);

struct OnlineRunResult {
    double penalty_avg = 0.0;
    std::vector<double> resource_avg;
    double theta_final = 0.0;
    double theta_max = 0.0;
    double max_Q = 0.0;
    std::int64_t slots = 0;
    std::string warning;
    std::vector<double> increments;
    std::vector<double> thetas;  // theta[n] used in frame n
    MetricsLog log{{"frame", "theta", "penalty_avg", "resource_avg", "Q"}};
};

struct OnlineRunOptions {
    double theta_max = 0.0;  // <= 0 picks 2 * max penalty / min frame length
    std::int64_t record_every = 0;
    bool keep_trajectory = false;
};

OnlineRunResult run_online(const EventModel& model, double V, double delta, std::int64_t frames,
                           std::uint64_t seed, const OnlineRunOptions& options = {});

enum class DownloadPenalty {
    literal,     // alpha * s
    complement,  // (1 - alpha) * s
};

// Channel states {0.2, 0.5, 0.8} and delay penalties {1, 3, 5}, all
// equiprobable, folded into 9 composite events; actions {0, 0.3, 0.6, 0.9}
// with resource {0, 1, 2, 4}, completion alpha * omega, idle mean 2, budget 1.
EventModel file_download_example(DownloadPenalty penalty = DownloadPenalty::literal);

// Optimal stationary ratio via the event LP.
LpProblem online_lp(const EventModel& model);
double online_lp_optimum(const EventModel& model, const LpOptions& options = {});

}  // namespace renewal
