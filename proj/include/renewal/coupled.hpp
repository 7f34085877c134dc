#pragma once

// Asynchronous slotted simulator for N renewal systems coupled by L
// time-average constraints through per-slot virtual queues.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "renewal/core.hpp"
#include "renewal/lp.hpp"
#include "renewal/metrics.hpp"

namespace renewal {

// One component of the external process d[t]: the constant `value` when
// poisson_rate is zero, otherwise scale * Poisson(poisson_rate) truncated
// at cap_factor * poisson_rate.
struct ExternalComponent {
    double value = 0.0;
    double poisson_rate = 0.0;
    double scale = 1.0;

    double mean() const { return poisson_rate > 0.0 ? scale * poisson_rate : value; }
};

enum class SelectionRule { ratio, linear };

SelectionRule parse_selection_rule(const std::string& name);
std::string to_string(SelectionRule rule);

struct CoupledSystemSpec {
    std::vector<std::vector<ActionModel>> systems;
    std::vector<ExternalComponent> external;
    double cap_factor = 10.0;
    SelectionRule rule = SelectionRule::ratio;
    // Labels and sign used when reporting the penalty and metric averages.
    std::string penalty_label = "penalty";
    std::string metric_label = "metric";
    double metric_report_sign = 1.0;

    std::size_t L() const { return external.size(); }
    void validate() const;
    std::vector<double> external_mean() const;
};

std::vector<double> sample_external(const CoupledSystemSpec& spec, Rng& rng);

struct SystemFrameState {
    std::int64_t frame_start = 0;
    std::size_t action = 0;
    std::int64_t remaining = 0;  // slots left in the frame, including the current one
    FrameOutcome pending;
};

struct SlotRecord {
    std::vector<double> penalty;  // per system
    std::vector<double> z_sum;    // per constraint, summed over systems
    std::vector<double> d;        // external draw
    std::vector<char> renewed;    // per system: a frame started at this slot
};

// Penalty and metrics emitted on slot `offset` of a frame: the lump sums on
// the last busy slot, the idle cost on every idle slot.
void emit_slot(const FrameOutcome& outcome, std::int64_t offset, double& penalty,
               std::vector<double>& metrics);

// Advances all systems by one slot: renews frames that start at t, emits the
// slot's penalty and metrics, then updates q with a fresh d[t].
SlotRecord coupled_step(const CoupledSystemSpec& spec, std::vector<SystemFrameState>& states,
                        VirtualQueues& q, double V, Rng& rng, std::int64_t t);

struct CoupledRunOptions {
    std::int64_t record_every = 0;
    bool keep_renewals = false;
};

struct CoupledRunResult {
    double penalty_avg = 0.0;
    std::vector<double> metric_avg;  // multiplied by metric_report_sign
    std::vector<double> queue_avg;
    std::vector<double> final_queue;
    double max_queue = 0.0;
    std::vector<std::int64_t> frames_completed;
    std::vector<std::int64_t> slots_in_completed_frames;
    std::vector<std::int64_t> slots_in_open_frame;
    std::vector<std::vector<std::int64_t>> renewals;  // when keep_renewals
    MetricsLog log;
};

CoupledRunResult run_coupled(const CoupledSystemSpec& spec, double V, std::int64_t horizon,
                             std::uint64_t seed, const CoupledRunOptions& options = {});

// Five homogeneous servers and three job classes; action i serves class i.
CoupledSystemSpec energy_scheduling_spec();

// Optimal stationary time-average penalty from the coupled fractional LP.
LpProblem coupled_lp(const CoupledSystemSpec& spec);
double coupled_lp_optimum(const CoupledSystemSpec& spec, const LpOptions& options = {});

}  // namespace renewal
