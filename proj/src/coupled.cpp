#include "renewal/coupled.hpp"

#include <algorithm>
#include <cmath>

#include "renewal/lp_models.hpp"

namespace renewal {

SelectionRule parse_selection_rule(const std::string& name) {
    if (name == "ratio") return SelectionRule::ratio;
    if (name == "linear") return SelectionRule::linear;
    throw ConfigError("unknown selection rule '" + name + "' (expected ratio or linear)");
}

std::string to_string(SelectionRule rule) {
    return rule == SelectionRule::ratio ? "ratio" : "linear";
}

void CoupledSystemSpec::validate() const {
    if (systems.empty()) throw ConfigError("coupled spec needs at least one system");
    if (!(cap_factor >= 1.0)) throw ConfigError("Poisson cap factor must be >= 1");
    for (const auto& e : external) {
        if (!(e.poisson_rate >= 0.0) || !std::isfinite(e.value) || !std::isfinite(e.scale)) {
            throw ConfigError("external process parameters must be finite with a nonnegative rate");
        }
    }
    for (std::size_t n = 0; n < systems.size(); ++n) {
        if (systems[n].empty()) throw ConfigError("system " + std::to_string(n) + " has no actions");
        for (const auto& a : systems[n]) {
            if (a.exp_metrics.size() != L() || a.sampler.metrics.size() != L()) {
                throw DimensionError("system " + std::to_string(n) + " action " +
                                     std::to_string(a.action_id) + " has " +
                                     std::to_string(a.exp_metrics.size()) + " metrics, expected " +
                                     std::to_string(L()));
            }
            if (!(a.exp_frame_len >= 1.0)) throw ConfigError("expected frame length must be >= 1");
        }
    }
}

std::vector<double> CoupledSystemSpec::external_mean() const {
    std::vector<double> m;
    for (const auto& e : external) m.push_back(e.mean());
    return m;
}

std::vector<double> sample_external(const CoupledSystemSpec& spec, Rng& rng) {
    std::vector<double> d(spec.L());
    for (std::size_t l = 0; l < spec.L(); ++l) {
        const ExternalComponent& e = spec.external[l];
        if (e.poisson_rate > 0.0) {
            const auto cap = static_cast<std::int64_t>(std::ceil(spec.cap_factor * e.poisson_rate));
            d[l] = e.scale * static_cast<double>(poisson(rng, e.poisson_rate, cap));
        } else {
            d[l] = e.value;
        }
    }
    return d;
}

void emit_slot(const FrameOutcome& outcome, std::int64_t offset, double& penalty,
               std::vector<double>& metrics) {
    const std::int64_t idle = outcome.frame_len - outcome.busy_len;
    if (offset == outcome.busy_len - 1) {
        penalty += outcome.penalty_total - outcome.idle_cost_per_slot * static_cast<double>(idle);
        for (std::size_t l = 0; l < metrics.size(); ++l) metrics[l] += outcome.metrics_total[l];
    } else if (offset >= outcome.busy_len) {
        penalty += outcome.idle_cost_per_slot;
    }
}

SlotRecord coupled_step(const CoupledSystemSpec& spec, std::vector<SystemFrameState>& states,
                        VirtualQueues& q, double V, Rng& rng, std::int64_t t) {
    const std::size_t N = spec.systems.size();
    const std::size_t L = spec.L();
    if (states.size() != N) throw DimensionError("one frame state per system required");
    if (q.size() != L) throw DimensionError("queue dimension does not match the constraint count");
    SlotRecord rec;
    rec.penalty.assign(N, 0.0);
    rec.z_sum.assign(L, 0.0);
    rec.renewed.assign(N, 0);
    for (std::size_t n = 0; n < N; ++n) {
        SystemFrameState& st = states[n];
        if (st.remaining <= 0) {
            const auto& actions = spec.systems[n];
            st.action = spec.rule == SelectionRule::ratio ? dpp_ratio_select(actions, q, V)
                                                          : dpp_linear_select(actions, q, V);
            st.pending = sample_outcome(actions[st.action], rng);
            st.frame_start = t;
            st.remaining = st.pending.frame_len;
            rec.renewed[n] = 1;
        }
        std::vector<double> z(L, 0.0);
        emit_slot(st.pending, t - st.frame_start, rec.penalty[n], z);
        for (std::size_t l = 0; l < L; ++l) rec.z_sum[l] += z[l];
        --st.remaining;
    }
    rec.d = sample_external(spec, rng);
    q = queue_update_slot(q, rec.z_sum, rec.d);
    return rec;
}

CoupledRunResult run_coupled(const CoupledSystemSpec& spec, double V, std::int64_t horizon,
                             std::uint64_t seed, const CoupledRunOptions& options) {
    spec.validate();
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (!(V >= 0.0)) throw ConfigError("V must be nonnegative");
    const std::size_t N = spec.systems.size();
    const std::size_t L = spec.L();

    std::vector<std::string> cols{"slot", spec.penalty_label + "_avg"};
    for (std::size_t l = 0; l < L; ++l) cols.push_back(spec.metric_label + "_avg_" + std::to_string(l + 1));
    for (std::size_t l = 0; l < L; ++l) cols.push_back("q_" + std::to_string(l + 1));
    CoupledRunResult res;
    res.log = MetricsLog(cols);
    res.frames_completed.assign(N, 0);
    res.slots_in_completed_frames.assign(N, 0);
    res.slots_in_open_frame.assign(N, 0);
    if (options.keep_renewals) res.renewals.assign(N, {});

    Rng rng = make_rng(seed, 0);
    std::vector<SystemFrameState> states(N);
    VirtualQueues q(L);
    double penalty = 0.0;
    std::vector<double> metric(L, 0.0);
    std::vector<double> queue_sum(L, 0.0);
    for (std::int64_t t = 0; t < horizon; ++t) {
        const SlotRecord rec = coupled_step(spec, states, q, V, rng, t);
        for (std::size_t n = 0; n < N; ++n) {
            penalty += rec.penalty[n];
            if (options.keep_renewals && rec.renewed[n]) res.renewals[n].push_back(t);
            if (states[n].remaining == 0) {
                ++res.frames_completed[n];
                res.slots_in_completed_frames[n] += states[n].pending.frame_len;
            }
        }
        for (std::size_t l = 0; l < L; ++l) {
            metric[l] += rec.z_sum[l];
            queue_sum[l] += q[l];
        }
        res.max_queue = std::max(res.max_queue, q.max());
        if (should_record(t, horizon, options.record_every)) {
            const double s = static_cast<double>(t + 1);
            std::vector<double> row{static_cast<double>(t), penalty / s};
            for (std::size_t l = 0; l < L; ++l) row.push_back(spec.metric_report_sign * metric[l] / s);
            for (std::size_t l = 0; l < L; ++l) row.push_back(q[l]);
            res.log.add(row);
        }
    }
    const double s = static_cast<double>(horizon);
    res.penalty_avg = penalty / s;
    for (std::size_t l = 0; l < L; ++l) {
        res.metric_avg.push_back(spec.metric_report_sign * metric[l] / s);
        res.queue_avg.push_back(queue_sum[l] / s);
        res.final_queue.push_back(q[l]);
    }
    for (std::size_t n = 0; n < N; ++n) {
        if (states[n].remaining > 0) {
            res.slots_in_open_frame[n] = states[n].pending.frame_len - states[n].remaining;
        }
    }
    return res;
}

CoupledSystemSpec energy_scheduling_spec() {
    const double H[3] = {5.5, 4.6, 3.8};
    const std::int64_t mu_lo[3] = {9, 15, 11};
    const std::int64_t mu_hi[3] = {21, 27, 23};
    const double energy[3] = {16.0, 20.0, 13.0};
    const double idle[3] = {2.5, 4.3, 3.7};
    const double lambda[3] = {2.0, 3.0, 4.0};
    const double idle_power = 3.0;

    std::vector<ActionModel> actions;
    for (int i = 0; i < 3; ++i) {
        ActionModel a;
        a.action_id = i + 1;
        a.sampler.busy_len = Geometric{H[i]};
        a.sampler.idle_len = Geometric{idle[i]};
        a.sampler.penalty = Deterministic{energy[i]};
        a.sampler.idle_cost_per_slot = idle_power;
        a.sampler.metric_scale = -1.0;
        a.exp_metrics.assign(3, 0.0);
        for (int l = 0; l < 3; ++l) {
            if (l == i) {
                a.sampler.metrics.push_back(UniformInt{mu_lo[i], mu_hi[i]});
                a.exp_metrics[static_cast<std::size_t>(l)] = -mean_of(a.sampler.metrics.back());
            } else {
                a.sampler.metrics.push_back(Deterministic{0.0});
            }
        }
        a.exp_penalty = energy[i] + idle_power * idle[i];
        a.exp_frame_len = H[i] + idle[i];
        actions.push_back(std::move(a));
    }
    CoupledSystemSpec spec;
    spec.systems.assign(5, actions);
    for (double l : lambda) spec.external.push_back({0.0, l, -1.0});
    spec.rule = SelectionRule::ratio;
    spec.penalty_label = "energy";
    spec.metric_label = "service";
    spec.metric_report_sign = -1.0;
    return spec;
}

LpProblem coupled_lp(const CoupledSystemSpec& spec) {
    spec.validate();
    std::vector<std::vector<RatioAction>> systems;
    for (const auto& sys : spec.systems) {
        std::vector<RatioAction> acts;
        for (const auto& a : sys) acts.push_back({a.exp_penalty, a.exp_metrics, a.exp_frame_len});
        systems.push_back(std::move(acts));
    }
    return coupled_fractional_lp(systems, spec.external_mean());
}

double coupled_lp_optimum(const CoupledSystemSpec& spec, const LpOptions& options) {
    const LpSolution sol = solve_lp(coupled_lp(spec), options);
    if (sol.status != LpStatus::optimal) {
        throw SolverError("coupled LP ended with status " + to_string(sol.status));
    }
    return sol.objective_value;
}

}  // namespace renewal
