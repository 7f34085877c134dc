#include "renewal/online.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

namespace renewal {

void EventModel::validate() const {
    if (events.empty()) throw ConfigError("event model has no events");
    double total = 0.0;
    for (const auto& e : events) {
        if (!(e.prob >= 0.0)) throw ConfigError("event probabilities must be nonnegative");
        total += e.prob;
        if (e.actions.empty()) throw ConfigError("event '" + e.label + "' has no actions");
        for (const auto& a : e.actions) {
            if (a.z.size() != budgets.size()) {
                throw DimensionError("action metric vector does not match the budget count");
            }
            if (!(a.completion_prob >= 0.0 && a.completion_prob <= 1.0)) {
                throw ConfigError("completion probability must lie in [0, 1]");
            }
            if (!(a.idle_mean >= 1.0)) throw ConfigError("idle mean must be >= 1");
        }
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("event probabilities must sum to 1");
}

double EventModel::max_penalty() const {
    double m = 0.0;
    for (const auto& e : events) {
        for (const auto& a : e.actions) m = std::max(m, a.y);
    }
    return m;
}

double EventModel::min_frame_len() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& e : events) {
        for (const auto& a : e.actions) m = std::min(m, a.expected_frame_len());
    }
    return m;
}

std::size_t sample_event(const EventModel& model, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t e = 0; e < model.events.size(); ++e) {
        acc += model.events[e].prob;
        if (u < acc) return e;
    }
    return model.events.size() - 1;
}

FrameOutcome sample_event_outcome(const EventAction& action, Rng& rng) {
    FrameOutcome o;
    o.busy_len = 1;
    o.frame_len = 1;
    if (bernoulli(rng, action.completion_prob)) o.frame_len += geometric_at_least_one(rng, action.idle_mean);
    o.penalty_total = action.y;
    o.metrics_total = action.z;
    return o;
}

std::size_t online_select(const EventModel& model, std::size_t event, const VirtualQueues& Q,
                          double theta, double V) {
    const auto& acts = model.events.at(event).actions;
    if (acts.empty()) throw ConfigError("event has no actions");
    return argmin_first(acts.size(), [&](std::size_t i) {
        const EventAction& a = acts[i];
        const double T = a.expected_frame_len();
        double v = V * (a.y - theta * T);
        for (std::size_t l = 0; l < Q.size(); ++l) v += Q[l] * (a.z[l] - model.budgets[l] * T);
        return v;
    });
}

VirtualQueues frame_queue_update(const VirtualQueues& Q, const FrameOutcome& outcome,
                                 const std::vector<double>& budgets) {
    if (outcome.frame_len < 1) throw ConfigError("frame length must be >= 1");
    return queue_update_frame(Q, outcome, budgets);
}

double PseudoAverage::increment(const FrameOutcome& outcome, const VirtualQueues& Q,
                                const std::vector<double>& budgets) const {
    const double T = static_cast<double>(outcome.frame_len);
    double drift = 0.0;
    for (std::size_t l = 0; l < Q.size(); ++l) drift += Q[l] * (outcome.metrics_total[l] - budgets[l] * T);
    return outcome.penalty_total - theta * T + drift / V;
}

void PseudoAverage::update(const FrameOutcome& outcome, const VirtualQueues& Q,
                           const std::vector<double>& budgets) {
    sum += increment(outcome, Q, budgets);
    ++n;
    theta = std::clamp(sum / std::pow(static_cast<double>(n), delta), 0.0, theta_max);
}

std::vector<double> replay_theta(const std::vector<double>& increments, double delta,
                                 double theta_max) {
    std::vector<double> out{0.0};
    double sum = 0.0;
    for (std::size_t n = 0; n < increments.size(); ++n) {
        sum += increments[n];
        out.push_back(std::clamp(sum / std::pow(static_cast<double>(n + 1), delta), 0.0, theta_max));
    }
    return out;
}

bool delta_in_theory_range(double delta) { return delta > 1.0 / 3.0 && delta < 1.0; }

OnlineRunResult run_online(const EventModel& model, double V, double delta, std::int64_t frames,
                           std::uint64_t seed, const OnlineRunOptions& options) {
    model.validate();
    if (!(V > 0.0)) throw ConfigError("V must be positive");
    if (frames < 1) throw ConfigError("frame count must be >= 1");
    if (!std::isfinite(delta)) throw ConfigError("delta must be finite");
    OnlineRunResult res;
    if (!delta_in_theory_range(delta)) {
        std::ostringstream msg;
        msg << "delta = " << delta << " lies outside (1/3, 1); convergence of theta is not guaranteed";
        res.warning = msg.str();
        std::cerr << "warning: " << res.warning << '\n';
    }
    const std::size_t L = model.constraints();
    PseudoAverage pa;
    pa.V = V;
    pa.delta = delta;
    pa.theta_max = options.theta_max > 0.0
                       ? options.theta_max
                       : 2.0 * std::max(model.max_penalty(), 1e-12) / model.min_frame_len();
    res.theta_max = pa.theta_max;

    Rng rng = make_rng(seed, 0);
    VirtualQueues Q(L);
    double penalty = 0.0;
    std::vector<double> resource(L, 0.0);
    std::int64_t slots = 0;
    for (std::int64_t n = 0; n < frames; ++n) {
        const std::size_t e = sample_event(model, rng);
        const std::size_t a = online_select(model, e, Q, pa.theta, V);
        const FrameOutcome o = sample_event_outcome(model.events[e].actions[a], rng);
        if (options.keep_trajectory) {
            res.thetas.push_back(pa.theta);
            res.increments.push_back(pa.increment(o, Q, model.budgets));
        }
        pa.update(o, Q, model.budgets);
        Q = frame_queue_update(Q, o, model.budgets);
        penalty += o.penalty_total;
        for (std::size_t l = 0; l < L; ++l) resource[l] += o.metrics_total[l];
        slots += o.frame_len;
        res.max_Q = std::max(res.max_Q, Q.max());
        if (should_record(n, frames, options.record_every)) {
            const double s = static_cast<double>(slots);
            res.log.add({static_cast<double>(n), pa.theta, penalty / s, L ? resource[0] / s : 0.0,
                         L ? Q[0] : 0.0});
        }
    }
    const double s = static_cast<double>(slots);
    res.slots = slots;
    res.penalty_avg = penalty / s;
    res.resource_avg.resize(L);
    for (std::size_t l = 0; l < L; ++l) res.resource_avg[l] = resource[l] / s;
    res.theta_final = pa.theta;
    return res;
}

EventModel file_download_example(DownloadPenalty penalty) {
    const double omegas[] = {0.2, 0.5, 0.8};
    const double delays[] = {1.0, 3.0, 5.0};
    const double alphas[] = {0.0, 0.3, 0.6, 0.9};
    const double powers[] = {0.0, 1.0, 2.0, 4.0};
    const double lambda = 0.5;
    EventModel m;
    m.budgets = {1.0};
    for (double w : omegas) {
        for (double s : delays) {
            OnlineEvent e;
            e.prob = 1.0 / 9.0;
            e.label = "omega=" + format_double(w) + ",s=" + format_double(s);
            for (std::size_t i = 0; i < 4; ++i) {
                EventAction a;
                a.y = penalty == DownloadPenalty::literal ? alphas[i] * s : (1.0 - alphas[i]) * s;
                a.z = {powers[i]};
                a.completion_prob = alphas[i] * w;
                a.idle_mean = 1.0 / lambda;
                e.actions.push_back(a);
            }
            m.events.push_back(std::move(e));
        }
    }
    return m;
}

LpProblem online_lp(const EventModel& model) {
    model.validate();
    std::vector<EventActions> events;
    for (const auto& e : model.events) {
        EventActions ea;
        ea.prob = e.prob;
        for (const auto& a : e.actions) ea.actions.push_back({a.y, a.z, a.expected_frame_len()});
        events.push_back(std::move(ea));
    }
    return event_fractional_lp(events, model.budgets);
}

double online_lp_optimum(const EventModel& model, const LpOptions& options) {
    const LpSolution sol = solve_lp(online_lp(model), options);
    if (sol.status != LpStatus::optimal) {
        throw SolverError("online renewal LP ended with status " + to_string(sol.status));
    }
    return sol.objective_value;
}

}  // namespace renewal
