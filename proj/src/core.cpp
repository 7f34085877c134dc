#include "renewal/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace renewal {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng make_rng(std::uint64_t master, std::uint64_t stream) {
    return Rng(derive_seed(master, stream));
}

double uniform01(Rng& rng) {
    // 53 random bits mapped into [0, 1).
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

bool bernoulli(Rng& rng, double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform01(rng) < p;
}

std::int64_t geometric_at_least_one(Rng& rng, double mean) {
    if (!(mean >= 1.0) || !std::isfinite(mean)) {
        throw ConfigError("geometric mean must be finite and >= 1, got " + std::to_string(mean));
    }
    if (mean == 1.0) return 1;
    const double p = 1.0 / mean;
    const double u = uniform01(rng);
    return 1 + static_cast<std::int64_t>(std::floor(std::log1p(-u) / std::log1p(-p)));
}

std::int64_t poisson(Rng& rng, double rate, std::int64_t cap) {
    if (rate < 0.0 || !std::isfinite(rate)) {
        throw ConfigError("poisson rate must be finite and >= 0");
    }
    if (rate == 0.0) return 0;
    std::poisson_distribution<std::int64_t> dist(rate);
    return std::min(dist(rng), cap);
}

double sample(const Distribution& dist, Rng& rng) {
    return std::visit(
        [&](const auto& d) -> double {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, Deterministic>) {
                return d.value;
            } else if constexpr (std::is_same_v<D, Geometric>) {
                return static_cast<double>(geometric_at_least_one(rng, d.mean));
            } else {
                if (d.hi < d.lo) throw ConfigError("uniform range has hi < lo");
                const auto width = static_cast<double>(d.hi - d.lo + 1);
                const auto k = static_cast<std::int64_t>(uniform01(rng) * width);
                return static_cast<double>(d.lo + std::min(k, d.hi - d.lo));
            }
        },
        dist);
}

double mean_of(const Distribution& dist) {
    return std::visit(
        [](const auto& d) -> double {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, Deterministic>) {
                return d.value;
            } else if constexpr (std::is_same_v<D, Geometric>) {
                return d.mean;
            } else {
                return 0.5 * static_cast<double>(d.lo + d.hi);
            }
        },
        dist);
}

std::string describe(const Distribution& dist) {
    std::ostringstream os;
    std::visit(
        [&](const auto& d) {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, Deterministic>) {
                os << "det(" << d.value << ")";
            } else if constexpr (std::is_same_v<D, Geometric>) {
                os << "geom(mean=" << d.mean << ")";
            } else {
                os << "unif[" << d.lo << "," << d.hi << "]";
            }
        },
        dist);
    return os.str();
}

ActionModel deterministic_action(int id, double penalty, std::vector<double> metrics,
                                 std::int64_t frame_len) {
    if (frame_len < 1) throw ConfigError("frame length must be >= 1");
    ActionModel a;
    a.action_id = id;
    a.exp_penalty = penalty;
    a.exp_metrics = metrics;
    a.exp_frame_len = static_cast<double>(frame_len);
    a.sampler.busy_len = Deterministic{static_cast<double>(frame_len)};
    a.sampler.penalty = Deterministic{penalty};
    for (double m : metrics) a.sampler.metrics.push_back(Deterministic{m});
    return a;
}

FrameOutcome sample_outcome(const ActionModel& model, Rng& rng) {
    const FrameSampler& s = model.sampler;
    if (std::holds_alternative<Geometric>(s.penalty)) {
        throw ConfigError("penalty distribution must be deterministic or uniform");
    }
    FrameOutcome out;
    out.busy_len = static_cast<std::int64_t>(std::llround(sample(s.busy_len, rng)));
    const auto idle = static_cast<std::int64_t>(std::llround(sample(s.idle_len, rng)));
    if (out.busy_len < 1 || idle < 0) throw ConfigError("frame lengths out of range");
    out.frame_len = out.busy_len + idle;
    out.idle_cost_per_slot = s.idle_cost_per_slot;
    out.penalty_total = sample(s.penalty, rng) + s.idle_cost_per_slot * static_cast<double>(idle);
    out.metrics_total.reserve(s.metrics.size());
    for (const auto& m : s.metrics) out.metrics_total.push_back(s.metric_scale * sample(m, rng));
    return out;
}

VirtualQueues VirtualQueues::from_values(std::vector<double> values) {
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0) {
            throw DimensionError("queue backlog must be finite and nonnegative");
        }
    }
    VirtualQueues q;
    q.q_ = std::move(values);
    return q;
}

double VirtualQueues::max() const {
    return q_.empty() ? 0.0 : *std::max_element(q_.begin(), q_.end());
}

double VirtualQueues::sum() const { return std::accumulate(q_.begin(), q_.end(), 0.0); }

static void check_dim(std::size_t expected, std::size_t got, const char* what) {
    if (expected != got) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) +
                             ", got " + std::to_string(got));
    }
}

VirtualQueues queue_update_slot(const VirtualQueues& q, std::span<const double> z_sum,
                                std::span<const double> d) {
    check_dim(q.size(), z_sum.size(), "metric vector");
    check_dim(q.size(), d.size(), "budget vector");
    std::vector<double> next(q.size());
    for (std::size_t l = 0; l < q.size(); ++l) next[l] = std::max(q[l] + z_sum[l] - d[l], 0.0);
    return VirtualQueues::from_values(std::move(next));
}

VirtualQueues queue_update_frame(const VirtualQueues& q, const FrameOutcome& outcome,
                                 std::span<const double> d_rates) {
    check_dim(q.size(), outcome.metrics_total.size(), "metric vector");
    check_dim(q.size(), d_rates.size(), "budget vector");
    const double T = static_cast<double>(outcome.frame_len);
    std::vector<double> next(q.size());
    for (std::size_t l = 0; l < q.size(); ++l) {
        next[l] = std::max(q[l] + outcome.metrics_total[l] - d_rates[l] * T, 0.0);
    }
    return VirtualQueues::from_values(std::move(next));
}

double dot(std::span<const double> a, std::span<const double> b) {
    check_dim(a.size(), b.size(), "dot product");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double linear_objective(const ActionModel& a, const VirtualQueues& q, double V) {
    return V * a.exp_penalty + dot(q.values(), a.exp_metrics);
}

double ratio_objective(const ActionModel& a, const VirtualQueues& q, double V) {
    if (!(a.exp_frame_len > 0.0)) throw ConfigError("expected frame length must be positive");
    return linear_objective(a, q, V) / a.exp_frame_len;
}

std::size_t dpp_ratio_select(std::span<const ActionModel> actions, const VirtualQueues& q,
                             double V) {
    if (actions.empty()) throw ConfigError("action set is empty");
    return argmin_first(actions.size(),
                        [&](std::size_t i) { return ratio_objective(actions[i], q, V); });
}

std::size_t dpp_linear_select(std::span<const ActionModel> actions, const VirtualQueues& q,
                              double V) {
    if (actions.empty()) throw ConfigError("action set is empty");
    return argmin_first(actions.size(),
                        [&](std::size_t i) { return linear_objective(actions[i], q, V); });
}

}  // namespace renewal
