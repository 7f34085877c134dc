#include "doctest.h"

#include <cmath>
#include <random>

#include "renewal/core.hpp"

using namespace renewal;

namespace {

VirtualQueues Q(std::vector<double> v) { return VirtualQueues::from_values(std::move(v)); }

FrameOutcome outcome(std::int64_t T, std::vector<double> z) {
    FrameOutcome o;
    o.frame_len = T;
    o.busy_len = T;
    o.metrics_total = std::move(z);
    return o;
}

std::size_t brute_argmin(const std::vector<ActionModel>& acts, const VirtualQueues& q, double V,
                         bool ratio) {
    std::size_t best = 0;
    double best_v = 0.0;
    for (std::size_t i = 0; i < acts.size(); ++i) {
        double v = V * acts[i].exp_penalty;
        for (std::size_t l = 0; l < q.size(); ++l) v += q[l] * acts[i].exp_metrics[l];
        if (ratio) v /= acts[i].exp_frame_len;
        if (i == 0 || v < best_v) {
            best_v = v;
            best = i;
        }
    }
    return best;
}

std::vector<ActionModel> random_actions(std::mt19937_64& rng, std::size_t n, std::size_t L) {
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::uniform_int_distribution<int> len(1, 6);
    std::vector<ActionModel> acts;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> z(L);
        for (auto& v : z) v = u(rng);
        acts.push_back(deterministic_action(static_cast<int>(i), u(rng), z, len(rng)));
    }
    return acts;
}

}  // namespace

TEST_CASE("slot queue update examples") {
    CHECK(queue_update_slot(Q({5}), std::vector<double>{3}, std::vector<double>{4}) == Q({4}));
    CHECK(queue_update_slot(Q({1}), std::vector<double>{0}, std::vector<double>{5}) == Q({0}));
    CHECK(queue_update_slot(Q({0, 2}), std::vector<double>{1, 1}, std::vector<double>{1, 0}) ==
          Q({0, 3}));
}

TEST_CASE("slot queue update rejects mismatched lengths") {
    CHECK_THROWS_AS(queue_update_slot(Q({1, 2}), std::vector<double>{1}, std::vector<double>{1, 1}),
                    DimensionError);
    CHECK_THROWS_AS(queue_update_slot(Q({1}), std::vector<double>{1}, std::vector<double>{1, 1}),
                    DimensionError);
}

TEST_CASE("frame queue update examples") {
    CHECK(queue_update_frame(Q({0}), outcome(2, {4}), std::vector<double>{2}) == Q({0}));
    CHECK(queue_update_frame(Q({3}), outcome(1, {0}), std::vector<double>{1}) == Q({2}));
    CHECK(queue_update_frame(Q({0}), outcome(3, {7}), std::vector<double>{2}) == Q({1}));
    CHECK_THROWS_AS(queue_update_frame(Q({0, 0}), outcome(3, {7}), std::vector<double>{2, 1}),
                    DimensionError);
}

TEST_CASE("queues stay nonnegative with bounded one-step increments") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    VirtualQueues q(3);
    for (int t = 0; t < 5000; ++t) {
        std::vector<double> z(3), d(3);
        for (auto& v : z) v = u(rng);
        for (auto& v : d) v = u(rng);
        VirtualQueues next = queue_update_slot(q, z, d);
        for (std::size_t l = 0; l < 3; ++l) {
            CHECK(next[l] >= 0.0);
            CHECK(std::abs(next[l] - q[l]) <= std::abs(z[l] - d[l]) + 1e-12);
        }
        q = next;
    }
}

TEST_CASE("slot updates summed over a frame equal the frame update when d is zero") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    VirtualQueues slotwise(2);
    VirtualQueues framewise(2);
    const std::vector<double> zero{0.0, 0.0};
    for (int k = 0; k < 200; ++k) {
        const std::int64_t T = 1 + static_cast<std::int64_t>(u(rng));
        std::vector<double> z{u(rng), u(rng)};
        for (std::int64_t s = 0; s < T; ++s) {
            slotwise = queue_update_slot(slotwise, s == T - 1 ? z : zero, zero);
        }
        framewise = queue_update_frame(framewise, outcome(T, z), zero);
        CHECK(slotwise[0] == doctest::Approx(framewise[0]).epsilon(1e-12));
        CHECK(slotwise[1] == doctest::Approx(framewise[1]).epsilon(1e-12));
    }
}

TEST_CASE("virtual queues reject negative entries") {
    CHECK_THROWS_AS(VirtualQueues::from_values({1.0, -0.5}), DimensionError);
    CHECK(VirtualQueues(4).sum() == 0.0);
}

TEST_CASE("ratio selection picks the smaller ratio") {
    std::vector<ActionModel> acts{deterministic_action(0, 2.0, {0.0}, 1),
                                  deterministic_action(1, 3.0, {0.0}, 2)};
    CHECK(dpp_ratio_select(acts, VirtualQueues(1), 1.0) == 1);
    CHECK(dpp_linear_select(acts, VirtualQueues(1), 1.0) == 0);
}

TEST_CASE("single action and empty action list") {
    std::vector<ActionModel> one{deterministic_action(0, 9.0, {1.0}, 3)};
    CHECK(dpp_ratio_select(one, VirtualQueues(1), 5.0) == 0);
    CHECK(dpp_linear_select(one, VirtualQueues(1), 5.0) == 0);
    std::vector<ActionModel> none;
    CHECK_THROWS_AS(dpp_ratio_select(none, VirtualQueues(1), 1.0), ConfigError);
    CHECK_THROWS_AS(dpp_linear_select(none, VirtualQueues(1), 1.0), ConfigError);
}

TEST_CASE("linear selection example and tie breaking") {
    std::vector<ActionModel> acts{deterministic_action(0, 1.0, {0.0}), deterministic_action(1, 0.0, {0.0}),
                                  deterministic_action(2, 2.0, {0.0})};
    CHECK(dpp_linear_select(acts, Q({3.0}), 1.0) == 1);
    std::vector<ActionModel> tied{deterministic_action(0, 1.0, {0.0}), deterministic_action(1, 1.0, {0.0})};
    CHECK(dpp_linear_select(tied, VirtualQueues(1), 1.0) == 0);
    CHECK(dpp_ratio_select(tied, VirtualQueues(1), 1.0) == 0);
}

TEST_CASE("selection is invariant to scaling q and V together") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
        auto acts = random_actions(rng, 5, 3);
        std::vector<double> qv{u(rng), u(rng), u(rng)};
        const double c = 0.5 + u(rng);
        std::vector<double> scaled{qv[0] * c, qv[1] * c, qv[2] * c};
        const double V = 1.0 + u(rng);
        CHECK(dpp_linear_select(acts, Q(qv), V) == dpp_linear_select(acts, Q(scaled), V * c));
    }
}

TEST_CASE("selection matches exhaustive enumeration on random instances") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 8.0);
    std::uniform_int_distribution<std::size_t> count(1, 64);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t L = 1 + static_cast<std::size_t>(trial % 3);
        auto acts = random_actions(rng, count(rng), L);
        std::vector<double> qv(L);
        for (auto& v : qv) v = u(rng);
        const double V = 0.1 + u(rng);
        CHECK(dpp_ratio_select(acts, Q(qv), V) == brute_argmin(acts, Q(qv), V, true));
        CHECK(dpp_linear_select(acts, Q(qv), V) == brute_argmin(acts, Q(qv), V, false));
    }
}

TEST_CASE("deterministic model always yields its outcome") {
    Rng rng(1);
    const ActionModel a = deterministic_action(0, 2.0, {1.0}, 1);
    for (int i = 0; i < 100; ++i) {
        const FrameOutcome o = sample_outcome(a, rng);
        CHECK(o.frame_len == 1);
        CHECK(o.penalty_total == 2.0);
        CHECK(o.metrics_total == std::vector<double>{1.0});
    }
}

TEST_CASE("geometric frame length has the configured mean") {
    ActionModel a;
    a.sampler.busy_len = Geometric{4.0};
    Rng rng(42);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const FrameOutcome o = sample_outcome(a, rng);
        CHECK_FALSE(o.frame_len < 1);
        sum += static_cast<double>(o.frame_len);
    }
    CHECK(std::abs(sum / n - 4.0) < 0.1);
}

TEST_CASE("uniform integer metric stays in range with the right mean") {
    ActionModel a;
    a.sampler.metrics = {UniformInt{9, 21}};
    Rng rng(9);
    double sum = 0.0;
    const int n = 100000;
    bool in_range = true;
    for (int i = 0; i < n; ++i) {
        const double z = sample_outcome(a, rng).metrics_total[0];
        in_range = in_range && z >= 9 && z <= 21 && z == std::floor(z);
        sum += z;
    }
    CHECK(in_range);
    CHECK(std::abs(sum / n - 15.0) < 0.1);
    CHECK(mean_of(UniformInt{9, 21}) == 15.0);
}

TEST_CASE("geometric penalty is rejected") {
    ActionModel a;
    a.sampler.penalty = Geometric{2.0};
    Rng rng(1);
    CHECK_THROWS_AS(sample_outcome(a, rng), ConfigError);
}

TEST_CASE("identical seeds give identical outcome sequences") {
    ActionModel a;
    a.sampler.busy_len = Geometric{3.0};
    a.sampler.idle_len = UniformInt{0, 4};
    a.sampler.penalty = UniformInt{1, 10};
    a.sampler.idle_cost_per_slot = 0.5;
    a.sampler.metrics = {UniformInt{0, 3}, Deterministic{2.0}};
    Rng r1 = make_rng(99, 3);
    Rng r2 = make_rng(99, 3);
    for (int i = 0; i < 1000; ++i) {
        const FrameOutcome x = sample_outcome(a, r1);
        const FrameOutcome y = sample_outcome(a, r2);
        CHECK(x.frame_len == y.frame_len);
        CHECK(x.penalty_total == y.penalty_total);
        CHECK(x.metrics_total == y.metrics_total);
    }
    CHECK(derive_seed(99, 3) != derive_seed(99, 4));
    CHECK(derive_seed(99, 3) != derive_seed(100, 3));
}

TEST_CASE("idle tail adds per-slot cost") {
    ActionModel a;
    a.sampler.busy_len = Deterministic{2.0};
    a.sampler.idle_len = Deterministic{3.0};
    a.sampler.penalty = Deterministic{10.0};
    a.sampler.idle_cost_per_slot = 3.0;
    Rng rng(1);
    const FrameOutcome o = sample_outcome(a, rng);
    CHECK(o.frame_len == 5);
    CHECK(o.busy_len == 2);
    CHECK(o.penalty_total == 19.0);
}

TEST_CASE("poisson sampler respects the cap and mean") {
    Rng rng(17);
    double sum = 0.0;
    for (int i = 0; i < 50000; ++i) {
        const auto k = poisson(rng, 3.0, 30);
        CHECK_FALSE(k > 30);
        sum += static_cast<double>(k);
    }
    CHECK(std::abs(sum / 50000 - 3.0) < 0.05);
    CHECK(poisson(rng, 5.0, 2) <= 2);
}
