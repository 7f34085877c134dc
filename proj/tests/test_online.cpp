#include "doctest.h"

#include <cmath>
#include <random>

#include "renewal/online.hpp"

using namespace renewal;

namespace {

FrameOutcome frame(double y, std::vector<double> z, std::int64_t T) {
    FrameOutcome o;
    o.frame_len = T;
    o.busy_len = T;
    o.penalty_total = y;
    o.metrics_total = std::move(z);
    return o;
}

EventModel random_model(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 3.0);
    EventModel m;
    m.budgets = {1.0, 0.5};
    for (int e = 0; e < 3; ++e) {
        OnlineEvent ev;
        ev.prob = 1.0 / 3.0;
        for (int a = 0; a < 4; ++a) ev.actions.push_back({u(rng), {u(rng), u(rng)}, u(rng) / 3.0, 1.0 + u(rng)});
        m.events.push_back(ev);
    }
    return m;
}

}  // namespace

TEST_CASE("without feedback the cheapest action wins") {
    const EventModel m = file_download_example();
    for (std::size_t e = 0; e < m.events.size(); ++e) {
        CHECK(online_select(m, e, VirtualQueues(1), 0.0, 10.0) == 0);
    }
}

TEST_CASE("selection equals exhaustive argmin") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    for (int trial = 0; trial < 300; ++trial) {
        const EventModel m = random_model(rng);
        const VirtualQueues Q = VirtualQueues::from_values({u(rng), u(rng)});
        const double theta = u(rng) / 10.0, V = 1.0 + u(rng);
        for (std::size_t e = 0; e < m.events.size(); ++e) {
            std::size_t best = 0;
            double best_v = 0.0;
            for (std::size_t a = 0; a < m.events[e].actions.size(); ++a) {
                const EventAction& x = m.events[e].actions[a];
                const double T = 1.0 + x.completion_prob * x.idle_mean;
                double v = V * (x.y - theta * T);
                for (std::size_t l = 0; l < 2; ++l) v += Q[l] * (x.z[l] - m.budgets[l] * T);
                if (a == 0 || v < best_v) {
                    best = a;
                    best_v = v;
                }
            }
            CHECK(online_select(m, e, Q, theta, V) == best);
        }
    }
}

TEST_CASE("zero increments keep theta at zero") {
    PseudoAverage pa;
    pa.V = 2.0;
    pa.delta = 0.6;
    pa.theta_max = 5.0;
    for (int n = 0; n < 20; ++n) {
        pa.update(frame(0.0, {1.0}, 1), VirtualQueues(1), {1.0});
        CHECK(pa.theta == 0.0);
    }
}

TEST_CASE("large increment clamps theta at its maximum") {
    PseudoAverage pa;
    pa.V = 1.0;
    pa.delta = 0.6;
    pa.theta_max = 3.0;
    pa.update(frame(1e6, {0.0}, 1), VirtualQueues(1), {1.0});
    CHECK(pa.theta == 3.0);
    pa.update(frame(-1e8, {0.0}, 1), VirtualQueues(1), {1.0});
    CHECK(pa.theta == 0.0);
}

TEST_CASE("theta update follows the accumulated increments") {
    PseudoAverage pa;
    pa.V = 4.0;
    pa.delta = 0.5;
    pa.theta_max = 100.0;
    const VirtualQueues Q = VirtualQueues::from_values({2.0});
    // Frame 0: y = 3, T = 2, z = 1, c = 1: increment 3 - 0 + (2 * (1 - 2)) / 4 = 2.5.
    pa.update(frame(3.0, {1.0}, 2), Q, {1.0});
    CHECK(pa.sum == doctest::Approx(2.5));
    CHECK(pa.theta == doctest::Approx(2.5));
    // Frame 1: y = 1, T = 1, z = 3: 1 - 2.5 + (2 * 2) / 4 = -0.5; theta = 2 / sqrt(2).
    pa.update(frame(1.0, {3.0}, 1), Q, {1.0});
    CHECK(pa.theta == doctest::Approx(2.0 / std::sqrt(2.0)));
}

TEST_CASE("frame queue update") {
    const VirtualQueues Q = VirtualQueues::from_values({3.0});
    CHECK(frame_queue_update(Q, frame(0.0, {2.0}, 2), {1.0}) == Q);
    CHECK(frame_queue_update(Q, frame(0.0, {0.0}, 2), {1.0}) == VirtualQueues::from_values({1.0}));
    CHECK_THROWS_AS(frame_queue_update(Q, frame(0.0, {0.0}, 0), {1.0}), ConfigError);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    std::uniform_int_distribution<int> len(1, 5);
    VirtualQueues q(1);
    double direct = 0.0;
    for (int n = 0; n < 1000; ++n) {
        const FrameOutcome o = frame(0.0, {u(rng)}, len(rng));
        q = frame_queue_update(q, o, {1.2});
        direct = std::max(direct + o.metrics_total[0] - 1.2 * static_cast<double>(o.frame_len), 0.0);
        CHECK(q[0] == direct);
    }
}

TEST_CASE("file download model matches its description") {
    const EventModel m = file_download_example();
    REQUIRE(m.events.size() == 9);
    CHECK(m.budgets == std::vector<double>{1.0});
    for (const auto& e : m.events) {
        CHECK(e.prob == doctest::Approx(1.0 / 9.0));
        REQUIRE(e.actions.size() == 4);
        CHECK(e.actions[2].z[0] == 2.0);
        CHECK(e.actions[3].z[0] == 4.0);
    }
    // Event 6 is omega = 0.8 with s = 1; action 3 is alpha = 0.9.
    const EventAction& a = m.events[6].actions[3];
    CHECK(a.completion_prob == doctest::Approx(0.72));
    CHECK(a.expected_frame_len() == doctest::Approx(2.44));
    CHECK(a.y == doctest::Approx(0.9));
    const EventModel c = file_download_example(DownloadPenalty::complement);
    CHECK(c.events[6].actions[3].y == doctest::Approx(0.1));
    CHECK(c.events[6].actions[0].y == doctest::Approx(1.0));
}

TEST_CASE("theta trajectory replays bit-exactly from the increment log") {
    OnlineRunOptions opt;
    opt.keep_trajectory = true;
    const OnlineRunResult r = run_online(file_download_example(DownloadPenalty::complement), 50.0, 0.6, 20000, 4, opt);
    const std::vector<double> replay = replay_theta(r.increments, 0.6, r.theta_max);
    REQUIRE(replay.size() == r.thetas.size() + 1);
    for (std::size_t n = 0; n < r.thetas.size(); ++n) CHECK(replay[n] == r.thetas[n]);
    CHECK(replay.back() == r.theta_final);
    for (double t : r.thetas) {
        CHECK(t >= 0.0);
        CHECK(t <= r.theta_max);
    }
    CHECK(r.thetas.front() == 0.0);
}

TEST_CASE("delta outside the theory range still runs with a warning") {
    const OnlineRunResult r = run_online(file_download_example(), 10.0, 0.2, 500, 1);
    CHECK_FALSE(r.warning.empty());
    CHECK(delta_in_theory_range(0.6));
    CHECK_FALSE(delta_in_theory_range(1.0 / 3.0));
    CHECK_FALSE(delta_in_theory_range(1.0));
    const OnlineRunResult ok = run_online(file_download_example(), 10.0, 0.6, 500, 1);
    CHECK(ok.warning.empty());
}

TEST_CASE("run validates its arguments") {
    CHECK_THROWS_AS(run_online(file_download_example(), 0.0, 0.6, 10, 1), ConfigError);
    CHECK_THROWS_AS(run_online(file_download_example(), 1.0, 0.6, 0, 1), ConfigError);
}

TEST_CASE("complement penalty approaches the LP optimum") {
    const EventModel m = file_download_example(DownloadPenalty::complement);
    const double opt = online_lp_optimum(m);
    const OnlineRunResult r = run_online(m, 300.0, 0.6, 200000, 2);
    CHECK(std::abs(r.penalty_avg - opt) <= 0.1 * opt);
    CHECK(r.resource_avg[0] <= 1.05);
    CHECK(r.theta_final == doctest::Approx(opt).epsilon(0.1));
}

TEST_CASE("literal penalty has optimum zero and the algorithm finds it") {
    const EventModel m = file_download_example(DownloadPenalty::literal);
    CHECK(std::abs(online_lp_optimum(m)) <= 1e-12);
    const OnlineRunResult r = run_online(m, 300.0, 0.6, 20000, 2);
    CHECK(r.penalty_avg == 0.0);
}
