#include "renewal/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

namespace renewal {

double UserSpec::min_positive_power() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t a = 1; a < actions.size(); ++a) m = std::min(m, actions[a].power);
    return m;
}

double UserSpec::max_power() const {
    double m = 0.0;
    for (const auto& a : actions) m = std::max(m, a.power);
    return m;
}

void UserSpec::validate() const {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("user lambda must lie in (0, 1]");
    if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("user mu must lie in (0, 1]");
    if (actions.size() < 2) throw ConfigError("a user needs the zero action and at least one other");
    if (actions[0].phi != 0.0 || actions[0].power != 0.0) {
        throw ConfigError("action 0 must be the zero action (phi = 0, power = 0)");
    }
    for (std::size_t a = 1; a < actions.size(); ++a) {
        if (!(actions[a].phi >= 0.0 && actions[a].phi <= 1.0)) throw ConfigError("phi must lie in [0, 1]");
        if (!(actions[a].power > 0.0)) throw ConfigError("nonzero actions need positive power");
        if (!std::holds_alternative<MemorylessFiles>(sizes) && actions[a].phi > mu + 1e-12) {
            throw ConfigError("packet success probability phi / mu exceeds 1");
        }
    }
    if (const auto* u = std::get_if<UniformPacketFiles>(&sizes); u && (u->lo < 1 || u->hi < u->lo)) {
        throw ConfigError("uniform packet range must satisfy 1 <= lo <= hi");
    }
    if (const auto* p = std::get_if<PoissonPacketFiles>(&sizes); p && p->mean < 1.0) {
        throw ConfigError("poisson packet mean must be >= 1");
    }
}

double user_index_value(const UserSpec& u, std::size_t action, double Q, double V, double weight) {
    const BanditAction& a = u.actions[action];
    return (V * weight * u.mean_file() * a.phi - Q * a.power) / (1.0 + a.phi / u.lambda);
}

std::size_t single_user_select(const UserSpec& u, double Q, double V) {
    return argmax_first(u.actions.size(),
                        [&](std::size_t a) { return user_index_value(u, a, Q, V, 1.0); });
}

double single_user_queue_update(double Q, double power, std::int64_t frame_len, double beta) {
    if (frame_len < 1) throw ConfigError("frame length must be >= 1");
    return std::max(Q + power - beta * static_cast<double>(frame_len), 0.0);
}

double single_user_queue_bound(const UserSpec& u, double V, double beta) {
    return std::max(V * u.mean_file() / u.min_positive_power() + u.max_power() - beta, 0.0);
}

namespace {

std::int64_t draw_packets(const UserSpec& u, Rng& rng) {
    return std::visit(
        [&](const auto& m) -> std::int64_t {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, MemorylessFiles>) {
                return 0;
            } else if constexpr (std::is_same_v<M, UniformPacketFiles>) {
                return static_cast<std::int64_t>(sample(UniformInt{m.lo, m.hi}, rng));
            } else {
                const double extra = m.mean - 1.0;
                return 1 + poisson(rng, extra, static_cast<std::int64_t>(std::ceil(10.0 * extra)) + 10);
            }
        },
        u.sizes);
}

// Serves user u for one slot under action a; returns true when the file completes.
bool serve(const UserSpec& u, std::size_t a, std::int64_t& packets_left, Rng& rng) {
    const double phi = u.actions[a].phi;
    if (std::holds_alternative<MemorylessFiles>(u.sizes)) return bernoulli(rng, phi);
    if (bernoulli(rng, phi / u.mu)) --packets_left;
    return packets_left <= 0;
}

}  // namespace

SingleUserResult run_single_user(const UserSpec& u, double beta, double V, std::int64_t frames,
                                 std::uint64_t seed, std::int64_t record_every) {
    u.validate();
    if (frames < 1) throw ConfigError("frame count must be >= 1");
    Rng rng = make_rng(seed, 0);
    SingleUserResult res;
    res.Q_bound = single_user_queue_bound(u, V, beta);
    double Q = 0.0;
    double reward = 0.0;
    double power = 0.0;
    std::int64_t slots = 0;
    std::int64_t packets = draw_packets(u, rng);
    for (std::int64_t k = 0; k < frames; ++k) {
        const std::size_t a = single_user_select(u, Q, V);
        std::int64_t T = 1;
        if (serve(u, a, packets, rng)) {
            T += geometric_at_least_one(rng, 1.0 / u.lambda);
            packets = draw_packets(u, rng);
        }
        reward += u.mean_file() * u.actions[a].phi;
        power += u.actions[a].power;
        slots += T;
        Q = single_user_queue_update(Q, u.actions[a].power, T, beta);
        res.max_Q = std::max(res.max_Q, Q);
        if (Q > res.Q_bound + 1e-9) ++res.bound_violations;
        if (should_record(k, frames, record_every)) {
            res.log.add({static_cast<double>(k), reward / static_cast<double>(slots),
                         power / static_cast<double>(slots), Q});
        }
    }
    res.slots = slots;
    res.throughput_avg = reward / static_cast<double>(slots);
    res.power_avg = power / static_cast<double>(slots);
    return res;
}

void BanditConfig::validate() const {
    if (users.empty()) throw ConfigError("bandit instance has no users");
    if (max_active < 1) throw ConfigError("M must be >= 1");
    if (!(beta >= 0.0)) throw ConfigError("beta must be nonnegative");
    for (const auto& u : users) u.validate();
}

BanditState initial_bandit_state(const BanditConfig& cfg, Rng& rng) {
    BanditState s;
    s.file.assign(cfg.users.size(), 1);
    s.packets_left.resize(cfg.users.size());
    for (std::size_t n = 0; n < cfg.users.size(); ++n) s.packets_left[n] = draw_packets(cfg.users[n], rng);
    return s;
}

std::vector<std::size_t> multi_user_decide(const BanditConfig& cfg, const BanditState& s, double V) {
    const std::size_t N = cfg.users.size();
    std::vector<std::size_t> chosen(N, 0);
    std::vector<std::size_t> best_action(N, 0);
    std::vector<double> gamma(N, 0.0);
    std::vector<std::size_t> candidates;
    for (std::size_t n = 0; n < N; ++n) {
        if (!s.file[n]) continue;
        const UserSpec& u = cfg.users[n];
        best_action[n] = argmax_first(u.actions.size(), [&](std::size_t a) {
            return user_index_value(u, a, s.Q, V, u.weight);
        });
        gamma[n] = user_index_value(u, best_action[n], s.Q, V, u.weight);
        candidates.push_back(n);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) { return gamma[a] > gamma[b]; });
    const std::size_t take = std::min(cfg.max_active, candidates.size());
    for (std::size_t i = 0; i < take; ++i) chosen[candidates[i]] = best_action[candidates[i]];
    return chosen;
}

BanditSlot multi_user_step(const BanditConfig& cfg, BanditState& s, double V, Rng& rng) {
    BanditSlot out;
    out.chosen = multi_user_decide(cfg, s, V);
    for (std::size_t n = 0; n < cfg.users.size(); ++n) {
        const UserSpec& u = cfg.users[n];
        if (s.file[n]) {
            const std::size_t a = out.chosen[n];
            out.reward += u.weight * u.mean_file() * u.actions[a].phi;
            out.power += u.actions[a].power;
            if (a != 0 && serve(u, a, s.packets_left[n], rng)) {
                s.file[n] = 0;
                ++out.completions;
            }
        } else if (bernoulli(rng, u.lambda)) {
            s.file[n] = 1;
            s.packets_left[n] = draw_packets(u, rng);
        }
    }
    s.Q = std::max(s.Q + out.power - cfg.beta, 0.0);
    ++s.slot;
    return out;
}

double multi_user_queue_bound(const BanditConfig& cfg, double V) {
    double c_max = 0.0;
    double b_max = 0.0;
    double p_min = std::numeric_limits<double>::infinity();
    double p_sum = 0.0;
    for (const auto& u : cfg.users) {
        c_max = std::max(c_max, u.weight);
        b_max = std::max(b_max, u.mean_file());
        p_min = std::min(p_min, u.min_positive_power());
        p_sum += u.max_power();
    }
    return std::max(V * c_max * b_max / p_min + p_sum - cfg.beta, 0.0);
}

BanditRunResult run_multi_user(const BanditConfig& cfg, double V, std::int64_t horizon,
                               std::uint64_t seed, std::int64_t record_every) {
    cfg.validate();
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    Rng rng = make_rng(seed, 0);
    BanditState s = initial_bandit_state(cfg, rng);
    BanditRunResult res;
    res.Q_bound = multi_user_queue_bound(cfg, V);
    double reward = 0.0;
    double power = 0.0;
    double completions = 0.0;
    for (std::int64_t t = 0; t < horizon; ++t) {
        const BanditSlot slot = multi_user_step(cfg, s, V, rng);
        reward += slot.reward;
        power += slot.power;
        completions += static_cast<double>(slot.completions);
        res.max_Q = std::max(res.max_Q, s.Q);
        if (s.Q > res.Q_bound + 1e-9) ++res.bound_violations;
        if (should_record(t, horizon, record_every)) {
            const double n = static_cast<double>(t + 1);
            res.log.add({static_cast<double>(t), reward / n, power / n, s.Q});
        }
    }
    const double n = static_cast<double>(horizon);
    res.reward_avg = reward / n;
    res.power_avg = power / n;
    res.completions_avg = completions / n;
    return res;
}

BanditConfig table1_config() {
    struct Row {
        double lambda, mu, phi, c, p;
    };
    const Row rows[] = {
        {0.0028, 0.5380, 0.4842, 4.7527, 3.9504}, {0.4176, 0.5453, 0.4908, 2.0681, 3.7391},
        {0.0888, 0.5044, 0.4540, 2.8656, 3.5753}, {0.3181, 0.6103, 0.5493, 2.4605, 2.1828},
        {0.4151, 0.9839, 0.8855, 4.5554, 3.1982}, {0.2546, 0.5975, 0.5377, 3.9647, 3.5290},
        {0.1705, 0.5517, 0.4966, 1.5159, 2.5226}, {0.2109, 0.7597, 0.6837, 3.6364, 2.5376},
    };
    BanditConfig cfg;
    cfg.max_active = 4;
    cfg.beta = 5.0;
    for (const Row& r : rows) {
        UserSpec u;
        u.lambda = r.lambda;
        u.mu = r.mu;
        u.weight = r.c;
        u.actions = {{0.0, 0.0}, {r.phi, r.p}};
        cfg.users.push_back(u);
    }
    return cfg;
}

BanditConfig table2_config() {
    struct Row {
        double mu;
        std::int64_t lo, hi;
        double poisson_mean, lambda, phi, c, p;
    };
    const Row rows[] = {
        {1.0 / 3, 1, 5, 3, 0.4955, 0.1832, 4.3261, 2.8763},
        {1.0 / 2, 1, 3, 2, 0.1181, 0.4187, 1.6827, 2.0549},
        {1.0 / 2, 1, 3, 2, 0.1298, 0.4491, 1.9483, 2.1469},
        {1.0 / 7, 1, 13, 7, 0.4660, 0.0984, 2.7495, 3.4472},
        {1.0 / 4, 1, 7, 4, 0.1661, 0.1742, 1.5535, 3.2801},
        {1.0 / 3, 1, 5, 3, 0.2124, 0.3101, 4.3151, 3.5648},
        {1.0 / 2, 1, 3, 2, 0.5295, 0.4980, 3.6701, 2.4680},
        {1.0 / 5, 1, 9, 5, 0.2228, 0.1971, 4.0185, 2.2984},
        {1.0 / 4, 1, 7, 4, 0.0332, 0.1986, 3.0411, 2.5747},
    };
    BanditConfig cfg;
    cfg.max_active = 4;
    cfg.beta = 5.0;
    for (const Row& r : rows) {
        UserSpec u;
        u.lambda = r.lambda;
        u.mu = r.mu;
        u.weight = r.c;
        u.actions = {{0.0, 0.0}, {r.phi, r.p}};
        u.sizes = UniformPacketFiles{r.lo, r.hi};
        cfg.users.push_back(u);
    }
    return cfg;
}

std::vector<FactorMdp> bandit_factor_mdps(const BanditConfig& cfg) {
    cfg.validate();
    std::vector<FactorMdp> out;
    for (const auto& u : cfg.users) {
        const std::size_t A = u.actions.size();
        FactorMdp f;
        f.mdp.states = 2;
        f.mdp.actions = A;
        f.reward.assign(2, std::vector<double>(A, 0.0));
        f.costs.assign(1, Matrix(2, std::vector<double>(A, 0.0)));
        f.allowed.assign(2, std::vector<char>(A, 0));
        f.allowed[0][0] = 1;
        for (std::size_t a = 0; a < A; ++a) {
            const double phi = u.actions[a].phi;
            f.mdp.transitions.push_back({{1.0 - u.lambda, u.lambda}, {phi, 1.0 - phi}});
            f.allowed[1][a] = 1;
            f.reward[1][a] = u.weight * u.mean_file() * phi;
            f.costs[0][1][a] = u.actions[a].power;
        }
        out.push_back(std::move(f));
    }
    return out;
}

CoupledMdpResult bandit_lp_optimum(const BanditConfig& cfg, const LpOptions& options) {
    return coupled_mdp_optimal(bandit_factor_mdps(cfg), {cfg.beta}, cfg.max_active, options);
}

std::size_t maxlambda_step(MaxLambdaState& s, const std::vector<double>& lambdas, std::size_t M,
                           Priority priority, Rng& rng) {
    const std::size_t N = lambdas.size();
    if (s.full.size() != N) throw DimensionError("buffer state and rate vector differ in length");
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return priority == Priority::max_lambda ? lambdas[a] > lambdas[b] : lambdas[a] < lambdas[b];
    });
    std::size_t served = 0;
    for (std::size_t n : order) {
        if (served == M) break;
        if (s.full[n]) {
            s.full[n] = 0;
            ++served;
        }
    }
    for (std::size_t n = 0; n < N; ++n) {
        const bool arrival = bernoulli(rng, lambdas[n]);
        if (!s.full[n] && arrival) s.full[n] = 1;
    }
    return served;
}

double run_maxlambda(const std::vector<double>& lambdas, std::size_t M, Priority priority,
                     std::int64_t slots, std::uint64_t seed) {
    for (double l : lambdas) {
        if (!(l > 0.0 && l < 1.0)) throw ConfigError("arrival rates must lie in (0, 1)");
    }
    if (slots < 1) throw ConfigError("slot count must be >= 1");
    Rng rng = make_rng(seed, 0);
    MaxLambdaState s;
    s.full.assign(lambdas.size(), 0);
    std::size_t served = 0;
    for (std::int64_t t = 0; t < slots; ++t) served += maxlambda_step(s, lambdas, M, priority, rng);
    return static_cast<double>(served) / static_cast<double>(slots);
}

double two_queue_markov_throughput(double lambda1, double lambda2, int priority_queue) {
    if (!(lambda1 > 0.0 && lambda1 < 1.0 && lambda2 > 0.0 && lambda2 < 1.0)) {
        throw ConfigError("arrival rates must lie in (0, 1) for an irreducible chain");
    }
    if (priority_queue != 0 && priority_queue != 1) throw ConfigError("priority queue must be 0 or 1");
    const double lam[2] = {lambda1, lambda2};
    // State index 2 * F1 + F2.
    Eigen::Matrix4d P = Eigen::Matrix4d::Zero();
    for (int st = 0; st < 4; ++st) {
        int f[2] = {st >> 1, st & 1};
        const int other = 1 - priority_queue;
        if (f[priority_queue]) f[priority_queue] = 0;
        else if (f[other]) f[other] = 0;
        for (int a1 = 0; a1 < 2; ++a1) {
            for (int a2 = 0; a2 < 2; ++a2) {
                const double p1 = a1 ? lam[0] : 1.0 - lam[0];
                const double p2 = a2 ? lam[1] : 1.0 - lam[1];
                const int n1 = f[0] | a1;
                const int n2 = f[1] | a2;
                P(st, 2 * n1 + n2) += p1 * p2;
            }
        }
    }
    Eigen::Matrix4d M = P.transpose() - Eigen::Matrix4d::Identity();
    M.row(3).setOnes();
    Eigen::Vector4d rhs(0.0, 0.0, 0.0, 1.0);
    const Eigen::Vector4d pi = M.fullPivLu().solve(rhs);
    return pi(1) + pi(2) + pi(3);
}

std::vector<FactorMdp> maxlambda_factor_mdps(const std::vector<double>& lambdas) {
    std::vector<FactorMdp> out;
    for (double l : lambdas) {
        if (!(l > 0.0 && l < 1.0)) throw ConfigError("arrival rates must lie in (0, 1)");
        FactorMdp f;
        f.mdp.states = 2;
        f.mdp.actions = 2;
        f.mdp.transitions = {{{1.0 - l, l}, {0.0, 1.0}}, {{1.0 - l, l}, {1.0 - l, l}}};
        f.reward = {{0.0, 0.0}, {0.0, 1.0}};
        f.allowed = {{1, 0}, {1, 1}};
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace renewal
