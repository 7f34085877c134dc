#include "renewal/lp_models.hpp"

#include <algorithm>
#include <functional>

#include "renewal/core.hpp"

namespace renewal {

namespace {

std::size_t metric_dim(const std::vector<RatioAction>& actions, std::size_t L) {
    for (const auto& a : actions) {
        if (a.z.size() != L) {
            throw DimensionError("action metric vector of length " + std::to_string(a.z.size()) +
                                 ", expected " + std::to_string(L));
        }
        if (!(a.T >= 1.0)) throw ConfigError("expected frame length must be >= 1");
    }
    return L;
}

}  // namespace

LpProblem fractional_to_lp(const std::vector<RatioAction>& actions,
                           const std::vector<double>& constraint_rates) {
    if (actions.empty()) throw ConfigError("action set is empty");
    const std::size_t L = metric_dim(actions, constraint_rates.size());
    const std::size_t n = actions.size();
    LpProblem p;
    p.c.resize(n);
    p.A.assign(1, std::vector<double>(n));
    p.b = {1.0};
    p.G.assign(L, std::vector<double>(n));
    p.h.assign(L, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        p.c[i] = actions[i].y;
        p.A[0][i] = actions[i].T;
        for (std::size_t l = 0; l < L; ++l) {
            p.G[l][i] = actions[i].z[l] - constraint_rates[l] * actions[i].T;
        }
    }
    return p;
}

LpProblem coupled_fractional_lp(const std::vector<std::vector<RatioAction>>& systems,
                                const std::vector<double>& constraint_rates) {
    if (systems.empty()) throw ConfigError("no systems");
    const std::size_t L = constraint_rates.size();
    std::size_t n = 0;
    for (const auto& sys : systems) {
        if (sys.empty()) throw ConfigError("a system has an empty action set");
        metric_dim(sys, L);
        n += sys.size();
    }
    LpProblem p;
    p.c.resize(n);
    p.A.assign(systems.size(), std::vector<double>(n, 0.0));
    p.b.assign(systems.size(), 1.0);
    p.G.assign(L, std::vector<double>(n, 0.0));
    p.h = constraint_rates;
    std::size_t col = 0;
    for (std::size_t s = 0; s < systems.size(); ++s) {
        for (const auto& a : systems[s]) {
            p.c[col] = a.y;
            p.A[s][col] = a.T;
            for (std::size_t l = 0; l < L; ++l) p.G[l][col] = a.z[l];
            ++col;
        }
    }
    return p;
}

LpProblem event_fractional_lp(const std::vector<EventActions>& events,
                              const std::vector<double>& budgets) {
    if (events.empty()) throw ConfigError("no events");
    const std::size_t L = budgets.size();
    std::size_t n = 0;
    for (const auto& e : events) {
        if (e.actions.empty()) throw ConfigError("an event has no actions");
        if (e.prob < 0.0) throw ConfigError("event probability must be nonnegative");
        metric_dim(e.actions, L);
        n += e.actions.size();
    }
    const std::size_t scale = n;
    LpProblem p;
    p.c.assign(n + 1, 0.0);
    p.A.assign(events.size() + 1, std::vector<double>(n + 1, 0.0));
    p.b.assign(events.size() + 1, 0.0);
    p.G.assign(L, std::vector<double>(n + 1, 0.0));
    p.h.assign(L, 0.0);
    std::size_t col = 0;
    for (std::size_t e = 0; e < events.size(); ++e) {
        for (const auto& a : events[e].actions) {
            p.c[col] = a.y;
            p.A[e][col] = 1.0;
            p.A[events.size()][col] = a.T;
            for (std::size_t l = 0; l < L; ++l) p.G[l][col] = a.z[l] - budgets[l] * a.T;
            ++col;
        }
        p.A[e][scale] = -events[e].prob;
    }
    p.b[events.size()] = 1.0;
    return p;
}

CoupledMdpResult coupled_mdp_optimal(const std::vector<FactorMdp>& factors,
                                     const std::vector<double>& budgets, std::size_t max_active,
                                     const LpOptions& options, const CoupledMdpLimits& limits) {
    if (factors.empty()) throw ConfigError("no factor MDPs");
    const std::size_t K = factors.size();
    const std::size_t R = budgets.size();
    std::size_t total_states = 1;
    std::vector<std::size_t> radix(K);
    for (std::size_t k = 0; k < K; ++k) {
        const FactorMdp& f = factors[k];
        f.mdp.validate();
        const std::size_t S = f.mdp.states;
        const std::size_t A = f.mdp.actions;
        if (f.reward.size() != S || f.allowed.size() != S || f.costs.size() != R) {
            throw DimensionError("factor MDP reward/cost/allowed tables have the wrong shape");
        }
        for (std::size_t s = 0; s < S; ++s) {
            if (f.reward[s].size() != A || f.allowed[s].size() != A || !f.allowed[s][0]) {
                throw ConfigError("each state needs a reward row and an allowed passive action");
            }
            for (const auto& cost : f.costs) {
                if (cost.size() != S || cost[s].size() != A) {
                    throw DimensionError("factor cost table has the wrong shape");
                }
            }
        }
        radix[k] = S;
        total_states *= S;
        if (total_states > limits.max_composite_states) {
            throw CapacityError("composite state space exceeds " +
                                std::to_string(limits.max_composite_states) + " states");
        }
    }

    auto decode = [&](std::size_t idx, std::vector<std::size_t>& s) {
        for (std::size_t k = K; k-- > 0;) {
            s[k] = idx % radix[k];
            idx /= radix[k];
        }
    };

    // Enumerate admissible joint actions per composite state.
    struct Column {
        std::size_t state;
        std::vector<std::size_t> action;
    };
    std::vector<Column> columns;
    std::vector<std::size_t> s(K);
    std::vector<std::size_t> a(K);
    for (std::size_t idx = 0; idx < total_states; ++idx) {
        decode(idx, s);
        std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t k, std::size_t active) {
            if (k == K) {
                columns.push_back({idx, a});
                if (columns.size() > limits.max_state_action_pairs) {
                    throw CapacityError("composite state-action pairs exceed " +
                                        std::to_string(limits.max_state_action_pairs));
                }
                return;
            }
            for (std::size_t act = 0; act < factors[k].mdp.actions; ++act) {
                if (!factors[k].allowed[s[k]][act]) continue;
                const std::size_t next_active = active + (act != 0 ? 1 : 0);
                if (next_active > max_active) continue;
                a[k] = act;
                rec(k + 1, next_active);
            }
        };
        rec(0, 0);
    }

    const std::size_t n = columns.size();
    CoupledMdpResult result;
    result.composite_states = total_states;
    result.state_action_pairs = n;
    result.constraints = total_states + 1 + R;
    result.variables_with_slack = n + R;

    LpProblem p;
    p.c.assign(n, 0.0);
    p.A.assign(total_states + 1, std::vector<double>(n, 0.0));
    p.b.assign(total_states + 1, 0.0);
    p.b[total_states] = 1.0;
    p.G.assign(R, std::vector<double>(n, 0.0));
    p.h = budgets;

    std::vector<std::size_t> next(K);
    for (std::size_t j = 0; j < n; ++j) {
        const Column& col = columns[j];
        decode(col.state, s);
        double reward = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            reward += factors[k].reward[s[k]][col.action[k]];
            for (std::size_t r = 0; r < R; ++r) p.G[r][j] += factors[k].costs[r][s[k]][col.action[k]];
        }
        p.c[j] = -reward;
        p.A[total_states][j] = 1.0;
        p.A[col.state][j] -= 1.0;
        for (std::size_t nidx = 0; nidx < total_states; ++nidx) {
            decode(nidx, next);
            double prob = 1.0;
            for (std::size_t k = 0; k < K && prob != 0.0; ++k) {
                prob *= factors[k].mdp.prob(s[k], col.action[k], next[k]);
            }
            p.A[nidx][j] += prob;
        }
    }

    const LpSolution sol = solve_lp(p, options);
    result.status = sol.status;
    if (sol.status == LpStatus::optimal) result.value = -sol.objective_value;
    return result;
}

namespace {

struct BlockLayout {
    std::vector<std::size_t> offset;
    std::size_t total = 0;
};

BlockLayout layout_of(const std::vector<PolyhedronTheta>& polys) {
    BlockLayout l;
    for (const auto& p : polys) {
        l.offset.push_back(l.total);
        l.total += p.dim();
    }
    return l;
}

void add_polyhedra_rows(LpProblem& p, const std::vector<PolyhedronTheta>& polys,
                        const BlockLayout& layout, std::size_t width) {
    for (std::size_t k = 0; k < polys.size(); ++k) {
        for (std::size_t r = 0; r < polys[k].eq.size(); ++r) {
            std::vector<double> row(width, 0.0);
            std::copy(polys[k].eq[r].begin(), polys[k].eq[r].end(),
                      row.begin() + static_cast<std::ptrdiff_t>(layout.offset[k]));
            p.A.push_back(std::move(row));
            p.b.push_back(polys[k].rhs[r]);
        }
    }
}

std::size_t coupling_count(const std::vector<PolyhedronTheta>& polys,
                           const std::vector<std::vector<std::vector<double>>>& mean_g) {
    if (mean_g.size() != polys.size()) throw DimensionError("one constraint set per MDP required");
    const std::size_t m = mean_g.empty() ? 0 : mean_g[0].size();
    for (std::size_t k = 0; k < polys.size(); ++k) {
        if (mean_g[k].size() != m) throw DimensionError("MDPs disagree on the constraint count");
        for (const auto& g : mean_g[k]) {
            if (g.size() != polys[k].dim()) throw DimensionError("constraint function has wrong length");
        }
    }
    return m;
}

}  // namespace

StationaryBaseline stationary_baseline(const std::vector<PolyhedronTheta>& polys,
                                       const std::vector<std::vector<double>>& mean_f,
                                       const std::vector<std::vector<std::vector<double>>>& mean_g,
                                       const LpOptions& options) {
    if (polys.empty()) throw ConfigError("no MDPs");
    if (mean_f.size() != polys.size()) throw DimensionError("one penalty function per MDP required");
    const std::size_t m = coupling_count(polys, mean_g);
    const BlockLayout layout = layout_of(polys);
    LpProblem p;
    p.c.assign(layout.total, 0.0);
    for (std::size_t k = 0; k < polys.size(); ++k) {
        if (mean_f[k].size() != polys[k].dim()) throw DimensionError("penalty function has wrong length");
        std::copy(mean_f[k].begin(), mean_f[k].end(),
                  p.c.begin() + static_cast<std::ptrdiff_t>(layout.offset[k]));
    }
    add_polyhedra_rows(p, polys, layout, layout.total);
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> row(layout.total, 0.0);
        for (std::size_t k = 0; k < polys.size(); ++k) {
            std::copy(mean_g[k][i].begin(), mean_g[k][i].end(),
                      row.begin() + static_cast<std::ptrdiff_t>(layout.offset[k]));
        }
        p.G.push_back(std::move(row));
        p.h.push_back(0.0);
    }
    const LpSolution sol = solve_lp(p, options);
    StationaryBaseline out;
    out.status = sol.status;
    if (sol.status != LpStatus::optimal) return out;
    out.value = sol.objective_value;
    for (std::size_t k = 0; k < polys.size(); ++k) {
        const auto first = sol.x.begin() + static_cast<std::ptrdiff_t>(layout.offset[k]);
        out.theta.emplace_back(first, first + static_cast<std::ptrdiff_t>(polys[k].dim()));
    }
    return out;
}

double slater_margin(const std::vector<PolyhedronTheta>& polys,
                     const std::vector<std::vector<std::vector<double>>>& mean_g,
                     const LpOptions& options) {
    if (polys.empty()) throw ConfigError("no MDPs");
    const std::size_t m = coupling_count(polys, mean_g);
    if (m == 0) return 1.0;
    const BlockLayout layout = layout_of(polys);
    // Free margin s = s_plus - s_minus occupies the last two columns.
    const std::size_t width = layout.total + 2;
    const std::size_t sp = layout.total;
    const std::size_t sm = layout.total + 1;
    LpProblem p;
    p.c.assign(width, 0.0);
    p.c[sp] = -1.0;
    p.c[sm] = 1.0;
    add_polyhedra_rows(p, polys, layout, width);
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> row(width, 0.0);
        for (std::size_t k = 0; k < polys.size(); ++k) {
            std::copy(mean_g[k][i].begin(), mean_g[k][i].end(),
                      row.begin() + static_cast<std::ptrdiff_t>(layout.offset[k]));
        }
        row[sp] = 1.0;
        row[sm] = -1.0;
        p.G.push_back(std::move(row));
        p.h.push_back(0.0);
    }
    std::vector<double> cap(width, 0.0);
    cap[sp] = 1.0;
    cap[sm] = -1.0;
    p.G.push_back(std::move(cap));
    p.h.push_back(1.0);
    const LpSolution sol = solve_lp(p, options);
    if (sol.status != LpStatus::optimal) {
        throw SolverError("Slater check LP ended with status " + to_string(sol.status));
    }
    return -sol.objective_value;
}

}  // namespace renewal
