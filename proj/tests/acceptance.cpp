#include "acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "renewal/bandit.hpp"
#include "renewal/coupled.hpp"
#include "renewal/datacenter.hpp"
#include "renewal/harness.hpp"
#include "renewal/lp.hpp"
#include "renewal/ocmdp.hpp"
#include "renewal/online.hpp"

namespace acceptance {

using namespace renewal;

namespace {

std::string fmt(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

CriterionResult timed(int id, const std::string& name, const std::function<bool(std::ostringstream&)>& body) {
    CriterionResult r;
    r.id = id;
    r.name = name;
    std::ostringstream detail;
    const auto start = std::chrono::steady_clock::now();
    try {
        r.passed = body(detail);
    } catch (const std::exception& e) {
        r.passed = false;
        detail << " error: " << e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.detail = detail.str();
    return r;
}

bool within_budget(std::ostringstream& d, double seconds, double budget) {
    const bool ok = seconds < budget;
    d << "; runtime " << fmt(seconds, 3) << " s (budget " << fmt(budget, 3) << " s)";
    return ok;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

}  // namespace

CriterionResult maxlambda_two_queue(const SuiteOptions& o) {
    return timed(1, "Max-lambda two-queue throughput", [&](std::ostringstream& d) {
        const auto start = std::chrono::steady_clock::now();
        const double hi = two_queue_markov_throughput(0.5, 0.25, 0);
        const double lo = two_queue_markov_throughput(0.5, 0.25, 1);
        const double sim = run_maxlambda({0.5, 0.25}, 1, Priority::max_lambda, 1000000, derive_seed(o.seed, 1));
        const bool ok_hi = std::abs(hi - 0.7) <= 1e-9;
        const bool ok_lo = std::abs(lo - 0.6786) <= 5e-4;
        const bool ok_sim = std::abs(sim - 0.7) <= 0.005;
        d << "chain(priority to max) " << fmt(hi, 12) << " vs 0.7 (tol 1e-9)"
          << "; chain(priority to min) " << fmt(lo, 8) << " vs 0.6786 (tol 5e-4)"
          << "; simulated 1e6 slots " << fmt(sim, 6) << " vs 0.7 (tol 0.005)";
        const bool ok_time = within_budget(d, seconds_since(start), 10.0);
        return ok_hi && ok_lo && ok_sim && ok_time;
    });
}

CriterionResult bandit_near_optimality(const SuiteOptions& o) {
    return timed(2, "Multi-user bandit near-optimality (Table I)", [&](std::ostringstream& d) {
        const auto start = std::chrono::steady_clock::now();
        ExperimentConfig cfg;
        cfg.kind = ExperimentKind::bandit;
        cfg.horizon = 200000;
        cfg.replications = 10;
        cfg.seed = derive_seed(o.seed, 2);
        cfg.V = {70.0};
        cfg.V_given = true;
        cfg.instance = {{"table", "I"}};
        cfg.oracle = true;
        RunOptions ro;
        ro.jobs = o.jobs;
        ro.write_outputs = false;
        const RunSummary s = run_experiment(cfg, ro);
        const double reward = s.means[0][0];
        const double opt = *s.oracle;
        const double rel = std::abs(reward - opt) / opt;
        double worst_power = 0.0;
        for (const auto& r : s.runs) worst_power = std::max(worst_power, r.values[1]);
        const double beta = table1_config().beta;
        d << "mean reward " << fmt(reward, 8) << " vs LP " << fmt(opt, 8) << ", relative error "
          << fmt(rel, 3) << " (tol 0.02); worst power " << fmt(worst_power, 6) << " (limit "
          << fmt(beta + 0.05, 4) << ")";
        const bool ok_time = within_budget(d, seconds_since(start), 120.0);
        return rel <= 0.02 && worst_power <= beta + 0.05 && ok_time;
    });
}

CriterionResult deterministic_queue_bounds(const SuiteOptions& o) {
    return timed(3, "Deterministic queue bounds", [&](std::ostringstream& d) {
        const std::vector<double> Vs{1.0, 10.0, 70.0, 200.0};
        const int seeds = 3;
        std::size_t runs = 0, violations = 0;

        std::size_t single_viol = 0;
        const BanditConfig t1 = table1_config();
        for (const auto& u : t1.users) {
            for (double V : Vs) {
                for (int s = 0; s < seeds; ++s) {
                    const SingleUserResult r = run_single_user(u, t1.beta / static_cast<double>(t1.max_active), V, 20000,
                                                               derive_seed(o.seed, 300 + static_cast<std::uint64_t>(s)));
                    single_viol += r.bound_violations;
                    ++runs;
                }
            }
        }
        std::size_t multi_viol = 0;
        for (const BanditConfig& cfg : {table1_config(), table2_config()}) {
            for (double V : Vs) {
                for (int s = 0; s < seeds; ++s) {
                    const BanditRunResult r =
                        run_multi_user(cfg, V, 50000, derive_seed(o.seed, 310 + static_cast<std::uint64_t>(s)));
                    multi_viol += r.bound_violations;
                    ++runs;
                }
            }
        }
        std::size_t dc_viol = 0, dc_other = 0;
        DatacenterConfig dc = homogeneous_cluster(20, 1.0, 1.5, 0.1, 5.0, 10, 1.9, 50, 60.0);
        SyntheticTraceParams tp;
        tp.base_rate = 10.0;
        tp.peak_rate = 35.0;
        tp.cost_lo = 0.5;
        tp.cost_hi = 2.0;
        for (DcPolicy pol : {DcPolicy::n_queue, DcPolicy::virtualized}) {
            for (double V : {1.0, 10.0, 100.0}) {
                for (int s = 0; s < seeds; ++s) {
                    const auto trace = synthetic_trace(20000, tp, derive_seed(o.seed, 320 + static_cast<std::uint64_t>(s)));
                    DcRunOptions opt;
                    opt.policy = pol;
                    const DcRunResult r =
                        run_datacenter(dc, trace, V, 20000, derive_seed(o.seed, 330 + static_cast<std::uint64_t>(s)), opt);
                    dc_viol += r.bound_violations;
                    dc_other += r.admission_violations + r.virtualization_violations;
                    ++runs;
                }
            }
        }
        violations = single_viol + multi_viol + dc_viol + dc_other;
        d << runs << " runs; single-user bound violations " << single_viol << ", multi-user " << multi_viol
          << ", server/virtualized queue " << dc_viol << ", admission/virtualization " << dc_other;
        return violations == 0;
    });
}

CriterionResult coupled_energy(const SuiteOptions& o) {
    return timed(4, "Coupled energy scheduling (Table 1)", [&](std::ostringstream& d) {
        const auto start = std::chrono::steady_clock::now();
        const CoupledSystemSpec spec = energy_scheduling_spec();
        const double opt = coupled_lp_optimum(spec);
        const std::vector<double> lambda = {2.0, 3.0, 4.0};
        const int seeds = 5;
        double worst_gap = 0.0, worst_service_margin = 1e300, worst_increase = -1e300;
        bool ok = true;
        for (int s = 0; s < seeds; ++s) {
            const std::uint64_t seed = derive_seed(o.seed, 400 + static_cast<std::uint64_t>(s));
            const CoupledRunResult lo = run_coupled(spec, 1.0, 200000, seed);
            const CoupledRunResult hi = run_coupled(spec, 100.0, 200000, seed);
            const double gap = std::abs(hi.penalty_avg - opt) / opt;
            worst_gap = std::max(worst_gap, gap);
            for (std::size_t l = 0; l < lambda.size(); ++l) {
                worst_service_margin = std::min(worst_service_margin, hi.metric_avg[l] - (lambda[l] - 0.05));
            }
            const double increase = (hi.penalty_avg - lo.penalty_avg) / lo.penalty_avg;
            worst_increase = std::max(worst_increase, increase);
        }
        ok = worst_gap <= 0.05 && worst_service_margin >= 0.0 && worst_increase <= 0.01;
        d << "LP optimum " << fmt(opt, 8) << "; worst |energy(V=100) - LP|/LP " << fmt(worst_gap, 3)
          << " (tol 0.05); min service - (lambda - 0.05) " << fmt(worst_service_margin, 4)
          << "; worst relative change energy(V=100) vs energy(V=1) " << fmt(worst_increase, 3)
          << " (must be <= 0.01)";
        const bool ok_time = within_budget(d, seconds_since(start), 60.0);
        return ok && ok_time;
    });
}

CriterionResult online_renewal(const SuiteOptions& o) {
    return timed(5, "Online renewal file download", [&](std::ostringstream& d) {
        const auto start = std::chrono::steady_clock::now();
        bool ok = true;
        for (DownloadPenalty pen : {DownloadPenalty::literal, DownloadPenalty::complement}) {
            const EventModel model = file_download_example(pen);
            const double opt = online_lp_optimum(model);
            const OnlineRunResult r = run_online(model, 300.0, 0.6, 200000, derive_seed(o.seed, 500));
            const double err = std::abs(r.penalty_avg - opt);
            const bool pen_ok = err <= 0.1 * std::abs(opt);
            const bool res_ok = r.resource_avg[0] <= 1.05;
            ok = ok && pen_ok && res_ok;
            d << (pen == DownloadPenalty::literal ? "alpha*s penalty: " : "; (1-alpha)*s penalty: ")
              << "penalty " << fmt(r.penalty_avg, 6) << " vs LP " << fmt(opt, 6) << " (tol 10%), resource "
              << fmt(r.resource_avg[0], 5) << " (limit 1.05)";
        }
        const bool ok_time = within_budget(d, seconds_since(start), 60.0);
        return ok && ok_time;
    });
}

CriterionResult ocmdp_scaling(const SuiteOptions& o) {
    return timed(6, "OCMDP regret and violation scaling", [&](std::ostringstream& d) {
        const auto start = std::chrono::steady_clock::now();
        const OcmdpInstance inst = scaling_instance();
        const double slater = ocmdp_slater_margin(inst);
        const OcmdpBaseline base = ocmdp_baseline(inst);
        const std::vector<std::int64_t> Ts{2500, 10000, 40000};
        const int seeds = 5;
        std::vector<double> regret(Ts.size(), 0.0), viol(Ts.size(), 0.0);
        double worst_membership = 0.0;
        for (std::size_t i = 0; i < Ts.size(); ++i) {
            const double T = static_cast<double>(Ts[i]);
            for (int s = 0; s < seeds; ++s) {
                const OcmdpRunLog log = run_ocmdp(inst, std::sqrt(T), T, Ts[i],
                                                  derive_seed(o.seed, 600 + static_cast<std::uint64_t>(s)));
                const RegretReport rep = measure_regret(log, base);
                regret[i] += rep.regret / seeds;
                viol[i] += rep.violations[0] / seeds;
                worst_membership = std::max(worst_membership, log.max_membership_residual);
            }
        }
        bool ok = slater > 0.0 && worst_membership <= 1e-8;
        d << "Slater margin " << fmt(slater, 4) << "; mean regret";
        for (std::size_t i = 0; i < Ts.size(); ++i) d << " T=" << Ts[i] << ":" << fmt(regret[i], 5);
        d << "; mean violation";
        for (std::size_t i = 0; i < Ts.size(); ++i) d << " T=" << Ts[i] << ":" << fmt(viol[i], 5);
        d << "; ratios";
        for (std::size_t i = 1; i < Ts.size(); ++i) {
            const double rr = regret[i] / regret[i - 1];
            const double vr = viol[i] / viol[i - 1];
            ok = ok && regret[i - 1] > 0.0 && viol[i - 1] > 0.0 && rr <= 2.5 && vr <= 2.5;
            d << " regret " << fmt(rr, 4) << ", violation " << fmt(vr, 4);
        }
        d << " (limit 2.5); worst membership residual " << fmt(worst_membership, 3) << " (tol 1e-8)";
        const bool ok_time = within_budget(d, seconds_since(start), 300.0);
        return ok && ok_time;
    });
}

CriterionResult projection_correctness(const SuiteOptions& o) {
    return timed(7, "Projection onto the state-action polyhedron", [&](std::ostringstream& d) {
        Rng rng = make_rng(o.seed, 700);
        std::mt19937_64 xr(derive_seed(o.seed, 701));
        std::uniform_real_distribution<double> coord(-0.6, 1.2);
        double worst_grid = 0.0, worst_idem = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const MdpSpec mdp = random_mdp(2, 2, rng);
            const PolyhedronTheta poly = build_polyhedron(mdp);
            std::vector<double> x(4);
            for (auto& v : x) v = coord(xr);
            const ThetaProjector proj(poly);
            const std::vector<double> p = proj.project(x);
            const std::vector<double> pp = proj.project(p);
            const std::vector<double> g = oracle::grid_projection_4d(poly.eq, poly.rhs, x);
            for (std::size_t j = 0; j < 4; ++j) {
                worst_grid = std::max(worst_grid, std::abs(p[j] - g[j]));
                worst_idem = std::max(worst_idem, std::abs(pp[j] - p[j]));
            }
        }
        d << "100 random 2x2 instances; worst deviation from grid minimizer " << fmt(worst_grid, 3)
          << " (tol 1e-4); worst idempotence gap " << fmt(worst_idem, 3) << " (tol 1e-9)";
        return worst_grid <= 1e-4 && worst_idem <= 1e-9;
    });
}

CriterionResult lp_solver_correctness(const SuiteOptions& o) {
    return timed(8, "LP solver against basic-solution enumeration", [&](std::ostringstream& d) {
        std::mt19937_64 rng(derive_seed(o.seed, 800));
        std::uniform_int_distribution<int> nvar(2, 8), neq(0, 2), nin(0, 2);
        int count = 0, mismatches = 0;
        double worst = 0.0;
        for (int trial = 0; trial < 400; ++trial) {
            const auto n = static_cast<std::size_t>(nvar(rng));
            const auto me = static_cast<std::size_t>(std::min(neq(rng), static_cast<int>(n) - 1));
            const auto mi = static_cast<std::size_t>(nin(rng));
            const LpProblem p = oracle::random_feasible_lp(rng, n, me, mi, trial % 2 == 1);
            if (p.c.size() + p.G.size() > 12) continue;
            const std::optional<double> ref = oracle::bfs_enumeration(p);
            const LpSolution sol = solve_lp(p);
            ++count;
            if (!ref || sol.status != LpStatus::optimal) {
                ++mismatches;
                continue;
            }
            const double err = std::abs(sol.objective_value - *ref);
            worst = std::max(worst, err);
            if (err > 1e-8) ++mismatches;
        }
        d << count << " random LPs with <= 12 columns; mismatches " << mismatches << "; worst |simplex - enumeration| "
          << fmt(worst, 3) << " (tol 1e-8)";
        return mismatches == 0 && count > 0;
    });
}

std::vector<CriterionResult> run_acceptance(const SuiteOptions& o) {
    return {maxlambda_two_queue(o), bandit_near_optimality(o), deterministic_queue_bounds(o), coupled_energy(o),
            online_renewal(o),      ocmdp_scaling(o),          projection_correctness(o),     lp_solver_correctness(o)};
}

std::vector<CriterionResult> run_invariants(const SuiteOptions& o) {
    std::vector<CriterionResult> out;
    out.push_back(timed(1, "Replication fan-out matches serial execution", [&](std::ostringstream& d) {
        ExperimentConfig cfg;
        cfg.kind = ExperimentKind::coupled_energy;
        cfg.horizon = 5000;
        cfg.replications = 4;
        cfg.seed = o.seed;
        cfg.V = {1.0, 50.0};
        cfg.V_given = true;
        RunOptions serial;
        serial.jobs = 1;
        serial.write_outputs = false;
        RunOptions parallel;
        parallel.jobs = std::max(o.jobs, 2);
        parallel.write_outputs = false;
        const RunSummary a = run_experiment(cfg, serial);
        const RunSummary b = run_experiment(cfg, parallel);
        const bool same = a.means == b.means;
        d << "aggregates " << (same ? "bit-identical" : "differ");
        return same;
    }));
    out.push_back(timed(2, "Runs are deterministic for a fixed seed", [&](std::ostringstream& d) {
        const BanditRunResult a = run_multi_user(table1_config(), 20.0, 20000, o.seed, 1000);
        const BanditRunResult b = run_multi_user(table1_config(), 20.0, 20000, o.seed, 1000);
        const OcmdpRunLog x = run_ocmdp(scaling_instance(), 30.0, 900.0, 900, o.seed, {true, 50, 0.0});
        const OcmdpRunLog y = run_ocmdp(scaling_instance(), 30.0, 900.0, 900, o.seed, {false, 50, 0.0});
        const bool ok = a.log.rows == b.log.rows && x.log.rows == y.log.rows && x.f_sum == y.f_sum;
        d << "bandit logs " << (a.log.rows == b.log.rows ? "equal" : "differ") << "; OCMDP parallel vs serial "
          << (x.log.rows == y.log.rows && x.f_sum == y.f_sum ? "equal" : "differ");
        return ok;
    }));
    out.push_back(timed(3, "Renewal frames partition each timeline", [&](std::ostringstream& d) {
        const std::int64_t horizon = 30000;
        const CoupledRunResult r = run_coupled(energy_scheduling_spec(), 10.0, horizon, o.seed);
        bool ok = true;
        for (std::size_t n = 0; n < r.frames_completed.size(); ++n) {
            ok = ok && r.slots_in_completed_frames[n] + r.slots_in_open_frame[n] == horizon;
        }
        d << "completed + open frame slots equal the horizon for all " << r.frames_completed.size() << " servers";
        return ok;
    }));
    out.push_back(timed(4, "Queue bounds on short horizons", [&](std::ostringstream& d) {
        std::size_t viol = 0;
        for (double V : {1.0, 50.0}) {
            viol += run_multi_user(table2_config(), V, 10000, o.seed).bound_violations;
            const DatacenterConfig dc = homogeneous_cluster(10, 1.0, 1.5, 0.1, 5.0, 10, 1.9, 30, 40.0);
            SyntheticTraceParams tp;
            tp.base_rate = 5.0;
            tp.peak_rate = 20.0;
            const auto trace = synthetic_trace(5000, tp, o.seed);
            DcRunOptions opt;
            opt.policy = DcPolicy::virtualized;
            const DcRunResult r = run_datacenter(dc, trace, V, 5000, o.seed, opt);
            viol += r.bound_violations + r.admission_violations + r.virtualization_violations;
        }
        d << "violations " << viol;
        return viol == 0;
    }));
    return out;
}

std::string format_line(const CriterionResult& r) {
    std::ostringstream os;
    os << (r.passed ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": " << r.detail << " ("
       << fmt(r.seconds, 3) << " s)";
    return os.str();
}

}  // namespace acceptance
