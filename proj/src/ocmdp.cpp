#include "renewal/ocmdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <string>

namespace renewal {

namespace {

using Eigen::Index;

Eigen::VectorXd to_eigen(const std::vector<double>& x) {
    return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Index>(x.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& x) {
    return std::vector<double>(x.data(), x.data() + x.size());
}

class Fnv {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= c[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    void size(std::size_t v) {
        const std::uint64_t w = v;
        bytes(&w, sizeof w);
    }
    void real(double v) { bytes(&v, sizeof v); }
    void reals(const std::vector<double>& v) {
        size(v.size());
        for (double x : v) real(x);
    }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::size_t sample_index(const std::vector<double>& probs, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    for (std::size_t i = probs.size(); i-- > 0;) {
        if (probs[i] > 0.0) return i;
    }
    return probs.size() - 1;
}

std::vector<PolyhedronTheta> polyhedra_of(const OcmdpInstance& inst) {
    std::vector<PolyhedronTheta> polys;
    for (const auto& m : inst.mdps) polys.push_back(build_polyhedron(m.mdp));
    return polys;
}

std::vector<std::vector<std::vector<double>>> mean_g_of(const OcmdpInstance& inst) {
    std::vector<std::vector<std::vector<double>>> g;
    for (const auto& m : inst.mdps) g.push_back(m.g_mean);
    return g;
}

}  // namespace

ThetaProjector::ThetaProjector(const PolyhedronTheta& poly) : poly_(poly) {
    const Index rows = static_cast<Index>(poly.eq.size());
    const Index cols = static_cast<Index>(poly.dim());
    E_.resize(rows, cols);
    r_.resize(rows);
    for (Index i = 0; i < rows; ++i) {
        const auto& row = poly.eq[static_cast<std::size_t>(i)];
        if (row.size() != poly.dim()) throw DimensionError("polyhedron row has the wrong length");
        for (Index j = 0; j < cols; ++j) E_(i, j) = row[static_cast<std::size_t>(j)];
        r_(i) = poly.rhs[static_cast<std::size_t>(i)];
    }
    const Eigen::MatrixXd gram = E_ * E_.transpose();
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(gram);
    correction_ = E_.transpose() * cod.pseudoInverse();
}

std::vector<double> ThetaProjector::project_affine(const std::vector<double>& x) const {
    if (x.size() != poly_.dim()) throw DimensionError("point has the wrong dimension");
    const Eigen::VectorXd v = to_eigen(x);
    return to_std(v - correction_ * (E_ * v - r_));
}

double ThetaProjector::affine_residual(const std::vector<double>& x) const {
    if (x.size() != poly_.dim()) throw DimensionError("point has the wrong dimension");
    return (E_ * to_eigen(x) - r_).lpNorm<Eigen::Infinity>();
}

std::vector<double> ThetaProjector::project(const std::vector<double>& x) const {
    return project(x, Options{});
}

std::vector<double> ThetaProjector::project(const std::vector<double>& x, const Options& options,
                                            std::size_t* iterations) const {
    if (x.size() != poly_.dim()) throw DimensionError("point has the wrong dimension");
    for (double v : x) {
        if (!std::isfinite(v)) throw InputError("projection input must be finite");
    }
    const Index n = static_cast<Index>(x.size());
    Eigen::VectorXd cur = to_eigen(x);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
    double residual = 0.0;
    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        const Eigen::VectorXd a = cur + p;
        const Eigen::VectorXd y = a - correction_ * (E_ * a - r_);
        p = a - y;
        const Eigen::VectorXd b = y + q;
        const Eigen::VectorXd next = b.cwiseMax(0.0);
        q = b - next;
        const double step = (next - cur).lpNorm<Eigen::Infinity>();
        cur = next;
        residual = (E_ * cur - r_).lpNorm<Eigen::Infinity>();
        if (step < options.step_tol && residual <= options.affine_tol) {
            if (iterations) *iterations = it;
            return to_std(cur);
        }
    }
    throw SolverError("projection onto the state-action polyhedron did not converge within " +
                      std::to_string(options.max_iterations) +
                      " iterations (affine residual " + format_double(residual) + ")");
}

std::vector<double> project_onto_theta(const PolyhedronTheta& poly, const std::vector<double>& x) {
    return ThetaProjector(poly).project(x);
}

void OcmdpInstance::validate() const {
    if (mdps.empty()) throw ConfigError("OCMDP instance has no MDPs");
    if (!(psi > 0.0)) throw ConfigError("psi must be positive");
    if (!(drift_period > 0.0)) throw ConfigError("drift period must be positive");
    if (!(drift_amplitude >= 0.0)) throw ConfigError("drift amplitude must be nonnegative");
    const std::size_t m = mdps.front().g_mean.size();
    const double tol = 1e-12;
    for (std::size_t k = 0; k < mdps.size(); ++k) {
        const OcmdpMdp& md = mdps[k];
        md.mdp.validate();
        const std::size_t dim = md.mdp.states * md.mdp.actions;
        const std::string who = "MDP " + std::to_string(k);
        if (md.f_mean.size() != dim) throw DimensionError(who + ": penalty table has the wrong size");
        if (md.g_mean.size() != m) throw DimensionError(who + ": constraint count differs between MDPs");
        if (!(md.f_noise >= 0.0) || !(md.g_noise >= 0.0)) throw ConfigError(who + ": noise must be nonnegative");
        for (double v : md.f_mean) {
            if (std::abs(v) * (1.0 + drift_amplitude) + md.f_noise > psi + tol) {
                throw ConfigError(who + ": penalty values can exceed psi");
            }
        }
        for (const auto& gi : md.g_mean) {
            if (gi.size() != dim) throw DimensionError(who + ": constraint table has the wrong size");
            for (double v : gi) {
                if (std::abs(v) + md.g_noise > psi + tol) {
                    throw ConfigError(who + ": constraint values can exceed psi");
                }
            }
        }
    }
}

std::size_t OcmdpInstance::constraints() const {
    return mdps.empty() ? 0 : mdps.front().g_mean.size();
}

std::uint64_t OcmdpInstance::hash() const {
    Fnv h;
    h.size(mdps.size());
    h.real(drift_amplitude);
    h.real(drift_period);
    h.real(psi);
    for (const auto& md : mdps) {
        h.size(md.mdp.states);
        h.size(md.mdp.actions);
        for (const auto& P : md.mdp.transitions) {
            for (const auto& row : P) h.reals(row);
        }
        h.reals(md.f_mean);
        h.size(md.g_mean.size());
        for (const auto& gi : md.g_mean) h.reals(gi);
        h.real(md.f_noise);
        h.real(md.g_noise);
    }
    return h.value();
}

double OcmdpInstance::drift_factor(std::int64_t t) const {
    if (drift_amplitude == 0.0) return 1.0;
    return 1.0 + drift_amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / drift_period);
}

OcmdpBaseline ocmdp_baseline(const OcmdpInstance& inst, const LpOptions& options) {
    inst.validate();
    std::vector<std::vector<double>> f;
    for (const auto& m : inst.mdps) f.push_back(m.f_mean);
    OcmdpBaseline b;
    b.instance_hash = inst.hash();
    b.stationary = stationary_baseline(polyhedra_of(inst), f, mean_g_of(inst), options);
    return b;
}

double ocmdp_slater_margin(const OcmdpInstance& inst, const LpOptions& options) {
    inst.validate();
    return slater_margin(polyhedra_of(inst), mean_g_of(inst), options);
}

SlotFunctions draw_functions(const OcmdpMdp& m, double drift_factor, Rng& rng) {
    SlotFunctions out;
    out.f.resize(m.f_mean.size());
    for (std::size_t j = 0; j < m.f_mean.size(); ++j) {
        out.f[j] = m.f_mean[j] * drift_factor;
        if (m.f_noise > 0.0) out.f[j] += m.f_noise * (2.0 * uniform01(rng) - 1.0);
    }
    out.g.resize(m.g_mean.size());
    for (std::size_t i = 0; i < m.g_mean.size(); ++i) {
        out.g[i].resize(m.g_mean[i].size());
        for (std::size_t j = 0; j < m.g_mean[i].size(); ++j) {
            out.g[i][j] = m.g_mean[i][j];
            if (m.g_noise > 0.0) out.g[i][j] += m.g_noise * (2.0 * uniform01(rng) - 1.0);
        }
    }
    return out;
}

OcmdpState initial_ocmdp_state(const OcmdpInstance& inst, const std::vector<ThetaProjector>& proj) {
    OcmdpState st;
    for (std::size_t k = 0; k < inst.mdps.size(); ++k) {
        const MdpSpec& mdp = inst.mdps[k].mdp;
        std::vector<double> theta = stationary_theta(mdp, uniform_policy(mdp.states, mdp.actions));
        if (membership_residual(proj[k].polyhedron(), theta) > 1e-9) theta = proj[k].project(theta);
        st.theta.push_back(std::move(theta));
        st.s.push_back(0);
    }
    st.Q.assign(inst.constraints(), 0.0);
    return st;
}

void ocmdp_update(const std::vector<ThetaProjector>& proj, OcmdpState& state,
                  const std::vector<SlotFunctions>& previous, double V, double alpha,
                  bool parallel) {
    const std::size_t K = proj.size();
    if (state.theta.size() != K || previous.size() != K) {
        throw DimensionError("state, projectors and functions must cover the same MDPs");
    }
    if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
    const std::size_t m = state.Q.size();
    auto solve_one = [&](std::size_t k) {
        std::vector<double> x = state.theta[k];
        const SlotFunctions& fn = previous[k];
        for (std::size_t j = 0; j < x.size(); ++j) {
            double w = V * fn.f[j];
            for (std::size_t i = 0; i < m; ++i) w += state.Q[i] * fn.g[i][j];
            x[j] -= w / (2.0 * alpha);
        }
        state.theta[k] = proj[k].project(x);
    };
    if (parallel && K > 1) {
        std::string error;
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(K); ++k) {
            try {
                solve_one(static_cast<std::size_t>(k));
            } catch (const std::exception& e) {
#pragma omp critical(ocmdp_error)
                if (error.empty()) error = e.what();
            }
        }
        if (!error.empty()) throw SolverError(error);
    } else {
        for (std::size_t k = 0; k < K; ++k) solve_one(k);
    }
    for (std::size_t i = 0; i < m; ++i) {
        double drift = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const auto& g = previous[k].g[i];
            for (std::size_t j = 0; j < g.size(); ++j) drift += g[j] * state.theta[k][j];
        }
        state.Q[i] = std::max(state.Q[i] + drift, 0.0);
    }
}

OcmdpRunLog run_ocmdp(const OcmdpInstance& inst, double V, double alpha, std::int64_t T,
                      std::uint64_t seed, const OcmdpRunOptions& options) {
    inst.validate();
    if (T < 1) throw ConfigError("horizon must be >= 1");
    if (!(V >= 0.0)) throw ConfigError("V must be nonnegative");
    if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
    const std::size_t K = inst.mdps.size();
    const std::size_t m = inst.constraints();

    std::vector<ThetaProjector> proj;
    for (const auto& md : inst.mdps) proj.emplace_back(build_polyhedron(md.mdp));
    OcmdpState st = initial_ocmdp_state(inst, proj);

    std::vector<std::string> cols{"t", "regret_partial"};
    for (std::size_t i = 0; i < m; ++i) cols.push_back("Q_" + std::to_string(i + 1));
    OcmdpRunLog out;
    out.log = MetricsLog(cols);
    out.instance_hash = inst.hash();
    out.T = T;
    out.g_sum.assign(m, 0.0);

    std::vector<Rng> rngs;
    for (std::size_t k = 0; k < K; ++k) rngs.push_back(make_rng(seed, k));
    std::vector<SlotFunctions> fns(K);
    std::vector<double> f_realized(K, 0.0);
    std::vector<std::vector<double>> g_realized(K, std::vector<double>(m, 0.0));

    auto act = [&](std::size_t k, double drift) {
        const OcmdpMdp& md = inst.mdps[k];
        Rng& rng = rngs[k];
        const Matrix pi = recover_policy(proj[k].polyhedron(), st.theta[k]);
        const std::size_t s = st.s[k];
        const std::size_t a = sample_index(pi[s], rng);
        fns[k] = draw_functions(md, drift, rng);
        const std::size_t j = s * md.mdp.actions + a;
        f_realized[k] = fns[k].f[j];
        for (std::size_t i = 0; i < m; ++i) g_realized[k][i] = fns[k].g[i][j];
        st.s[k] = sample_index(md.mdp.transitions[a][s], rng);
    };

    for (std::int64_t t = 0; t < T; ++t) {
        st.t = t;
        if (t >= 1) ocmdp_update(proj, st, fns, V, alpha, options.parallel);
        for (std::size_t k = 0; k < K; ++k) {
            out.max_membership_residual =
                std::max(out.max_membership_residual, membership_residual(proj[k].polyhedron(), st.theta[k]));
        }
        const double drift = inst.drift_factor(t);
        if (options.parallel && K > 1) {
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(K); ++k) {
                act(static_cast<std::size_t>(k), drift);
            }
        } else {
            for (std::size_t k = 0; k < K; ++k) act(k, drift);
        }
        for (std::size_t k = 0; k < K; ++k) {
            out.f_sum += f_realized[k];
            for (std::size_t i = 0; i < m; ++i) out.g_sum[i] += g_realized[k][i];
        }
        out.drift_factor_sum += drift;
        for (double q : st.Q) out.max_Q = std::max(out.max_Q, q);
        if (should_record(t, T, options.record_every)) {
            std::vector<double> row{static_cast<double>(t),
                                    out.f_sum - out.drift_factor_sum * options.baseline_value};
            row.insert(row.end(), st.Q.begin(), st.Q.end());
            out.log.add(row);
        }
    }
    return out;
}

RegretReport measure_regret(const OcmdpRunLog& log, const OcmdpBaseline& baseline) {
    if (log.instance_hash != baseline.instance_hash) {
        throw InputError("run log and baseline were computed on different instances");
    }
    if (baseline.stationary.status != LpStatus::optimal) {
        throw InputError("baseline LP is not optimal (status " + to_string(baseline.stationary.status) + ")");
    }
    RegretReport r;
    r.regret = log.f_sum - log.drift_factor_sum * baseline.stationary.value;
    r.violations = log.g_sum;
    return r;
}

MdpSpec random_mdp(std::size_t S, std::size_t A, Rng& rng) {
    MdpSpec mdp;
    mdp.states = S;
    mdp.actions = A;
    mdp.transitions.assign(A, Matrix(S, std::vector<double>(S, 0.0)));
    for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t s = 0; s < S; ++s) {
            auto& row = mdp.transitions[a][s];
            double sum = 0.0;
            for (auto& p : row) {
                p = 0.05 + uniform01(rng);
                sum += p;
            }
            for (auto& p : row) p /= sum;
            // Put the rounding remainder on the largest entry so rows sum to 1.
            double acc = 0.0;
            for (double p : row) acc += p;
            *std::max_element(row.begin(), row.end()) += 1.0 - acc;
        }
    }
    return mdp;
}

OcmdpInstance random_ocmdp_instance(std::size_t K, std::size_t S, std::size_t A, std::size_t m,
                                    double psi, std::uint64_t seed) {
    if (K == 0 || S == 0 || A == 0) throw ConfigError("K, S and A must be positive");
    if (!(psi > 0.0)) throw ConfigError("psi must be positive");
    Rng rng = make_rng(seed, 0);
    OcmdpInstance inst;
    inst.psi = psi;
    const double half = 0.5 * psi;
    for (std::size_t k = 0; k < K; ++k) {
        OcmdpMdp md;
        md.mdp = random_mdp(S, A, rng);
        md.f_mean.resize(S * A);
        for (auto& v : md.f_mean) v = half * (2.0 * uniform01(rng) - 1.0);
        md.g_mean.assign(m, std::vector<double>(S * A));
        for (auto& gi : md.g_mean) {
            for (auto& v : gi) v = half * (2.0 * uniform01(rng) - 1.0);
        }
        md.f_noise = half;
        md.g_noise = half;
        inst.mdps.push_back(std::move(md));
    }
    return inst;
}

OcmdpInstance scaling_instance() {
    OcmdpInstance inst;
    inst.psi = 1.0;
    // Action 0 saves penalty and consumes the shared resource, action 1 pays
    // penalty and returns it; actions 2 and 3 are dominated. The first MDP
    // converts resource into savings more efficiently, so the optimum is the
    // vertex (action 0 in MDP 1, action 1 in MDP 2) where the coupling
    // constraint holds with equality.
    const double f_a[2][4] = {{0.0, 0.9, 0.85, 0.85}, {0.0, 0.1, 0.85, 0.85}};
    const double g_a[4] = {0.3, -0.3, 0.85, 0.85};
    const double dominated_bias[3] = {0.0, 0.05, 0.1};
    for (std::size_t k = 0; k < 2; ++k) {
        OcmdpMdp md;
        md.mdp.states = 3;
        md.mdp.actions = 4;
        md.mdp.transitions = {
            {{0.6, 0.3, 0.1}, {0.5, 0.3, 0.2}, {0.4, 0.4, 0.2}},
            {{0.3, 0.4, 0.3}, {0.3, 0.4, 0.3}, {0.2, 0.4, 0.4}},
            {{0.2, 0.3, 0.5}, {0.1, 0.4, 0.5}, {0.1, 0.3, 0.6}},
            {{0.4, 0.2, 0.4}, {0.3, 0.3, 0.4}, {0.4, 0.3, 0.3}},
        };
        md.f_mean.resize(12);
        md.g_mean.assign(1, std::vector<double>(12));
        for (std::size_t s = 0; s < 3; ++s) {
            for (std::size_t a = 0; a < 4; ++a) {
                const double bias = a >= 2 ? dominated_bias[s] : 0.0;
                md.f_mean[s * 4 + a] = f_a[k][a] + bias;
                md.g_mean[0][s * 4 + a] = g_a[a] + bias;
            }
        }
        md.f_noise = 0.01;
        md.g_noise = 0.01;
        inst.mdps.push_back(std::move(md));
    }
    return inst;
}

}  // namespace renewal
