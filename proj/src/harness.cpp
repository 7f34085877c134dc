#include "renewal/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <omp.h>

#include "renewal/bandit.hpp"
#include "renewal/coupled.hpp"
#include "renewal/ocmdp.hpp"
#include "renewal/online.hpp"

namespace renewal {

using nlohmann::json;

ExperimentKind parse_kind(const std::string& name) {
    if (name == "coupled-energy") return ExperimentKind::coupled_energy;
    if (name == "datacenter") return ExperimentKind::datacenter;
    if (name == "bandit") return ExperimentKind::bandit;
    if (name == "online-renewal") return ExperimentKind::online_renewal;
    if (name == "ocmdp") return ExperimentKind::ocmdp;
    if (name == "oracle-only") return ExperimentKind::oracle_only;
    throw ConfigError("unknown experiment kind '" + name +
                      "' (expected coupled-energy, datacenter, bandit, online-renewal, ocmdp or "
                      "oracle-only)");
}

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::coupled_energy: return "coupled-energy";
        case ExperimentKind::datacenter: return "datacenter";
        case ExperimentKind::bandit: return "bandit";
        case ExperimentKind::online_renewal: return "online-renewal";
        case ExperimentKind::ocmdp: return "ocmdp";
        case ExperimentKind::oracle_only: return "oracle-only";
    }
    return "unknown";
}

namespace {

// Typed access to a JSON object with errors that carry the key path.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    const json& raw() const { return j_; }
    const std::string& path() const { return path_; }
    std::string at(const std::string& key) const { return path_ + "/" + key; }
    bool has(const std::string& key) const { return j_.contains(key); }

    void require_object() const {
        if (!j_.is_object()) fail(path_.empty() ? "/" : path_, "expected an object");
    }

    void allow_only(std::initializer_list<const char*> keys) const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            bool ok = false;
            for (const char* k : keys) ok = ok || it.key() == k;
            if (!ok) fail(at(it.key()), "unknown key");
        }
    }

    double number(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number()) fail(at(key), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(at(key), "expected a finite number");
        return x;
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t min) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) fail(at(key), "expected an integer");
        const auto x = v.get<std::int64_t>();
        if (x < min) fail(at(key), "must be >= " + std::to_string(min));
        return x;
    }

    std::string string(const std::string& key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_string()) fail(at(key), "expected a string");
        return v.get<std::string>();
    }

    bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_boolean()) fail(at(key), "expected true or false");
        return v.get<bool>();
    }

    std::vector<double> numbers(const std::string& key) const {
        const json& v = j_.at(key);
        if (!v.is_array()) fail(at(key), "expected a list of numbers");
        if (v.empty()) fail(at(key), "sweep list must not be empty");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) fail(at(key) + "/" + std::to_string(i), "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    Node child(const std::string& key) const {
        Node n(j_.at(key), at(key));
        n.require_object();
        return n;
    }

    [[noreturn]] static void fail(const std::string& path, const std::string& what) {
        throw ConfigError(path + ": " + what);
    }

private:
    const json& j_;
    std::string path_;
};

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(),
                                                    text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct Task {
    std::size_t point;
    std::size_t replication;
};

// One simulator kind: metric names, an optional oracle and a per-run body.
struct Runner {
    std::vector<std::string> metrics;
    std::function<ReplicationResult(const SweepPoint&, std::uint64_t seed)> run;
    std::function<double()> oracle;
    std::string oracle_label;
    // Signed relative gap of a replication mean against the oracle.
    std::function<double(const std::vector<double>& means, double oracle)> gap;
};

ReplicationResult make_result(std::vector<double> values, MetricsLog log) {
    ReplicationResult r;
    r.values = std::move(values);
    r.log = std::move(log);
    return r;
}

Runner coupled_runner(const ExperimentConfig& cfg) {
    const Node inst(cfg.instance, "/instance");
    inst.allow_only({"rule"});
    CoupledSystemSpec spec = energy_scheduling_spec();
    try {
        spec.rule = parse_selection_rule(inst.string("rule", "ratio"));
    } catch (const ConfigError& e) {
        Node::fail("/instance/rule", e.what());
    }
    Runner r;
    r.metrics = {"energy_avg"};
    for (std::size_t l = 0; l < spec.L(); ++l) r.metrics.push_back("service_avg_" + std::to_string(l + 1));
    for (std::size_t l = 0; l < spec.L(); ++l) r.metrics.push_back("queue_avg_" + std::to_string(l + 1));
    r.metrics.push_back("max_queue");
    const std::int64_t horizon = cfg.horizon;
    CoupledRunOptions opts;
    opts.record_every = cfg.record_every;
    r.run = [spec, horizon, opts](const SweepPoint& p, std::uint64_t seed) {
        CoupledRunResult res = run_coupled(spec, p.V, horizon, seed, opts);
        std::vector<double> v{res.penalty_avg};
        v.insert(v.end(), res.metric_avg.begin(), res.metric_avg.end());
        v.insert(v.end(), res.queue_avg.begin(), res.queue_avg.end());
        v.push_back(res.max_queue);
        return make_result(std::move(v), std::move(res.log));
    };
    r.oracle = [spec] { return coupled_lp_optimum(spec); };
    r.oracle_label = "coupled fractional LP optimum energy";
    r.gap = [](const std::vector<double>& m, double o) { return (m[0] - o) / o; };
    return r;
}

Runner datacenter_runner(const ExperimentConfig& cfg) {
    const Node inst(cfg.instance, "/instance");
    inst.allow_only({"servers", "active_power", "setup_power", "idle_power", "setup_mean", "zipf_K",
                     "zipf_exponent", "I_max", "R_max", "min_active", "initial_queue", "policy",
                     "always_on_count", "reactive_margin", "reactive_window", "trace", "synthetic"});
    DatacenterConfig dc = homogeneous_cluster(
        static_cast<std::size_t>(inst.integer("servers", 100, 1)), inst.number("active_power", 1.0),
        inst.number("setup_power", 1.5), inst.number("idle_power", 0.1), inst.number("setup_mean", 5.0),
        static_cast<int>(inst.integer("zipf_K", 10, 1)), inst.number("zipf_exponent", 1.9),
        inst.integer("I_max", 50, 1), inst.number("R_max", 200.0));
    dc.min_active = static_cast<std::size_t>(inst.integer("min_active", 0, 0));
    dc.initial_queue = inst.number("initial_queue", 0.0);
    try {
        dc.validate();
    } catch (const ConfigError& e) {
        Node::fail("/instance", e.what());
    }
    DcRunOptions opts;
    try {
        opts.policy = parse_policy(inst.string("policy", "n-queue"));
    } catch (const ConfigError& e) {
        Node::fail("/instance/policy", e.what());
    }
    opts.always_on_count = static_cast<std::size_t>(inst.integer("always_on_count", 0, 0));
    opts.reactive_margin = inst.number("reactive_margin", 0.0);
    opts.reactive_window = static_cast<std::size_t>(inst.integer("reactive_window", 10, 1));
    opts.record_every = cfg.record_every;

    std::vector<TraceRecord> trace;
    SyntheticTraceParams synth;
    const bool from_file = inst.has("trace");
    if (from_file) {
        trace = ingest_trace(inst.string("trace", ""));
        if (static_cast<std::int64_t>(trace.size()) < cfg.horizon) {
            Node::fail("/instance/trace", "trace has " + std::to_string(trace.size()) +
                                              " slots, fewer than the horizon " +
                                              std::to_string(cfg.horizon));
        }
    } else if (inst.has("synthetic")) {
        const Node s = inst.child("synthetic");
        s.allow_only({"base_rate", "peak_rate", "steady_fraction", "cost_lo", "cost_hi"});
        synth.base_rate = s.number("base_rate", synth.base_rate);
        synth.peak_rate = s.number("peak_rate", synth.peak_rate);
        synth.steady_fraction = s.number("steady_fraction", synth.steady_fraction);
        synth.cost_lo = s.number("cost_lo", synth.cost_lo);
        synth.cost_hi = s.number("cost_hi", synth.cost_hi);
    }
    Runner r;
    r.metrics = {"power_avg",        "queue_avg",        "reject_avg",
                 "served_avg",       "active_avg",       "max_server_queue",
                 "max_actual_queue", "bound_violations", "admission_violations",
                 "virtualization_violations"};
    const std::int64_t horizon = cfg.horizon;
    r.run = [dc, opts, trace, synth, from_file, horizon](const SweepPoint& p, std::uint64_t seed) {
        const std::vector<TraceRecord> tr =
            from_file ? trace : synthetic_trace(horizon, synth, derive_seed(seed, 1));
        DcRunResult res = run_datacenter(dc, tr, p.V, horizon, derive_seed(seed, 2), opts);
        return make_result({res.power_avg, res.queue_avg, res.reject_avg, res.served_avg, res.active_avg,
                            res.max_server_queue, res.max_actual_queue,
                            static_cast<double>(res.bound_violations),
                            static_cast<double>(res.admission_violations),
                            static_cast<double>(res.virtualization_violations)},
                           std::move(res.log));
    };
    return r;
}

BanditConfig bandit_instance(const Node& inst) {
    const std::string table = inst.string("table", "I");
    BanditConfig b;
    if (table == "I") {
        b = table1_config();
    } else if (table == "II") {
        b = table2_config();
    } else {
        Node::fail("/instance/table", "expected \"I\" or \"II\"");
    }
    b.max_active = static_cast<std::size_t>(inst.integer("max_active", static_cast<std::int64_t>(b.max_active), 1));
    b.beta = inst.number("beta", b.beta);
    return b;
}

Runner bandit_runner(const ExperimentConfig& cfg) {
    const Node inst(cfg.instance, "/instance");
    inst.allow_only({"table", "max_active", "beta"});
    const BanditConfig b = bandit_instance(inst);
    Runner r;
    r.metrics = {"reward_avg", "power_avg", "completions_avg", "max_Q", "Q_bound", "bound_violations"};
    const std::int64_t horizon = cfg.horizon;
    const std::int64_t every = cfg.record_every;
    r.run = [b, horizon, every](const SweepPoint& p, std::uint64_t seed) {
        BanditRunResult res = run_multi_user(b, p.V, horizon, seed, every);
        return make_result({res.reward_avg, res.power_avg, res.completions_avg, res.max_Q, res.Q_bound,
                            static_cast<double>(res.bound_violations)},
                           std::move(res.log));
    };
    r.oracle = [b] {
        const CoupledMdpResult res = bandit_lp_optimum(b);
        if (res.status != LpStatus::optimal) {
            throw SolverError("bandit LP ended with status " + to_string(res.status));
        }
        return res.value;
    };
    r.oracle_label = "composite-state LP optimum reward";
    r.gap = [](const std::vector<double>& m, double o) { return (o - m[0]) / o; };
    return r;
}

EventModel online_instance(const Node& inst) {
    const std::string pen = inst.string("penalty", "literal");
    if (pen == "literal") return file_download_example(DownloadPenalty::literal);
    if (pen == "complement") return file_download_example(DownloadPenalty::complement);
    Node::fail("/instance/penalty", "expected \"literal\" or \"complement\"");
}

Runner online_runner(const ExperimentConfig& cfg) {
    const Node inst(cfg.instance, "/instance");
    inst.allow_only({"penalty", "theta_max"});
    const EventModel model = online_instance(inst);
    OnlineRunOptions opts;
    opts.theta_max = inst.number("theta_max", 0.0);
    opts.record_every = cfg.record_every;
    Runner r;
    r.metrics = {"penalty_avg"};
    for (std::size_t l = 0; l < model.constraints(); ++l) r.metrics.push_back("resource_avg_" + std::to_string(l + 1));
    r.metrics.insert(r.metrics.end(), {"theta_final", "max_Q", "slots"});
    const std::int64_t frames = cfg.horizon;
    r.run = [model, opts, frames](const SweepPoint& p, std::uint64_t seed) {
        OnlineRunResult res = run_online(model, p.V, p.delta, frames, seed, opts);
        std::vector<double> v{res.penalty_avg};
        v.insert(v.end(), res.resource_avg.begin(), res.resource_avg.end());
        v.insert(v.end(), {res.theta_final, res.max_Q, static_cast<double>(res.slots)});
        return make_result(std::move(v), std::move(res.log));
    };
    r.oracle = [model] { return online_lp_optimum(model); };
    r.oracle_label = "event LP optimum penalty";
    r.gap = [](const std::vector<double>& m, double o) {
        return o == 0.0 ? m[0] : (m[0] - o) / o;
    };
    return r;
}

OcmdpInstance ocmdp_instance(const Node& inst) {
    const std::string type = inst.string("type", "scaling");
    if (type == "scaling") return scaling_instance();
    if (type == "random") {
        return random_ocmdp_instance(static_cast<std::size_t>(inst.integer("K", 2, 1)),
                                     static_cast<std::size_t>(inst.integer("S", 3, 1)),
                                     static_cast<std::size_t>(inst.integer("A", 2, 1)),
                                     static_cast<std::size_t>(inst.integer("m", 1, 0)), inst.number("psi", 1.0),
                                     static_cast<std::uint64_t>(inst.integer("instance_seed", 1, 0)));
    }
    Node::fail("/instance/type", "expected \"scaling\" or \"random\"");
}

Runner ocmdp_runner(const ExperimentConfig& cfg) {
    const Node inst(cfg.instance, "/instance");
    inst.allow_only({"type", "K", "S", "A", "m", "psi", "instance_seed"});
    const OcmdpInstance oc = ocmdp_instance(inst);
    if (ocmdp_slater_margin(oc) <= 1e-9) {
        Node::fail("/instance", "instance fails the Slater check (no strictly feasible stationary policy)");
    }
    const OcmdpBaseline base = ocmdp_baseline(oc);
    if (base.stationary.status != LpStatus::optimal) {
        throw SolverError("OCMDP baseline LP ended with status " + to_string(base.stationary.status));
    }
    Runner r;
    r.metrics = {"regret"};
    for (std::size_t i = 0; i < oc.constraints(); ++i) r.metrics.push_back("violation_" + std::to_string(i + 1));
    r.metrics.insert(r.metrics.end(), {"max_Q", "max_membership_residual", "V_effective", "alpha_effective"});
    const std::int64_t T = cfg.horizon;
    const bool V_given = cfg.V_given;
    const bool alpha_given = cfg.alpha_given;
    OcmdpRunOptions opts;
    opts.record_every = cfg.record_every;
    opts.baseline_value = base.stationary.value;
    opts.parallel = false;
    r.run = [oc, base, T, V_given, alpha_given, opts](const SweepPoint& p, std::uint64_t seed) {
        const double V = V_given ? p.V : std::sqrt(static_cast<double>(T));
        const double alpha = alpha_given ? p.alpha : static_cast<double>(T);
        OcmdpRunLog log = run_ocmdp(oc, V, alpha, T, seed, opts);
        const RegretReport rep = measure_regret(log, base);
        std::vector<double> v{rep.regret};
        v.insert(v.end(), rep.violations.begin(), rep.violations.end());
        v.insert(v.end(), {log.max_Q, log.max_membership_residual, V, alpha});
        return make_result(std::move(v), std::move(log.log));
    };
    const double value = base.stationary.value;
    r.oracle = [value] { return value; };
    r.oracle_label = "stationary baseline penalty per slot";
    const double horizon = static_cast<double>(T);
    r.gap = [horizon](const std::vector<double>& m, double) { return m[0] / horizon; };
    return r;
}

double oracle_only_value(const ExperimentConfig& cfg, std::string& label) {
    const Node inst(cfg.instance, "/instance");
    inst.allow_only({"problem", "lambdas"});
    const std::string problem = inst.string("problem", "coupled-energy");
    label = problem;
    if (problem == "coupled-energy") return coupled_lp_optimum(energy_scheduling_spec());
    if (problem == "bandit-table1" || problem == "bandit-table2") {
        const CoupledMdpResult res =
            bandit_lp_optimum(problem == "bandit-table1" ? table1_config() : table2_config());
        if (res.status != LpStatus::optimal) throw SolverError("bandit LP ended with status " + to_string(res.status));
        return res.value;
    }
    if (problem == "online-literal") return online_lp_optimum(file_download_example(DownloadPenalty::literal));
    if (problem == "online-complement") {
        return online_lp_optimum(file_download_example(DownloadPenalty::complement));
    }
    if (problem == "maxlambda") {
        std::vector<double> lambdas{0.5, 0.25};
        if (inst.has("lambdas")) lambdas = inst.numbers("lambdas");
        const CoupledMdpResult res = coupled_mdp_optimal(maxlambda_factor_mdps(lambdas), {}, 1);
        if (res.status != LpStatus::optimal) throw SolverError("Max-lambda LP ended with status " + to_string(res.status));
        return res.value;
    }
    if (problem == "ocmdp-scaling") {
        const OcmdpBaseline b = ocmdp_baseline(scaling_instance());
        if (b.stationary.status != LpStatus::optimal) throw SolverError("OCMDP baseline LP is not optimal");
        return b.stationary.value;
    }
    Node::fail("/instance/problem",
               "expected coupled-energy, bandit-table1, bandit-table2, online-literal, online-complement, "
               "maxlambda or ocmdp-scaling");
}

Runner make_runner(const ExperimentConfig& cfg) {
    switch (cfg.kind) {
        case ExperimentKind::coupled_energy: return coupled_runner(cfg);
        case ExperimentKind::datacenter: return datacenter_runner(cfg);
        case ExperimentKind::bandit: return bandit_runner(cfg);
        case ExperimentKind::online_renewal: return online_runner(cfg);
        case ExperimentKind::ocmdp: return ocmdp_runner(cfg);
        case ExperimentKind::oracle_only: break;
    }
    throw ConfigError("no simulator for kind " + to_string(cfg.kind));
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config line " + std::to_string(line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1)) +
                          ": malformed JSON (" + e.what() + ")");
    }
    const Node root(j, "");
    root.require_object();
    root.allow_only({"kind", "horizon", "replications", "seed", "sweep", "instance", "oracle", "output",
                     "format", "record_every"});
    ExperimentConfig cfg;
    if (!root.has("kind")) Node::fail("/kind", "missing required key");
    try {
        cfg.kind = parse_kind(root.string("kind", ""));
    } catch (const ConfigError& e) {
        Node::fail("/kind", e.what());
    }
    cfg.horizon = root.integer("horizon", cfg.horizon, 1);
    cfg.replications = static_cast<std::size_t>(root.integer("replications", 1, 1));
    cfg.seed = static_cast<std::uint64_t>(root.integer("seed", 1, 0));
    if (root.has("sweep")) {
        const Node sweep = root.child("sweep");
        sweep.allow_only({"V", "delta", "alpha"});
        if (sweep.has("V")) {
            cfg.V = sweep.numbers("V");
            cfg.V_given = true;
            for (std::size_t i = 0; i < cfg.V.size(); ++i) {
                if (!(cfg.V[i] >= 0.0)) Node::fail("/sweep/V/" + std::to_string(i), "V must be nonnegative");
            }
        }
        if (sweep.has("delta")) cfg.delta = sweep.numbers("delta");
        if (sweep.has("alpha")) {
            cfg.alpha = sweep.numbers("alpha");
            cfg.alpha_given = true;
            for (std::size_t i = 0; i < cfg.alpha.size(); ++i) {
                if (!(cfg.alpha[i] > 0.0)) Node::fail("/sweep/alpha/" + std::to_string(i), "alpha must be positive");
            }
        }
    }
    if (root.has("instance")) cfg.instance = root.child("instance").raw();
    cfg.oracle = root.boolean("oracle", false);
    cfg.output = root.string("output", "");
    try {
        cfg.format = parse_format(root.string("format", "csv"));
    } catch (const std::exception& e) {
        Node::fail("/format", e.what());
    }
    cfg.record_every = root.integer("record_every", 0, 0);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    try {
        return parse_config(read_file(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg) {
    std::vector<SweepPoint> pts;
    for (double V : cfg.V) {
        for (double d : cfg.delta) {
            for (double a : cfg.alpha) pts.push_back({V, d, a});
        }
    }
    return pts;
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t replication) {
    return derive_seed(master, replication);
}

std::vector<std::vector<double>> aggregate(const std::vector<ReplicationResult>& runs,
                                           std::size_t points, std::size_t metrics) {
    std::vector<std::vector<double>> sum(points, std::vector<double>(metrics, 0.0));
    std::vector<std::size_t> count(points, 0);
    for (const auto& r : runs) {
        if (r.point >= points || r.values.size() != metrics) {
            throw DimensionError("replication result does not match the summary layout");
        }
        for (std::size_t i = 0; i < metrics; ++i) sum[r.point][i] += r.values[i];
        ++count[r.point];
    }
    for (std::size_t p = 0; p < points; ++p) {
        if (count[p] == 0) continue;
        for (double& v : sum[p]) v /= static_cast<double>(count[p]);
    }
    return sum;
}

MetricsLog RunSummary::summary_table() const {
    std::vector<std::string> cols{"V", "delta", "alpha", "replications"};
    cols.insert(cols.end(), metric_names.begin(), metric_names.end());
    const bool with_gap = oracle.has_value() && !metric_names.empty();
    if (oracle) cols.push_back("oracle");
    if (with_gap) cols.push_back("oracle_gap");
    MetricsLog log(cols);
    if (metric_names.empty()) {
        std::vector<double> row{std::nan(""), std::nan(""), std::nan(""), 0.0};
        if (oracle) row.push_back(*oracle);
        log.add(row);
        return log;
    }
    std::vector<std::size_t> count(points.size(), 0);
    for (const auto& r : runs) ++count[r.point];
    for (std::size_t p = 0; p < points.size(); ++p) {
        std::vector<double> row{points[p].V, points[p].delta, points[p].alpha, static_cast<double>(count[p])};
        row.insert(row.end(), means[p].begin(), means[p].end());
        if (oracle) row.push_back(*oracle);
        if (with_gap) row.push_back(gaps.empty() ? std::nan("") : gaps[p]);
        log.add(row);
    }
    return log;
}

MetricsLog RunSummary::replication_table() const {
    std::vector<std::string> cols{"point", "replication", "V", "delta", "alpha"};
    cols.insert(cols.end(), metric_names.begin(), metric_names.end());
    MetricsLog log(cols);
    for (const auto& r : runs) {
        const SweepPoint& p = points[r.point];
        std::vector<double> row{static_cast<double>(r.point), static_cast<double>(r.replication), p.V, p.delta,
                                p.alpha};
        row.insert(row.end(), r.values.begin(), r.values.end());
        log.add(row);
    }
    return log;
}

RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    RunSummary out;
    out.kind = cfg.kind;
    out.points = sweep_points(cfg);
    if (cfg.kind == ExperimentKind::oracle_only) {
        out.oracle = oracle_only_value(cfg, out.oracle_label);
    } else {
        const Runner runner = make_runner(cfg);
        out.metric_names = runner.metrics;
        std::vector<Task> tasks;
        for (std::size_t p = 0; p < out.points.size(); ++p) {
            for (std::size_t r = 0; r < cfg.replications; ++r) tasks.push_back({p, r});
        }
        out.runs.resize(tasks.size());
        auto body = [&](std::size_t i) {
            const Task& t = tasks[i];
            const std::uint64_t seed = replication_seed(cfg.seed, t.replication);
            ReplicationResult res = runner.run(out.points[t.point], seed);
            res.point = t.point;
            res.replication = t.replication;
            res.seed = seed;
            out.runs[i] = std::move(res);
        };
        if (options.jobs == 1 || tasks.size() < 2) {
            for (std::size_t i = 0; i < tasks.size(); ++i) body(i);
        } else {
            const int threads = options.jobs > 0 ? options.jobs : omp_get_max_threads();
            std::vector<std::string> errors(tasks.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
            for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(tasks.size()); ++i) {
                try {
                    body(static_cast<std::size_t>(i));
                } catch (const std::exception& e) {
                    errors[static_cast<std::size_t>(i)] = e.what();
                }
            }
            for (const auto& e : errors) {
                if (!e.empty()) throw SolverError("replication failed: " + e);
            }
        }
        out.means = aggregate(out.runs, out.points.size(), out.metric_names.size());
        if (cfg.oracle && runner.oracle) {
            out.oracle = runner.oracle();
            out.oracle_label = runner.oracle_label;
            for (const auto& m : out.means) out.gaps.push_back(runner.gap(m, *out.oracle));
        }
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (options.write_outputs && !cfg.output.empty()) write_summary(out, cfg.output, cfg.format);
    return out;
}

void write_summary(const RunSummary& summary, const std::filesystem::path& dir, MetricsFormat format) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
    const std::string ext = format == MetricsFormat::csv ? ".csv" : ".json";
    write_metrics(summary.summary_table(), dir / ("summary" + ext), format);
    write_metrics(summary.replication_table(), dir / ("replications" + ext), format);
    bool any_log = false;
    for (const auto& r : summary.runs) any_log = any_log || !r.log.empty();
    if (any_log) {
        std::filesystem::create_directories(dir / "runs", ec);
        if (ec) throw InputError("cannot create '" + (dir / "runs").string() + "': " + ec.message());
        for (const auto& r : summary.runs) {
            const std::string name =
                "p" + std::to_string(r.point) + "_r" + std::to_string(r.replication) + ext;
            write_metrics(r.log, dir / "runs" / name, format);
        }
    }
    json timing = {{"kind", to_string(summary.kind)},
                   {"wall_seconds", summary.wall_seconds},
                   {"runs", summary.runs.size()}};
    if (summary.oracle) timing["oracle_label"] = summary.oracle_label;
    std::ofstream os(dir / "timing.json", std::ios::binary);
    if (!os) throw InputError("cannot write '" + (dir / "timing.json").string() + "'");
    os << timing.dump(2) << '\n';
}

std::vector<TraceRecord> ingest_trace(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return trace_from_csv(text);
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

}  // namespace renewal
