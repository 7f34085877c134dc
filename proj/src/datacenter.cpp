#include "renewal/datacenter.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

namespace renewal {

double SleepMode::setup_variance() const {
    const double p = 1.0 / setup_mean;
    return (1.0 - p) / (p * p);
}

ZipfService ZipfService::make(int K, double exponent) {
    if (K < 1) throw ConfigError("Zipf support size must be >= 1");
    if (!std::isfinite(exponent)) throw ConfigError("Zipf exponent must be finite");
    ZipfService z;
    z.K = K;
    z.exponent = exponent;
    double total = 0.0;
    for (int k = 1; k <= K; ++k) total += std::pow(static_cast<double>(k), -exponent);
    double acc = 0.0;
    for (int k = 1; k <= K; ++k) {
        acc += std::pow(static_cast<double>(k), -exponent) / total;
        z.cdf.push_back(acc);
    }
    z.cdf.back() = 1.0;
    return z;
}

double ZipfService::mean() const {
    double m = 0.0;
    double prev = 0.0;
    for (int k = 1; k <= K; ++k) {
        m += k * (cdf[static_cast<std::size_t>(k - 1)] - prev);
        prev = cdf[static_cast<std::size_t>(k - 1)];
    }
    return m;
}

double service_mean(const ServiceDist& d) {
    if (const auto* c = std::get_if<ConstantService>(&d)) return c->rate;
    return std::get<ZipfService>(d).mean();
}

double service_max(const ServiceDist& d) {
    if (const auto* c = std::get_if<ConstantService>(&d)) return c->rate;
    return static_cast<double>(std::get<ZipfService>(d).K);
}

double sample_service(const ServiceDist& d, Rng& rng) {
    if (const auto* c = std::get_if<ConstantService>(&d)) return c->rate;
    const auto& z = std::get<ZipfService>(d);
    const double u = uniform01(rng);
    const auto it = std::upper_bound(z.cdf.begin(), z.cdf.end(), u);
    return static_cast<double>(std::min<std::ptrdiff_t>(it - z.cdf.begin(), z.K - 1) + 1);
}

void ServerConfig::validate() const {
    if (!(active_power >= 0.0)) throw ConfigError("active power must be nonnegative");
    if (I_max < 1) throw ConfigError("I_max must be >= 1");
    if (const auto* z = std::get_if<ZipfService>(&service); z && z->cdf.size() != static_cast<std::size_t>(z->K)) {
        throw ConfigError("Zipf service must be built with ZipfService::make");
    }
    if (!(service_mean(service) > 0.0)) throw ConfigError("service rate must be positive");
    for (const auto& m : modes) {
        if (!(m.setup_mean >= 1.0)) throw ConfigError("setup mean must be >= 1");
        if (!(m.idle_power >= 0.0) || !(m.setup_power >= 0.0)) {
            throw ConfigError("sleep-mode powers must be nonnegative");
        }
    }
}

void DatacenterConfig::validate() const {
    if (servers.empty()) throw ConfigError("data center has no servers");
    if (!(R_max > 0.0)) throw ConfigError("R_max must be positive");
    if (min_active > servers.size()) throw ConfigError("min_active exceeds the server count");
    if (!(initial_queue >= 0.0)) throw ConfigError("initial queue must be nonnegative");
    for (const auto& s : servers) s.validate();
}

double DatacenterConfig::mu_max() const {
    double m = 0.0;
    for (const auto& s : servers) m = std::max(m, service_max(s.service));
    return m;
}

double DatacenterConfig::b0() const { return 0.5 * (R_max + mu_max()) * mu_max(); }

void validate_trace(const std::vector<TraceRecord>& trace) {
    if (trace.empty()) throw InputError("trace is empty");
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const TraceRecord& r = trace[i];
        if (r.slot != static_cast<std::int64_t>(i)) {
            throw InputError("trace slot " + std::to_string(r.slot) + " at row " + std::to_string(i) +
                             " breaks the contiguous numbering from 0");
        }
        if (r.arrivals < 0) throw InputError("negative arrivals at slot " + std::to_string(r.slot));
        if (!(r.cost > 0.0) || !std::isfinite(r.cost)) {
            throw InputError("reject cost must be positive at slot " + std::to_string(r.slot));
        }
    }
}

std::vector<TraceRecord> synthetic_trace(std::int64_t horizon, const SyntheticTraceParams& params,
                                         std::uint64_t seed) {
    if (horizon < 1) throw ConfigError("trace horizon must be >= 1");
    if (params.base_rate < 0.0 || params.peak_rate < 0.0) throw ConfigError("rates must be nonnegative");
    if (!(params.cost_lo > 0.0) || params.cost_hi < params.cost_lo) {
        throw ConfigError("cost range must satisfy 0 < lo <= hi");
    }
    Rng rng = make_rng(seed, 0);
    const auto steady = static_cast<std::int64_t>(std::floor(params.steady_fraction * static_cast<double>(horizon)));
    std::vector<TraceRecord> out;
    out.reserve(static_cast<std::size_t>(horizon));
    for (std::int64_t t = 0; t < horizon; ++t) {
        double rate = params.base_rate;
        if (t >= steady && horizon > steady) {
            const double frac = static_cast<double>(t - steady + 1) / static_cast<double>(horizon - steady);
            rate = params.base_rate + frac * (params.peak_rate - params.base_rate);
        }
        const auto cap = static_cast<std::int64_t>(std::ceil(10.0 * rate)) + 10;
        TraceRecord r;
        r.slot = t;
        r.arrivals = poisson(rng, rate, cap);
        r.cost = params.cost_lo + (params.cost_hi - params.cost_lo) * uniform01(rng);
        out.push_back(r);
    }
    return out;
}

std::string trace_to_csv(const std::vector<TraceRecord>& trace) {
    std::string out = "slot,arrivals,cost\n";
    for (const auto& r : trace) {
        out += std::to_string(r.slot) + "," + std::to_string(r.arrivals) + "," + format_double(r.cost) + "\n";
    }
    return out;
}

std::vector<TraceRecord> trace_from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw InputError("trace file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "slot,arrivals,cost") {
        throw InputError("line 1: expected header 'slot,arrivals,cost', got '" + line + "'");
    }
    std::vector<TraceRecord> out;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b, c, extra;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c, ',') ||
            std::getline(ls, extra, ',')) {
            throw InputError("line " + std::to_string(line_no) + ": expected 3 fields");
        }
        TraceRecord r;
        try {
            std::size_t ua = 0, ub = 0, uc = 0;
            r.slot = std::stoll(a, &ua);
            r.arrivals = std::stoll(b, &ub);
            r.cost = std::stod(c, &uc);
            if (ua != a.size() || ub != b.size() || uc != c.size()) throw std::invalid_argument(line);
        } catch (const std::exception&) {
            throw InputError("line " + std::to_string(line_no) + ": malformed record '" + line + "'");
        }
        out.push_back(r);
    }
    validate_trace(out);
    return out;
}

Admission admission_decide(double lambda, double cost, std::span<const double> queues, double V,
                           double R_max) {
    Admission a;
    a.routing.assign(queues.size(), 0.0);
    std::size_t best = queues.size();
    for (std::size_t n = 0; n < queues.size(); ++n) {
        if (queues[n] <= V * cost && (best == queues.size() || queues[n] < queues[best])) best = n;
    }
    if (best == queues.size()) {
        a.reject = lambda;
        return a;
    }
    a.routing[best] = std::min(lambda, R_max);
    a.reject = std::max(lambda - R_max, 0.0);
    return a;
}

double dpp_active_value(const ServerConfig& cfg, double q, double V) {
    return V * cfg.active_power - q * service_mean(cfg.service);
}

double dpp_idle_value(const ServerConfig& cfg, std::size_t mode, std::int64_t idle_len, double q,
                      double V, double B0) {
    const SleepMode& m = cfg.modes.at(mode);
    const double x = static_cast<double>(idle_len) + m.setup_mean + 1.0;
    const double num = V * m.setup_power * m.setup_mean + V * cfg.active_power -
                       q * service_mean(cfg.service) + 0.5 * B0 * m.setup_variance() +
                       V * m.idle_power * static_cast<double>(idle_len);
    return num / x + 0.5 * B0 * x;
}

ServerDecision server_frame_decide(const ServerConfig& cfg, double q, double V, double B0) {
    ServerDecision best;
    best.active = true;
    best.value = dpp_active_value(cfg, q, V);
    for (std::size_t mode = 0; mode < cfg.modes.size(); ++mode) {
        const SleepMode& m = cfg.modes[mode];
        const double C = V * m.setup_power * m.setup_mean + V * cfg.active_power -
                         q * service_mean(cfg.service) + 0.5 * B0 * m.setup_variance();
        const double A = C - V * m.idle_power * (m.setup_mean + 1.0);
        std::vector<std::int64_t> candidates{1};
        if (A > 0.0) {
            if (B0 > 0.0) {
                const double i_star = std::sqrt(2.0 * A / B0) - m.setup_mean - 1.0;
                for (double v : {std::floor(i_star), std::ceil(i_star)}) {
                    const double clipped = std::clamp(v, 1.0, static_cast<double>(cfg.I_max));
                    candidates.push_back(static_cast<std::int64_t>(clipped));
                }
            } else {
                candidates.push_back(cfg.I_max);
            }
        }
        std::sort(candidates.begin(), candidates.end());
        for (std::int64_t I : candidates) {
            const double v = dpp_idle_value(cfg, mode, I, q, V, B0);
            if (v < best.value) {
                best.active = false;
                best.mode = mode;
                best.idle_len = I;
                best.value = v;
            }
        }
    }
    return best;
}

DcPolicy parse_policy(const std::string& name) {
    if (name == "n-queue") return DcPolicy::n_queue;
    if (name == "virtualized") return DcPolicy::virtualized;
    if (name == "always-on") return DcPolicy::always_on;
    if (name == "reactive") return DcPolicy::reactive;
    throw ConfigError("unknown data-center policy '" + name + "'");
}

std::string to_string(DcPolicy p) {
    switch (p) {
        case DcPolicy::n_queue: return "n-queue";
        case DcPolicy::virtualized: return "virtualized";
        case DcPolicy::always_on: return "always-on";
        case DcPolicy::reactive: return "reactive";
    }
    return "unknown";
}

namespace {

enum class Phase { frame_start, idle, setup, active, off };

struct ServerState {
    Phase phase = Phase::frame_start;
    std::size_t mode = 0;
    std::int64_t idle_left = 0;
    std::int64_t setup_left = 0;
};

double sleep_power(const ServerConfig& s) { return s.modes.empty() ? 0.0 : s.modes[0].idle_power; }
double setup_power(const ServerConfig& s) { return s.modes.empty() ? 0.0 : s.modes[0].setup_power; }
double setup_mean(const ServerConfig& s) { return s.modes.empty() ? 1.0 : s.modes[0].setup_mean; }

}  // namespace

DcRunResult run_datacenter(const DatacenterConfig& cfg, const std::vector<TraceRecord>& trace,
                           double V, std::int64_t horizon, std::uint64_t seed,
                           const DcRunOptions& options) {
    cfg.validate();
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (static_cast<std::int64_t>(trace.size()) < horizon) {
        throw InputError("trace has " + std::to_string(trace.size()) + " slots, horizon needs " +
                         std::to_string(horizon));
    }
    if (!(V > 0.0)) throw ConfigError("V must be positive");
    const std::size_t N = cfg.servers.size();
    const bool algorithmic = options.policy == DcPolicy::n_queue || options.policy == DcPolicy::virtualized;
    Rng rng = make_rng(seed, 0);

    double c_max = 0.0;
    for (std::int64_t t = 0; t < horizon; ++t) c_max = std::max(c_max, trace[static_cast<std::size_t>(t)].cost);

    DcRunResult res;
    res.server_queue_bound = std::max(cfg.initial_queue, V * c_max + cfg.R_max);
    res.actual_queue_bound = static_cast<double>(N) * res.server_queue_bound;
    const double B0 = cfg.b0();

    std::vector<double> Qn(N, algorithmic ? cfg.initial_queue : 0.0);
    double Q = 0.0;
    std::vector<ServerState> st(N);
    std::deque<double> window;
    double window_sum = 0.0;

    if (!algorithmic) {
        for (std::size_t n = 0; n < N; ++n) st[n].phase = Phase::off;
        if (options.policy == DcPolicy::always_on) {
            const std::size_t k = std::max(cfg.min_active,
                                           options.always_on_count == 0 ? N : std::min(options.always_on_count, N));
            for (std::size_t n = 0; n < k; ++n) st[n].phase = Phase::active;
        } else {
            for (std::size_t n = 0; n < cfg.min_active; ++n) st[n].phase = Phase::active;
        }
    }

    double power_sum = 0.0, queue_sum = 0.0, reject_sum = 0.0, served_sum = 0.0, active_sum = 0.0;
    std::vector<char> serving(N, 0);

    for (std::int64_t t = 0; t < horizon; ++t) {
        const TraceRecord& rec = trace[static_cast<std::size_t>(t)];
        const double lambda = static_cast<double>(rec.arrivals);

        // Server decisions at frame starts (algorithmic) or provisioning (baselines).
        if (algorithmic) {
            for (std::size_t n = 0; n < N; ++n) {
                ServerState& s = st[n];
                if (s.phase != Phase::frame_start) continue;
                if (n < cfg.min_active) {
                    s.phase = Phase::active;
                    continue;
                }
                const ServerDecision d = server_frame_decide(cfg.servers[n], Qn[n], V, B0);
                if (d.active) {
                    s.phase = Phase::active;
                } else {
                    s.phase = Phase::idle;
                    s.mode = d.mode;
                    s.idle_left = d.idle_len;
                    s.setup_left = geometric_at_least_one(rng, cfg.servers[n].modes[d.mode].setup_mean);
                }
            }
        } else if (options.policy == DcPolicy::reactive) {
            window.push_back(lambda);
            window_sum += lambda;
            if (window.size() > options.reactive_window) {
                window_sum -= window.front();
                window.pop_front();
            }
            const double lbar = window_sum / static_cast<double>(window.size());
            const double mu = service_mean(cfg.servers[0].service);
            auto target = static_cast<std::size_t>(
                std::clamp(std::ceil((lbar + options.reactive_margin) / mu), 0.0, static_cast<double>(N)));
            target = std::max(target, cfg.min_active);
            std::size_t on = 0;
            for (const auto& s : st) on += (s.phase == Phase::active || s.phase == Phase::setup) ? 1 : 0;
            for (std::size_t n = 0; n < N && on < target; ++n) {
                if (st[n].phase == Phase::off) {
                    st[n].phase = Phase::setup;
                    st[n].setup_left = geometric_at_least_one(rng, setup_mean(cfg.servers[n]));
                    ++on;
                }
            }
            for (std::size_t n = N; n-- > cfg.min_active && on > target;) {
                if (st[n].phase == Phase::setup) {
                    st[n].phase = Phase::off;
                    --on;
                }
            }
            for (std::size_t n = N; n-- > cfg.min_active && on > target;) {
                if (st[n].phase == Phase::active) {
                    st[n].phase = Phase::off;
                    --on;
                }
            }
        }

        // Per-slot power and which servers serve this slot.
        double power = 0.0;
        std::size_t active_count = 0;
        for (std::size_t n = 0; n < N; ++n) {
            ServerState& s = st[n];
            const ServerConfig& sc = cfg.servers[n];
            serving[n] = 0;
            switch (s.phase) {
                case Phase::idle:
                    power += sc.modes[s.mode].idle_power;
                    break;
                case Phase::setup:
                    power += algorithmic ? sc.modes[s.mode].setup_power : setup_power(sc);
                    break;
                case Phase::active:
                    power += sc.active_power;
                    serving[n] = 1;
                    ++active_count;
                    break;
                case Phase::off:
                    power += sleep_power(sc);
                    break;
                case Phase::frame_start:
                    break;
            }
        }

        // Front end.
        double admitted = lambda;
        std::vector<double> routing(N, 0.0);
        if (algorithmic) {
            const Admission adm = admission_decide(lambda, rec.cost, Qn, V, cfg.R_max);
            const double routed = std::accumulate(adm.routing.begin(), adm.routing.end(), 0.0);
            if (std::abs(routed + adm.reject - lambda) > 1e-9 || routed > cfg.R_max + 1e-9) {
                ++res.admission_violations;
            }
            routing = adm.routing;
            admitted = lambda - adm.reject;
            reject_sum += adm.reject;
        }

        // Service draws, unobserved by the decisions above.
        double service_total = 0.0;
        std::vector<double> service(N, 0.0);
        for (std::size_t n = 0; n < N; ++n) {
            if (serving[n]) {
                service[n] = sample_service(cfg.servers[n].service, rng);
                service_total += service[n];
            }
        }

        // Queue updates.
        if (options.policy == DcPolicy::n_queue) {
            double served = 0.0;
            for (std::size_t n = 0; n < N; ++n) {
                const double before = Qn[n] + routing[n];
                Qn[n] = std::max(before - service[n], 0.0);
                served += before - Qn[n];
            }
            served_sum += served;
            Q = std::accumulate(Qn.begin(), Qn.end(), 0.0);
        } else {
            if (options.policy == DcPolicy::virtualized) {
                for (std::size_t n = 0; n < N; ++n) Qn[n] = std::max(Qn[n] + routing[n] - service[n], 0.0);
            }
            const double before = Q + admitted;
            Q = std::max(before - service_total, 0.0);
            served_sum += before - Q;
        }

        // Bound checks.
        if (algorithmic) {
            for (double q : Qn) {
                res.max_server_queue = std::max(res.max_server_queue, q);
                if (q > res.server_queue_bound + 1e-9) ++res.bound_violations;
            }
            if (options.policy == DcPolicy::virtualized) {
                const double total = std::accumulate(Qn.begin(), Qn.end(), 0.0);
                if (Q > total + 1e-9) ++res.virtualization_violations;
                if (Q > res.actual_queue_bound + 1e-9) ++res.bound_violations;
            }
        }
        res.max_actual_queue = std::max(res.max_actual_queue, Q);

        // Advance server phases.
        for (std::size_t n = 0; n < N; ++n) {
            ServerState& s = st[n];
            if (algorithmic) {
                switch (s.phase) {
                    case Phase::active:
                        s.phase = Phase::frame_start;
                        break;
                    case Phase::idle:
                        if (--s.idle_left == 0) s.phase = Phase::setup;
                        break;
                    case Phase::setup:
                        if (--s.setup_left == 0) s.phase = Phase::active;
                        break;
                    default:
                        break;
                }
            } else if (s.phase == Phase::setup && --s.setup_left == 0) {
                s.phase = Phase::active;
            }
        }

        power_sum += power;
        queue_sum += Q;
        active_sum += static_cast<double>(active_count);
        if (should_record(t, horizon, options.record_every)) {
            res.log.add({static_cast<double>(t), power_sum / static_cast<double>(t + 1), Q,
                         static_cast<double>(active_count)});
        }
    }
    const double n = static_cast<double>(horizon);
    res.power_avg = power_sum / n;
    res.queue_avg = queue_sum / n;
    res.reject_avg = reject_sum / n;
    res.served_avg = served_sum / n;
    res.active_avg = active_sum / n;
    return res;
}

DatacenterConfig homogeneous_cluster(std::size_t N, double active_power, double setup_power,
                                     double idle_power, double setup_mean, int zipf_K,
                                     double zipf_exponent, std::int64_t I_max, double R_max) {
    DatacenterConfig cfg;
    cfg.R_max = R_max;
    ServerConfig s;
    s.active_power = active_power;
    s.service = ZipfService::make(zipf_K, zipf_exponent);
    s.modes = {SleepMode{idle_power, setup_power, setup_mean}};
    s.I_max = I_max;
    cfg.servers.assign(N, s);
    return cfg;
}

}  // namespace renewal
