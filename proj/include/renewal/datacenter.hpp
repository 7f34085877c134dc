#pragma once

// Data-center server provisioning: threshold admission and routing at the
// front end, per-server active/sleep renewal decisions, the single-queue
// virtualized variant, and always-on / reactive baselines.

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "renewal/core.hpp"
#include "renewal/metrics.hpp"

namespace renewal {

struct SleepMode {
    double idle_power = 0.0;   // g(alpha) per idle slot
    double setup_power = 0.0;  // W(alpha) per setup slot
    double setup_mean = 1.0;   // geometric setup time, support >= 1

    double setup_variance() const;
};

struct ConstantService {
    double rate = 1.0;
};

// P(k) proportional to k^(-exponent) for k = 1..K, sampled by inverse CDF.
struct ZipfService {
    int K = 1;
    double exponent = 1.0;
    std::vector<double> cdf;

    static ZipfService make(int K, double exponent);
    double mean() const;
};

using ServiceDist = std::variant<ConstantService, ZipfService>;

double service_mean(const ServiceDist& d);
double service_max(const ServiceDist& d);
double sample_service(const ServiceDist& d, Rng& rng);

struct ServerConfig {
    double active_power = 1.0;  // e_n
    ServiceDist service = ConstantService{1.0};
    std::vector<SleepMode> modes;
    std::int64_t I_max = 1;

    void validate() const;
};

struct DatacenterConfig {
    std::vector<ServerConfig> servers;
    double R_max = 1.0;
    // Servers 0..min_active-1 stay active regardless of the algorithm.
    std::size_t min_active = 0;
    // Initial value of every request queue Q_n (and of the virtual queues).
    double initial_queue = 0.0;

    void validate() const;
    double mu_max() const;
    // B0 = (R_max + mu_max) * mu_max / 2
    double b0() const;
};

struct TraceRecord {
    std::int64_t slot = 0;
    std::int64_t arrivals = 0;
    double cost = 1.0;
};

// Throws InputError when slots are not contiguous from 0, arrivals are
// negative or costs are not positive.
void validate_trace(const std::vector<TraceRecord>& trace);

struct SyntheticTraceParams {
    double base_rate = 50.0;
    double peak_rate = 150.0;
    double steady_fraction = 0.5;  // share of the horizon at base_rate
    double cost_lo = 1.0;
    double cost_hi = 1.0;
};

// Steady phase at base_rate followed by a linear ramp to peak_rate; Poisson
// arrivals and uniform costs.
std::vector<TraceRecord> synthetic_trace(std::int64_t horizon, const SyntheticTraceParams& params,
                                         std::uint64_t seed);

std::string trace_to_csv(const std::vector<TraceRecord>& trace);
std::vector<TraceRecord> trace_from_csv(const std::string& text);

struct Admission {
    double reject = 0.0;
    std::vector<double> routing;
};

Admission admission_decide(double lambda, double cost, std::span<const double> queues, double V,
                           double R_max);

struct ServerDecision {
    bool active = true;
    std::size_t mode = 0;
    std::int64_t idle_len = 0;
    double value = 0.0;
};

double dpp_active_value(const ServerConfig& cfg, double q, double V);
double dpp_idle_value(const ServerConfig& cfg, std::size_t mode, std::int64_t idle_len, double q,
                      double V, double B0);
ServerDecision server_frame_decide(const ServerConfig& cfg, double q, double V, double B0);

enum class DcPolicy { n_queue, virtualized, always_on, reactive };

DcPolicy parse_policy(const std::string& name);
std::string to_string(DcPolicy p);

struct DcRunOptions {
    DcPolicy policy = DcPolicy::n_queue;
    std::size_t always_on_count = 0;  // always-on(k); 0 means all servers
    double reactive_margin = 0.0;     // reactive(p)
    std::size_t reactive_window = 10;
    std::int64_t record_every = 0;
};

struct DcRunResult {
    double power_avg = 0.0;
    double queue_avg = 0.0;       // actual backlog (sum of Q_n in N-queue mode)
    double reject_avg = 0.0;
    double served_avg = 0.0;
    double active_avg = 0.0;
    double max_server_queue = 0.0;
    double max_actual_queue = 0.0;
    double server_queue_bound = 0.0;
    double actual_queue_bound = 0.0;
    std::size_t bound_violations = 0;
    std::size_t admission_violations = 0;
    std::size_t virtualization_violations = 0;
    MetricsLog log{{"slot", "power_avg", "queue_len", "active_servers"}};
};

DcRunResult run_datacenter(const DatacenterConfig& cfg, const std::vector<TraceRecord>& trace,
                           double V, std::int64_t horizon, std::uint64_t seed,
                           const DcRunOptions& options = {});

// Homogeneous cluster: Zipf service, one geometric sleep mode.
DatacenterConfig homogeneous_cluster(std::size_t N, double active_power, double setup_power,
                                     double idle_power, double setup_mean, int zipf_K,
                                     double zipf_exponent, std::int64_t I_max, double R_max);

}  // namespace renewal
