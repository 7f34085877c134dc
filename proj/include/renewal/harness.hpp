#pragma once

// Experiment runner: JSON configs, sweeps, replication fan-out, oracle
// baselines, trace ingestion and summary output.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "renewal/datacenter.hpp"
#include "renewal/metrics.hpp"

namespace renewal {

enum class ExperimentKind { coupled_energy, datacenter, bandit, online_renewal, ocmdp, oracle_only };

ExperimentKind parse_kind(const std::string& name);
std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::coupled_energy;
    std::int64_t horizon = 1;
    std::size_t replications = 1;
    std::uint64_t seed = 1;
    std::vector<double> V{1.0};
    std::vector<double> delta{0.6};
    std::vector<double> alpha{1.0};
    bool V_given = false;
    bool alpha_given = false;
    nlohmann::json instance = nlohmann::json::object();
    bool oracle = false;
    std::string output;  // empty: nothing written
    MetricsFormat format = MetricsFormat::csv;
    std::int64_t record_every = 0;
};

// Throws ConfigError naming the line for malformed JSON and the key path
// (e.g. /sweep/V/1) for schema violations.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct SweepPoint {
    double V = 1.0;
    double delta = 0.6;
    double alpha = 1.0;
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg);

// Seed of replication r: derive_seed(master, r). Sweep points share
// replication seeds, so V comparisons use common random numbers.
std::uint64_t replication_seed(std::uint64_t master, std::size_t replication);

struct ReplicationResult {
    std::size_t point = 0;
    std::size_t replication = 0;
    std::uint64_t seed = 0;
    std::vector<double> values;  // aligned with RunSummary::metric_names
    MetricsLog log;
};

struct RunSummary {
    ExperimentKind kind = ExperimentKind::coupled_energy;
    std::vector<std::string> metric_names;
    std::vector<SweepPoint> points;
    std::vector<ReplicationResult> runs;  // point-major, replication-minor
    std::vector<std::vector<double>> means;
    std::optional<double> oracle;
    std::vector<double> gaps;  // per point, relative to the oracle
    std::string oracle_label;
    double wall_seconds = 0.0;

    MetricsLog summary_table() const;
    MetricsLog replication_table() const;
};

struct RunOptions {
    // 1 runs replications serially; 0 uses the OpenMP default team size.
    int jobs = 0;
    bool write_outputs = true;
};

RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

// Mean of every metric per sweep point, folded in replication order.
std::vector<std::vector<double>> aggregate(const std::vector<ReplicationResult>& runs,
                                           std::size_t points, std::size_t metrics);

// Writes summary.{csv,json}, replications.{csv,json}, timing.json and, when
// logs were recorded, runs/p<point>_r<rep>.{csv,json} under `dir`.
void write_summary(const RunSummary& summary, const std::filesystem::path& dir, MetricsFormat format);

// CSV with header slot,arrivals,cost; throws InputError on empty files,
// gaps, negative arrivals or non-positive costs.
std::vector<TraceRecord> ingest_trace(const std::filesystem::path& path);

}  // namespace renewal
