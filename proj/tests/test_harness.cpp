#include "doctest.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "renewal/harness.hpp"

using namespace renewal;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("renewal_test_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    os << text;
}

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

RunOptions quiet(int jobs) {
    RunOptions o;
    o.jobs = jobs;
    o.write_outputs = false;
    return o;
}

}  // namespace

TEST_CASE("malformed JSON reports the line") {
    const std::string msg = error_of("{\n  \"kind\": \"bandit\",\n  \"horizon\": ,\n}");
    CHECK(msg.find("line 3") != std::string::npos);
}

TEST_CASE("schema errors name the key path") {
    CHECK(error_of(R"({"kind": "bandit", "sweep": {"V": [1, "x"]}})").find("/sweep/V/1") != std::string::npos);
    CHECK(error_of(R"({"kind": "bandit", "horizon": 0})").find("/horizon") != std::string::npos);
    CHECK(error_of(R"({"kind": "bandit", "colour": 1})").find("/colour") != std::string::npos);
    CHECK(error_of(R"({"horizon": 5})").find("/kind") != std::string::npos);
    CHECK(error_of(R"({"kind": "bandit", "sweep": {"alpha": [0]}})").find("/sweep/alpha/0") != std::string::npos);
}

TEST_CASE("unknown experiment kind is rejected") {
    const std::string msg = error_of(R"({"kind": "teleport"})");
    CHECK(msg.find("/kind") != std::string::npos);
    CHECK(msg.find("teleport") != std::string::npos);
    CHECK_THROWS_AS(parse_kind("teleport"), ConfigError);
    for (auto k : {ExperimentKind::coupled_energy, ExperimentKind::datacenter, ExperimentKind::bandit,
                   ExperimentKind::online_renewal, ExperimentKind::ocmdp, ExperimentKind::oracle_only}) {
        CHECK(parse_kind(to_string(k)) == k);
    }
}

TEST_CASE("sweep points form the cartesian product") {
    const ExperimentConfig cfg =
        parse_config(R"({"kind": "online-renewal", "sweep": {"V": [1, 2], "delta": [0.5, 0.6, 0.7]}})");
    const auto pts = sweep_points(cfg);
    REQUIRE(pts.size() == 6);
    CHECK(pts[0].V == 1.0);
    CHECK(pts[0].delta == 0.5);
    CHECK(pts[5].V == 2.0);
    CHECK(pts[5].delta == 0.7);
}

TEST_CASE("minimal one-slot config runs and round-trips through disk") {
    TempDir tmp;
    const fs::path cfg_path = tmp.path / "c.json";
    write_text(cfg_path, R"({"kind": "coupled-energy", "horizon": 1, "seed": 4, "output": ")" +
                             (tmp.path / "out").generic_string() + R"("})");
    const ExperimentConfig cfg = load_config(cfg_path);
    CHECK(cfg.horizon == 1);
    const RunSummary s = run_experiment(cfg);
    REQUIRE(s.runs.size() == 1);
    CHECK(fs::exists(tmp.path / "out" / "summary.csv"));
    CHECK(fs::exists(tmp.path / "out" / "timing.json"));
    const MetricsLog back = read_metrics(tmp.path / "out" / "summary.csv", MetricsFormat::csv);
    const MetricsLog table = s.summary_table();
    CHECK(back.columns == table.columns);
    REQUIRE(back.rows.size() == 1);
    for (std::size_t i = 0; i < table.rows[0].size(); ++i) CHECK(back.rows[0][i] == table.rows[0][i]);
}

TEST_CASE("load_config prefixes the path to errors") {
    TempDir tmp;
    const fs::path p = tmp.path / "bad.json";
    write_text(p, "{");
    try {
        load_config(p);
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bad.json") != std::string::npos);
    }
}

TEST_CASE("energy sweep over three V values emits three summary rows") {
    ExperimentConfig cfg =
        parse_config(R"({"kind": "coupled-energy", "horizon": 2000, "replications": 2, "sweep": {"V": [1, 10, 100]}, "oracle": true})");
    const RunSummary s = run_experiment(cfg, quiet(1));
    const MetricsLog t = s.summary_table();
    CHECK(t.rows.size() == 3);
    CHECK(s.runs.size() == 6);
    REQUIRE(s.oracle.has_value());
    CHECK(t.column("oracle")[0] == doctest::Approx(*s.oracle));
    CHECK(t.column("V") == std::vector<double>{1.0, 10.0, 100.0});
}

TEST_CASE("aggregates equal recomputation from the replications") {
    const ExperimentConfig cfg =
        parse_config(R"({"kind": "bandit", "horizon": 3000, "replications": 3, "sweep": {"V": [5, 50]}})");
    const RunSummary s = run_experiment(cfg, quiet(1));
    for (std::size_t p = 0; p < 2; ++p) {
        for (std::size_t m = 0; m < s.metric_names.size(); ++m) {
            double sum = 0.0;
            for (const auto& r : s.runs) {
                if (r.point == p) sum += r.values[m];
            }
            CHECK(s.means[p][m] == doctest::Approx(sum / 3.0).epsilon(1e-14));
        }
    }
    CHECK_THROWS_AS(aggregate(s.runs, 1, s.metric_names.size()), DimensionError);
}

TEST_CASE("parallel replications match serial execution bit for bit") {
    for (const char* text :
         {R"({"kind": "coupled-energy", "horizon": 3000, "replications": 4, "sweep": {"V": [1, 20]}})",
          R"({"kind": "online-renewal", "horizon": 3000, "replications": 3, "sweep": {"V": [10], "delta": [0.5, 0.7]}})",
          R"({"kind": "ocmdp", "horizon": 200, "replications": 3})"}) {
        const ExperimentConfig cfg = parse_config(text);
        const RunSummary a = run_experiment(cfg, quiet(1));
        const RunSummary b = run_experiment(cfg, quiet(3));
        CHECK(a.means == b.means);
        REQUIRE(a.runs.size() == b.runs.size());
        for (std::size_t i = 0; i < a.runs.size(); ++i) CHECK(a.runs[i].values == b.runs[i].values);
        std::vector<std::string> cols = a.summary_table().columns;
        std::sort(cols.begin(), cols.end());
        CHECK(std::adjacent_find(cols.begin(), cols.end()) == cols.end());
    }
}

TEST_CASE("same config and seed give identical outputs") {
    const ExperimentConfig cfg =
        parse_config(R"({"kind": "datacenter", "horizon": 500, "seed": 12, "instance": {"servers": 10, "R_max": 30}})");
    const RunSummary a = run_experiment(cfg, quiet(1));
    const RunSummary b = run_experiment(cfg, quiet(1));
    CHECK(a.means == b.means);
    CHECK(replication_seed(12, 0) != replication_seed(12, 1));
    CHECK(replication_seed(12, 3) == derive_seed(12, 3));
}

TEST_CASE("oracle-only runs report the optimum") {
    const RunSummary s = run_experiment(parse_config(R"({"kind": "oracle-only", "instance": {"problem": "maxlambda"}})"),
                                        quiet(1));
    REQUIRE(s.oracle.has_value());
    CHECK(*s.oracle >= 0.7 - 1e-9);
}

TEST_CASE("trace ingestion") {
    TempDir tmp;
    const fs::path empty = tmp.path / "empty.csv";
    write_text(empty, "");
    CHECK_THROWS_AS(ingest_trace(empty), InputError);
    const fs::path three = tmp.path / "three.csv";
    write_text(three, "slot,arrivals,cost\n0,3,1.5\n1,0,1\n2,7,0.25\n");
    const auto t = ingest_trace(three);
    REQUIRE(t.size() == 3);
    CHECK(t[2].arrivals == 7);
    CHECK(t[2].cost == 0.25);
    const fs::path gap = tmp.path / "gap.csv";
    write_text(gap, "slot,arrivals,cost\n0,3,1\n2,1,1\n");
    CHECK_THROWS_AS(ingest_trace(gap), InputError);
    const fs::path neg = tmp.path / "neg.csv";
    write_text(neg, "slot,arrivals,cost\n0,-3,1\n");
    CHECK_THROWS_AS(ingest_trace(neg), InputError);
    CHECK_THROWS_AS(ingest_trace(tmp.path / "missing.csv"), InputError);

    const auto synth = synthetic_trace(500, {}, 3);
    const fs::path round = tmp.path / "round.csv";
    write_text(round, trace_to_csv(synth));
    const auto back = ingest_trace(round);
    REQUIRE(back.size() == synth.size());
    for (std::size_t i = 0; i < synth.size(); ++i) {
        CHECK(back[i].arrivals == synth[i].arrivals);
        CHECK(back[i].cost == synth[i].cost);
    }
}

TEST_CASE("metrics write and read back in both formats") {
    TempDir tmp;
    MetricsLog log({"slot", "value", "q"});
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 200; ++i) log.add({static_cast<double>(i), u(rng), u(rng) * 1e-9});
    write_metrics(log, tmp.path / "m.csv", MetricsFormat::csv);
    write_metrics(log, tmp.path / "m.json", MetricsFormat::json);
    const MetricsLog c = read_metrics(tmp.path / "m.csv", MetricsFormat::csv);
    const MetricsLog j = read_metrics(tmp.path / "m.json", MetricsFormat::json);
    CHECK(c.columns == log.columns);
    CHECK(j.columns == log.columns);
    for (std::size_t r = 0; r < log.rows.size(); ++r) {
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(c.rows[r][k] == doctest::Approx(log.rows[r][k]).epsilon(1e-12));
            CHECK(j.rows[r][k] == c.rows[r][k]);
        }
    }
    CHECK(parse_format("json") == MetricsFormat::json);
    CHECK_THROWS(parse_format("xml"));
}

TEST_CASE("a million-row CSV writes within five seconds") {
    TempDir tmp;
    MetricsLog log({"slot", "a", "b", "c"});
    log.rows.reserve(1000000);
    for (int i = 0; i < 1000000; ++i) log.add({static_cast<double>(i), i * 0.5, i * 1e-3, 1.0 / (i + 1)});
    const auto start = std::chrono::steady_clock::now();
    write_metrics(log, tmp.path / "big.csv", MetricsFormat::csv);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(secs < 5.0);
    CHECK(fs::file_size(tmp.path / "big.csv") > 1000000u);
}
