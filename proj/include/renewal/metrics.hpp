#pragma once

// Column-oriented metric logs and their CSV / JSON serialization.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace renewal {

struct MetricsLog {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    MetricsLog() = default;
    explicit MetricsLog(std::vector<std::string> cols) : columns(std::move(cols)) {}

    // Throws DimensionError when the row width differs from the column count.
    void add(std::vector<double> row);
    std::size_t column_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
    bool empty() const { return rows.empty(); }
};

// Keeps every `every`-th slot plus the last one; every == 0 keeps nothing.
inline bool should_record(long long t, long long horizon, long long every) {
    return every > 0 && ((t + 1) % every == 0 || t + 1 == horizon);
}

enum class MetricsFormat { csv, json };

MetricsFormat parse_format(const std::string& name);
std::string format_double(double v);

std::string to_csv(const MetricsLog& log);
std::string to_json(const MetricsLog& log);
MetricsLog from_csv(const std::string& text);
MetricsLog from_json(const std::string& text);

void write_metrics(const MetricsLog& log, const std::filesystem::path& path, MetricsFormat format);
MetricsLog read_metrics(const std::filesystem::path& path, MetricsFormat format);

}  // namespace renewal
