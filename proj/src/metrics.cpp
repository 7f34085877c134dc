#include "renewal/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "renewal/core.hpp"

namespace renewal {

void MetricsLog::add(std::vector<double> row) {
    if (row.size() != columns.size()) {
        throw DimensionError("metrics row has " + std::to_string(row.size()) + " values for " +
                             std::to_string(columns.size()) + " columns");
    }
    rows.push_back(std::move(row));
}

std::size_t MetricsLog::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    throw InputError("no metrics column named '" + name + "'");
}

std::vector<double> MetricsLog::column(const std::string& name) const {
    const std::size_t j = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[j]);
    return out;
}

MetricsFormat parse_format(const std::string& name) {
    if (name == "csv") return MetricsFormat::csv;
    if (name == "json") return MetricsFormat::json;
    throw ConfigError("unknown output format '" + name + "' (expected csv or json)");
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string to_csv(const MetricsLog& log) {
    std::string out;
    for (std::size_t j = 0; j < log.columns.size(); ++j) {
        if (j) out += ',';
        out += log.columns[j];
    }
    out += '\n';
    for (const auto& row : log.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out += ',';
            out += format_double(row[j]);
        }
        out += '\n';
    }
    return out;
}

std::string to_json(const MetricsLog& log) {
    nlohmann::json j;
    j["columns"] = log.columns;
    j["rows"] = log.rows;
    return j.dump();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw InputError("line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
    }
}

}  // namespace

MetricsLog from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw InputError("metrics CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    MetricsLog log(split_csv_line(line));
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != log.columns.size()) {
            throw InputError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(log.columns.size()) + " fields, got " +
                             std::to_string(cells.size()));
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_cell(c, line_no));
        log.rows.push_back(std::move(row));
    }
    return log;
}

MetricsLog from_json(const std::string& text) {
    try {
        const nlohmann::json j = nlohmann::json::parse(text);
        MetricsLog log(j.at("columns").get<std::vector<std::string>>());
        for (const auto& r : j.at("rows")) log.add(r.get<std::vector<double>>());
        return log;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("metrics JSON: ") + e.what());
    }
}

void write_metrics(const MetricsLog& log, const std::filesystem::path& path, MetricsFormat format) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open '" + path.string() + "' for writing");
    os << (format == MetricsFormat::csv ? to_csv(log) : to_json(log));
    if (!os) throw InputError("failed writing '" + path.string() + "'");
}

MetricsLog read_metrics(const std::filesystem::path& path, MetricsFormat format) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return format == MetricsFormat::csv ? from_csv(ss.str()) : from_json(ss.str());
}

}  // namespace renewal
