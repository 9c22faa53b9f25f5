#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vstab/contingency.hpp"
#include "vstab/cpf.hpp"

namespace vstab {

using Json = nlohmann::ordered_json;

namespace detail {

/// All numeric output is pinned to six decimals so golden files compare
/// byte-for-byte across platforms and worker counts.
inline std::string fixed6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return buf;
}

inline double round6(double x) { return std::round(x * 1e6) / 1e6; }

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace detail

/// One labeled curve for CSV export.
struct LabeledCurve {
    std::string label;
    const PVCurveSet* curve;
};

inline std::string pv_csv_text(const std::vector<LabeledCurve>& curves) {
    std::string out = "contingency_label,total_load_mw,bus,v_pu\n";
    for (const auto& lc : curves) {
        for (const auto& pt : lc.curve->points)
            for (std::size_t b = 0; b < lc.curve->bus_ids.size(); ++b)
                out += lc.label + "," + detail::fixed6(pt.total_load_mw) + "," +
                       std::to_string(lc.curve->bus_ids[b]) + "," + detail::fixed6(pt.v[b]) +
                       "\n";
    }
    return out;
}

/// Write P-V curves as plot-ready CSV, rows in (curve, point, bus) order.
inline void emit_pv_csv(const std::vector<LabeledCurve>& curves, const std::string& path) {
    detail::write_file(path, pv_csv_text(curves));
}

inline void emit_pv_csv(const PVCurveSet& curve, const std::string& path,
                        const std::string& label = "base") {
    emit_pv_csv({{label, &curve}}, path);
}

/// Parse a pv_curves.csv back into (label, load, bus, v) tuples.
struct PvCsvRow {
    std::string label;
    double total_load_mw;
    int bus;
    double v_pu;
};

inline std::vector<PvCsvRow> read_pv_csv(const std::string& text) {
    std::vector<PvCsvRow> rows;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "contingency_label,total_load_mw,bus,v_pu")
        throw ParseError("bad pv curve CSV header", 1);
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto c1 = line.find(',');
        auto c2 = line.find(',', c1 + 1);
        auto c3 = line.find(',', c2 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos || c3 == std::string::npos)
            throw ParseError("bad pv curve CSV row", line_no);
        rows.push_back({line.substr(0, c1), std::stod(line.substr(c1 + 1, c2 - c1 - 1)),
                        std::stoi(line.substr(c2 + 1, c3 - c2 - 1)),
                        std::stod(line.substr(c3 + 1))});
    }
    return rows;
}

inline std::string summary_csv_text(const CriticalBusReport& report) {
    std::string out = "contingency_number,line_name,critical_bus\n";
    for (const auto& row : report.rows) {
        out += std::to_string(row.number) + "," + row.label + ",";
        out += row.critical_bus ? std::to_string(*row.critical_bus)
                                : std::string(to_string(*row.reason));
        out += "\n";
    }
    out += "\nbus,frequency\n";
    for (const auto& [bus, count] : report.histogram)
        out += std::to_string(bus) + "," + std::to_string(count) + "\n";
    return out;
}

inline Json summary_json_body(const CriticalBusReport& report) {
    Json j;
    j["contingencies"] = Json::array();
    for (const auto& row : report.rows) {
        Json r;
        r["number"] = row.number;
        r["label"] = row.label;
        r["feasible"] = row.critical_bus.has_value();
        if (row.critical_bus) r["critical_bus"] = *row.critical_bus;
        if (row.margin_mw) r["margin_mw"] = detail::round6(*row.margin_mw);
        if (row.reason) r["reason"] = to_string(*row.reason);
        j["contingencies"].push_back(std::move(r));
    }
    j["histogram"] = Json::object();
    for (const auto& [bus, count] : report.histogram)
        j["histogram"][std::to_string(bus)] = count;
    if (!report.histogram.empty()) j["modal_bus"] = report.modal_bus();
    return j;
}

/// Summary table as CSV (three row columns plus a bus,frequency section)
/// and a JSON twin carrying identical content.
inline void emit_summary(const CriticalBusReport& report, const std::string& csv_path,
                         const std::string& json_path) {
    detail::write_file(csv_path, summary_csv_text(report));
    detail::write_file(json_path, summary_json_body(report).dump(2) + "\n");
}

inline void emit_histogram_csv(const CriticalBusReport& report, const std::string& path) {
    std::string out = "bus,frequency\n";
    for (const auto& [bus, count] : report.histogram)
        out += std::to_string(bus) + "," + std::to_string(count) + "\n";
    detail::write_file(path, out);
}

}  // namespace vstab
