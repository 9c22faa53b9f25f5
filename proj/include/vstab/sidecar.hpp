#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vstab/cdf.hpp"
#include "vstab/network.hpp"
#include "vstab/transforms.hpp"

namespace vstab {

/// Per-machine declaration from the sidecar. Optional fields override the
/// values inferred from the CDF.
struct MachineDecl {
    int bus = 0;
    std::optional<MachineKind> kind;
    std::optional<double> p_set;
    std::optional<double> v_set;
    std::optional<double> q_min;
    std::optional<double> q_max;
    std::optional<double> rating;
};

/// The auxiliary case description that CDF cannot carry: machine kinds and
/// ratings, which branches the contingency sweep may outage, which branches
/// are modeled as parallel-circuit pairs, and induction-machine parameters
/// for renewable scenarios.
struct SidecarConfig {
    std::vector<std::string> split_parallel;   // branch labels to duplicate
    std::vector<MachineDecl> machines;
    std::vector<std::string> outage_eligible;  // branch labels, sweep order
    std::map<std::string, double> scig_params;
    std::map<std::string, double> dfig_params;
};

namespace detail {

inline MachineKind machine_kind_from_string(const std::string& s, int line_no) {
    if (s == "sync_gen") return MachineKind::SyncGen;
    if (s == "sync_condenser") return MachineKind::SyncCondenser;
    if (s == "scig") return MachineKind::Scig;
    if (s == "dfig") return MachineKind::Dfig;
    if (s == "solar_pv") return MachineKind::SolarPv;
    throw ParseError("unknown machine kind '" + s + "'", line_no);
}

inline std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

inline std::string unquote(const std::string& s, int line_no) {
    std::string t = trim(s);
    if (t.size() >= 2 && t.front() == '"' && t.back() == '"')
        return t.substr(1, t.size() - 2);
    throw ParseError("expected a quoted string, got '" + t + "'", line_no);
}

inline std::vector<std::string> parse_string_array(const std::string& s, int line_no) {
    std::string t = trim(s);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']')
        throw ParseError("expected an array", line_no);
    std::vector<std::string> out;
    std::string body = t.substr(1, t.size() - 2);
    std::string cur;
    bool in_string = false;
    for (char c : body) {
        if (c == '"') in_string = !in_string;
        if (c == ',' && !in_string) {
            if (!trim(cur).empty()) out.push_back(unquote(cur, line_no));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) out.push_back(unquote(cur, line_no));
    return out;
}

}  // namespace detail

/// Parse the TOML-style sidecar. Recognized tables: [case] with
/// split_parallel, [[machine]] declarations, [outage_eligible] with lines,
/// and [scig]/[dfig] numeric parameter tables.
inline SidecarConfig parse_sidecar(const std::string& text) {
    SidecarConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = detail::trim(detail::strip_comment(line));
        if (t.empty()) continue;
        if (t.front() == '[') {
            std::string name = t;
            name.erase(std::remove_if(name.begin(), name.end(),
                                      [](char c) { return c == '[' || c == ']'; }),
                       name.end());
            section = detail::trim(name);
            if (section == "machine") cfg.machines.emplace_back();
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
        std::string key = detail::trim(t.substr(0, eq));
        std::string value = detail::trim(t.substr(eq + 1));
        // multi-line arrays: accumulate until the closing bracket
        if (!value.empty() && value.front() == '[') {
            while (value.find(']') == std::string::npos && std::getline(in, line)) {
                ++line_no;
                value += " " + detail::trim(detail::strip_comment(line));
            }
        }

        if (section == "case" && key == "split_parallel") {
            cfg.split_parallel = detail::parse_string_array(value, line_no);
        } else if (section == "machine") {
            if (cfg.machines.empty()) throw ParseError("machine key outside [[machine]]", line_no);
            MachineDecl& m = cfg.machines.back();
            double num = 0.0;
            if (key == "kind") {
                m.kind = detail::machine_kind_from_string(detail::unquote(value, line_no), line_no);
            } else if (!detail::parse_double(value, num)) {
                throw ParseError("expected a number for '" + key + "'", line_no);
            } else if (key == "bus") {
                m.bus = static_cast<int>(num);
            } else if (key == "p_set_mw") {
                m.p_set = num;
            } else if (key == "v_set") {
                m.v_set = num;
            } else if (key == "q_min_mvar") {
                m.q_min = num;
            } else if (key == "q_max_mvar") {
                m.q_max = num;
            } else if (key == "rating_mva") {
                m.rating = num;
            } else {
                throw ParseError("unknown machine key '" + key + "'", line_no);
            }
        } else if (section == "outage_eligible" && key == "lines") {
            cfg.outage_eligible = detail::parse_string_array(value, line_no);
        } else if (section == "scig" || section == "dfig") {
            double num = 0.0;
            if (!detail::parse_double(value, num))
                throw ParseError("expected a number for '" + key + "'", line_no);
            (section == "scig" ? cfg.scig_params : cfg.dfig_params)[key] = num;
        }
        // unrecognized keys in other sections are ignored
    }
    return cfg;
}

/// Apply a sidecar to a freshly parsed case: split declared parallel
/// circuits, override machine declarations, then mark the outage-eligible
/// branches. Labels that resolve to nothing are structural errors so typos
/// cannot silently shrink the contingency list.
inline NetworkCase apply_sidecar(const NetworkCase& net, const SidecarConfig& cfg) {
    NetworkCase out = net;
    for (const auto& label : cfg.split_parallel) {
        auto id = find_branch_by_label(out, label);
        if (!id) throw StructureError("split_parallel: no branch labeled '" + label + "'");
        out = split_parallel_circuit(out, *id);
    }
    for (const auto& decl : cfg.machines) {
        bool found = false;
        for (auto& m : out.machines) {
            if (m.bus != decl.bus) continue;
            found = true;
            if (decl.kind) m.kind = *decl.kind;
            if (decl.p_set) m.p_set = *decl.p_set;
            if (decl.v_set) m.v_set = *decl.v_set;
            if (decl.q_min) m.q_min = *decl.q_min;
            if (decl.q_max) m.q_max = *decl.q_max;
            if (decl.rating) m.rating = *decl.rating;
        }
        if (!found)
            throw StructureError("sidecar declares a machine at bus " +
                                 std::to_string(decl.bus) + " but the case has none");
    }
    for (auto& br : out.branches) br.outage_eligible = false;
    for (const auto& label : cfg.outage_eligible) {
        auto id = find_branch_by_label(out, label);
        if (!id) throw StructureError("outage_eligible: no branch labeled '" + label + "'");
        for (auto& br : out.branches)
            if (br.id == *id) br.outage_eligible = true;
    }
    out.validate();
    return out;
}

/// One-call ingestion of a case file plus its sidecar.
inline NetworkCase load_case(const std::string& cdf_text, const std::string& sidecar_text) {
    return apply_sidecar(parse_case(cdf_text), parse_sidecar(sidecar_text));
}

}  // namespace vstab
