#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vstab/network.hpp"

namespace vstab {

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline bool parse_double(const std::string& tok, double& out) {
    if (tok.empty()) return false;
    char* end = nullptr;
    out = std::strtod(tok.c_str(), &end);
    return end == tok.c_str() + tok.size();
}

inline bool parse_int(const std::string& tok, int& out) {
    if (tok.empty()) return false;
    char* end = nullptr;
    long v = std::strtol(tok.c_str(), &end, 10);
    if (end != tok.c_str() + tok.size()) return false;
    out = static_cast<int>(v);
    return true;
}

inline std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> toks;
    std::string cur;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) { toks.push_back(cur); cur.clear(); }
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) toks.push_back(cur);
    return toks;
}

inline double require_double(const std::vector<std::string>& toks, std::size_t i, int line_no) {
    double v = 0.0;
    if (i >= toks.size() || !parse_double(toks[i], v))
        throw ParseError("malformed numeric field #" + std::to_string(i + 1), line_no);
    return v;
}

inline int require_int(const std::vector<std::string>& toks, std::size_t i, int line_no) {
    int v = 0;
    if (i >= toks.size() || !parse_int(toks[i], v))
        throw ParseError("malformed integer field #" + std::to_string(i + 1), line_no);
    return v;
}

}  // namespace detail

/// Parse an IEEE Common Data Format case (the UW archive layout).
///
/// Bus cards: columns 1-4 hold the bus number and 6-17 the name; the
/// remaining fields are whitespace-separated (area, zone, type, final V,
/// final angle, load MW, load MVar, gen MW, gen MVar, base kV, desired V,
/// max MVar, min MVar, shunt G, shunt B). Branch cards are fully
/// whitespace-separated.
///
/// Every regulated bus (type 2 or 3) yields one Machine; a type-2 bus with
/// zero scheduled MW is flagged SyncCondenser, which matches how condensers
/// appear in the archive. The sidecar config can override machine kinds.
inline NetworkCase parse_case(const std::string& text) {
    NetworkCase net;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;

    // Title card: MVA base lives at columns 32-37; fall back to the first
    // token that parses fully as a positive number.
    if (!std::getline(in, line)) throw ParseError("empty case file", 1);
    ++line_no;
    {
        double base = 0.0;
        bool ok = false;
        if (line.size() >= 37) ok = detail::parse_double(detail::trim(line.substr(31, 6)), base);
        if (!ok || base <= 0.0) {
            for (const auto& tok : detail::tokenize(line))
                if (detail::parse_double(tok, base) && base > 0.0) { ok = true; break; }
        }
        if (!ok || base <= 0.0) throw ParseError("missing MVA base on title card", line_no);
        net.base_mva = base;
    }

    enum class Section { None, Bus, Branch, Skip };
    Section section = Section::None;
    int next_branch_id = 1;

    while (std::getline(in, line)) {
        ++line_no;
        std::string trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        if (trimmed.rfind("END OF DATA", 0) == 0) break;
        if (trimmed == "-999" || trimmed == "-9" || trimmed == "-99") {
            section = Section::None;
            continue;
        }
        if (section == Section::None) {
            if (trimmed.rfind("BUS DATA", 0) == 0) section = Section::Bus;
            else if (trimmed.rfind("BRANCH DATA", 0) == 0) section = Section::Branch;
            else section = Section::Skip;  // loss zones, interchange, tie lines
            continue;
        }
        if (section == Section::Skip) continue;

        if (section == Section::Bus) {
            if (line.size() < 18) throw ParseError("bus card too short", line_no);
            Bus bus;
            int id = 0;
            if (!detail::parse_int(detail::trim(line.substr(0, 4)), id) || id <= 0)
                throw ParseError("bad bus number", line_no);
            bus.id = id;
            bus.name = detail::trim(line.substr(5, 12));
            auto toks = detail::tokenize(line.substr(17));
            // area zone type V angle loadP loadQ genP genQ baseKV desiredV qmax qmin G B
            int type = detail::require_int(toks, 2, line_no);
            double final_v = detail::require_double(toks, 3, line_no);
            double load_p = detail::require_double(toks, 5, line_no);
            double load_q = detail::require_double(toks, 6, line_no);
            double gen_p = detail::require_double(toks, 7, line_no);
            double base_kv = detail::require_double(toks, 9, line_no);
            double desired_v = detail::require_double(toks, 10, line_no);
            double q_max = detail::require_double(toks, 11, line_no);
            double q_min = detail::require_double(toks, 12, line_no);
            double shunt_g = detail::require_double(toks, 13, line_no);
            double shunt_b = detail::require_double(toks, 14, line_no);

            switch (type) {
                case 3: bus.kind = BusKind::Slack; break;
                case 2: bus.kind = BusKind::PV; break;
                default: bus.kind = BusKind::PQ; break;
            }
            bus.v_setpoint = desired_v > 0.0 ? desired_v : (final_v > 0.0 ? final_v : 1.0);
            bus.shunt_g = shunt_g;
            bus.shunt_b = shunt_b;
            bus.base_kv = base_kv;
            net.buses.push_back(bus);

            if (load_p != 0.0 || load_q != 0.0)
                net.loads.push_back(Load{bus.id, load_p, load_q, true});

            if (type == 2 || type == 3) {
                Machine m;
                m.bus = bus.id;
                m.kind = (type == 2 && gen_p == 0.0) ? MachineKind::SyncCondenser
                                                     : MachineKind::SyncGen;
                m.p_set = gen_p;
                m.v_set = bus.v_setpoint;
                m.q_min = q_min;
                m.q_max = q_max;
                net.machines.push_back(m);
            }
        } else {  // Section::Branch
            auto toks = detail::tokenize(line);
            Branch br;
            br.id = next_branch_id++;
            br.from_bus = detail::require_int(toks, 0, line_no);
            br.to_bus = detail::require_int(toks, 1, line_no);
            int circuit = detail::require_int(toks, 4, line_no);
            int type = detail::require_int(toks, 5, line_no);
            br.r = detail::require_double(toks, 6, line_no);
            br.x = detail::require_double(toks, 7, line_no);
            br.b_charging = detail::require_double(toks, 8, line_no);
            double ratio = toks.size() > 14 ? detail::require_double(toks, 14, line_no) : 0.0;
            br.tap_ratio = ratio > 0.0 ? ratio : 1.0;
            br.is_transformer = type != 0 || ratio > 0.0;
            br.circuit_id = std::to_string(circuit > 0 ? circuit : 1);
            net.branches.push_back(br);
        }
    }

    net.validate();
    return net;
}

/// Serialize a NetworkCase back to CDF text. Kind flags and outage
/// eligibility are not representable in CDF (the sidecar carries them);
/// everything the parser reads round-trips exactly.
inline std::string write_cdf(const NetworkCase& net) {
    std::string out;
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  " 01/01/70 VSTAB EXPORT       %6.1f 1970 S Exported case\n", net.base_mva);
    out += buf;
    std::snprintf(buf, sizeof(buf), "BUS DATA FOLLOWS %27zu ITEMS\n", net.buses.size());
    out += buf;
    for (const auto& b : net.buses) {
        int type = b.kind == BusKind::Slack ? 3 : (b.kind == BusKind::PV ? 2 : 0);
        double gen_p = 0.0, q_min = 0.0, q_max = 0.0;
        for (const auto* m : net.machines_at(b.id)) {
            gen_p += m->p_set;
            q_min += m->q_min;
            q_max += m->q_max;
        }
        std::snprintf(buf, sizeof(buf),
                      "%4d %-12s%2d%3d%3d %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g "
                      "%.17g %.17g %.17g %.17g 0\n",
                      b.id, b.name.c_str(), 1, 1, type, b.v_setpoint, 0.0,
                      net.load_p_mw(b.id), net.load_q_mvar(b.id), gen_p, 0.0, b.base_kv,
                      b.v_setpoint, q_max, q_min, b.shunt_g, b.shunt_b);
        out += buf;
    }
    out += "-999\n";
    std::snprintf(buf, sizeof(buf), "BRANCH DATA FOLLOWS %24zu ITEMS\n", net.branches.size());
    out += buf;
    for (const auto& br : net.branches) {
        int circuit = br.circuit_id.empty() ? 1 : std::atoi(br.circuit_id.c_str());
        std::snprintf(buf, sizeof(buf),
                      "%4d %4d%3d%3d%3d%2d %.17g %.17g %.17g 0 0 0 0 0 %.17g 0.0 0.0 0.0 0.0 "
                      "0.0 0.0\n",
                      br.from_bus, br.to_bus, 1, 1, circuit, br.is_transformer ? 1 : 0, br.r,
                      br.x, br.b_charging, br.is_transformer ? br.tap_ratio : 0.0);
        out += buf;
    }
    out += "-999\n";
    out += "END OF DATA\n";
    return out;
}

}  // namespace vstab
