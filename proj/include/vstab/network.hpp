#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vstab {

using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input text. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line_no = 0)
        : Error(line_no > 0 ? msg + " (line " + std::to_string(line_no) + ")" : msg),
          line(line_no) {}
    int line;
};

/// Structurally invalid network (duplicate ids, missing slack, dangling refs).
class StructureError : public Error {
public:
    using Error::Error;
};

/// A requested operating point has no steady-state solution.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// File-system failure while reading inputs or writing outputs.
class IoError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class BusKind { Slack, PV, PQ };

enum class MachineKind { SyncGen, SyncCondenser, Scig, Dfig, SolarPv };

inline const char* to_string(BusKind k) {
    switch (k) {
        case BusKind::Slack: return "slack";
        case BusKind::PV: return "pv";
        case BusKind::PQ: return "pq";
    }
    return "?";
}

inline const char* to_string(MachineKind k) {
    switch (k) {
        case MachineKind::SyncGen: return "sync_gen";
        case MachineKind::SyncCondenser: return "sync_condenser";
        case MachineKind::Scig: return "scig";
        case MachineKind::Dfig: return "dfig";
        case MachineKind::SolarPv: return "solar_pv";
    }
    return "?";
}

struct Bus {
    int id = 0;                 // positive, unique
    std::string name;
    BusKind kind = BusKind::PQ; // declared load-flow type
    double v_setpoint = 1.0;    // pu, meaningful for PV/Slack
    double shunt_g = 0.0;       // pu conductance on system base
    double shunt_b = 0.0;       // pu susceptance on system base
    double base_kv = 0.0;

    bool operator==(const Bus&) const = default;
};

struct Branch {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    double r = 0.0;             // pu series resistance
    double x = 0.0;             // pu series reactance, nonzero
    double b_charging = 0.0;    // pu total line charging
    double tap_ratio = 1.0;     // off-nominal ratio at the from side, 1.0 for lines
    bool is_transformer = false;
    std::string circuit_id;     // distinguishes parallel circuits ("1", "2"); empty for singles
    bool outage_eligible = false;

    bool operator==(const Branch&) const = default;
};

struct Load {
    int bus = 0;
    double p = 0.0;             // MW
    double q = 0.0;             // MVar
    bool scalable = true;

    bool operator==(const Load&) const = default;
};

struct Machine {
    int bus = 0;
    MachineKind kind = MachineKind::SyncGen;
    double p_set = 0.0;         // MW
    double v_set = 1.0;         // pu terminal setpoint (voltage-controlling kinds)
    double q_min = 0.0;         // MVar
    double q_max = 0.0;         // MVar
    double rating = 0.0;        // MVA
    bool in_service = true;

    bool operator==(const Machine&) const = default;
};

/// Immutable input model: buses, branches, machines and loads of one case.
/// Impedances and shunts are per-unit on base_mva; load/dispatch quantities
/// are MW/MVar. Operations elsewhere take a NetworkCase by const reference
/// and return transformed copies.
struct NetworkCase {
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Load> loads;
    std::vector<Machine> machines;

    bool operator==(const NetworkCase&) const = default;

    int bus_index(int bus_id) const {
        for (std::size_t i = 0; i < buses.size(); ++i)
            if (buses[i].id == bus_id) return static_cast<int>(i);
        throw StructureError("unknown bus id " + std::to_string(bus_id));
    }

    const Bus& bus(int bus_id) const { return buses[bus_index(bus_id)]; }

    const Branch& branch(int branch_id) const {
        for (const auto& br : branches)
            if (br.id == branch_id) return br;
        throw StructureError("unknown branch id " + std::to_string(branch_id));
    }

    double total_scalable_load_mw() const {
        double total = 0.0;
        for (const auto& ld : loads)
            if (ld.scalable) total += ld.p;
        return total;
    }

    double load_p_mw(int bus_id) const {
        double p = 0.0;
        for (const auto& ld : loads)
            if (ld.bus == bus_id) p += ld.p;
        return p;
    }

    double load_q_mvar(int bus_id) const {
        double q = 0.0;
        for (const auto& ld : loads)
            if (ld.bus == bus_id) q += ld.q;
        return q;
    }

    bool is_load_bus(int bus_id) const {
        return std::any_of(loads.begin(), loads.end(), [&](const Load& ld) {
            return ld.bus == bus_id && (ld.p != 0.0 || ld.q != 0.0);
        });
    }

    /// Buses carrying nonzero load, ascending by id.
    std::vector<int> load_bus_ids() const {
        std::vector<int> ids;
        for (const auto& b : buses)
            if (is_load_bus(b.id)) ids.push_back(b.id);
        return ids;
    }

    int slack_bus_id() const {
        int found = 0;
        for (const auto& b : buses) {
            if (b.kind != BusKind::Slack) continue;
            if (found != 0) throw StructureError("multiple slack buses");
            found = b.id;
        }
        if (found == 0) throw StructureError("no slack bus");
        return found;
    }

    std::vector<const Machine*> machines_at(int bus_id) const {
        std::vector<const Machine*> out;
        for (const auto& m : machines)
            if (m.bus == bus_id && m.in_service) out.push_back(&m);
        return out;
    }

    /// Structural sanity: unique ids, resolvable cross references, sane branch
    /// impedances. Throws StructureError on the first violation.
    void validate() const {
        slack_bus_id();
        std::map<int, int> seen;
        for (const auto& b : buses) {
            if (b.id <= 0) throw StructureError("bus id must be positive");
            if (++seen[b.id] > 1)
                throw StructureError("duplicate bus id " + std::to_string(b.id));
        }
        for (const auto& br : branches) {
            if (br.x == 0.0)
                throw StructureError("branch " + std::to_string(br.id) + " has zero reactance");
            if (br.from_bus == br.to_bus)
                throw StructureError("branch " + std::to_string(br.id) + " is a self-loop");
            if (br.tap_ratio <= 0.0)
                throw StructureError("branch " + std::to_string(br.id) + " has non-positive tap");
            if (!seen.count(br.from_bus) || !seen.count(br.to_bus))
                throw StructureError("branch " + std::to_string(br.id) + " references unknown bus");
        }
        for (const auto& ld : loads)
            if (!seen.count(ld.bus))
                throw StructureError("load references unknown bus " + std::to_string(ld.bus));
        for (const auto& m : machines) {
            if (!seen.count(m.bus))
                throw StructureError("machine references unknown bus " + std::to_string(m.bus));
            if (m.q_min > m.q_max)
                throw StructureError("machine at bus " + std::to_string(m.bus) +
                                     " has q_min > q_max");
        }
    }
};

/// Canonical display name of a branch: Line_0001_0002 with a "/1" circuit
/// suffix when parallel circuits share the terminal pair, Trafo_... for
/// transformers.
inline std::string branch_label(const NetworkCase& net, const Branch& br) {
    int lo = std::min(br.from_bus, br.to_bus);
    int hi = std::max(br.from_bus, br.to_bus);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%04d_%04d", br.is_transformer ? "Trafo" : "Line", lo, hi);
    std::string label = buf;
    int circuits = 0;
    for (const auto& other : net.branches) {
        int olo = std::min(other.from_bus, other.to_bus);
        int ohi = std::max(other.from_bus, other.to_bus);
        if (olo == lo && ohi == hi) ++circuits;
    }
    if (circuits > 1 && !br.circuit_id.empty()) label += "/" + br.circuit_id;
    return label;
}

inline std::optional<int> find_branch_by_label(const NetworkCase& net, const std::string& label) {
    for (const auto& br : net.branches)
        if (branch_label(net, br) == label) return br.id;
    return std::nullopt;
}

}  // namespace vstab
