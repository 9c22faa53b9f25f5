#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vstab/network.hpp"

namespace vstab {

/// How scalable loads grow along the stress direction.
enum class LoadGrowth {
    ConstantPowerFactor,  // q scales with p, per-load power factor preserved
    ActiveOnly,           // p scales, q held at its base value
};

/// Replace one branch by two identical parallel circuits whose aggregate
/// equals the original: each circuit carries doubled series impedance and
/// half the charging. The second circuit is inserted adjacent to the first
/// so enumeration order is preserved.
inline NetworkCase split_parallel_circuit(const NetworkCase& net, int branch_id) {
    NetworkCase out = net;
    int max_id = 0;
    for (const auto& br : out.branches) max_id = std::max(max_id, br.id);
    for (std::size_t i = 0; i < out.branches.size(); ++i) {
        if (out.branches[i].id != branch_id) continue;
        Branch& first = out.branches[i];
        first.r *= 2.0;
        first.x *= 2.0;
        first.b_charging /= 2.0;
        first.circuit_id = "1";
        Branch second = first;
        second.id = max_id + 1;
        second.circuit_id = "2";
        out.branches.insert(out.branches.begin() + i + 1, second);
        return out;
    }
    throw StructureError("split_parallel_circuit: unknown branch id " +
                         std::to_string(branch_id));
}

/// Enable or disable the synchronous condensers. Disabled: every
/// SyncCondenser machine is removed and its bus demoted to PQ. Enabled:
/// condenser buses are PV-typed with zero active injection and their Q
/// limits active (the parsed case already satisfies this, so enabling is
/// a normalization pass).
inline NetworkCase apply_sc_mode(const NetworkCase& net, bool enabled) {
    NetworkCase out = net;
    if (enabled) {
        for (const auto& m : out.machines) {
            if (m.kind != MachineKind::SyncCondenser || !m.in_service) continue;
            Bus& b = out.buses[out.bus_index(m.bus)];
            if (b.kind == BusKind::PQ) b.kind = BusKind::PV;
        }
        for (auto& m : out.machines)
            if (m.kind == MachineKind::SyncCondenser) m.p_set = 0.0;
        return out;
    }
    std::vector<Machine> kept;
    for (const auto& m : out.machines) {
        if (m.kind == MachineKind::SyncCondenser) {
            Bus& b = out.buses[out.bus_index(m.bus)];
            bool other_pv_machine = false;
            for (const auto& o : out.machines)
                if (o.bus == m.bus && o.kind != MachineKind::SyncCondenser && o.in_service)
                    other_pv_machine = true;
            if (b.kind == BusKind::PV && !other_pv_machine) b.kind = BusKind::PQ;
        } else {
            kept.push_back(m);
        }
    }
    out.machines = std::move(kept);
    return out;
}

/// Grow the system's scalable load by delta_p MW, distributed across loads
/// in proportion to their base active power. ConstantPowerFactor growth
/// scales q by the same factor; ActiveOnly leaves q untouched.
inline NetworkCase scale_loads(const NetworkCase& net, double delta_p,
                               LoadGrowth growth = LoadGrowth::ConstantPowerFactor) {
    if (delta_p < 0.0) throw Error("scale_loads: delta_p must be non-negative");
    if (delta_p == 0.0) return net;
    double total = net.total_scalable_load_mw();
    if (total <= 0.0)
        throw InfeasibleError("scale_loads: case has no scalable load to grow");
    double factor = 1.0 + delta_p / total;
    NetworkCase out = net;
    for (auto& ld : out.loads) {
        if (!ld.scalable) continue;
        ld.p *= factor;
        if (growth == LoadGrowth::ConstantPowerFactor) ld.q *= factor;
    }
    return out;
}

/// Parameters of one renewable-plant substitution scenario.
struct RenewableScenario {
    MachineKind kind = MachineKind::Dfig;  // Scig, Dfig or SolarPv
    int bus = 2;
    double rating_mva = 60.0;
    double v_set = 1.0;
    double power_factor = 0.95;  // converter Q range for Dfig/SolarPv
};

/// Reactive half-range of a converter plant running at p_mw with the given
/// minimum power factor: +-p*tan(acos(pf)).
inline double converter_q_range_mvar(double p_mw, double power_factor) {
    return p_mw * std::tan(std::acos(power_factor));
}

/// Replace whatever machines serve `scenario.bus` with a single renewable
/// plant dispatched at its MVA rating. Wind/solar kinds controlling voltage
/// get power-factor-derived converter limits; the SCIG kind turns the bus
/// into a PQ injection, so the bus is demoted from PV when it was one.
inline NetworkCase substitute_renewable(const NetworkCase& net, const RenewableScenario& scenario) {
    NetworkCase out = net;
    Bus& b = out.buses[out.bus_index(scenario.bus)];
    if (b.kind == BusKind::Slack)
        throw StructureError("substitute_renewable: cannot replace the slack machine");
    std::vector<Machine> kept;
    for (const auto& m : out.machines)
        if (m.bus != scenario.bus) kept.push_back(m);
    Machine plant;
    plant.bus = scenario.bus;
    plant.kind = scenario.kind;
    plant.p_set = scenario.rating_mva;
    plant.v_set = scenario.v_set;
    plant.rating = scenario.rating_mva;
    switch (scenario.kind) {
        case MachineKind::Scig:
            plant.q_min = plant.q_max = 0.0;  // injection model supplies q
            b.kind = BusKind::PQ;
            break;
        case MachineKind::Dfig:
        case MachineKind::SolarPv: {
            double qr = converter_q_range_mvar(plant.p_set, scenario.power_factor);
            plant.q_min = -qr;
            plant.q_max = qr;
            b.kind = BusKind::PV;
            b.v_setpoint = scenario.v_set;
            break;
        }
        default:
            throw Error("substitute_renewable: kind must be scig, dfig or solar_pv");
    }
    kept.push_back(plant);
    out.machines = std::move(kept);
    return out;
}

}  // namespace vstab
