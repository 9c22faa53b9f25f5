#pragma once

#include <atomic>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "vstab/cpf.hpp"
#include "vstab/network.hpp"
#include "vstab/topology.hpp"

namespace vstab {

struct ContingencySpec {
    int id = 0;                 // ordinal, 1-based, deterministic
    std::vector<int> outages;   // 1 or 2 outage-eligible branch ids
    std::string label;

    std::set<int> outage_set() const { return {outages.begin(), outages.end()}; }
};

enum class Infeasibility { Islanded, BaseDiverged };

inline const char* to_string(Infeasibility r) {
    return r == Infeasibility::Islanded ? "islanded" : "base_diverged";
}

struct ContingencyResult {
    ContingencySpec spec;
    bool feasible = false;
    std::optional<Infeasibility> reason;
    std::optional<int> critical_bus;
    std::optional<double> margin_mw;
    std::optional<PVCurveSet> curves;
};

/// Critical-bus statistics over one sweep. Rows keep sweep order;
/// infeasible contingencies are listed with their reason but excluded
/// from the histogram.
struct CriticalBusReport {
    struct Row {
        int number = 0;
        std::string label;
        std::optional<int> critical_bus;
        std::optional<double> margin_mw;
        std::optional<Infeasibility> reason;
    };
    std::vector<Row> rows;
    std::map<int, int> histogram;  // bus id -> times critical

    /// Bus with the highest frequency; ties go to the lowest id.
    int modal_bus() const {
        if (histogram.empty()) throw Error("modal_bus: no feasible contingencies");
        int best = histogram.begin()->first;
        int count = histogram.begin()->second;
        for (const auto& [bus, c] : histogram)
            if (c > count) { best = bus; count = c; }
        return best;
    }
};

/// All order-1 or order-2 outage combinations of the eligible branches.
/// Order 1 follows the eligible branches' case order; order 2 enumerates
/// unordered pairs lexicographically in that same order.
inline std::vector<ContingencySpec> enumerate_contingencies(const NetworkCase& net, int order) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("contingency order must be 1 or 2");
    std::vector<const Branch*> eligible;
    for (const auto& br : net.branches)
        if (br.outage_eligible) eligible.push_back(&br);

    std::vector<ContingencySpec> specs;
    int id = 1;
    if (order == 1) {
        for (const Branch* br : eligible)
            specs.push_back({id++, {br->id}, branch_label(net, *br)});
        return specs;
    }
    for (std::size_t i = 0; i < eligible.size(); ++i)
        for (std::size_t j = i + 1; j < eligible.size(); ++j)
            specs.push_back({id++,
                             {eligible[i]->id, eligible[j]->id},
                             branch_label(net, *eligible[i]) + "+" +
                                 branch_label(net, *eligible[j])});
    return specs;
}

/// Fast topology screen: a contingency that cuts any load or machine bus
/// from the slack island cannot be traced and is reported as Islanded.
inline std::optional<Infeasibility> screen_contingency(const NetworkCase& net,
                                                       const ContingencySpec& spec) {
    IslandReport islands = check_connectivity(net, spec.outage_set());
    if (!islands.slack_island_index) return Infeasibility::Islanded;
    const std::set<int>& reachable = islands.slack_island();
    for (const auto& ld : net.loads)
        if ((ld.p != 0.0 || ld.q != 0.0) && !reachable.count(ld.bus))
            return Infeasibility::Islanded;
    for (const auto& m : net.machines)
        if (m.in_service && !reachable.count(m.bus)) return Infeasibility::Islanded;
    return std::nullopt;
}

/// Run one contingency end to end: screen, trace, classify.
inline ContingencyResult run_contingency(const NetworkCase& net, const ContingencySpec& spec,
                                         const ContinuationSettings& settings,
                                         const std::vector<int>& eligible_buses,
                                         bool keep_curves = true) {
    ContingencyResult result;
    result.spec = spec;
    if (auto reason = screen_contingency(net, spec)) {
        result.reason = reason;
        return result;
    }
    try {
        PVCurveSet curve = trace_pv(net, spec.outage_set(), settings);
        result.feasible = true;
        result.critical_bus = critical_bus(curve, eligible_buses);
        result.margin_mw = loadability_margin(curve);
        if (keep_curves) result.curves = std::move(curve);
    } catch (const InfeasibleError&) {
        result.reason = Infeasibility::BaseDiverged;
    }
    return result;
}

/// Sweep a list of contingencies. Workers pull specs from a shared queue;
/// each result lands in its spec's slot, so the output order (and content)
/// is independent of the worker count.
inline std::vector<ContingencyResult> run_sweep(const NetworkCase& net,
                                                const std::vector<ContingencySpec>& specs,
                                                const ContinuationSettings& settings,
                                                int workers = 1, bool keep_curves = true) {
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    std::vector<ContingencyResult> results(specs.size());
    const std::vector<int> eligible = net.load_bus_ids();

    std::atomic<std::size_t> next{0};
    auto drain = [&]() {
        for (std::size_t i = next.fetch_add(1); i < specs.size(); i = next.fetch_add(1))
            results[i] = run_contingency(net, specs[i], settings, eligible, keep_curves);
    };
    if (workers == 1 || specs.size() <= 1) {
        drain();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers - 1; ++w) pool.emplace_back(drain);
        drain();
        for (auto& t : pool) t.join();
    }
    return results;
}

/// Histogram of critical buses over the feasible results, preserving sweep
/// order in the row list.
inline CriticalBusReport aggregate_results(const std::vector<ContingencyResult>& results) {
    CriticalBusReport report;
    for (const auto& r : results) {
        report.rows.push_back(
            {r.spec.id, r.spec.label, r.critical_bus, r.margin_mw, r.reason});
        if (r.feasible && r.critical_bus) ++report.histogram[*r.critical_bus];
    }
    return report;
}

}  // namespace vstab
