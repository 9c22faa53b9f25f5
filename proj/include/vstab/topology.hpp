#pragma once

#include <optional>
#include <set>
#include <vector>

#include "vstab/network.hpp"

namespace vstab {

/// Connected components of the network graph under a given outage set.
struct IslandReport {
    std::vector<std::set<int>> islands;        // bus-id sets, ordered by smallest member
    std::optional<int> slack_island_index;     // index into islands
    std::set<int> disconnected_load_buses;     // load buses outside the slack island

    bool fully_connected() const { return islands.size() == 1; }

    const std::set<int>& slack_island() const {
        if (!slack_island_index) throw StructureError("no slack island");
        return islands[*slack_island_index];
    }
};

/// Breadth-first island detection over in-service, non-outaged branches.
inline IslandReport check_connectivity(const NetworkCase& net, const std::set<int>& outages) {
    IslandReport report;
    const int n = static_cast<int>(net.buses.size());
    std::vector<int> comp(n, -1);
    std::vector<std::vector<int>> adjacency(n);
    for (const auto& br : net.branches) {
        if (outages.count(br.id)) continue;
        int f = net.bus_index(br.from_bus);
        int t = net.bus_index(br.to_bus);
        adjacency[f].push_back(t);
        adjacency[t].push_back(f);
    }
    int n_comp = 0;
    for (int start = 0; start < n; ++start) {
        if (comp[start] >= 0) continue;
        std::vector<int> queue{start};
        comp[start] = n_comp;
        while (!queue.empty()) {
            int u = queue.back();
            queue.pop_back();
            for (int w : adjacency[u]) {
                if (comp[w] >= 0) continue;
                comp[w] = n_comp;
                queue.push_back(w);
            }
        }
        ++n_comp;
    }
    report.islands.assign(n_comp, {});
    for (int i = 0; i < n; ++i) report.islands[comp[i]].insert(net.buses[i].id);

    int slack_id = 0;
    for (const auto& b : net.buses)
        if (b.kind == BusKind::Slack) slack_id = b.id;
    for (std::size_t k = 0; k < report.islands.size(); ++k)
        if (slack_id != 0 && report.islands[k].count(slack_id))
            report.slack_island_index = static_cast<int>(k);

    for (int id : net.load_bus_ids())
        if (!report.slack_island_index || !report.slack_island().count(id))
            report.disconnected_load_buses.insert(id);
    return report;
}

}  // namespace vstab
