#pragma once

#include <complex>
#include <map>
#include <set>
#include <vector>

#include <Eigen/Sparse>

#include "vstab/network.hpp"

namespace vstab {

/// Nodal admittance matrix in per unit, row-major so solvers can walk
/// rows cheaply. Row/column order follows the case's bus order; the id
/// map translates bus ids to matrix indices. Immutable after assembly.
struct AdmittanceMatrix {
    Eigen::SparseMatrix<Complex, Eigen::RowMajor> y;
    std::vector<int> bus_ids;        // index -> bus id
    std::map<int, int> index_of_bus; // bus id -> index

    int size() const { return static_cast<int>(bus_ids.size()); }
};

/// Assemble the bus admittance matrix with the given branches outaged.
/// Branch stamps use the standard off-nominal tap model (ratio on the
/// from side) with line charging split half per terminal; bus shunts land
/// on the diagonal.
inline AdmittanceMatrix build_admittance(const NetworkCase& net, const std::set<int>& outages) {
    for (int id : outages) net.branch(id);  // reject unknown ids

    AdmittanceMatrix out;
    const int n = static_cast<int>(net.buses.size());
    out.bus_ids.reserve(n);
    for (int i = 0; i < n; ++i) {
        out.bus_ids.push_back(net.buses[i].id);
        out.index_of_bus[net.buses[i].id] = i;
    }

    std::vector<Eigen::Triplet<Complex>> trips;
    trips.reserve(net.branches.size() * 4 + n);
    for (const auto& br : net.branches) {
        if (outages.count(br.id)) continue;
        const int f = out.index_of_bus.at(br.from_bus);
        const int t = out.index_of_bus.at(br.to_bus);
        const Complex ys = 1.0 / Complex(br.r, br.x);
        const Complex ysh(0.0, br.b_charging / 2.0);
        const double a = br.tap_ratio;
        trips.emplace_back(f, f, (ys + ysh) / (a * a));
        trips.emplace_back(t, t, ys + ysh);
        trips.emplace_back(f, t, -ys / a);
        trips.emplace_back(t, f, -ys / a);
    }
    for (int i = 0; i < n; ++i)
        trips.emplace_back(i, i, Complex(net.buses[i].shunt_g, net.buses[i].shunt_b));

    out.y.resize(n, n);
    out.y.setFromTriplets(trips.begin(), trips.end());
    return out;
}

}  // namespace vstab
