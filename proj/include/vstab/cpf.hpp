#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include "vstab/acpf.hpp"
#include "vstab/admittance.hpp"
#include "vstab/network.hpp"
#include "vstab/transforms.hpp"

namespace vstab {

struct ContinuationSettings {
    double initial_step_mw = 1.0;
    double min_step_mw = 0.0625;
    double max_total_load_mw = std::numeric_limits<double>::infinity();
    SolverSettings solver;
    LoadGrowth growth = LoadGrowth::ConstantPowerFactor;
    std::optional<ScigParams> scig;  // circuit parameters when the case hosts an SCIG

    void validate() const {
        if (min_step_mw <= 0 || initial_step_mw < min_step_mw)
            throw std::invalid_argument("require 0 < min_step <= initial_step");
        solver.validate();
    }
};

struct PVCurvePoint {
    double total_load_mw = 0.0;  // system scalable load at this step
    Eigen::VectorXd v;           // pu magnitude per bus, case bus order
};

/// A traced P-V curve: converged operating points from the base load up to
/// the last solvable step (the nose). Upper branch only; the full solution
/// behind each point is kept for diagnostics and invariant checks.
struct PVCurveSet {
    std::vector<int> bus_ids;
    std::vector<PVCurvePoint> points;
    std::vector<PowerFlowSolution> solutions;  // aligned with points
    double base_total_load_mw = 0.0;

    bool empty() const { return points.empty(); }

    double nose_total_load_mw() const {
        if (points.empty()) throw Error("empty P-V curve");
        return points.back().total_load_mw;
    }

    const Eigen::VectorXd& nose_v() const {
        if (points.empty()) throw Error("empty P-V curve");
        return points.back().v;
    }

    const PowerFlowSolution& nose_solution() const {
        if (solutions.empty()) throw Error("empty P-V curve");
        return solutions.back();
    }

    int index_of(int bus_id) const {
        for (std::size_t i = 0; i < bus_ids.size(); ++i)
            if (bus_ids[i] == bus_id) return static_cast<int>(i);
        throw StructureError("curve has no bus " + std::to_string(bus_id));
    }
};

/// Trace the P-V curve for a case with the given branches outaged.
///
/// Starting from the base load, the scalable load grows by one step at a
/// time, each point solved warm-started from the previous one. When the
/// power flow stops converging the step is halved and retried from the
/// last converged point; the trace ends once the step would shrink below
/// min_step (or the safety cap is hit). The last converged point is the
/// nose. Throws InfeasibleError when the base case itself has no solution.
inline PVCurveSet trace_pv(const NetworkCase& net, const std::set<int>& outages,
                           const ContinuationSettings& settings) {
    settings.validate();
    const AdmittanceMatrix y = build_admittance(net, outages);
    const ScigParams* scig = settings.scig ? &*settings.scig : nullptr;

    PVCurveSet curve;
    curve.bus_ids = y.bus_ids;
    curve.base_total_load_mw = net.total_scalable_load_mw();

    PowerFlowSolution base = solve_power_flow(net, y, settings.solver, nullptr, scig);
    if (!base.converged)
        throw InfeasibleError("base operating point does not converge");
    curve.points.push_back({curve.base_total_load_mw, base.v});
    curve.solutions.push_back(base);

    if (curve.base_total_load_mw <= 0.0) return curve;  // nothing to grow

    double grown = 0.0;
    double step = settings.initial_step_mw;
    while (true) {
        const double candidate_total = curve.base_total_load_mw + grown + step;
        if (candidate_total > settings.max_total_load_mw + 1e-9) break;
        NetworkCase stressed = scale_loads(net, grown + step, settings.growth);
        PowerFlowSolution sol =
            solve_power_flow(stressed, y, settings.solver, &curve.solutions.back(), scig);
        if (sol.converged) {
            grown += step;
            curve.points.push_back({candidate_total, sol.v});
            curve.solutions.push_back(std::move(sol));
        } else {
            step /= 2.0;
            if (step < settings.min_step_mw) break;
        }
    }
    return curve;
}

/// MW distance from the base operating point to the nose.
inline double loadability_margin(const PVCurveSet& curve) {
    return curve.nose_total_load_mw() - curve.base_total_load_mw;
}

/// The eligible bus with the lowest voltage at the nose point. Buses still
/// holding their setpoint (PV at the nose) are not candidates; buses whose
/// limits switched them to PQ are. Ties within 1e-6 pu go to the lowest id.
inline int critical_bus(const PVCurveSet& curve, const std::vector<int>& eligible) {
    if (curve.empty()) throw Error("critical_bus: empty curve");
    if (eligible.empty()) throw std::invalid_argument("critical_bus: no eligible buses");
    const PowerFlowSolution& nose = curve.nose_solution();

    std::vector<int> candidates;
    for (int id : eligible)
        if (nose.final_kind[curve.index_of(id)] == BusKind::PQ) candidates.push_back(id);
    if (candidates.empty()) candidates = eligible;

    double v_min = std::numeric_limits<double>::infinity();
    for (int id : candidates) v_min = std::min(v_min, curve.nose_v()[curve.index_of(id)]);
    int best = 0;
    for (int id : candidates)
        if (curve.nose_v()[curve.index_of(id)] <= v_min + 1e-6 && (best == 0 || id < best))
            best = id;
    return best;
}

}  // namespace vstab
