// Scratch exploration harness (not installed, not part of the suite).
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vstab/contingency.hpp"
#include "vstab/cpf.hpp"
#include "vstab/sidecar.hpp"

using namespace vstab;

static std::string slurp(const char* path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int main(int argc, char** argv) {
    NetworkCase base = load_case(slurp("data/ieee14.cdf"), slurp("data/ieee14.sidecar.toml"));
    std::printf("buses=%zu branches=%zu loads=%zu machines=%zu total=%.1f MW\n",
                base.buses.size(), base.branches.size(), base.loads.size(),
                base.machines.size(), base.total_scalable_load_mw());

    bool q_limits = true, active_only = false, nominal_taps = false;
    for (int a = 2; a < argc; ++a) {
        std::string flag = argv[a];
        if (flag == "nolimits") q_limits = false;
        if (flag == "ponly") active_only = true;
        if (flag == "taps1") nominal_taps = true;
    }
    bool fine = false;
    for (int a = 2; a < argc; ++a)
        if (std::string(argv[a]) == "fine") fine = true;
    if (nominal_taps)
        for (auto& br : base.branches)
            if (br.is_transformer) br.tap_ratio = 1.0;
    std::printf("q_limits=%d active_only=%d taps1=%d\n", q_limits, active_only, nominal_taps);
    for (bool with_sc : {false, true}) {
        NetworkCase net = apply_sc_mode(base, with_sc);
        AdmittanceMatrix y = build_admittance(net, {});
        PowerFlowSolution sol = solve_power_flow(net, y);
        std::printf("\n[%s] base PF: conv=%d iters=%d mism=%.2e slackP=%.2f MW\n",
                    with_sc ? "with SC" : "no SC", sol.converged, sol.iterations,
                    sol.max_mismatch, sol.p_at(1) * net.base_mva);

        ContinuationSettings cs;
        cs.solver.enforce_q_limits = q_limits;
        if (active_only) cs.growth = LoadGrowth::ActiveOnly;
        if (fine) cs.min_step_mw = 0.001;
        PVCurveSet curve = trace_pv(net, {}, cs);
        std::printf("  nose=%.2f MW margin=%.2f MW points=%zu\n", curve.nose_total_load_mw(),
                    loadability_margin(curve), curve.points.size());
        const PowerFlowSolution& nose = curve.nose_solution();
        for (std::size_t i = 0; i < curve.bus_ids.size(); ++i)
            std::printf("   bus %2d v=%.4f kind=%s\n", curve.bus_ids[i], nose.v[i],
                        to_string(nose.final_kind[i]));
        std::printf("  critical bus = %d\n", critical_bus(curve, net.load_bus_ids()));

        if (argc > 1 && std::string(argv[1]) == "sweep") {
            auto specs = enumerate_contingencies(net, 1);
            auto results = run_sweep(net, specs, cs, 4, false);
            for (const auto& r : results)
                std::printf("  %-22s -> %s\n", r.spec.label.c_str(),
                            r.feasible ? std::to_string(*r.critical_bus).c_str()
                                       : to_string(*r.reason));
            auto rep = aggregate_results(results);
            std::printf("  N-1 modal bus = %d\n", rep.modal_bus());
        }
        if (argc > 1 && std::string(argv[1]) == "n2v" && with_sc) {
            auto specs = enumerate_contingencies(net, 2);
            auto results = run_sweep(net, specs, cs, 4, true);
            for (const auto& r : results) {
                if (!r.feasible) continue;
                const auto& cv = *r.curves;
                double v5 = cv.nose_v()[cv.index_of(5)];
                double v14 = cv.nose_v()[cv.index_of(14)];
                std::printf("  %-40s -> %2d  v5=%.4f v14=%.4f gap=%+.4f\n",
                            r.spec.label.c_str(), *r.critical_bus, v5, v14, v5 - v14);
            }
        }
        if (argc > 1 && std::string(argv[1]) == "n2") {
            auto specs = enumerate_contingencies(net, 2);
            auto results = run_sweep(net, specs, cs, 1, false);
            auto rep = aggregate_results(results);
            int islanded = 0;
            for (const auto& r : results)
                if (!r.feasible) {
                    ++islanded;
                    std::printf("  infeasible: %s (%s)\n", r.spec.label.c_str(),
                                to_string(*r.reason));
                }
            std::printf("  N-2: specs=%zu infeasible=%d modal=%d\n", specs.size(), islanded,
                        rep.modal_bus());
            for (const auto& [bus, c] : rep.histogram) std::printf("   bus %d: %d\n", bus, c);
        }
    }
    return 0;
}
