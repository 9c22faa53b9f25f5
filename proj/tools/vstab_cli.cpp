// vstab: static voltage-stability analysis on transmission cases.
//
// Traces P-V curves by continuation power flow, sweeps N-1/N-2 line
// contingencies, and reports critical buses with or without synchronous
// condensers and with optional renewable-plant substitution.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "vstab/runner.hpp"

namespace {

constexpr int kExitParse = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitIo = 4;

vstab::RenewableScenario parse_renewable(const std::string& text) {
    // kind:bus:mva, e.g. dfig:2:60
    vstab::RenewableScenario sc;
    auto c1 = text.find(':');
    auto c2 = text.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw CLI::ValidationError("--renewable expects kind:bus:mva");
    std::string kind = text.substr(0, c1);
    if (kind == "scig") sc.kind = vstab::MachineKind::Scig;
    else if (kind == "dfig") sc.kind = vstab::MachineKind::Dfig;
    else if (kind == "solar_pv" || kind == "solar") sc.kind = vstab::MachineKind::SolarPv;
    else throw CLI::ValidationError("--renewable kind must be scig, dfig or solar_pv");
    sc.bus = std::stoi(text.substr(c1 + 1, c2 - c1 - 1));
    sc.rating_mva = std::stod(text.substr(c2 + 1));
    return sc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"static voltage stability: P-V curves and line-contingency screening"};

    vstab::RunConfig config;
    std::string sc_mode = "without";
    std::string growth = "constant_pf";
    std::string renewable;

    app.add_option("--case", config.case_path, "case file (IEEE common data format)")
        ->required();
    app.add_option("--sidecar", config.sidecar_path,
                   "sidecar config (machine kinds, outage-eligible lines)")
        ->required();
    app.add_option("--sc", sc_mode, "synchronous condensers: with|without")
        ->check(CLI::IsMember({"with", "without"}))
        ->capture_default_str();
    app.add_option("--order", config.order, "0: base curve only, 1: N-1 sweep, 2: N-2 sweep")
        ->check(CLI::Range(0, 2))
        ->capture_default_str();
    app.add_option("--step-mw", config.step_mw, "initial load step")
        ->capture_default_str();
    app.add_option("--min-step-mw", config.min_step_mw, "smallest step before the trace stops")
        ->capture_default_str();
    app.add_option("--growth", growth, "load growth: constant_pf|active_only")
        ->check(CLI::IsMember({"constant_pf", "active_only"}))
        ->capture_default_str();
    app.add_flag("--q-limits", config.enforce_q_limits,
                 "enforce machine reactive limits (off by default, matching the"
                 " reference load-flow behavior)");
    app.add_option("--renewable", renewable, "substitute a plant, kind:bus:mva (e.g. dfig:2:60)");
    app.add_option("--out", config.output_dir, "output directory")->capture_default_str();
    app.add_option("--workers", config.workers, "parallel contingency workers")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    config.sc_mode = sc_mode == "with" ? vstab::ScMode::With : vstab::ScMode::Without;
    config.growth = growth == "active_only" ? vstab::LoadGrowth::ActiveOnly
                                            : vstab::LoadGrowth::ConstantPowerFactor;
    try {
        if (!renewable.empty()) config.renewable = parse_renewable(renewable);
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitParse;
    }

    try {
        vstab::RunReport rep = vstab::run_analysis(config);
        auto files = vstab::write_outputs(rep);

        std::printf("case: %zu buses, %zu branches, base load %.1f MW (sha1 %.12s)\n",
                    rep.net.buses.size(), rep.net.branches.size(),
                    rep.net.total_scalable_load_mw(), rep.case_sha1.c_str());
        std::printf("base case: nose %.2f MW, margin %.2f MW, critical bus %d\n",
                    rep.base_curve.nose_total_load_mw(), rep.base_margin_mw,
                    rep.base_critical_bus);
        if (!rep.results.empty()) {
            int feasible = 0;
            for (const auto& r : rep.results) feasible += r.feasible;
            std::printf("contingencies: %zu swept, %d feasible, modal critical bus %d\n",
                        rep.results.size(), feasible, rep.report.modal_bus());
        }
        for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
        std::fprintf(stderr, "completed in %.2f s (%ld NR iterations, %zu curve points)\n",
                     rep.wall_seconds, rep.total_nr_iterations, rep.total_curve_points);
        return 0;
    } catch (const vstab::ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return kExitParse;
    } catch (const vstab::StructureError& e) {
        std::fprintf(stderr, "case error: %s\n", e.what());
        return kExitParse;
    } catch (const vstab::InfeasibleError& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return kExitInfeasible;
    } catch (const vstab::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
