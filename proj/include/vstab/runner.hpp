#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "vstab/contingency.hpp"
#include "vstab/cpf.hpp"
#include "vstab/hash.hpp"
#include "vstab/report.hpp"
#include "vstab/sidecar.hpp"
#include "vstab/transforms.hpp"

namespace vstab {

enum class ScMode { With, Without };

/// One end-to-end analysis configuration. The defaults reproduce the
/// reference study: 1 MW steps, constant-power-factor growth, reactive
/// limits not considered (the reference tool's load-flow default; enable
/// with enforce_q_limits).
struct RunConfig {
    std::string case_path;
    std::string sidecar_path;
    ScMode sc_mode = ScMode::Without;
    int order = 1;  // 0: base curve only, 1: N-1 sweep, 2: N-2 sweep
    double step_mw = 1.0;
    double min_step_mw = 0.0625;
    double max_total_load_mw = std::numeric_limits<double>::infinity();
    bool enforce_q_limits = false;
    LoadGrowth growth = LoadGrowth::ConstantPowerFactor;
    std::optional<RenewableScenario> renewable;
    std::string output_dir = "out";
    int workers = 1;
    bool keep_contingency_curves = true;  // include every contingency in pv_curves.csv

    void validate() const {
        if (step_mw <= 0) throw std::invalid_argument("step_mw must be positive");
        if (min_step_mw <= 0 || min_step_mw > step_mw)
            throw std::invalid_argument("require 0 < min_step_mw <= step_mw");
        if (workers < 1) throw std::invalid_argument("workers must be >= 1");
        if (order < 0 || order > 2) throw std::invalid_argument("order must be 0, 1 or 2");
    }

    ContinuationSettings continuation(const SidecarConfig& sidecar) const {
        ContinuationSettings cs;
        cs.initial_step_mw = step_mw;
        cs.min_step_mw = min_step_mw;
        cs.max_total_load_mw = max_total_load_mw;
        cs.solver.enforce_q_limits = enforce_q_limits;
        cs.growth = growth;
        double rating = renewable ? renewable->rating_mva : 60.0;
        ScigParams scig = scig_params_from(sidecar.scig_params, rating);
        if (!sidecar.scig_params.count("b_cap"))
            scig.b_cap = scig_no_load_compensation(scig);
        cs.scig = scig;
        return cs;
    }
};

struct RunReport {
    RunConfig config;
    NetworkCase net;  // the analyzed case, transforms applied
    std::string case_sha1, sidecar_sha1;
    PVCurveSet base_curve;
    int base_critical_bus = 0;
    double base_margin_mw = 0.0;
    std::vector<ContingencyResult> results;
    CriticalBusReport report;
    long total_nr_iterations = 0;
    std::size_t total_curve_points = 0;
    double wall_seconds = 0.0;  // console diagnostics only, never written to files
};

namespace detail {

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline const char* to_string(ScMode m) { return m == ScMode::With ? "with" : "without"; }
inline const char* to_string(LoadGrowth g) {
    return g == LoadGrowth::ConstantPowerFactor ? "constant_pf" : "active_only";
}

}  // namespace detail

/// Execute the full pipeline: ingest, SC mode, optional renewable
/// substitution, base trace, enumeration, sweep, aggregation. Pure
/// computation; write_outputs handles the file side.
inline RunReport run_analysis(const RunConfig& config) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();

    RunReport rep;
    rep.config = config;
    const std::string case_text = detail::read_text_file(config.case_path);
    const std::string sidecar_text = detail::read_text_file(config.sidecar_path);
    rep.case_sha1 = git_blob_sha1(case_text);
    rep.sidecar_sha1 = git_blob_sha1(sidecar_text);

    const SidecarConfig sidecar = parse_sidecar(sidecar_text);
    NetworkCase net = apply_sidecar(parse_case(case_text), sidecar);
    net = apply_sc_mode(net, config.sc_mode == ScMode::With);
    if (config.renewable) net = substitute_renewable(net, *config.renewable);
    rep.net = net;

    const ContinuationSettings cs = config.continuation(sidecar);
    rep.base_curve = trace_pv(net, {}, cs);
    rep.base_critical_bus = critical_bus(rep.base_curve, net.load_bus_ids());
    rep.base_margin_mw = loadability_margin(rep.base_curve);

    if (config.order > 0) {
        auto specs = enumerate_contingencies(net, config.order);
        rep.results = run_sweep(net, specs, cs, config.workers, config.keep_contingency_curves);
        rep.report = aggregate_results(rep.results);
    }

    for (const auto& sol : rep.base_curve.solutions) rep.total_nr_iterations += sol.iterations;
    rep.total_curve_points += rep.base_curve.points.size();
    for (const auto& r : rep.results) {
        if (!r.curves) continue;
        rep.total_curve_points += r.curves->points.size();
        for (const auto& sol : r.curves->solutions) rep.total_nr_iterations += sol.iterations;
    }
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

inline Json config_json(const RunConfig& c) {
    Json j;
    j["case_path"] = c.case_path;
    j["sidecar_path"] = c.sidecar_path;
    j["sc_mode"] = detail::to_string(c.sc_mode);
    j["order"] = c.order;
    j["step_mw"] = detail::round6(c.step_mw);
    j["min_step_mw"] = detail::round6(c.min_step_mw);
    j["enforce_q_limits"] = c.enforce_q_limits;
    j["growth"] = detail::to_string(c.growth);
    if (c.renewable) {
        j["renewable"] = {{"kind", to_string(c.renewable->kind)},
                          {"bus", c.renewable->bus},
                          {"rating_mva", detail::round6(c.renewable->rating_mva)}};
    }
    // worker count and timing are execution details: they cannot change any
    // result, and leaving them out keeps reruns byte-identical
    return j;
}

/// Everything a published table needs to be traced back: config echo,
/// input hashes, solver settings, base-case results, per-contingency rows,
/// histogram. Wall-clock time is deliberately absent so reruns and
/// different worker counts emit identical bytes.
inline Json run_report_json(const RunReport& rep) {
    Json j;
    j["config"] = config_json(rep.config);
    j["inputs"] = {{"case_sha1", rep.case_sha1}, {"sidecar_sha1", rep.sidecar_sha1}};
    j["base"] = {{"critical_bus", rep.base_critical_bus},
                 {"margin_mw", detail::round6(rep.base_margin_mw)},
                 {"nose_total_load_mw", detail::round6(rep.base_curve.nose_total_load_mw())},
                 {"points", rep.base_curve.points.size()}};
    Json body = summary_json_body(rep.report);
    j["contingencies"] = std::move(body["contingencies"]);
    j["histogram"] = std::move(body["histogram"]);
    if (body.contains("modal_bus")) j["modal_bus"] = body["modal_bus"];
    int feasible = 0, islanded = 0, diverged = 0;
    for (const auto& r : rep.results) {
        if (r.feasible) ++feasible;
        else if (r.reason == Infeasibility::Islanded) ++islanded;
        else ++diverged;
    }
    j["stats"] = {{"contingencies", rep.results.size()},
                  {"feasible", feasible},
                  {"islanded", islanded},
                  {"base_diverged", diverged},
                  {"nr_iterations", rep.total_nr_iterations},
                  {"curve_points", rep.total_curve_points}};
    return j;
}

/// Write pv_curves.csv, summary.csv, summary.json and histogram.csv into
/// the configured output directory. Partially written files are removed
/// when any write fails.
inline std::vector<std::string> write_outputs(const RunReport& rep) {
    namespace fs = std::filesystem;
    const fs::path dir = rep.config.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());

    std::vector<std::string> written;
    try {
        std::vector<LabeledCurve> curves{{"base", &rep.base_curve}};
        for (const auto& r : rep.results)
            if (r.curves) curves.push_back({r.spec.label, &*r.curves});
        const std::string pv_path = (dir / "pv_curves.csv").string();
        emit_pv_csv(curves, pv_path);
        written.push_back(pv_path);

        const std::string summary_csv = (dir / "summary.csv").string();
        const std::string summary_json = (dir / "summary.json").string();
        detail::write_file(summary_csv, summary_csv_text(rep.report));
        written.push_back(summary_csv);
        detail::write_file(summary_json, run_report_json(rep).dump(2) + "\n");
        written.push_back(summary_json);

        const std::string hist_path = (dir / "histogram.csv").string();
        emit_histogram_csv(rep.report, hist_path);
        written.push_back(hist_path);
    } catch (...) {
        for (const auto& p : written) fs::remove(p, ec);
        throw;
    }
    return written;
}

}  // namespace vstab
