#pragma once

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "vstab/acpf.hpp"
#include "vstab/network.hpp"
#include "vstab/sidecar.hpp"

namespace vstab::testing {

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("test data missing: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string data_path(const std::string& name) {
    return std::string(VSTAB_DATA_DIR) + "/" + name;
}

/// The paper case: archive CDF + sidecar (split 1-2, machine kinds,
/// outage-eligible lines).
inline NetworkCase load_ieee14() {
    return load_case(slurp(data_path("ieee14.cdf")), slurp(data_path("ieee14.sidecar.toml")));
}

/// Slack feeding one PQ load over a single line; the workhorse for
/// closed-form checks.
inline NetworkCase two_bus_case(double x, double load_p_mw, double load_q_mvar,
                                double r = 0.0, double v_slack = 1.0) {
    NetworkCase net;
    net.base_mva = 100.0;
    net.buses.push_back({1, "Slack", BusKind::Slack, v_slack, 0.0, 0.0, 0.0});
    net.buses.push_back({2, "Load", BusKind::PQ, 1.0, 0.0, 0.0, 0.0});
    Branch br;
    br.id = 1;
    br.from_bus = 1;
    br.to_bus = 2;
    br.r = r;
    br.x = x;
    br.outage_eligible = true;
    net.branches.push_back(br);
    if (load_p_mw != 0.0 || load_q_mvar != 0.0)
        net.loads.push_back({2, load_p_mw, load_q_mvar, true});
    return net;
}

/// Exact load-bus voltage of the lossless two-bus system consuming
/// (p, q) pu behind reactance x pu from a 1.0 pu slack: the positive
/// upper-branch root of v^4 + (2qx - 1)v^2 + x^2(p^2 + q^2) = 0.
inline double two_bus_voltage_exact(double p, double q, double x) {
    const double b = 2.0 * q * x - 1.0;
    const double disc = b * b - 4.0 * x * x * (p * p + q * q);
    if (disc < 0.0) throw InfeasibleError("two-bus case beyond maximum transfer");
    return std::sqrt((-b + std::sqrt(disc)) / 2.0);
}

inline double two_bus_angle_exact(double p, double x, double v) {
    return -std::asin(p * x / v);
}

/// Central-difference Jacobian of minus the mismatch, which equals the
/// analytic d(P,Q)/d(theta,V) ordering of power_flow_jacobian.
inline Eigen::MatrixXd fd_jacobian(const Schedule& sched, const AdmittanceMatrix& y,
                                   const Eigen::VectorXd& v, const Eigen::VectorXd& theta,
                                   const std::vector<BusKind>& kinds, double h = 1e-6) {
    auto lay = detail::layout_for(kinds);
    const int n_p = static_cast<int>(lay.p_rows.size());
    const int n_q = static_cast<int>(lay.q_rows.size());
    Eigen::MatrixXd jac(n_p + n_q, n_p + n_q);
    for (int c = 0; c < n_p + n_q; ++c) {
        Eigen::VectorXd vp = v, vm = v, tp = theta, tm = theta;
        if (c < n_p) {
            tp[lay.p_rows[c]] += h;
            tm[lay.p_rows[c]] -= h;
        } else {
            vp[lay.q_rows[c - n_p]] += h;
            vm[lay.q_rows[c - n_p]] -= h;
        }
        Eigen::VectorXd mp = power_mismatch(sched, y, vp, tp, kinds);
        Eigen::VectorXd mm = power_mismatch(sched, y, vm, tm, kinds);
        jac.col(c) = -(mp - mm) / (2.0 * h);
    }
    return jac;
}

/// Grid search over generating slips: the slip whose delivered power comes
/// closest to p_target. Independent of the bisection path in
/// scig_equilibrium.
inline double scig_slip_sweep_oracle(double v, double p_target, const ScigParams& params,
                                     double s_lo = -0.1, int grid = 100000) {
    double best_s = 0.0;
    double best_err = std::abs(scig_delivered_power(v, 0.0, params) - p_target);
    for (int k = 1; k <= grid; ++k) {
        const double s = s_lo * k / grid;
        const double err = std::abs(scig_delivered_power(v, s, params) - p_target);
        if (err < best_err) {
            best_err = err;
            best_s = s;
        }
    }
    return best_s;
}

}  // namespace vstab::testing
