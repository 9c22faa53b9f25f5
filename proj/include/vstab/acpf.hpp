#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "vstab/admittance.hpp"
#include "vstab/network.hpp"
#include "vstab/renewgen.hpp"

namespace vstab {

struct SolverSettings {
    double tolerance = 1e-8;       // pu mismatch, infinity norm
    int max_iterations = 50;
    bool enforce_q_limits = true;
    bool flat_start = false;       // true forces a flat start even when warm data exists

    void validate() const {
        if (tolerance <= 0) throw std::invalid_argument("tolerance must be positive");
        if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    }
};

/// A PV bus that ran into a reactive limit and now holds Q instead of V.
enum class QPin { None, AtMin, AtMax };

struct SwitchEvent {
    int bus = 0;
    int iteration = 0;
    bool to_pq = true;  // false: released back to PV
    QPin pin = QPin::None;
};

struct PowerFlowSolution {
    std::vector<int> bus_ids;
    Eigen::VectorXd v;         // pu magnitude, case bus order
    Eigen::VectorXd theta;     // radians
    Eigen::VectorXd p_inj;     // pu net injection
    Eigen::VectorXd q_inj;     // pu net injection; limit-pinned buses carry the limit exactly
    std::vector<BusKind> final_kind;
    int iterations = 0;
    bool converged = false;
    double max_mismatch = std::numeric_limits<double>::infinity();
    std::vector<SwitchEvent> switch_events;
    std::vector<int> frozen_buses;  // oscillation guard engaged

    int index_of(int bus_id) const {
        for (std::size_t i = 0; i < bus_ids.size(); ++i)
            if (bus_ids[i] == bus_id) return static_cast<int>(i);
        throw StructureError("solution has no bus " + std::to_string(bus_id));
    }
    double v_at(int bus_id) const { return v[index_of(bus_id)]; }
    double theta_at(int bus_id) const { return theta[index_of(bus_id)]; }
    double p_at(int bus_id) const { return p_inj[index_of(bus_id)]; }
    double q_at(int bus_id) const { return q_inj[index_of(bus_id)]; }
};

/// Scheduled bus constraints in per unit on the system base: net injections
/// for PQ buses, setpoints and net-injection reactive limits for PV buses.
struct Schedule {
    std::vector<BusKind> kinds;
    Eigen::VectorXd p_sched;
    Eigen::VectorXd q_sched;
    Eigen::VectorXd v_set;
    Eigen::VectorXd q_min;   // net-injection lower limit (machines minus load)
    Eigen::VectorXd q_max;
    std::vector<bool> limited;  // PV bus carries enforceable limits
};

/// Translate case data into scheduled injections via the machine bus
/// models. SCIG machines become fixed injections evaluated at the supplied
/// terminal-voltage estimates (1.0 pu when absent); the solve() wrapper
/// iterates those estimates to self-consistency.
inline Schedule make_schedule(const NetworkCase& net, const ScigParams* scig = nullptr,
                              const std::map<int, double>* scig_v = nullptr) {
    const int n = static_cast<int>(net.buses.size());
    Schedule s;
    s.kinds.assign(n, BusKind::PQ);
    s.p_sched = Eigen::VectorXd::Zero(n);
    s.q_sched = Eigen::VectorXd::Zero(n);
    s.v_set = Eigen::VectorXd::Ones(n);
    s.q_min = Eigen::VectorXd::Zero(n);
    s.q_max = Eigen::VectorXd::Zero(n);
    s.limited.assign(n, false);

    const double base = net.base_mva;
    for (const auto& ld : net.loads) {
        int i = net.bus_index(ld.bus);
        s.p_sched[i] -= ld.p / base;
        s.q_sched[i] -= ld.q / base;
    }
    Eigen::VectorXd machine_q_min = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd machine_q_max = Eigen::VectorXd::Zero(n);
    std::vector<bool> has_pv_machine(n, false);

    for (int i = 0; i < n; ++i) {
        const Bus& b = net.buses[i];
        if (b.kind == BusKind::Slack) {
            s.kinds[i] = BusKind::Slack;
            s.v_set[i] = b.v_setpoint;
        }
        for (const Machine* m : net.machines_at(b.id)) {
            double v_est = 1.0;
            if (scig_v) {
                auto it = scig_v->find(b.id);
                if (it != scig_v->end()) v_est = it->second;
            }
            BusModelSpec spec = bus_model(*m, scig, v_est);
            if (spec.is_pv()) {
                const PvBusMode& pv = spec.pv();
                s.p_sched[i] += pv.p_set_mw / base;
                machine_q_min[i] += pv.q_min_mvar / base;
                machine_q_max[i] += pv.q_max_mvar / base;
                has_pv_machine[i] = true;
                s.v_set[i] = pv.v_set;
            } else {
                const PqInjectionMode& pq = spec.pq();
                s.p_sched[i] += pq.p_mw / base;
                s.q_sched[i] += pq.q_mvar / base;
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        if (s.kinds[i] == BusKind::Slack) continue;
        if (!has_pv_machine[i]) continue;
        s.kinds[i] = BusKind::PV;
        // net-injection limits: machine range shifted by the fixed local q
        s.q_min[i] = machine_q_min[i] + s.q_sched[i];
        s.q_max[i] = machine_q_max[i] + s.q_sched[i];
        s.limited[i] = true;
    }
    return s;
}

namespace detail {

/// Net complex injections implied by the network state.
inline void bus_injections(const AdmittanceMatrix& y, const Eigen::VectorXd& v,
                           const Eigen::VectorXd& theta, Eigen::VectorXd& p,
                           Eigen::VectorXd& q) {
    const int n = y.size();
    p = Eigen::VectorXd::Zero(n);
    q = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        double pi = 0.0, qi = 0.0;
        for (Eigen::SparseMatrix<Complex, Eigen::RowMajor>::InnerIterator it(y.y, i); it;
             ++it) {
            const int k = static_cast<int>(it.col());
            const double g = it.value().real();
            const double b = it.value().imag();
            const double dth = theta[i] - theta[k];
            const double c = std::cos(dth), sn = std::sin(dth);
            pi += v[k] * (g * c + b * sn);
            qi += v[k] * (g * sn - b * c);
        }
        p[i] = v[i] * pi;
        q[i] = v[i] * qi;
    }
}

struct MismatchLayout {
    std::vector<int> p_rows;  // bus index per dP row (all non-slack)
    std::vector<int> q_rows;  // bus index per dQ row (PQ only)
    std::vector<int> p_row_of_bus, q_row_of_bus;  // -1 when absent
};

inline MismatchLayout layout_for(const std::vector<BusKind>& kinds) {
    MismatchLayout lay;
    const int n = static_cast<int>(kinds.size());
    lay.p_row_of_bus.assign(n, -1);
    lay.q_row_of_bus.assign(n, -1);
    for (int i = 0; i < n; ++i) {
        if (kinds[i] == BusKind::Slack) continue;
        lay.p_row_of_bus[i] = static_cast<int>(lay.p_rows.size());
        lay.p_rows.push_back(i);
    }
    for (int i = 0; i < n; ++i) {
        if (kinds[i] != BusKind::PQ) continue;
        lay.q_row_of_bus[i] = static_cast<int>(lay.q_rows.size());
        lay.q_rows.push_back(i);
    }
    return lay;
}

}  // namespace detail

/// Power mismatch (scheduled minus computed injections) in the documented
/// fixed ordering: dP for every non-slack bus in bus order, then dQ for
/// every PQ bus in bus order.
inline Eigen::VectorXd power_mismatch(const Schedule& sched, const AdmittanceMatrix& y,
                                      const Eigen::VectorXd& v, const Eigen::VectorXd& theta,
                                      const std::vector<BusKind>& kinds) {
    Eigen::VectorXd p, q;
    detail::bus_injections(y, v, theta, p, q);
    auto lay = detail::layout_for(kinds);
    Eigen::VectorXd m(lay.p_rows.size() + lay.q_rows.size());
    for (std::size_t r = 0; r < lay.p_rows.size(); ++r)
        m[r] = sched.p_sched[lay.p_rows[r]] - p[lay.p_rows[r]];
    for (std::size_t r = 0; r < lay.q_rows.size(); ++r)
        m[lay.p_rows.size() + r] = sched.q_sched[lay.q_rows[r]] - q[lay.q_rows[r]];
    return m;
}

inline Eigen::VectorXd power_mismatch(const NetworkCase& net, const AdmittanceMatrix& y,
                                      const Eigen::VectorXd& v, const Eigen::VectorXd& theta,
                                      const std::vector<BusKind>& kinds,
                                      const ScigParams* scig = nullptr) {
    std::map<int, double> scig_v;
    for (const auto& m : net.machines)
        if (m.kind == MachineKind::Scig && m.in_service)
            scig_v[m.bus] = v[net.bus_index(m.bus)];
    return power_mismatch(make_schedule(net, scig, &scig_v), y, v, theta, kinds);
}

/// Analytic Jacobian of the computed injections, d(P,Q)/d(theta,V), rows
/// and columns in the mismatch ordering (theta columns for non-slack
/// buses, V columns for PQ buses). Scheduled injections are constant, so
/// this equals minus the mismatch Jacobian.
inline Eigen::SparseMatrix<double> power_flow_jacobian(const AdmittanceMatrix& y,
                                                       const Eigen::VectorXd& v,
                                                       const Eigen::VectorXd& theta,
                                                       const std::vector<BusKind>& kinds) {
    Eigen::VectorXd p, q;
    detail::bus_injections(y, v, theta, p, q);
    auto lay = detail::layout_for(kinds);
    const int n_p = static_cast<int>(lay.p_rows.size());
    const int n_q = static_cast<int>(lay.q_rows.size());

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(y.y.nonZeros()) * 4);
    const int n = y.size();
    for (int i = 0; i < n; ++i) {
        const int pr = lay.p_row_of_bus[i];
        const int qr = lay.q_row_of_bus[i];
        if (pr < 0 && qr < 0) continue;
        for (Eigen::SparseMatrix<Complex, Eigen::RowMajor>::InnerIterator it(y.y, i); it;
             ++it) {
            const int k = static_cast<int>(it.col());
            const double g = it.value().real();
            const double b = it.value().imag();
            const int tc = lay.p_row_of_bus[k];          // theta column shares p-row index
            const int vc = lay.q_row_of_bus[k];          // v column shares q-row index
            if (k == i) {
                if (pr >= 0 && tc >= 0)
                    trips.emplace_back(pr, tc, -q[i] - b * v[i] * v[i]);
                if (pr >= 0 && vc >= 0)
                    trips.emplace_back(pr, n_p + vc, p[i] / v[i] + g * v[i]);
                if (qr >= 0 && tc >= 0)
                    trips.emplace_back(n_p + qr, tc, p[i] - g * v[i] * v[i]);
                if (qr >= 0 && vc >= 0)
                    trips.emplace_back(n_p + qr, n_p + vc, q[i] / v[i] - b * v[i]);
            } else {
                const double dth = theta[i] - theta[k];
                const double c = std::cos(dth), sn = std::sin(dth);
                const double pd = v[i] * v[k] * (g * sn - b * c);   // dPi/dth_k
                const double qd = -v[i] * v[k] * (g * c + b * sn);  // dQi/dth_k
                if (pr >= 0 && tc >= 0) trips.emplace_back(pr, tc, pd);
                if (pr >= 0 && vc >= 0) trips.emplace_back(pr, n_p + vc, -qd / v[k]);
                if (qr >= 0 && tc >= 0) trips.emplace_back(n_p + qr, tc, qd);
                if (qr >= 0 && vc >= 0) trips.emplace_back(n_p + qr, n_p + vc, pd / v[k]);
            }
        }
    }
    Eigen::SparseMatrix<double> jac(n_p + n_q, n_p + n_q);
    jac.setFromTriplets(trips.begin(), trips.end());
    return jac;
}

inline Eigen::SparseMatrix<double> power_flow_jacobian(const NetworkCase&,
                                                       const AdmittanceMatrix& y,
                                                       const Eigen::VectorXd& v,
                                                       const Eigen::VectorXd& theta,
                                                       const std::vector<BusKind>& kinds) {
    return power_flow_jacobian(y, v, theta, kinds);
}

namespace detail {

/// Newton-Raphson on a fixed schedule with PV/PQ limit switching. Limits
/// are only examined once the mismatch norm first drops below 1e-3 so a
/// far-from-solution iterate cannot thrash the bus types; a bus switching
/// more than four times is frozen where it stands.
inline PowerFlowSolution solve_schedule(const AdmittanceMatrix& y, const Schedule& schedule,
                                        const SolverSettings& settings,
                                        const PowerFlowSolution* warm) {
    settings.validate();
    const int n = y.size();
    PowerFlowSolution sol;
    sol.bus_ids = y.bus_ids;

    Schedule sched = schedule;  // q_sched mutates when buses pin to a limit
    std::vector<BusKind> kinds = sched.kinds;
    std::vector<QPin> pins(n, QPin::None);
    std::vector<int> switch_count(n, 0);

    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
    const bool use_warm = warm && !settings.flat_start &&
                          warm->v.size() == n && warm->bus_ids == y.bus_ids;
    for (int i = 0; i < n; ++i) {
        if (use_warm) {
            v[i] = warm->v[i];
            theta[i] = warm->theta[i];
        }
        if (kinds[i] != BusKind::PQ) v[i] = sched.v_set[i];
        if (kinds[i] == BusKind::Slack) theta[i] = 0.0;
    }

    const double kDivergedNorm = 1e6;
    const double kSwitchArmNorm = 1e-3;
    const double kLimitEps = 1e-9;
    bool limits_armed = false;
    bool converged = false;
    int iterations = 0;
    double norm = std::numeric_limits<double>::infinity();
    Eigen::VectorXd p_calc, q_calc;

    const int max_passes = settings.max_iterations + 8 * n + 8;
    for (int pass = 0; pass < max_passes; ++pass) {
        bus_injections(y, v, theta, p_calc, q_calc);
        auto lay = layout_for(kinds);
        Eigen::VectorXd m(lay.p_rows.size() + lay.q_rows.size());
        for (std::size_t r = 0; r < lay.p_rows.size(); ++r)
            m[r] = sched.p_sched[lay.p_rows[r]] - p_calc[lay.p_rows[r]];
        for (std::size_t r = 0; r < lay.q_rows.size(); ++r)
            m[lay.p_rows.size() + r] = sched.q_sched[lay.q_rows[r]] - q_calc[lay.q_rows[r]];
        norm = m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();

        if (!std::isfinite(norm) || norm > kDivergedNorm) break;
        if (settings.enforce_q_limits && norm < kSwitchArmNorm) limits_armed = true;

        bool switched = false;
        if (limits_armed) {
            for (int i = 0; i < n; ++i) {
                if (switch_count[i] >= 4) {
                    if (switch_count[i] == 4) {
                        sol.frozen_buses.push_back(y.bus_ids[i]);
                        switch_count[i] = 5;
                    }
                    continue;
                }
                if (kinds[i] == BusKind::PV && sched.limited[i]) {
                    QPin pin = QPin::None;
                    if (q_calc[i] > sched.q_max[i] + kLimitEps) pin = QPin::AtMax;
                    else if (q_calc[i] < sched.q_min[i] - kLimitEps) pin = QPin::AtMin;
                    if (pin != QPin::None) {
                        kinds[i] = BusKind::PQ;
                        pins[i] = pin;
                        sched.q_sched[i] =
                            pin == QPin::AtMax ? sched.q_max[i] : sched.q_min[i];
                        ++switch_count[i];
                        sol.switch_events.push_back({y.bus_ids[i], iterations, true, pin});
                        switched = true;
                    }
                } else if (kinds[i] == BusKind::PQ && pins[i] != QPin::None) {
                    // release when holding the limit overshoots the setpoint
                    bool release = (pins[i] == QPin::AtMax && v[i] > sched.v_set[i] + kLimitEps) ||
                                   (pins[i] == QPin::AtMin && v[i] < sched.v_set[i] - kLimitEps);
                    if (release) {
                        kinds[i] = BusKind::PV;
                        sol.switch_events.push_back({y.bus_ids[i], iterations, false, pins[i]});
                        pins[i] = QPin::None;
                        v[i] = sched.v_set[i];
                        ++switch_count[i];
                        switched = true;
                    }
                }
            }
        }
        if (switched) continue;  // re-evaluate mismatch under the new types

        if (norm < settings.tolerance) {
            converged = true;
            break;
        }
        if (iterations >= settings.max_iterations) break;

        Eigen::SparseMatrix<double> jac = power_flow_jacobian(y, v, theta, kinds);
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(jac);
        if (lu.info() != Eigen::Success) break;
        Eigen::VectorXd dx = lu.solve(m);
        if (lu.info() != Eigen::Success || !dx.allFinite()) break;
        for (std::size_t r = 0; r < lay.p_rows.size(); ++r) theta[lay.p_rows[r]] += dx[r];
        for (std::size_t r = 0; r < lay.q_rows.size(); ++r)
            v[lay.q_rows[r]] += dx[lay.p_rows.size() + r];
        ++iterations;
    }

    sol.v = v;
    sol.theta = theta;
    sol.p_inj = p_calc;
    sol.q_inj = q_calc;
    for (int i = 0; i < n; ++i)
        if (converged && pins[i] != QPin::None)
            sol.q_inj[i] = pins[i] == QPin::AtMax ? sched.q_max[i] : sched.q_min[i];
    sol.final_kind = kinds;
    sol.iterations = iterations;
    sol.converged = converged;
    sol.max_mismatch = norm;
    return sol;
}

}  // namespace detail

/// Full AC power flow on a case. Non-convergence is reported through the
/// solution (converged = false), never thrown; the continuation engine
/// feeds on that signal. Cases carrying SCIG plants wrap the Newton solve
/// in a fixed-point loop that re-evaluates the machine injection at the
/// solved terminal voltage until the pair agrees within 1e-6 pu.
inline PowerFlowSolution solve_power_flow(const NetworkCase& net, const AdmittanceMatrix& y,
                                          const SolverSettings& settings = {},
                                          const PowerFlowSolution* warm = nullptr,
                                          const ScigParams* scig = nullptr) {
    std::vector<int> scig_buses;
    for (const auto& m : net.machines)
        if (m.kind == MachineKind::Scig && m.in_service) scig_buses.push_back(m.bus);

    ScigParams default_params;
    if (!scig_buses.empty() && !scig) {
        default_params.b_cap = scig_no_load_compensation(default_params);
        scig = &default_params;
    }

    auto diverged = [&](const char*) {
        PowerFlowSolution bad;
        bad.bus_ids = y.bus_ids;
        bad.v = Eigen::VectorXd::Ones(y.size());
        bad.theta = Eigen::VectorXd::Zero(y.size());
        bad.p_inj = Eigen::VectorXd::Zero(y.size());
        bad.q_inj = Eigen::VectorXd::Zero(y.size());
        bad.final_kind.assign(y.size(), BusKind::PQ);
        bad.converged = false;
        return bad;
    };

    std::map<int, double> v_est;
    for (int b : scig_buses) v_est[b] = warm ? warm->v_at(b) : 1.0;

    PowerFlowSolution sol;
    const PowerFlowSolution* start = warm;
    int total_iterations = 0;
    const int outer_cap = scig_buses.empty() ? 1 : 40;
    for (int outer = 0; outer < outer_cap; ++outer) {
        Schedule sched;
        try {
            sched = make_schedule(net, scig, &v_est);
        } catch (const InfeasibleError&) {
            return diverged("scig dispatch infeasible");
        }
        sol = detail::solve_schedule(y, sched, settings, start);
        total_iterations += sol.iterations;
        sol.iterations = total_iterations;
        if (!sol.converged || scig_buses.empty()) return sol;
        double dv = 0.0;
        for (int b : scig_buses) dv = std::max(dv, std::abs(sol.v_at(b) - v_est[b]));
        if (dv < 1e-6) return sol;
        for (int b : scig_buses) v_est[b] = sol.v_at(b);
        start = &sol;
    }
    sol.converged = false;  // injection fixed point failed to settle
    return sol;
}

}  // namespace vstab
