#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <variant>

#include "vstab/network.hpp"

namespace vstab {

// ---------------------------------------------------------------------------
// Bus-model mapping
// ---------------------------------------------------------------------------

/// Voltage-controlling bus behavior: hold v_set, inject p_set, reactive
/// output free within [q_min, q_max].
struct PvBusMode {
    double p_set_mw = 0.0;
    double v_set = 1.0;
    double q_min_mvar = 0.0;
    double q_max_mvar = 0.0;
};

/// Fixed complex injection.
struct PqInjectionMode {
    double p_mw = 0.0;
    double q_mvar = 0.0;
};

/// How one machine participates in the power flow.
struct BusModelSpec {
    int bus = 0;
    std::variant<PvBusMode, PqInjectionMode> mode;
    MachineKind source_kind = MachineKind::SyncGen;

    bool is_pv() const { return std::holds_alternative<PvBusMode>(mode); }
    const PvBusMode& pv() const { return std::get<PvBusMode>(mode); }
    const PqInjectionMode& pq() const { return std::get<PqInjectionMode>(mode); }
};

/// A synchronous condenser holds its terminal voltage with zero active
/// injection, generating or absorbing reactive power within its limits.
inline BusModelSpec sc_bus_model(const Machine& machine) {
    if (machine.kind != MachineKind::SyncCondenser)
        throw std::invalid_argument("sc_bus_model: machine is not a synchronous condenser");
    return {machine.bus, PvBusMode{0.0, machine.v_set, machine.q_min, machine.q_max},
            machine.kind};
}

/// A DFIG plant controls its terminal voltage within converter reactive
/// limits while injecting its dispatched active power.
inline BusModelSpec dfig_bus_model(const Machine& machine) {
    if (machine.kind != MachineKind::Dfig)
        throw std::invalid_argument("dfig_bus_model: machine is not a DFIG");
    return {machine.bus,
            PvBusMode{machine.p_set, machine.v_set, machine.q_min, machine.q_max},
            machine.kind};
}

/// A solar PV plant injects constant active power and regulates its local
/// voltage; irradiance and cell temperature are held constant, so p_set
/// never moves during a trace.
inline BusModelSpec solar_pv_bus_model(const Machine& machine) {
    if (machine.kind != MachineKind::SolarPv)
        throw std::invalid_argument("solar_pv_bus_model: machine is not a solar PV plant");
    return {machine.bus,
            PvBusMode{machine.p_set, machine.v_set, machine.q_min, machine.q_max},
            machine.kind};
}

inline BusModelSpec sync_gen_bus_model(const Machine& machine) {
    if (machine.kind != MachineKind::SyncGen)
        throw std::invalid_argument("sync_gen_bus_model: machine is not a synchronous generator");
    return {machine.bus,
            PvBusMode{machine.p_set, machine.v_set, machine.q_min, machine.q_max},
            machine.kind};
}

// ---------------------------------------------------------------------------
// Squirrel-cage induction generator, steady state
// ---------------------------------------------------------------------------

/// Electrical parameters of an aggregated SCIG plant, per unit on the
/// machine rating.
struct ScigParams {
    double r_s = 0.01;    // stator resistance
    double x_ls = 0.10;   // stator leakage reactance
    double r_r = 0.01;    // rotor resistance
    double x_lr = 0.10;   // rotor leakage reactance
    double x_m = 3.0;     // magnetizing reactance
    double rating = 60.0; // MVA
    double b_cap = 0.0;   // terminal compensating-capacitor susceptance

    double x_s() const { return x_ls + x_m; }
    double x_r() const { return x_lr + x_m; }

    void validate() const {
        if (r_s <= 0 || x_ls <= 0 || r_r <= 0 || x_lr <= 0 || x_m <= 0)
            throw std::invalid_argument("scig: resistances and reactances must be positive");
        if (b_cap < 0) throw std::invalid_argument("scig: b_cap must be non-negative");
    }
};

inline ScigParams scig_params_from(const std::map<std::string, double>& kv, double rating_mva) {
    ScigParams p;
    p.rating = rating_mva;
    auto get = [&](const char* key, double& slot) {
        auto it = kv.find(key);
        if (it != kv.end()) slot = it->second;
    };
    get("r_s", p.r_s);
    get("x_ls", p.x_ls);
    get("r_r", p.r_r);
    get("x_lr", p.x_lr);
    get("x_m", p.x_m);
    get("b_cap", p.b_cap);
    return p;
}

/// Capacitor susceptance that exactly cancels the machine's no-load
/// reactive draw at 1.0 pu terminal voltage.
inline double scig_no_load_compensation(const ScigParams& p) {
    Complex z_no_load(p.r_s, p.x_s());
    return -std::imag(1.0 / z_no_load);
}

/// One steady-state operating point. Sign conventions: stator quantities
/// (u, i) are in generator orientation (current positive out of the
/// machine), rotor currents in motor orientation, fluxes follow the motor
/// constitutive relations. p_grid/q_grid are net injections into the grid
/// at the machine terminal, capacitor included in q_grid.
struct ScigState {
    double slip = 0.0;  // negative when generating
    double psi_ds = 0.0, psi_qs = 0.0, psi_dr = 0.0, psi_qr = 0.0;
    double i_ds = 0.0, i_qs = 0.0, i_dr = 0.0, i_qr = 0.0;
    double u_ds = 0.0, u_qs = 0.0;
    double p_grid = 0.0, q_grid = 0.0;
};

/// Flux-dynamics residuals at a candidate state, synchronous speed 1 pu,
/// rotor windings shorted. All four vanish at a valid equilibrium.
struct ScigResiduals {
    double d_psi_ds, d_psi_qs, d_psi_dr, d_psi_qr;

    double max_abs() const {
        return std::max(std::max(std::abs(d_psi_ds), std::abs(d_psi_qs)),
                        std::max(std::abs(d_psi_dr), std::abs(d_psi_qr)));
    }
};

inline ScigResiduals scig_flux_residuals(const ScigState& st, const ScigParams& p) {
    return {st.u_ds + st.psi_qs + p.r_s * st.i_ds,
            st.u_qs - st.psi_ds + p.r_s * st.i_qs,
            st.slip * st.psi_qr - p.r_r * st.i_dr,
            -st.slip * st.psi_dr - p.r_r * st.i_qr};
}

namespace detail {

/// Stator input admittance of the steady-state equivalent circuit at slip
/// s (motor orientation). s == 0 leaves the rotor branch open.
inline Complex scig_input_admittance(double s, const ScigParams& p) {
    const Complex z_stator(p.r_s, p.x_ls);
    const Complex z_mag(0.0, p.x_m);
    if (s == 0.0) return 1.0 / (z_stator + z_mag);
    const Complex z_rotor(p.r_r / s, p.x_lr);
    const Complex z_par = z_mag * z_rotor / (z_mag + z_rotor);
    return 1.0 / (z_stator + z_par);
}

}  // namespace detail

/// Active power the machine delivers to the grid at terminal voltage v and
/// slip s (machine pu, capacitor excluded).
inline double scig_delivered_power(double v, double s, const ScigParams& p) {
    return -v * v * std::real(detail::scig_input_admittance(s, p));
}

/// Machine reactive draw from the grid at (v, s), positive absorbing
/// (capacitor excluded).
inline double scig_reactive_draw(double v, double s, const ScigParams& p) {
    return -v * v * std::imag(detail::scig_input_admittance(s, p));
}

/// Generating-side pull-out: the maximum deliverable power over slips in
/// [-s_span, 0] and the slip attaining it.
inline std::pair<double, double> scig_pull_out(double v, const ScigParams& p,
                                               double s_span = 0.3) {
    const int coarse = 3000;
    double best_s = 0.0, best_p = scig_delivered_power(v, 0.0, p);
    for (int k = 1; k <= coarse; ++k) {
        double s = -s_span * k / coarse;
        double pw = scig_delivered_power(v, s, p);
        if (pw > best_p) { best_p = pw; best_s = s; }
    }
    double lo = std::max(-s_span, best_s - s_span / coarse);
    double hi = std::min(0.0, best_s + s_span / coarse);
    for (int it = 0; it < 200; ++it) {
        double m1 = lo + (hi - lo) / 3.0;
        double m2 = hi - (hi - lo) / 3.0;
        if (scig_delivered_power(v, m1, p) < scig_delivered_power(v, m2, p))
            lo = m1;
        else
            hi = m2;
    }
    double s_peak = 0.5 * (lo + hi);
    return {scig_delivered_power(v, s_peak, p), s_peak};
}

/// Solve the steady-state equilibrium delivering p_target (machine pu) at
/// terminal voltage v_terminal. Finds the stable-branch slip (between the
/// pull-out slip and zero) by bisection. p_target <= 0 returns the no-load
/// point at slip zero, where the grid still covers the stator loss of the
/// magnetizing current.
inline ScigState scig_equilibrium(double v_terminal, double p_target, const ScigParams& p) {
    p.validate();
    if (v_terminal <= 0.0)
        throw std::invalid_argument("scig_equilibrium: terminal voltage must be positive");

    double s = 0.0;
    if (p_target > 0.0) {
        auto [p_max, s_peak] = scig_pull_out(v_terminal, p);
        if (p_target > p_max)
            throw InfeasibleError("scig dispatch " + std::to_string(p_target) +
                                  " pu exceeds pull-out power " + std::to_string(p_max) +
                                  " pu at v = " + std::to_string(v_terminal));
        double lo = s_peak, hi = 0.0;  // delivered power decreases toward s = 0
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (scig_delivered_power(v_terminal, mid, p) >= p_target)
                lo = mid;
            else
                hi = mid;
        }
        s = 0.5 * (lo + hi);
    }

    // Motor-orientation phasors with the terminal voltage on the real axis.
    const Complex u(v_terminal, 0.0);
    const Complex i_motor = u * detail::scig_input_admittance(s, p);
    const Complex e = u - Complex(p.r_s, p.x_ls) * i_motor;  // magnetizing-node voltage
    const Complex i_rotor = s == 0.0 ? Complex(0.0, 0.0) : e / Complex(p.r_r / s, p.x_lr);
    const Complex flux_s = p.x_s() * i_motor + p.x_m * i_rotor;
    const Complex flux_r = p.x_m * i_motor + p.x_r() * i_rotor;

    ScigState st;
    st.slip = s;
    st.u_ds = std::real(u);
    st.u_qs = std::imag(u);
    st.i_ds = -std::real(i_motor);  // stator current reported positive out
    st.i_qs = -std::imag(i_motor);
    st.i_dr = std::real(i_rotor);
    st.i_qr = std::imag(i_rotor);
    st.psi_ds = std::real(flux_s);
    st.psi_qs = std::imag(flux_s);
    st.psi_dr = std::real(flux_r);
    st.psi_qr = std::imag(flux_r);
    st.p_grid = scig_delivered_power(v_terminal, s, p);
    st.q_grid = -scig_reactive_draw(v_terminal, s, p) +
                p.b_cap * v_terminal * v_terminal;
    return st;
}

/// Map an SCIG machine to a fixed injection evaluated at a terminal-voltage
/// estimate. The power-flow wrapper re-evaluates this against the solved
/// voltage until the (V, Q) pair is self-consistent.
inline BusModelSpec scig_bus_model(const Machine& machine, const ScigParams& params,
                                   double v_estimate) {
    if (machine.kind != MachineKind::Scig)
        throw std::invalid_argument("scig_bus_model: machine is not an SCIG");
    if (machine.rating <= 0.0)
        throw std::invalid_argument("scig_bus_model: machine rating must be positive");
    const double p_target = machine.p_set / machine.rating;
    ScigState st = scig_equilibrium(v_estimate, p_target, params);
    return {machine.bus,
            PqInjectionMode{st.p_grid * machine.rating, st.q_grid * machine.rating},
            machine.kind};
}

// ---------------------------------------------------------------------------
// Doubly-fed induction generator, algebraic stator relations
// ---------------------------------------------------------------------------

/// DFIG stator parameters (machine pu): stator resistance and the
/// short-circuit (transient) reactance behind the internal voltage.
struct DfigParams {
    double r_s = 0.01;
    double x_prime = 0.20;
    double q_min_mvar = 0.0;
    double q_max_mvar = 0.0;
    double rating = 60.0;

    void validate() const {
        if (x_prime <= 0) throw std::invalid_argument("dfig: x_prime must be positive");
        if (q_min_mvar > q_max_mvar)
            throw std::invalid_argument("dfig: q_min must not exceed q_max");
    }
};

/// One algebraic operating point of the reduced-order DFIG model. Stator
/// currents are generator-oriented; p_w/q_w are the powers the network
/// receives.
struct DfigOperatingPoint {
    double v_ds = 0.0, v_qs = 0.0;
    double i_ds = 0.0, i_qs = 0.0;
    double e_d = 0.0, e_q = 0.0;
    double p_w = 0.0, q_w = 0.0;
    double slip = 0.0;
};

/// Close the stator algebra: the internal voltage follows from the stator
/// voltage/current pair, and the grid-side powers follow from the terminal
/// quantities plus whatever the rotor circuit exchanges (zero when the
/// rotor terms are not supplied).
inline DfigOperatingPoint dfig_algebraic_state(double v_ds, double v_qs, double i_ds,
                                               double i_qs, double slip,
                                               const DfigParams& params, double v_dr = 0.0,
                                               double v_qr = 0.0, double i_dr = 0.0,
                                               double i_qr = 0.0) {
    params.validate();
    DfigOperatingPoint op;
    op.v_ds = v_ds;
    op.v_qs = v_qs;
    op.i_ds = i_ds;
    op.i_qs = i_qs;
    op.slip = slip;
    op.e_d = v_ds + params.r_s * i_ds - params.x_prime * i_qs;
    op.e_q = v_qs + params.r_s * i_qs + params.x_prime * i_ds;
    op.p_w = v_ds * i_ds + v_qs * i_qs - v_dr * i_dr - v_qr * i_qr;
    op.q_w = v_qs * i_ds - v_ds * i_qs;
    return op;
}

/// Recover the stator voltage implied by an internal voltage and stator
/// current; exact inverse of dfig_algebraic_state's e_d/e_q relations.
inline std::pair<double, double> dfig_stator_voltage(const DfigOperatingPoint& op,
                                                     const DfigParams& params) {
    return {-params.r_s * op.i_ds + params.x_prime * op.i_qs + op.e_d,
            -params.r_s * op.i_qs - params.x_prime * op.i_ds + op.e_q};
}

// ---------------------------------------------------------------------------
// Dispatcher
// ---------------------------------------------------------------------------

/// Total machine-kind -> bus-model mapping. SCIG needs its circuit
/// parameters and a terminal-voltage estimate; every other kind maps
/// statically.
inline BusModelSpec bus_model(const Machine& machine, const ScigParams* scig = nullptr,
                              double v_estimate = 1.0) {
    switch (machine.kind) {
        case MachineKind::SyncGen: return sync_gen_bus_model(machine);
        case MachineKind::SyncCondenser: return sc_bus_model(machine);
        case MachineKind::Dfig: return dfig_bus_model(machine);
        case MachineKind::SolarPv: return solar_pv_bus_model(machine);
        case MachineKind::Scig: {
            if (!scig)
                throw std::invalid_argument("bus_model: SCIG requires circuit parameters");
            return scig_bus_model(machine, *scig, v_estimate);
        }
    }
    throw std::invalid_argument("bus_model: unknown machine kind");
}

}  // namespace vstab
