#pragma once

#include <qdrive/constants.hpp>
#include <qdrive/error.hpp>
#include <qdrive/network.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace qdrive {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// Charging energy E_C/h (Hz) to total capacitance.
inline double capacitance_from_ec(double e_c_hz) { return constants::e * constants::e / (2.0 * constants::h * e_c_hz); }

/// Frequencies are ordinary (Hz); energies are E/h in Hz; anharmonicity is negative.
struct TransmonParams {
    double f_q = 5e9;
    double alpha = -233e6;
    double e_c = 233e6;
    double e_j = 0.0;
    double c_q = 0.0;
    double f_max = 0.0;

    /// E_J from f_q = sqrt(8 E_J E_C) - E_C; alpha defaults to -E_C, f_max to f_q.
    static TransmonParams from_frequency(double f_q, double e_c, std::optional<double> alpha = {},
                                         std::optional<double> f_max = {}) {
        TransmonParams p;
        p.f_q = f_q;
        p.e_c = e_c;
        p.alpha = alpha.value_or(-e_c);
        p.e_j = (f_q + e_c) * (f_q + e_c) / (8.0 * e_c);
        p.c_q = capacitance_from_ec(e_c);
        p.f_max = f_max.value_or(f_q);
        return p;
    }

    double plasma() const { return std::sqrt(8.0 * e_j * e_c); }

    void validate() const {
        auto fail = [](const std::string& m) { throw Error(Errc::invalid_argument, "coupling", m); };
        if (!(f_q > 0) || !(e_c > 0) || !(e_j > 0) || !(c_q > 0)) fail("transmon parameters must be positive");
        if (std::abs(c_q - capacitance_from_ec(e_c)) > 1e-6 * c_q) fail("C_q and E_C are inconsistent");
        if (std::abs(plasma() - e_c - f_q) > 0.02 * f_q) fail("f_q is not within 2% of sqrt(8 E_J E_C) - E_C");
        if (!(e_j / e_c > 20.0)) fail("E_J/E_C must exceed 20 (transmon regime)");
        if (!(alpha < 0)) fail("anharmonicity must be negative");
    }
};

struct Resonator {
    double f_r = 0.0;
    double kappa = 0.0; // kappa/2pi, Hz
    double g = 0.0;     // g/2pi, Hz
};

struct LossChannels {
    double tan_delta = 0.0;
    double temperature = 0.02;
    std::optional<Resonator> resonator;
    std::optional<double> t1_other;
};

/// Relaxation rate from the real part of the admittance in parallel with the qubit.
inline double gamma_q(double y_in_real, double c_q) {
    if (!(c_q > 0)) throw Error(Errc::invalid_argument, "coupling", "c_q must be > 0");
    if (y_in_real < -1e-12)
        throw Error(Errc::passivity, "coupling", "negative admittance " + std::to_string(y_in_real) + " S",
                    "check for negative element values or an active termination");
    return std::max(y_in_real, 0.0) / c_q;
}

inline double t1_ext(double y_in_real, double c_q) {
    const double g = gamma_q(y_in_real, c_q);
    return g == 0.0 ? infinity : 1.0 / g;
}

/// Weak-coupling rate of a capacitively driven transmon.
inline double gamma_q_analytic(const TransmonParams& p, double c_d, double z_tml) {
    const double ratio = c_d / p.c_q;
    return 2.0 * constants::e * constants::e * ratio * ratio * std::sqrt(p.e_j / (2.0 * p.e_c)) * z_tml *
           (constants::two_pi * p.f_q) / constants::hbar;
}

/// Rabi frequency (Hz) for a chip-level peak voltage. A drive at f_drive != f_q sees gamma evaluated at
/// f_drive; the charge matrix element does not depend on f_drive, hence the f_q/f_drive factor.
inline double rabi_from_admittance(double gamma, double f_q, double z_tml, double v_peak,
                                   std::optional<double> f_drive = {}) {
    if (gamma < 0 || !(f_q > 0) || !(z_tml > 0))
        throw Error(Errc::invalid_argument, "coupling", "rabi_from_admittance: arguments must be positive");
    const double beta = v_peak / std::sqrt(2.0 * constants::hbar * constants::two_pi * f_q * z_tml);
    const double scale = f_drive ? f_q / *f_drive : 1.0;
    return 2.0 * std::sqrt(gamma) * beta * scale / constants::two_pi;
}

/// Inverse of rabi_from_admittance.
inline double drive_voltage_for_rabi(double f_rabi, double gamma, double f_q, double z_tml,
                                     std::optional<double> f_drive = {}) {
    if (!(gamma > 0))
        throw Error(Errc::invalid_argument, "coupling", "no coupling at the drive frequency",
                    "the drive sits on a transmission null");
    return f_rabi / rabi_from_admittance(gamma, f_q, z_tml, 1.0, f_drive);
}

inline double t1_dielectric(const TransmonParams& p, const LossChannels& loss) {
    if (!(loss.tan_delta > 0)) throw Error(Errc::invalid_argument, "coupling", "tan_delta must be > 0");
    if (!(loss.temperature > 0)) throw Error(Errc::invalid_argument, "coupling", "temperature must be > 0");
    const double x = constants::h * p.f_q / (2.0 * constants::k_B * loss.temperature);
    const double coth = x > 20.0 ? 1.0 : 1.0 / std::tanh(x);
    return 1.0 / (constants::two_pi * p.plasma() * loss.tan_delta * coth);
}

inline double t1_purcell(const LossChannels& loss, double f_q) {
    if (!loss.resonator) throw Error(Errc::invalid_argument, "coupling", "no resonator configured");
    const auto& r = *loss.resonator;
    if (r.kappa < 0 || r.g < 0) throw Error(Errc::invalid_argument, "coupling", "kappa and g must be >= 0");
    if (r.g == 0.0 || r.kappa == 0.0) return infinity;
    const double delta = constants::two_pi * (f_q - r.f_r);
    if (delta == 0.0) throw Error(Errc::divergence, "coupling", "qubit and resonator are degenerate");
    const double kappa = constants::two_pi * r.kappa, g = constants::two_pi * r.g;
    return delta * delta / (kappa * g * g);
}

/// Harmonic combination; infinite entries drop out.
inline double t1_total(const std::vector<double>& t1s) {
    double rate = 0.0;
    for (double t : t1s) {
        if (!(t > 0)) throw Error(Errc::invalid_argument, "coupling", "T1 contributions must be > 0");
        rate += 1.0 / t;
    }
    return rate == 0.0 ? infinity : 1.0 / rate;
}

/// chi/2pi in Hz.
inline double dispersive_shift(const TransmonParams& p, double g_hz, double f_r) {
    const double delta = p.f_q - f_r;
    if (delta == 0.0 || delta + p.alpha == 0.0)
        throw Error(Errc::divergence, "coupling", "detuning sits on a dispersive pole");
    return p.alpha * g_hz * g_hz / (delta * (delta + p.alpha));
}

/// gamma_q at the qubit port of a netlist with every other port matched.
inline double gamma_from_netlist(const Netlist& n, int qubit_port, double f, double c_q) {
    return gamma_q(driving_point_admittance(n, qubit_port, all_matched(n, qubit_port), f).real(), c_q);
}

} // namespace qdrive
