#pragma once

#include <qdrive/coupling.hpp>
#include <qdrive/dynamics.hpp>
#include <qdrive/fitting.hpp>
#include <qdrive/network.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace qdrive {

struct SimulatedDevice {
    TransmonParams transmon;        // f_max, e_c and alpha are used; f_q follows from the bias
    std::optional<Netlist> netlist; // drive environment seen at qubit_port
    int qubit_port = 2;
    double z_tml = 50.0;
    Resonator resonator{7.0e9, 1e6, 50e6};
    LossChannels loss{3e-6, 0.02, {}, {}};
    double rabi_target = 10e6;      // Hz, Rabi rate the sequence calibrates to
    double volts_per_flux_quantum = 1.0;
    double flux_offset = 0.0;       // Phi0
    double noise_sigma = 0.0;       // readout units (populations, normalised transmission)
    std::uint64_t seed = 1;
};

struct Bias {
    enum class Kind { flux, voltage } kind = Kind::flux;
    double value = 0.0;

    static Bias flux(double phi) { return {Kind::flux, phi}; }
    static Bias voltage(double v) { return {Kind::voltage, v}; }
};

struct CharacterizationResult {
    double flux = 0.0;
    double f_r = 0.0, f_r_sigma = 0.0;
    double f_q = 0.0, f_q_sigma = 0.0;
    double f_rabi = 0.0, f_rabi_sigma = 0.0;
    double t1 = 0.0, t1_sigma = 0.0;
    double spectroscopy_linewidth = 0.0; // FWHM, Hz
    std::optional<double> drive_voltage;  // chip-level peak V for the Rabi rate, when a netlist is given

    struct Truth {
        double f_r = 0.0, f_q = 0.0, f_rabi = 0.0, t1 = 0.0, t1_ext = 0.0, t1_dielectric = 0.0, t1_purcell = 0.0;
    } truth;

    FitResult arch, resonator, spectroscopy, rabi, relaxation;
};

namespace detail {

inline FitResult stage_fit(const std::string& stage, const FitModel& m, const std::vector<double>& x,
                           const std::vector<double>& y) {
    FitResult r;
    try {
        r = fit(m, x, y);
    } catch (const Error& e) {
        throw Error(e.code(), "fitting", "stage '" + stage + "': " + e.what(), e.hint());
    }
    if (!r.converged)
        throw Error(Errc::non_convergence, "fitting", "stage '" + stage + "' did not converge",
                    "reduce the noise or widen the scan");
    return r;
}

inline std::vector<double> add_noise(std::vector<double> y, double sigma, std::uint64_t seed) {
    if (sigma <= 0) return y;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sigma);
    for (auto& v : y) v += n(rng);
    return y;
}

} // namespace detail

/// Synthetic flux-arch, resonator, spectroscopy, Rabi and T1 measurements, each fitted in turn.
inline CharacterizationResult emulate_characterization_sequence(const SimulatedDevice& dev, Bias bias) {
    const double phi = bias.kind == Bias::Kind::flux ? bias.value
                                                     : bias.value / dev.volts_per_flux_quantum + dev.flux_offset;
    const auto& base = dev.transmon;
    if (!(base.f_max > 0)) throw Error(Errc::invalid_argument, "fitting", "device needs f_max");
    CharacterizationResult out;
    out.flux = phi;
    const double sig = dev.noise_sigma;

    // flux arch from spectroscopy peak positions; noise in units of 10 MHz
    {
        const auto x = linspace(-0.4, 0.4, 81);
        std::vector<double> y;
        for (double v : x) y.push_back(flux_to_frequency(base, v - dev.flux_offset));
        y = detail::add_noise(y, 10e6 * sig, dev.seed);
        out.arch = detail::stage_fit("flux arch", FitModel::flux_arch(), x, y);
    }

    const TransmonParams q = at_flux(base, phi - dev.flux_offset);
    out.truth.f_q = q.f_q;

    // T1 budget at the operating point
    out.truth.t1_ext = infinity;
    double gamma = 0.0;
    if (dev.netlist) {
        gamma = gamma_from_netlist(*dev.netlist, dev.qubit_port, q.f_q, q.c_q);
        out.truth.t1_ext = gamma > 0 ? 1.0 / gamma : infinity;
    }
    out.truth.t1_dielectric = dev.loss.tan_delta > 0 ? t1_dielectric(q, dev.loss) : infinity;
    LossChannels lc = dev.loss;
    lc.resonator = dev.resonator;
    out.truth.t1_purcell = t1_purcell(lc, q.f_q);
    std::vector<double> parts{out.truth.t1_ext, out.truth.t1_dielectric, out.truth.t1_purcell};
    if (dev.loss.t1_other) parts.push_back(*dev.loss.t1_other);
    out.truth.t1 = t1_total(parts);
    if (!std::isfinite(out.truth.t1))
        throw Error(Errc::invalid_argument, "fitting", "device has no relaxation channel", "set tan_delta or t1_other");
    const double t1 = out.truth.t1, t2 = 2.0 * t1;

    // resonator transmission dip, dressed by the qubit in |0>
    {
        const double delta = q.f_q - dev.resonator.f_r;
        const double g = dev.resonator.g;
        out.truth.f_r = dev.resonator.f_r - g * g / delta;
        const double w = dev.resonator.kappa;
        const auto x = linspace(out.truth.f_r - 6 * w, out.truth.f_r + 6 * w, 241);
        const auto model = FitModel::lorentzian();
        Eigen::VectorXd p(4);
        p << out.truth.f_r, w, -0.8, 1.0;
        const auto y = synthesize_trace(model, p, x, sig, dev.seed + 1);
        out.resonator = detail::stage_fit("resonator", model, x, y);
    }

    // steady-state two-level spectroscopy at saturation parameter 1
    {
        const double om = 1.0 / std::sqrt(t1 * t2);
        const double fwhm = std::sqrt(1.0 + om * om * t1 * t2) / (constants::pi * t2);
        out.spectroscopy_linewidth = fwhm;
        const auto x = linspace(q.f_q - 8 * fwhm, q.f_q + 8 * fwhm, 321);
        std::vector<double> y;
        for (double f : x) {
            const double d = constants::two_pi * (f - q.f_q);
            const double s = om * om * t1 * t2;
            y.push_back(0.5 * s / (1.0 + s + d * d * t2 * t2));
        }
        y = detail::add_noise(y, sig, dev.seed + 2);
        out.spectroscopy = detail::stage_fit("spectroscopy", FitModel::lorentzian(), x, y);
    }

    // Rabi: two-level rotating-frame evolution under a 3/(4 T1) envelope
    {
        out.truth.f_rabi = dev.rabi_target;
        if (dev.netlist && gamma > 0) out.drive_voltage = drive_voltage_for_rabi(dev.rabi_target, gamma, q.f_q, dev.z_tml);
        PulseSpec s;
        s.f_d = q.f_q;
        s.rabi = dev.rabi_target;
        const double span = 4.0 / dev.rabi_target;
        s.duration = span;
        const auto g = build_hamiltonian(Frame::rotating_resonant, q, s, 2);
        EvolveOptions o;
        o.samples = 241;
        const auto tr = evolve(g, span, basis_state(g, 0), o);
        auto y = tr.level(1);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.5 + (y[i] - 0.5) * std::exp(-0.75 * tr.t[i] / t1);
        y = detail::add_noise(y, sig, dev.seed + 3);
        out.rabi = detail::stage_fit("rabi", FitModel::decaying_cosine(), tr.t, y);
    }

    // T1: exponential relaxation after a pi pulse
    {
        const auto x = linspace(0.0, 5.0 * t1, 151);
        Eigen::VectorXd p(3);
        p << 1.0, t1, 0.0;
        const auto y = synthesize_trace(FitModel::exponential_decay(), p, x, sig, dev.seed + 4);
        out.relaxation = detail::stage_fit("T1", FitModel::exponential_decay(), x, y);
    }

    out.f_r = out.resonator.param("center");
    out.f_r_sigma = out.resonator.uncertainty("center");
    out.f_q = out.spectroscopy.param("center");
    out.f_q_sigma = out.spectroscopy.uncertainty("center");
    out.f_rabi = std::abs(out.rabi.param("frequency"));
    out.f_rabi_sigma = out.rabi.uncertainty("frequency");
    out.t1 = out.relaxation.param("tau");
    out.t1_sigma = out.relaxation.uncertainty("tau");
    return out;
}

} // namespace qdrive
