#pragma once

#include <qdrive/constants.hpp>
#include <qdrive/coupling.hpp>
#include <qdrive/error.hpp>
#include <qdrive/units.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qdrive {

inline double bose_einstein_occupation(double f, double t) {
    if (!(f > 0) || !(t > 0)) throw Error(Errc::invalid_argument, "budget", "frequency and temperature must be > 0");
    return 1.0 / std::expm1(constants::h * f / (constants::k_B * t));
}

inline double db_to_linear_power(double db) { return std::pow(10.0, db / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }
inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

struct Stage {
    std::string label;
    double db = 0.0;
    double temperature = 0.01;
};

struct AttenuationChain {
    std::vector<Stage> stages;
    double source_temperature = 300.0;

    double total_db() const {
        double s = 0.0;
        for (const auto& st : stages) s += st.db;
        return s;
    }

    /// Stages warmer than the one before them are allowed but flagged here.
    bool temperatures_non_increasing() const {
        for (std::size_t i = 1; i < stages.size(); ++i)
            if (stages[i].temperature > stages[i - 1].temperature) return false;
        return true;
    }

    void validate() const {
        if (!(source_temperature > 0)) throw Error(Errc::invalid_argument, "budget", "source temperature must be > 0");
        for (const auto& s : stages) {
            if (!(s.db >= 0) || !std::isfinite(s.db))
                throw Error(Errc::invalid_argument, "budget", "stage '" + s.label + "' needs attenuation >= 0 dB");
            if (!(s.temperature > 0))
                throw Error(Errc::invalid_argument, "budget", "stage '" + s.label + "' needs temperature > 0");
        }
    }

    /// "label:dB@T,label:dB@T,..." with T in kelvin; the label is optional.
    static AttenuationChain parse(std::string_view text) {
        AttenuationChain c;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            auto comma = text.find(',', pos);
            if (comma == std::string_view::npos) comma = text.size();
            std::string_view item = text.substr(pos, comma - pos);
            const int col = static_cast<int>(pos) + 1;
            while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
            while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
            if (!item.empty()) {
                Stage s;
                auto colon = item.find(':');
                if (colon != std::string_view::npos) {
                    s.label = std::string(item.substr(0, colon));
                    item.remove_prefix(colon + 1);
                }
                auto at = item.find('@');
                if (at == std::string_view::npos) throw ParseError("budget", 1, col, "stage needs 'dB@T'");
                std::string_view dbs = item.substr(0, at);
                if (dbs.size() > 2 && (dbs.substr(dbs.size() - 2) == "dB" || dbs.substr(dbs.size() - 2) == "db"))
                    dbs.remove_suffix(2);
                auto db = try_parse_quantity(dbs);
                auto t = try_parse_quantity(item.substr(at + 1));
                if (!db || !(*db >= 0)) throw ParseError("budget", 1, col, "bad attenuation in stage");
                if (!t || !(*t > 0)) throw ParseError("budget", 1, col, "bad temperature in stage");
                s.db = *db;
                s.temperature = *t;
                if (s.label.empty()) s.label = "stage" + std::to_string(c.stages.size() + 1);
                c.stages.push_back(s);
            }
            pos = comma + 1;
        }
        if (c.stages.empty()) throw ParseError("budget", 1, 1, "empty attenuation chain");
        return c;
    }

    /// 42 dB above the mixing chamber and 18 dB on it.
    static AttenuationChain drive_line() { return {{{"4K", 42.0, 4.0}, {"MXC", 18.0, 0.01}}, 300.0}; }
};

/// Thermal occupation after each stage: n_out = n_in/A + (1 - 1/A) n_BE(T_stage).
inline double chain_photon_number(const AttenuationChain& chain, double f) {
    chain.validate();
    double n = bose_einstein_occupation(f, chain.source_temperature);
    for (const auto& s : chain.stages) {
        const double a = db_to_linear_power(s.db);
        n = n / a + (1.0 - 1.0 / a) * bose_einstein_occupation(f, s.temperature);
    }
    return n;
}

enum class DriveMode { resonant, subharmonic };

struct GateBudget {
    double duration = 10e-9;
    std::optional<double> target_rabi; // Hz; defaults to a pi pulse over the gate time
    double gamma = 0.0;                // coupling rate at the drive frequency, 1/s
    DriveMode mode = DriveMode::resonant;
    TransmonParams transmon;

    double rabi() const { return target_rabi.value_or(1.0 / (2.0 * duration)); }
};

struct PowerBudget {
    double f_drive = 0.0;
    double eta = 0.0;        // subharmonic strength; 0 for resonant
    double f_rabi_drive = 0.0; // Omega_R/2pi required from the line
    double v_chip = 0.0;
    double p_chip_dbm = 0.0;
    double p_room_dbm = 0.0;
};

/// Drive strength Omega_R (rad/s) at f_d that produces a subharmonic strength eta.
inline double subharmonic_drive_strength(const TransmonParams& p, double f_d, double eta) {
    const double wp = constants::two_pi * (p.f_q - p.alpha);
    const double wd = constants::two_pi * f_d;
    return std::abs(eta) * std::abs(wd * wd - wp * wp) / wp;
}

inline PowerBudget required_room_temperature_power(const GateBudget& g, const AttenuationChain& chain, double z_tml,
                                                   double f_drive) {
    chain.validate();
    if (!(g.duration > 0)) throw Error(Errc::invalid_argument, "budget", "gate duration must be > 0");
    const auto& p = g.transmon;
    PowerBudget b;
    b.f_drive = f_drive;
    if (g.mode == DriveMode::resonant) {
        b.f_rabi_drive = g.rabi();
        b.v_chip = drive_voltage_for_rabi(b.f_rabi_drive, g.gamma, p.f_q, z_tml);
    } else {
        const double w_sub = constants::two_pi * g.rabi();
        const double a = constants::two_pi * std::abs(p.alpha);
        b.eta = std::cbrt(3.0 * w_sub / (2.0 * a));
        if (!(b.eta < 1.0))
            throw Error(Errc::drive_too_weak, "budget",
                        "subharmonic gate needs eta = " + std::to_string(b.eta) + " (must stay below 1)",
                        "lengthen the gate or choose a qubit with larger anharmonicity");
        b.f_rabi_drive = subharmonic_drive_strength(p, f_drive, b.eta) / constants::two_pi;
        b.v_chip = drive_voltage_for_rabi(b.f_rabi_drive, g.gamma, p.f_q, z_tml, f_drive);
    }
    b.p_chip_dbm = watts_to_dbm(b.v_chip * b.v_chip / (2.0 * z_tml));
    b.p_room_dbm = b.p_chip_dbm + chain.total_db();
    return b;
}

/// Power absorbed by the last stage, in dBm (-inf for a 0 dB stage).
inline double base_plate_heat(double room_power_dbm, const AttenuationChain& chain) {
    chain.validate();
    if (chain.stages.empty()) throw Error(Errc::invalid_argument, "budget", "chain has no stages");
    double upstream = 0.0;
    for (std::size_t i = 0; i + 1 < chain.stages.size(); ++i) upstream += chain.stages[i].db;
    const double p_in = dbm_to_watts(room_power_dbm - upstream);
    const double absorbed = p_in * (1.0 - 1.0 / db_to_linear_power(chain.stages.back().db));
    return absorbed > 0 ? watts_to_dbm(absorbed) : -infinity;
}

} // namespace qdrive
