#pragma once

#include <qdrive/constants.hpp>
#include <qdrive/network.hpp>

#include <cmath>

/// Reference drive-line models: node "d" is the drive-line tap, node "q" the qubit island.
/// Port 1 is the drive line, port 2 the qubit.
namespace qdrive::devices {

struct LineDesign {
    double z0 = 50.0;
    double eps_eff = 6.45;
    double f_stop = 5e9;     // design stopband frequency
    double loss_db_per_m = 0.0;
};

inline double wavelength(const LineDesign& d) { return constants::c / (d.f_stop * std::sqrt(d.eps_eff)); }

inline Netlist standard_drive(double c_d = 80e-18, double c_q = 83e-15, double z0 = 50.0) {
    Netlist n;
    n.ground("0");
    n.capacitor("d", "q", c_d, "Cd");
    n.capacitor("q", "0", c_q, "Cq");
    n.port("d", z0).port("q", z0);
    return n;
}

/// Open quarter-wave stub hanging off the tap node.
inline Netlist lambda4_filter(double c_d = 4.5e-15, double c_q = 83e-15, const LineDesign& line = {}) {
    Netlist n;
    n.ground("0");
    n.tline("d", "open", {line.z0, line.eps_eff, wavelength(line) / 4.0, line.loss_db_per_m}, "stub");
    n.capacitor("d", "q", c_d, "Cd");
    n.capacitor("q", "0", c_q, "Cq");
    n.port("d", line.z0).port("q", line.z0);
    return n;
}

/// Half-wave line with tap capacitors at both ends; "Cbot" at the drive end, "Ctop" at the open end.
inline Netlist lambda2_filter(double c_tap = 4.6e-15, double c_q = 83e-15, const LineDesign& line = {}) {
    Netlist n;
    n.ground("0");
    n.tline("d", "end", {line.z0, line.eps_eff, wavelength(line) / 2.0, line.loss_db_per_m}, "line");
    n.capacitor("d", "q", c_tap, "Cbot");
    n.capacitor("end", "q", c_tap, "Ctop");
    n.capacitor("q", "0", c_q, "Cq");
    n.port("d", line.z0).port("q", line.z0);
    return n;
}

/// Residual conductor loss used when a finite stopband-centre T1 is wanted.
inline constexpr double residual_loss_db_per_m = 1e-5;

} // namespace qdrive::devices
