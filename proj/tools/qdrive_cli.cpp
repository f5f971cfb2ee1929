#include <qdrive/budget.hpp>
#include <qdrive/devices.hpp>
#include <qdrive/dynamics.hpp>
#include <qdrive/fitting.hpp>
#include <qdrive/network.hpp>
#include <qdrive/plot.hpp>
#include <qdrive/reproduce.hpp>
#include <qdrive/rfio.hpp>
#include <qdrive/sequence.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace qdrive;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double quantity(const std::string& text, const std::string& flag) {
    auto v = try_parse_quantity(text);
    if (!v) throw UsageError("--" + flag + ": cannot read '" + text + "' as a quantity (e.g. 5GHz, 83fF, 10ns)");
    return *v;
}

std::optional<double> quantity(const std::optional<std::string>& text, const std::string& flag) {
    if (!text) return std::nullopt;
    return quantity(*text, flag);
}

/// "start:stop:n" or "a,b,c".
std::vector<double> grid(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw UsageError("--" + flag + ": range needs start:stop:points");
        const double a = quantity(parts[0], flag), b = quantity(parts[1], flag);
        const double n = quantity(parts[2], flag);
        if (!(n >= 1) || n != std::floor(n)) throw UsageError("--" + flag + ": point count must be a positive integer");
        if (n == 1) return {a};
        return linspace(a, b, static_cast<std::size_t>(n));
    }
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(quantity(p, flag));
    if (out.empty()) throw UsageError("--" + flag + ": empty list");
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Output {
    fs::path dir;

    void prepare() const {
        std::error_code ec;
        fs::create_directories(dir, ec);
        const fs::path probe = dir / ".qdrive-write-test";
        std::ofstream f(probe);
        if (!f) throw UsageError("output directory '" + dir.string() + "' is not writable");
        f.close();
        fs::remove(probe, ec);
    }

    fs::path write(const std::string& name, const std::string& content) const {
        const fs::path p = dir / name;
        std::ofstream f(p, std::ios::binary);
        f << content;
        if (!f) throw UsageError("failed to write '" + p.string() + "'");
        std::cout << "wrote " << p.string() << "\n";
        return p;
    }
};

TransmonParams transmon(double f_q, double e_c, std::optional<double> alpha, std::optional<double> f_max = {}) {
    double a = alpha.value_or(-e_c);
    if (a > 0) a = -a; // magnitude given
    return TransmonParams::from_frequency(f_q, e_c, a, f_max);
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

std::string fmt(const char* f, auto... v) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, v...);
    return buf;
}

// ---------------------------------------------------------------- subcommands

struct NetArgs {
    std::string netlist, grid = "1e9:10e9:2001", format = "RI";
    std::optional<int> port;
    std::optional<std::string> cq;
};

int run_net(const NetArgs& a, const Output& out) {
    const Netlist n = parse_netlist(read_file(a.netlist));
    const auto g = FrequencyGrid::from_list(grid(a.grid, "grid"));
    int port = 0;
    for (const auto& p : n.ports) port = std::max(port, p.index);
    if (a.port) port = *a.port;
    const auto sw = sweep(n, g, port, all_matched(n, port));
    const TsFormat fmt_ts = a.format == "MA" ? TsFormat::MA : a.format == "DB" ? TsFormat::DB : TsFormat::RI;
    const std::string stem = stem_of(a.netlist);
    out.write(stem + ".s" + std::to_string(sw.ports()) + "p", write_touchstone(to_touchstone(sw, fmt_ts)));

    Table t;
    std::vector<double> re, im;
    for (const auto& y : *sw.y_driving) {
        re.push_back(y.real());
        im.push_back(y.imag());
    }
    t.add("f_hz", sw.grid).add("y_re_s", re).add("y_im_s", im);
    std::vector<double> t1;
    if (a.cq) {
        const double c_q = quantity(*a.cq, "cq");
        for (double g_re : re) t1.push_back(t1_ext(g_re, c_q));
        t.add("t1_ext_s", t1);
    }
    out.write(stem + "_yin.csv", write_csv(t));

    plot::Figure fig{stem + ": transmission from port 1", "frequency (GHz)", "|S_j1| (dB)", false, {}};
    std::vector<double> ghz;
    for (double f : sw.grid) ghz.push_back(f / 1e9);
    for (std::size_t j = 0; j < sw.ports(); ++j) {
        plot::Series s{"S" + std::to_string(j + 1) + "1", ghz, {}};
        for (const auto& m : sw.s)
            s.y.push_back(20 * std::log10(std::max(std::abs(m(static_cast<Eigen::Index>(j), 0)), 1e-300)));
        fig.series.push_back(s);
    }
    out.write(stem + "_s.svg", plot::to_svg(fig));
    if (a.cq) {
        out.write(stem + "_t1.svg",
                  plot::to_svg({stem + ": external T1", "frequency (GHz)", "T1_ext (s)", true, {{"T1_ext", ghz, t1}}}));
    }
    const auto shifted = std::count(sw.shifted.begin(), sw.shifted.end(), true);
    std::cout << sw.size() << " frequencies, " << sw.ports() << " ports, driving point at port " << port;
    if (shifted) std::cout << ", " << shifted << " points moved off a line pole";
    std::cout << "\n";
    return 0;
}

struct SweepArgs {
    std::string netlist, grid = "1e9:10e9:2001", cq = "83fF", z0 = "50", vpeak = "100uV", threshold = "1ms";
    int port = 2;
};

int run_sweep(const SweepArgs& a, const Output& out) {
    const Netlist n = parse_netlist(read_file(a.netlist));
    const double c_q = quantity(a.cq, "cq"), z0 = quantity(a.z0, "z0"), v = quantity(a.vpeak, "vpeak");
    const auto g = FrequencyGrid::from_list(grid(a.grid, "grid"));
    const auto y = driving_point_admittance(n, a.port, all_matched(n, a.port), g);
    std::vector<double> re, gam, t1, rabi;
    for (const auto& yi : y.y) {
        re.push_back(yi.real());
        gam.push_back(gamma_q(yi.real(), c_q));
        t1.push_back(t1_ext(yi.real(), c_q));
    }
    for (std::size_t i = 0; i < g.size(); ++i) rabi.push_back(rabi_from_admittance(gam[i], g[i], z0, v));
    const std::string stem = stem_of(a.netlist);
    Table t;
    t.add("f_q_hz", g.values()).add("re_y_s", re).add("gamma_per_s", gam).add("t1_ext_s", t1).add("f_rabi_hz", rabi);
    out.write(stem + "_sweep.csv", write_csv(t));
    std::vector<double> ghz;
    for (double f : g.values()) ghz.push_back(f / 1e9);
    out.write(stem + "_sweep_t1.svg",
              plot::to_svg({stem + ": external T1 against qubit frequency", "f_q (GHz)", "T1_ext (s)", true,
                            {{"T1_ext", ghz, t1}}}));
    out.write(stem + "_sweep_rabi.svg",
              plot::to_svg({stem + ": Rabi frequency at " + a.vpeak, "f_q (GHz)", "f_Rabi (Hz)", true,
                            {{"f_Rabi", ghz, rabi}}}));
    const auto peak = std::max_element(t1.begin(), t1.end()) - t1.begin();
    std::cout << "peak T1_ext " << t1[static_cast<std::size_t>(peak)] << " s at "
              << g[static_cast<std::size_t>(peak)] / 1e9 << " GHz\n";
    for (const auto& b : find_stopband(g.values(), y.y, c_q, quantity(a.threshold, "threshold")))
        std::cout << fmt("stopband %.4f-%.4f GHz, centre %.4f GHz, width %.1f MHz\n", b.f_lo / 1e9, b.f_hi / 1e9,
                         b.center / 1e9, b.bandwidth / 1e6);
    return 0;
}

struct DynArgs {
    std::string fq = "5.6GHz", ec = "234MHz", frame = "resonant", duration = "200ns", envelope = "rect", model = "quartic";
    std::optional<std::string> alpha, fd, rabi, eta;
    std::string ramp = "0.1", phase = "0", rtol = "1e-12";
    int levels = 0, samples = 201, initial = 0;
    bool stroboscopic = false;
};

int run_dynamics(const DynArgs& a, const Output& out) {
    const double e_c = quantity(a.ec, "ec");
    const auto p = transmon(quantity(a.fq, "fq"), e_c, quantity(a.alpha, "alpha"));
    Frame frame;
    if (a.frame == "lab") frame = Frame::lab;
    else if (a.frame == "resonant") frame = Frame::rotating_resonant;
    else if (a.frame == "subharmonic") frame = Frame::rotating_subharmonic;
    else throw UsageError("--frame must be lab, resonant or subharmonic");
    const bool sub_drive = frame == Frame::rotating_subharmonic || (a.eta.has_value());
    PulseSpec s;
    s.f_d = a.fd ? quantity(*a.fd, "fd") : sub_drive ? p.f_q / 3 : p.f_q;
    s.duration = quantity(a.duration, "duration");
    s.phase = quantity(a.phase, "phase");
    s.ramp = quantity(a.ramp, "ramp");
    if (a.envelope == "cosine") s.envelope = Envelope::cosine_ramped;
    else if (a.envelope != "rect") throw UsageError("--envelope must be rect or cosine");
    if (a.rabi && a.eta) throw UsageError("give --rabi or --eta, not both");
    if (a.eta) {
        const double eta = quantity(*a.eta, "eta");
        const double wp = constants::two_pi * (p.f_q - p.alpha), wd = constants::two_pi * s.f_d;
        s.rabi = eta * std::abs(wd * wd - wp * wp) / wp / constants::two_pi;
    } else {
        s.rabi = a.rabi ? quantity(*a.rabi, "rabi") : 10e6;
    }
    const int d = a.levels > 0 ? a.levels : frame == Frame::lab ? 9 : 5;
    const LabModel model = a.model == "kerr" ? LabModel::kerr : LabModel::quartic;
    if (a.model != "kerr" && a.model != "quartic") throw UsageError("--model must be quartic or kerr");
    const auto g = build_hamiltonian(frame, p, s, d, model);
    EvolveOptions o;
    o.samples = static_cast<std::size_t>(a.samples);
    o.rtol = quantity(a.rtol, "rtol");
    if (a.initial < 0 || a.initial >= d) throw UsageError("--initial must name a level below --levels");
    EvolutionTrace tr;
    if (a.stroboscopic) {
        if (frame != Frame::lab) throw UsageError("--stroboscopic needs --frame lab");
        const auto stride = static_cast<std::size_t>(
            std::max(1.0, std::ceil(s.duration / g.period / static_cast<double>(o.samples - 1))));
        tr = evolve_periodic(g, stride, basis_state(g, a.initial), o);
    } else {
        tr = evolve(g, s.duration, basis_state(g, a.initial), o);
    }
    Table t;
    t.add("t_s", tr.t);
    plot::Figure fig{"populations, " + frame_name(frame) + " frame, d = " + std::to_string(d), "time (ns)", "population",
                     false, {}};
    std::vector<double> ns;
    for (double v : tr.t) ns.push_back(v * 1e9);
    for (int k = 0; k < d; ++k) {
        t.add("p" + std::to_string(k), tr.level(k));
        if (k < 4) fig.series.push_back({"P" + std::to_string(k), ns, tr.level(k)});
    }
    out.write("dynamics.csv", write_csv(t));
    out.write("dynamics.svg", plot::to_svg(fig));
    std::cout << fmt("drive %.6g Hz, Rabi %.6g Hz, %zu steps, max norm error %.2g\n", s.f_d, s.rabi, tr.steps,
                     tr.max_norm_error);
    std::cout << "final populations:";
    for (int k = 0; k < d; ++k) std::cout << " " << fmt("%.6f", tr.populations(tr.populations.rows() - 1, k));
    std::cout << "\n";
    try {
        const auto osc = extract_oscillation(tr);
        std::cout << fmt("oscillation %.6g Hz, decay %.3g s\n", osc.frequency, osc.decay);
    } catch (const Error& e) {
        if (e.code() != Errc::no_oscillation) throw;
        std::cout << "no oscillation resolved in the excited population\n";
    }
    return 0;
}

struct ScanArgs {
    std::string fmax = "7.64GHz", ec = "234.5MHz", flux = "0:0.3:31", mode = "resonant", rabi = "10MHz",
                duration = "1us";
    std::optional<std::string> alpha, fd;
    int levels = 5;
};

int run_scan(const ScanArgs& a, const Output& out) {
    const double f_max = quantity(a.fmax, "fmax");
    const auto p = transmon(f_max, quantity(a.ec, "ec"), quantity(a.alpha, "alpha"), f_max);
    if (!a.fd) throw UsageError("--fd is required (start:stop:points or a list)");
    const auto flux = grid(a.flux, "flux"), f_d = grid(*a.fd, "fd");
    ScanMode mode;
    if (a.mode == "resonant") mode = ScanMode::resonant;
    else if (a.mode == "subharmonic") mode = ScanMode::subharmonic;
    else throw UsageError("--mode must be resonant or subharmonic");
    PulseSpec s;
    s.rabi = quantity(a.rabi, "rabi");
    s.duration = quantity(a.duration, "duration");
    const auto m = spectroscopy_scan(p, flux, f_d, s, a.levels, mode);
    Table t;
    std::vector<double> cf, cd, ce, ridge;
    for (std::size_t i = 0; i < flux.size(); ++i) {
        Eigen::Index k = 0;
        m.excited.row(static_cast<Eigen::Index>(i)).maxCoeff(&k);
        ridge.push_back(f_d[static_cast<std::size_t>(k)] / 1e9);
        for (std::size_t j = 0; j < f_d.size(); ++j) {
            cf.push_back(flux[i]);
            cd.push_back(f_d[j]);
            ce.push_back(m.excited(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
    }
    t.add("flux_phi0", cf).add("f_d_hz", cd).add("excited", ce);
    out.write("scan.csv", write_csv(t));
    out.write("scan_ridge.svg", plot::to_svg({"strongest response against flux", "flux (Phi0)", "drive frequency (GHz)",
                                              false, {{"ridge", flux, ridge}}}));
    std::cout << flux.size() << " x " << f_d.size() << " pixels, peak excitation " << m.excited.maxCoeff() << "\n";
    return 0;
}

struct FitArgs {
    std::string input, model;
    std::optional<std::string> x, y, initial;
};

int run_fit(const FitArgs& a, const Output& out) {
    const Table in = read_csv(read_file(a.input));
    if (in.names.size() < 2) throw UsageError("--input needs at least two columns");
    const auto& x = a.x ? in.column(*a.x) : in.columns[0];
    const auto& y = a.y ? in.column(*a.y) : in.columns[1];
    const FitModel m = FitModel::from_name(a.model);
    std::optional<Eigen::VectorXd> p0;
    if (a.initial) {
        const auto v = grid(*a.initial, "initial");
        p0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    const FitResult r = fit(m, x, y, p0);
    std::string rep = "model " + r.model + "\n";
    for (std::size_t k = 0; k < r.names.size(); ++k)
        rep += fmt("%-12s %.12g +/- %.3g\n", r.names[k].c_str(), r.params[static_cast<Eigen::Index>(k)],
                   r.sigma[static_cast<Eigen::Index>(k)]);
    rep += fmt("residual norm %.6g\niterations %d\nconverged %s\n", r.residual_norm, r.iterations,
               r.converged ? "yes" : "no");
    std::cout << rep;
    out.write("fit.txt", rep);
    std::vector<double> model_y, resid;
    for (std::size_t i = 0; i < x.size(); ++i) {
        model_y.push_back(m.eval(x[i], r.params));
        resid.push_back(y[i] - model_y.back());
    }
    Table t;
    t.add("x", x).add("y", y).add("model", model_y).add("residual", resid);
    out.write("fit.csv", write_csv(t));
    out.write("fit.svg", plot::to_svg({a.model + " fit", "x", "y", false, {{"data", x, y}, {"model", x, model_y}}}));
    if (!r.converged)
        throw Error(Errc::non_convergence, "fitting", "fit stopped after " + std::to_string(r.iterations) + " iterations",
                    "pass --initial closer to the answer");
    return 0;
}

struct SeqArgs {
    std::string fmax = "7.852GHz", ec = "229.847MHz", fr = "7GHz", kappa = "1MHz", g = "50MHz", tan_delta = "3e-6",
                temperature = "20mK", rabi = "10MHz", noise = "0", vpf = "1", flux_offset = "0", z0 = "50";
    std::optional<std::string> alpha, flux, voltage, netlist, t1_other;
    int port = 2;
    std::uint64_t seed = 1;
};

int run_sequence(const SeqArgs& a, const Output& out) {
    SimulatedDevice dev;
    const double f_max = quantity(a.fmax, "fmax");
    dev.transmon = transmon(f_max, quantity(a.ec, "ec"), quantity(a.alpha, "alpha"), f_max);
    if (a.netlist) dev.netlist = parse_netlist(read_file(*a.netlist));
    dev.qubit_port = a.port;
    dev.z_tml = quantity(a.z0, "z0");
    dev.resonator = {quantity(a.fr, "fr"), quantity(a.kappa, "kappa"), quantity(a.g, "g")};
    dev.loss.tan_delta = quantity(a.tan_delta, "tan-delta");
    dev.loss.temperature = quantity(a.temperature, "temperature");
    dev.loss.t1_other = quantity(a.t1_other, "t1-other");
    dev.rabi_target = quantity(a.rabi, "rabi");
    dev.noise_sigma = quantity(a.noise, "noise");
    dev.volts_per_flux_quantum = quantity(a.vpf, "vpf");
    dev.flux_offset = quantity(a.flux_offset, "flux-offset");
    dev.seed = a.seed;
    if (a.flux && a.voltage) throw UsageError("give --flux or --voltage, not both");
    const Bias bias = a.voltage ? Bias::voltage(quantity(*a.voltage, "voltage"))
                                : Bias::flux(a.flux ? quantity(*a.flux, "flux") : 0.0);
    const auto r = emulate_characterization_sequence(dev, bias);
    std::string rep = fmt("flux bias          %.6f Phi0\n", r.flux);
    rep += fmt("resonator          %.9g GHz +/- %.3g kHz   (true %.9g GHz)\n", r.f_r / 1e9, r.f_r_sigma / 1e3, r.truth.f_r / 1e9);
    rep += fmt("qubit              %.9g GHz +/- %.3g kHz   (true %.9g GHz)\n", r.f_q / 1e9, r.f_q_sigma / 1e3, r.truth.f_q / 1e9);
    rep += fmt("Rabi               %.6g MHz +/- %.3g kHz   (true %.6g MHz)\n", r.f_rabi / 1e6, r.f_rabi_sigma / 1e3,
               r.truth.f_rabi / 1e6);
    rep += fmt("T1                 %.6g us +/- %.3g us     (true %.6g us)\n", r.t1 * 1e6, r.t1_sigma * 1e6, r.truth.t1 * 1e6);
    rep += fmt("  external         %.6g us\n  dielectric       %.6g us\n  Purcell          %.6g us\n",
               r.truth.t1_ext * 1e6, r.truth.t1_dielectric * 1e6, r.truth.t1_purcell * 1e6);
    rep += fmt("spectroscopy FWHM  %.6g kHz\n", r.spectroscopy_linewidth / 1e3);
    if (r.drive_voltage) rep += fmt("drive voltage      %.6g uV (chip, peak)\n", *r.drive_voltage * 1e6);
    std::cout << rep;
    out.write("sequence.txt", rep);
    Table t;
    auto col = [&](const char* n, double v) { t.add(n, {v}); };
    col("flux_phi0", r.flux);
    col("f_r_hz", r.f_r), col("f_r_sigma_hz", r.f_r_sigma), col("f_r_true_hz", r.truth.f_r);
    col("f_q_hz", r.f_q), col("f_q_sigma_hz", r.f_q_sigma), col("f_q_true_hz", r.truth.f_q);
    col("f_rabi_hz", r.f_rabi), col("f_rabi_sigma_hz", r.f_rabi_sigma), col("f_rabi_true_hz", r.truth.f_rabi);
    col("t1_s", r.t1), col("t1_sigma_s", r.t1_sigma), col("t1_true_s", r.truth.t1);
    col("t1_ext_s", r.truth.t1_ext), col("t1_dielectric_s", r.truth.t1_dielectric), col("t1_purcell_s", r.truth.t1_purcell);
    out.write("sequence.csv", write_csv(t));
    return 0;
}

struct BudgetArgs {
    std::string chain = "4K:42@4,MXC:18@0.01", gate = "10ns", mode = "resonant", fq = "5GHz", ec = "233MHz", z0 = "50";
    std::optional<std::string> t1ext, netlist, rabi, fd;
    int port = 2;
};

int run_budget(const BudgetArgs& a, const Output& out) {
    const auto chain = AttenuationChain::parse(a.chain);
    GateBudget g;
    g.duration = quantity(a.gate, "gate");
    g.transmon = transmon(quantity(a.fq, "fq"), quantity(a.ec, "ec"), std::nullopt);
    if (a.mode == "resonant") g.mode = DriveMode::resonant;
    else if (a.mode == "subharmonic") g.mode = DriveMode::subharmonic;
    else throw UsageError("--mode must be resonant or subharmonic");
    g.target_rabi = quantity(a.rabi, "rabi");
    const double f_d = a.fd ? quantity(*a.fd, "fd") : g.mode == DriveMode::resonant ? g.transmon.f_q : g.transmon.f_q / 3;
    if (a.t1ext && a.netlist) throw UsageError("give --t1ext or --netlist, not both");
    if (a.t1ext) g.gamma = 1.0 / quantity(*a.t1ext, "t1ext");
    else if (a.netlist)
        g.gamma = gamma_from_netlist(parse_netlist(read_file(*a.netlist)), a.port, f_d, g.transmon.c_q);
    else throw UsageError("give --t1ext (external T1 at the drive frequency) or --netlist");
    const double z0 = quantity(a.z0, "z0");
    const auto b = required_room_temperature_power(g, chain, z0, f_d);
    const double heat = base_plate_heat(b.p_room_dbm, chain);
    const double n_th = chain_photon_number(chain, g.transmon.f_q);
    std::string rep = fmt("drive frequency            %.6g GHz\n", b.f_drive / 1e9);
    if (g.mode == DriveMode::subharmonic) rep += fmt("subharmonic strength eta   %.4f\n", b.eta);
    rep += fmt("line Rabi rate             %.6g MHz\n", b.f_rabi_drive / 1e6);
    rep += fmt("chip voltage (peak)        %.6g uV\n", b.v_chip * 1e6);
    rep += fmt("chip power                 %.2f dBm\n", b.p_chip_dbm);
    rep += fmt("room-temperature power     %.2f dBm\n", b.p_room_dbm);
    rep += fmt("base-plate heat            %.2f dBm\n", heat);
    rep += fmt("thermal photons at f_q     %.4g\n", n_th);
    rep += fmt("total attenuation          %.1f dB\n", chain.total_db());
    if (!chain.temperatures_non_increasing()) rep += "note: a stage is warmer than the one above it\n";
    std::cout << rep;
    Table t;
    t.add("f_drive_hz", {b.f_drive}).add("eta", {b.eta}).add("f_rabi_drive_hz", {b.f_rabi_drive});
    t.add("v_chip_v", {b.v_chip}).add("p_chip_dbm", {b.p_chip_dbm}).add("p_room_dbm", {b.p_room_dbm});
    t.add("heat_dbm", {heat}).add("n_thermal", {n_th});
    out.write("budget.csv", write_csv(t));
    return 0;
}

struct ReproArgs {
    std::size_t cases = 200;
    std::uint64_t seed = reproduce::Options{}.seed;
    std::vector<int> criteria;
};

int run_reproduce(const ReproArgs& a, const Output& out) {
    reproduce::Options opt;
    opt.property_cases = a.cases;
    opt.seed = a.seed;
    std::vector<int> ids = a.criteria;
    if (ids.empty())
        for (int k = 1; k <= 10; ++k) ids.push_back(k);
    std::string rep;
    int failed = 0;
    for (int id : ids) {
        if (id < 1 || id > 10) throw UsageError("--criteria takes numbers 1-10");
        const auto r = reproduce::run_criterion(id, opt);
        const auto line = reproduce::format_line(r);
        std::cout << line << std::endl;
        rep += line + "\n";
        if (!r.pass) ++failed;
    }
    rep += std::to_string(ids.size() - static_cast<std::size_t>(failed)) + "/" + std::to_string(ids.size()) +
           " criteria passed\n";
    std::cout << rep.substr(rep.rfind('\n', rep.size() - 2) + 1);
    out.write("reproduce.txt", rep);
    return failed == 0 ? 0 : 1;
}

std::string hint_for(const Error& e) {
    if (!e.hint().empty()) return e.hint();
    switch (e.code()) {
    case Errc::parse: return "fix the input at the line and column shown";
    case Errc::format: return "check the file header and column count";
    case Errc::topology: return "every node needs a path to ground and each port a distinct node";
    case Errc::numeric_range: return "use a positive, finite value";
    case Errc::non_convergence: return "pass --initial closer to the answer";
    case Errc::no_oscillation: return "lengthen --duration or raise the drive";
    case Errc::drive_too_weak: return "increase the drive or shorten the chain";
    default: return "run with --help for valid arguments";
    }
}

/// key=value lines become --key=value arguments unless the flag is already on the command line.
std::vector<std::string> apply_config(std::vector<std::string> args) {
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config needs a file");
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (!path) return args;
    std::istringstream in(read_file(*path));
    int line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(*path + ":" + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key == "subcommand") {
            static const std::vector<std::string> subs{"net", "sweep", "dynamics", "scan", "fit", "sequence", "budget", "reproduce"};
            const bool has = std::any_of(args.begin(), args.end(),
                                         [&](const std::string& s) { return std::find(subs.begin(), subs.end(), s) != subs.end(); });
            if (!has) args.insert(args.begin(), value);
            continue;
        }
        const std::string flag = "--" + key;
        const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& s) {
            return s == flag || s.rfind(flag + "=", 0) == 0;
        });
        if (!given) args.push_back(flag + "=" + value);
    }
    return args;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qdrive: drive-line networks, coupling, transmon dynamics, fitting and power budgets"};
    app.require_subcommand(1);
    std::string out_dir = "out";
    app.add_option("-o,--out", out_dir, "output directory (env QDRIVE_OUT)")->envname("QDRIVE_OUT")->capture_default_str();
    app.set_help_all_flag("--help-all", "help for every subcommand");
    app.footer("Quantities accept SI suffixes: 5GHz, 83fF, 10ns, 1e-5. --config FILE reads key=value lines\n"
               "mirroring the long flags (plus subcommand=NAME). Exit codes: 0 ok, 1 domain error or failed\n"
               "criterion, 2 usage error.");

    NetArgs na;
    auto* net = app.add_subcommand("net", "netlist -> Touchstone, driving-point admittance CSV and plots");
    net->add_option("--netlist", na.netlist, "netlist file")->required()->check(CLI::ExistingFile);
    net->add_option("--grid", na.grid, "frequencies start:stop:points or a list")->capture_default_str();
    net->add_option("--format", na.format, "Touchstone format")->check(CLI::IsMember({"RI", "MA", "DB"}))->capture_default_str();
    net->add_option("--port", na.port, "driving-point port (default: highest index)");
    net->add_option("--cq", na.cq, "qubit capacitance; adds a T1_ext column");
    net->add_option("-o,--out", out_dir, "output directory")->envname("QDRIVE_OUT");

    SweepArgs sa;
    auto* sw = app.add_subcommand("sweep", "qubit-frequency sweep -> T1_ext and Rabi-frequency CSV");
    sw->add_option("--netlist", sa.netlist, "netlist file")->required()->check(CLI::ExistingFile);
    sw->add_option("--grid", sa.grid, "qubit frequencies start:stop:points or a list")->capture_default_str();
    sw->add_option("--cq", sa.cq, "qubit capacitance")->capture_default_str();
    sw->add_option("--port", sa.port, "qubit port")->capture_default_str();
    sw->add_option("--z0", sa.z0, "drive-line impedance")->capture_default_str();
    sw->add_option("--vpeak", sa.vpeak, "chip-level peak drive voltage for the Rabi column")->capture_default_str();
    sw->add_option("--threshold", sa.threshold, "stopband T1 threshold")->capture_default_str();
    sw->add_option("-o,--out", out_dir, "output directory")->envname("QDRIVE_OUT");

    DynArgs da;
    auto* dyn = app.add_subcommand("dynamics", "single driven evolution -> population CSV");
    dyn->add_option("--fq", da.fq, "qubit frequency")->capture_default_str();
    dyn->add_option("--ec", da.ec, "charging energy")->capture_default_str();
    dyn->add_option("--alpha", da.alpha, "anharmonicity (default -E_C; sign optional)");
    dyn->add_option("--frame", da.frame, "lab, resonant or subharmonic")->capture_default_str();
    dyn->add_option("--levels", da.levels, "truncation (default 9 lab, 5 rotating)");
    dyn->add_option("--model", da.model, "lab nonlinearity: quartic or kerr")->capture_default_str();
    dyn->add_option("--fd", da.fd, "drive frequency (default f_q, or f_q/3 for subharmonic drives)");
    dyn->add_option("--rabi", da.rabi, "drive strength Omega_R/2pi (default 10MHz)");
    dyn->add_option("--eta", da.eta, "subharmonic strength; sets Omega_R from f_d");
    dyn->add_option("--duration", da.duration, "pulse length")->capture_default_str();
    dyn->add_option("--envelope", da.envelope, "rect or cosine")->capture_default_str();
    dyn->add_option("--ramp", da.ramp, "cosine edge as a fraction of the pulse")->capture_default_str();
    dyn->add_option("--phase", da.phase, "drive phase (rad)")->capture_default_str();
    dyn->add_option("--samples", da.samples, "output samples")->capture_default_str();
    dyn->add_option("--initial", da.initial, "initial level")->capture_default_str();
    dyn->add_option("--rtol", da.rtol, "integrator relative tolerance")->capture_default_str();
    dyn->add_flag("--stroboscopic", da.stroboscopic, "lab frame: repeat the one-period propagator");
    dyn->add_option("-o,--out", out_dir, "output directory")->envname("QDRIVE_OUT");

    ScanArgs ca;
    auto* scan = app.add_subcommand("scan", "flux x drive-frequency spectroscopy map -> CSV");
    scan->add_option("--fmax", ca.fmax, "sweet-spot frequency")->capture_default_str();
    scan->add_option("--ec", ca.ec, "charging energy")->capture_default_str();
    scan->add_option("--alpha", ca.alpha, "anharmonicity (default -E_C)");
    scan->add_option("--flux", ca.flux, "flux points (Phi0)")->capture_default_str();
    scan->add_option("--fd", ca.fd, "drive frequencies start:stop:points or a list")->required();
    scan->add_option("--mode", ca.mode, "resonant or subharmonic")->capture_default_str();
    scan->add_option("--rabi", ca.rabi, "drive strength Omega_R/2pi")->capture_default_str();
    scan->add_option("--duration", ca.duration, "pulse length")->capture_default_str();
    scan->add_option("--levels", ca.levels, "truncation")->capture_default_str();
    scan->add_option("-o,--out", out_dir, "output directory")->envname("QDRIVE_OUT");

    FitArgs fa;
    auto* fitc = app.add_subcommand("fit", "fit a model to two CSV columns");
    fitc->add_option("--input", fa.input, "CSV file with a header row")->required()->check(CLI::ExistingFile);
    fitc->add_option("--model", fa.model, "lorentzian, decaying_cosine, exponential_decay, flux_arch, polynomial:N")
        ->required();
    fitc->add_option("--x", fa.x, "x column (default first)");
    fitc->add_option("--y", fa.y, "y column (default second)");
    fitc->add_option("--initial", fa.initial, "comma-separated starting parameters");
    fitc->add_option("-o,--out", out_dir, "output directory")->envname("QDRIVE_OUT");

    SeqArgs qa;
    auto* seq = app.add_subcommand("sequence", "emulated characterisation sequence report");
    seq->add_option("--fmax", qa.fmax, "sweet-spot frequency")->capture_default_str();
    seq->add_option("--ec", qa.ec, "charging energy")->capture_default_str();
    seq->add_option("--alpha", qa.alpha, "anharmonicity (default -E_C)");
    seq->add_option("--flux", qa.flux, "flux bias (Phi0, default 0)");
    seq->add_option("--voltage", qa.voltage, "bias voltage, mapped through --vpf and --flux-offset");
    seq->add_option("--vpf", qa.vpf, "volts per flux quantum")->capture_default_str();
    seq->add_option("--flux-offset", qa.flux_offset, "flux offset (Phi0)")->capture_default_str();
    seq->add_option("--netlist", qa.netlist, "drive environment")->check(CLI::ExistingFile);
    seq->add_option("--port", qa.port, "qubit port of the netlist")->capture_default_str();
    seq->add_option("--z0", qa.z0, "drive-line impedance")->capture_default_str();
    seq->add_option("--fr", qa.fr, "bare resonator frequency")->capture_default_str();
    seq->add_option("--kappa", qa.kappa, "resonator linewidth kappa/2pi")->capture_default_str();
    seq->add_option("--g", qa.g, "qubit-resonator coupling g/2pi")->capture_default_str();
    seq->add_option("--tan-delta", qa.tan_delta, "dielectric loss tangent")->capture_default_str();
    seq->add_option("--temperature", qa.temperature, "device temperature")->capture_default_str();
    seq->add_option("--t1-other", qa.t1_other, "extra relaxation channel");
    seq->add_option("--rabi", qa.rabi, "calibrated Rabi rate")->capture_default_str();
    seq->add_option("--noise", qa.noise, "readout noise sigma")->capture_default_str();
    seq->add_option("--seed", qa.seed, "noise seed")->capture_default_str();
    seq->add_option("-o,--out", out_dir, "output directory")->envname("QDRIVE_OUT");

    BudgetArgs ba;
    auto* bud = app.add_subcommand("budget", "room-temperature power, base-plate heat and thermal photons");
    bud->add_option("--chain", ba.chain, "attenuation stages label:dB@K,...")->capture_default_str();
    bud->add_option("--gate", ba.gate, "pi-pulse length")->capture_default_str();
    bud->add_option("--t1ext", ba.t1ext, "external T1 at the drive frequency");
    bud->add_option("--netlist", ba.netlist, "drive environment; gamma taken at the drive frequency")
        ->check(CLI::ExistingFile);
    bud->add_option("--port", ba.port, "qubit port of the netlist")->capture_default_str();
    bud->add_option("--mode", ba.mode, "resonant or subharmonic")->capture_default_str();
    bud->add_option("--fq", ba.fq, "qubit frequency")->capture_default_str();
    bud->add_option("--ec", ba.ec, "charging energy")->capture_default_str();
    bud->add_option("--fd", ba.fd, "drive frequency (default f_q or f_q/3)");
    bud->add_option("--rabi", ba.rabi, "target Rabi rate (default 1/(2 gate))");
    bud->add_option("--z0", ba.z0, "drive-line impedance")->capture_default_str();
    bud->add_option("-o,--out", out_dir, "output directory")->envname("QDRIVE_OUT");

    ReproArgs ra;
    auto* rep = app.add_subcommand("reproduce", "run the acceptance criteria and print pass/fail per criterion");
    rep->add_option("--cases", ra.cases, "randomized cases per property suite")->capture_default_str();
    rep->add_option("--seed", ra.seed, "property-suite seed")->capture_default_str();
    rep->add_option("--criteria", ra.criteria, "subset of criteria, e.g. 1,2,9")->delimiter(',');
    rep->add_option("-o,--out", out_dir, "output directory")->envname("QDRIVE_OUT");

    try {
        std::vector<std::string> args = apply_config(std::vector<std::string>(argv + 1, argv + argc));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error [" << e.module() << "] " << errc_name(e.code()) << ": " << e.what() << "\n";
        std::cerr << "  hint: " << hint_for(e) << "\n";
        return 2;
    }

    try {
        Output out{out_dir};
        out.prepare();
        if (*net) return run_net(na, out);
        if (*sw) return run_sweep(sa, out);
        if (*dyn) return run_dynamics(da, out);
        if (*scan) return run_scan(ca, out);
        if (*fitc) return run_fit(fa, out);
        if (*seq) return run_sequence(qa, out);
        if (*bud) return run_budget(ba, out);
        if (*rep) return run_reproduce(ra, out);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error [" << e.module() << "] " << errc_name(e.code()) << ": " << e.what() << "\n";
        std::cerr << "  hint: " << hint_for(e) << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
