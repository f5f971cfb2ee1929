#pragma once

#include <qdrive/cascade.hpp>
#include <qdrive/dynamics.hpp>
#include <qdrive/fitting.hpp>
#include <qdrive/network.hpp>
#include <qdrive/rfio.hpp>

#include <functional>
#include <random>
#include <string>
#include <vector>

/// Randomized invariant checks; each suite draws its cases from a seeded generator.
namespace qdrive::properties {

struct PropertyResult {
    std::string name;
    std::size_t cases = 0;
    std::size_t failures = 0;
    double worst = 0.0;      // largest observed defect (suite-specific metric)
    std::string first_failure;

    bool pass() const { return cases > 0 && failures == 0; }
};

using Rng = std::mt19937_64;

namespace detail {

inline double uniform(Rng& r, double a, double b) { return std::uniform_real_distribution<double>(a, b)(r); }
inline double log_uniform(Rng& r, double a, double b) { return std::exp(uniform(r, std::log(a), std::log(b))); }
inline int pick(Rng& r, int a, int b) { return std::uniform_int_distribution<int>(a, b)(r); }

/// Runs `body` per case; it returns the defect, which must stay below `tol`.
inline PropertyResult run(const std::string& name, std::size_t cases, std::uint64_t seed, double tol,
                          const std::function<double(Rng&, std::size_t)>& body) {
    PropertyResult out;
    out.name = name;
    Rng rng(seed);
    for (std::size_t i = 0; i < cases; ++i) {
        ++out.cases;
        std::string why;
        double defect = 0.0;
        try {
            defect = body(rng, i);
            if (!(defect <= tol)) why = "defect " + format_double(defect);
        } catch (const std::exception& e) {
            why = e.what();
            defect = std::numeric_limits<double>::infinity();
        }
        if (std::isfinite(defect)) out.worst = std::max(out.worst, defect);
        if (!why.empty()) {
            if (out.failures++ == 0) out.first_failure = "case " + std::to_string(i) + ": " + why;
        }
    }
    return out;
}

/// Connected random network on a chain backbone; ports sit on distinct nodes.
inline Netlist random_netlist(Rng& r, bool lossy, int ports) {
    Netlist n;
    n.ground("0");
    const int nodes = pick(r, std::max(ports, 2), 6);
    auto node = [](int k) { return "n" + std::to_string(k); };
    auto add = [&](const std::string& a, const std::string& b) {
        const int kind = pick(r, 0, lossy ? 3 : 2);
        switch (kind) {
        case 0: n.capacitor(a, b, log_uniform(r, 1e-15, 1e-12)); break;
        case 1: n.inductor(a, b, log_uniform(r, 1e-10, 1e-8)); break;
        case 2:
            n.tline(a, b, {uniform(r, 20, 100), uniform(r, 1, 12), uniform(r, 0.5e-3, 20e-3),
                           lossy ? uniform(r, 0, 5) : 0.0});
            break;
        default: n.resistor(a, b, log_uniform(r, 1, 1e3)); break;
        }
    };
    for (int k = 1; k < nodes; ++k) add(node(k - 1), node(k));
    const int extra = pick(r, 1, 4);
    for (int e = 0; e < extra; ++e) {
        const int a = pick(r, 0, nodes - 1);
        int b = pick(r, -1, nodes - 1);
        if (b == a) b = -1;
        add(node(a), b < 0 ? "0" : node(b));
    }
    std::vector<int> order(static_cast<std::size_t>(nodes));
    for (int k = 0; k < nodes; ++k) order[static_cast<std::size_t>(k)] = k;
    std::shuffle(order.begin(), order.end(), r);
    for (int p = 0; p < ports; ++p) n.port(node(order[static_cast<std::size_t>(p)]), uniform(r, 20, 100));
    return n;
}

inline double relative_error(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

} // namespace detail

/// S = S^T for reciprocal random networks.
inline PropertyResult reciprocity(std::size_t cases, std::uint64_t seed) {
    return detail::run("network reciprocity", cases, seed, 1e-9, [](Rng& r, std::size_t) {
        const auto n = detail::random_netlist(r, true, detail::pick(r, 1, 3));
        const auto s = s_matrix(n, detail::log_uniform(r, 1e8, 2e10));
        return detail::relative_error(s, s.transpose());
    });
}

/// S^H S = I for lossless random networks.
inline PropertyResult unitarity(std::size_t cases, std::uint64_t seed) {
    return detail::run("network unitarity", cases, seed, 1e-8, [](Rng& r, std::size_t) {
        const auto n = detail::random_netlist(r, false, detail::pick(r, 1, 3));
        const auto s = s_matrix(n, detail::log_uniform(r, 1e8, 2e10));
        const auto I = Eigen::MatrixXcd::Identity(s.rows(), s.cols());
        return detail::relative_error(s.adjoint() * s, I);
    });
}

/// I - S^H S is positive semidefinite for lossy random networks; defect is minus its lowest eigenvalue.
inline PropertyResult passivity(std::size_t cases, std::uint64_t seed) {
    return detail::run("network passivity", cases, seed, 1e-10, [](Rng& r, std::size_t) {
        const auto n = detail::random_netlist(r, true, detail::pick(r, 1, 3));
        const auto s = s_matrix(n, detail::log_uniform(r, 1e8, 2e10));
        const Eigen::MatrixXcd q = Eigen::MatrixXcd::Identity(s.rows(), s.cols()) - s.adjoint() * s;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (q + q.adjoint()));
        return std::max(0.0, -es.eigenvalues().minCoeff());
    });
}

/// Random series/shunt/line chains: ABCD product against the nodal solver.
inline PropertyResult cascade_equivalence(std::size_t cases, std::uint64_t seed) {
    return detail::run("ABCD vs nodal cascade", cases, seed, 1e-9, [](Rng& r, std::size_t) {
        const double f = detail::log_uniform(r, 1e8, 2e10);
        const double w = constants::two_pi * f;
        Netlist n;
        n.ground("0");
        Eigen::Matrix2cd t = Eigen::Matrix2cd::Identity();
        int node = 0;
        auto cur = [&] { return "c" + std::to_string(node); };
        const int segments = detail::pick(r, 1, 6);
        const std::string first = cur();
        for (int k = 0; k < segments; ++k) {
            const int kind = detail::pick(r, 0, 3);
            if (kind == 3) {
                TLineParams l{detail::uniform(r, 20, 100), detail::uniform(r, 1, 12), detail::uniform(r, 0.5e-3, 20e-3),
                              detail::uniform(r, 0, 5)};
                const std::string a = cur();
                ++node;
                n.tline(a, cur(), l);
                t = t * tline_two_port(l, f);
                continue;
            }
            const bool series = detail::pick(r, 0, 1) == 1;
            cplx z;
            const double v = kind == 0 ? detail::log_uniform(r, 1e-15, 1e-12)
                             : kind == 1 ? detail::log_uniform(r, 1e-10, 1e-8)
                                         : detail::log_uniform(r, 1, 1e3);
            z = kind == 0 ? 1.0 / cplx(0, w * v) : kind == 1 ? cplx(0, w * v) : cplx(v, 0);
            auto place = [&](const std::string& a, const std::string& b) {
                if (kind == 0) n.capacitor(a, b, v);
                else if (kind == 1) n.inductor(a, b, v);
                else n.resistor(a, b, v);
            };
            if (series) {
                const std::string a = cur();
                ++node;
                place(a, cur());
                t = t * cascade::series(z);
            } else {
                place(cur(), "0");
                t = t * cascade::shunt(1.0 / z);
            }
        }
        if (node == 0) {
            // a pure shunt chain still needs two distinct port nodes
            const std::string a = cur();
            ++node;
            n.resistor(a, cur(), 1e-3);
            t = t * cascade::series(1e-3);
        }
        const double z1 = detail::uniform(r, 20, 100), z2 = detail::uniform(r, 20, 100);
        n.port(first, z1).port(cur(), z2);
        return detail::relative_error(s_matrix(n, f), cascade::abcd_to_s(t, z1, z2, cplx(1.0)));
    });
}

/// Written Touchstone parses back to the same frequencies and matrices.
inline PropertyResult touchstone_round_trip(std::size_t cases, std::uint64_t seed) {
    return detail::run("Touchstone round trip", cases, seed, 1e-12, [](Rng& r, std::size_t) {
        static const char* units[] = {"Hz", "kHz", "MHz", "GHz"};
        TouchstoneBlock b;
        b.ports = detail::pick(r, 1, 4);
        b.format = static_cast<TsFormat>(detail::pick(r, 0, 2));
        b.unit = units[detail::pick(r, 0, 3)];
        b.r_ref = detail::uniform(r, 1, 200);
        double f = detail::log_uniform(r, 1e3, 1e9);
        const int rows = detail::pick(r, 1, 12);
        for (int k = 0; k < rows; ++k) {
            b.freq.push_back(f);
            f += detail::log_uniform(r, 1, 1e9);
            Eigen::MatrixXcd s(b.ports, b.ports);
            for (int i = 0; i < b.ports; ++i)
                for (int j = 0; j < b.ports; ++j) s(i, j) = cplx(detail::uniform(r, -1, 1), detail::uniform(r, -1, 1));
            b.data.push_back(s);
        }
        const auto back = parse_touchstone(write_touchstone(b), b.ports);
        if (back.ports != b.ports || back.format != b.format || back.freq.size() != b.freq.size())
            return std::numeric_limits<double>::infinity();
        double worst = std::abs(back.r_ref - b.r_ref) / b.r_ref;
        for (std::size_t k = 0; k < b.freq.size(); ++k) {
            worst = std::max(worst, std::abs(back.freq[k] - b.freq[k]) / b.freq[k]);
            worst = std::max(worst, detail::relative_error(back.data[k], b.data[k]));
        }
        return worst;
    });
}

/// serialize -> parse reproduces a random netlist exactly, labels included.
inline PropertyResult netlist_round_trip(std::size_t cases, std::uint64_t seed) {
    return detail::run("netlist round trip", cases, seed, 0.0, [](Rng& r, std::size_t) {
        auto n = detail::random_netlist(r, true, detail::pick(r, 1, 3));
        for (auto& e : n.elements)
            if (detail::pick(r, 0, 2) == 0) e.label = "L" + std::to_string(detail::pick(r, 0, 9999));
        const auto once = parse_netlist(serialize_netlist(n));
        return once == n && parse_netlist(serialize_netlist(once)) == once ? 0.0 : 1.0;
    });
}

namespace detail {

struct FitCase {
    FitModel model;
    Eigen::VectorXd truth;
    Eigen::VectorXd scale; // natural size of each parameter, for near-zero truths
    std::vector<double> x;
};

inline FitCase random_fit_case(Rng& r) {
    const int which = pick(r, 0, 4);
    FitCase c{FitModel::lorentzian(), {}, {}, {}};
    switch (which) {
    case 0: {
        const double lo = uniform(r, 1e9, 8e9), span = uniform(r, 1e6, 100e6);
        c.x = linspace(lo, lo + span, static_cast<std::size_t>(pick(r, 151, 301)));
        c.truth.resize(4);
        c.truth << lo + span * uniform(r, 0.35, 0.65), span * uniform(r, 0.01, 0.06),
            uniform(r, 0.3, 1.0) * (pick(r, 0, 1) ? 1 : -1), uniform(r, -0.5, 1.0);
        c.scale.resize(4);
        c.scale << lo, span, 1, 1;
        break;
    }
    case 1: {
        c.model = FitModel::decaying_cosine();
        const double span = uniform(r, 100e-9, 2e-6);
        c.x = linspace(0, span, static_cast<std::size_t>(pick(r, 161, 301)));
        c.truth.resize(5);
        c.truth << uniform(r, 0.2, 0.5), uniform(r, 3.0, 12.0) / span, uniform(r, -3.0, 3.0),
            uniform(r, 0.0, 1.0) / span, uniform(r, 0.3, 0.7);
        c.scale.resize(5);
        c.scale << 1, 1 / span, constants::pi, 1 / span, 1;
        break;
    }
    case 2: {
        c.model = FitModel::exponential_decay();
        const double span = uniform(r, 1e-6, 1e-3);
        c.x = linspace(0, span, static_cast<std::size_t>(pick(r, 101, 201)));
        c.truth.resize(3);
        c.truth << uniform(r, 0.5, 1.0), span * uniform(r, 0.1, 0.5), uniform(r, -0.1, 0.1);
        c.scale.resize(3);
        c.scale << 1, span, 1;
        break;
    }
    case 3: {
        c.model = FitModel::flux_arch();
        c.x = linspace(-0.4, 0.4, static_cast<std::size_t>(pick(r, 41, 121)));
        c.truth.resize(3);
        c.truth << uniform(r, 5e9, 9e9), uniform(r, 150e6, 350e6), uniform(r, -0.05, 0.05);
        c.scale.resize(3);
        c.scale << 1e9, 1e8, 1;
        break;
    }
    default: {
        const int deg = pick(r, 0, 3);
        c.model = FitModel::polynomial(deg);
        c.x = linspace(-2, 2, static_cast<std::size_t>(pick(r, 21, 61)));
        c.truth.resize(deg + 1);
        for (int k = 0; k <= deg; ++k) c.truth[k] = uniform(r, -3, 3);
        c.scale = Eigen::VectorXd::Ones(deg + 1);
        break;
    }
    }
    return c;
}

} // namespace detail

/// Noiseless synthetic traces are fitted back to their generating parameters.
inline PropertyResult fit_exact_recovery(std::size_t cases, std::uint64_t seed) {
    return detail::run("fit exact recovery", cases, seed, 1e-6, [](Rng& r, std::size_t) {
        const auto c = detail::random_fit_case(r);
        const auto res = fit(c.model, c.x, synthesize_trace(c.model, c.truth, c.x, 0.0, 1));
        if (!res.converged) return std::numeric_limits<double>::infinity();
        double worst = 0.0;
        for (Eigen::Index k = 0; k < c.truth.size(); ++k) {
            const double ref = std::max(std::abs(c.truth[k]), 1e-3 * c.scale[k]);
            worst = std::max(worst, std::abs(res.params[k] - c.truth[k]) / ref);
        }
        return worst;
    });
}

/// Same seed, same noisy trace, bit-identical fit; a different seed changes the trace.
inline PropertyResult fit_determinism(std::size_t cases, std::uint64_t seed) {
    return detail::run("fit seeded determinism", cases, seed, 0.0, [](Rng& r, std::size_t) {
        const auto c = detail::random_fit_case(r);
        const std::uint64_t s = r();
        const double sigma = 0.02 * (std::abs(c.truth[0]) + 1e-9) * detail::uniform(r, 0.1, 1.0);
        const auto y1 = synthesize_trace(c.model, c.truth, c.x, sigma, s);
        const auto y2 = synthesize_trace(c.model, c.truth, c.x, sigma, s);
        const auto y3 = synthesize_trace(c.model, c.truth, c.x, sigma, s + 1);
        if (y1 != y2 || y1 == y3) return 1.0;
        FitResult a, b;
        bool threw_a = false, threw_b = false;
        try { a = fit(c.model, c.x, y1); } catch (const Error&) { threw_a = true; }
        try { b = fit(c.model, c.x, y2); } catch (const Error&) { threw_b = true; }
        if (threw_a != threw_b) return 1.0;
        if (threw_a) return 0.0;
        const bool same = a.params == b.params && a.sigma == b.sigma && a.iterations == b.iterations &&
                          a.residual_norm == b.residual_norm && a.converged == b.converged;
        return same ? 0.0 : 1.0;
    });
}

/// Random frame, truncation and pulse: the state norm stays within 1e-8.
inline PropertyResult norm_conservation(std::size_t cases, std::uint64_t seed) {
    return detail::run("evolution norm conservation", cases, seed, 1e-8, [](Rng& r, std::size_t) {
        const auto p = TransmonParams::from_frequency(detail::uniform(r, 4e9, 7e9), detail::uniform(r, 150e6, 330e6));
        const auto frame = static_cast<Frame>(detail::pick(r, 0, 2));
        PulseSpec s;
        s.phase = detail::uniform(r, -constants::pi, constants::pi);
        s.envelope = detail::pick(r, 0, 1) ? Envelope::cosine_ramped : Envelope::rectangular;
        s.ramp = detail::uniform(r, 0.05, 0.4);
        double span = 0.0;
        int d = 0;
        switch (frame) {
        case Frame::lab:
            d = detail::pick(r, 2, 7);
            s.f_d = p.f_q * detail::uniform(r, 0.3, 1.1);
            s.rabi = detail::log_uniform(r, 1e6, 100e6);
            span = detail::uniform(r, 2e-9, 10e-9);
            break;
        case Frame::rotating_resonant:
            d = detail::pick(r, 2, 7);
            s.f_d = p.f_q + detail::uniform(r, -300e6, 300e6);
            s.rabi = detail::log_uniform(r, 1e6, 100e6);
            span = detail::uniform(r, 20e-9, 500e-9);
            break;
        case Frame::rotating_subharmonic: {
            d = detail::pick(r, 3, 7);
            s.f_d = p.f_q / 3 + detail::uniform(r, -10e6, 2e6);
            const double eta = detail::uniform(r, 0.02, 0.4);
            const double wp = constants::two_pi * (p.f_q - p.alpha), wd = constants::two_pi * s.f_d;
            s.rabi = eta * std::abs(wd * wd - wp * wp) / wp / constants::two_pi;
            span = detail::uniform(r, 20e-9, 500e-9);
            break;
        }
        }
        s.duration = span;
        const auto g = build_hamiltonian(frame, p, s, d);
        EvolveOptions o;
        o.samples = 21;
        cvec psi = basis_state(g, 0);
        if (detail::pick(r, 0, 1)) {
            for (Eigen::Index k = 0; k < psi.size(); ++k) psi[k] = cplx(detail::uniform(r, -1, 1), detail::uniform(r, -1, 1));
            psi.normalize();
        }
        return evolve(g, span, psi, o).max_norm_error;
    });
}

/// Lab-frame subharmonic Rabi rate changes by under 1% from d = 9 to d = 11.
inline PropertyResult truncation_stability(std::size_t cases, std::uint64_t seed) {
    return detail::run("truncation stability", cases, seed, 0.01, [](Rng& r, std::size_t) {
        const double a = detail::uniform(r, 150e6, 320e6);
        const auto p = TransmonParams::from_frequency(detail::uniform(r, 4.5e9, 7e9), a, -a);
        const double eta = detail::uniform(r, 0.1, 0.3);
        const double f9 = find_subharmonic_resonance(p, eta, 9).f_rabi;
        const double f11 = find_subharmonic_resonance(p, eta, 11).f_rabi;
        return std::abs(f9 - f11) / f11;
    });
}

inline std::vector<PropertyResult> run_all(std::size_t cases, std::uint64_t seed,
                                           const std::function<void(const PropertyResult&)>& on_done = {}) {
    using Suite = PropertyResult (*)(std::size_t, std::uint64_t);
    const Suite suites[] = {reciprocity,           unitarity,          passivity,       cascade_equivalence,
                            touchstone_round_trip, netlist_round_trip, fit_exact_recovery, fit_determinism,
                            norm_conservation,     truncation_stability};
    std::vector<PropertyResult> out;
    std::uint64_t k = 0;
    for (Suite s : suites) {
        out.push_back(s(cases, seed + 7919 * ++k));
        if (on_done) on_done(out.back());
    }
    return out;
}

} // namespace qdrive::properties
