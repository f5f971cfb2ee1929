#pragma once

#include <qdrive/constants.hpp>
#include <qdrive/coupling.hpp>
#include <qdrive/error.hpp>
#include <qdrive/fitting.hpp>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <optional>
#include <type_traits>
#include <string>
#include <vector>

namespace qdrive {

using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;

struct LadderOperators {
    int d = 0;
    cmat b, bdag, n, kerr; // kerr = b† b† b b

    static LadderOperators make(int d) {
        if (d < 2) throw Error(Errc::dimension, "dynamics", "truncation needs at least 2 levels");
        LadderOperators o;
        o.d = d;
        o.b = cmat::Zero(d, d);
        for (int k = 1; k < d; ++k) o.b(k - 1, k) = std::sqrt(static_cast<double>(k));
        o.bdag = o.b.adjoint();
        o.n = o.bdag * o.b;
        o.kerr = o.bdag * o.bdag * o.b * o.b;
        return o;
    }

    cmat x() const { return b + bdag; }
};

enum class Envelope { rectangular, cosine_ramped };

struct PulseSpec {
    double f_d = 0.0;      // Hz
    double rabi = 0.0;     // Omega_R / 2pi, Hz
    double phase = 0.0;    // rad
    double duration = 1e-6;
    Envelope envelope = Envelope::rectangular;
    double ramp = 0.0;     // fraction of duration spent on each edge

    /// Chip-level voltage through the admittance-derived Rabi conversion (evaluated at f_d).
    static PulseSpec from_voltage(double f_d, double v_peak, double gamma_at_fd, const TransmonParams& p, double z_tml,
                                  double duration) {
        PulseSpec s;
        s.f_d = f_d;
        s.rabi = rabi_from_admittance(gamma_at_fd, p.f_q, z_tml, v_peak, f_d);
        s.duration = duration;
        return s;
    }

    void validate() const {
        if (!(duration > 0)) throw Error(Errc::invalid_argument, "dynamics", "pulse duration must be > 0");
        if (!(ramp >= 0 && ramp <= 0.5)) throw Error(Errc::invalid_argument, "dynamics", "ramp fraction must lie in [0, 0.5]");
        if (!(f_d >= 0) || !std::isfinite(rabi)) throw Error(Errc::invalid_argument, "dynamics", "bad drive frequency or amplitude");
    }

    double env(double t) const {
        if (t < 0 || t > duration) return 0.0;
        if (envelope == Envelope::rectangular || ramp == 0.0) return 1.0;
        const double tr = ramp * duration;
        if (t < tr) return 0.5 * (1.0 - std::cos(constants::pi * t / tr));
        if (t > duration - tr) return 0.5 * (1.0 - std::cos(constants::pi * (duration - t) / tr));
        return 1.0;
    }
};

enum class Frame { lab, rotating_resonant, rotating_subharmonic };
enum class LabModel { quartic, kerr };

inline std::string frame_name(Frame f) {
    switch (f) {
    case Frame::lab: return "lab";
    case Frame::rotating_resonant: return "rotating-resonant";
    default: return "rotating-subharmonic";
    }
}

/// h(t) = h0 + sum coeff_k(t) op_k, all in rad/s.
struct Term {
    cmat op;
    std::function<double(double)> coeff;
};

struct Generator {
    Frame frame = Frame::lab;
    int d = 0;
    cmat h0;
    std::vector<Term> terms;
    cmat basis;                 // readout basis, columns ordered by level
    double dt_max = infinity;   // s
    double period = 0.0;        // drive period for periodic generators, 0 otherwise
    bool half_period_parity = false; // h(t + T/2) = P h(t) P with P = (-1)^n
    PulseSpec pulse;

    cmat at(double t) const {
        cmat h = h0;
        for (const auto& k : terms) h += k.coeff(t) * k.op;
        return h;
    }
};

/// Flux-tuned frequency of a symmetric SQUID transmon; phi in flux quanta.
inline double flux_to_frequency(const TransmonParams& p, double phi) {
    if (!(p.f_max > 0) || !(p.e_c > 0)) throw Error(Errc::invalid_argument, "dynamics", "f_max and E_C must be set");
    const double c = std::abs(std::cos(constants::pi * phi));
    if (c < 1e-6)
        throw Error(Errc::out_of_model, "dynamics", "flux " + std::to_string(phi) + " sits at the bottom of the arch",
                    "the symmetric-SQUID model has no transmon there");
    return (p.f_max + p.e_c) * std::sqrt(c) - p.e_c;
}

/// Smallest non-negative flux (Phi0) that tunes the qubit to f.
inline double frequency_to_flux(const TransmonParams& p, double f) {
    if (!(f > 0) || f > p.f_max) throw Error(Errc::out_of_model, "dynamics", "frequency outside the flux arch");
    const double r = (f + p.e_c) / (p.f_max + p.e_c);
    return std::acos(r * r) / constants::pi;
}

/// Transmon parameters at a flux bias, keeping E_C, alpha and f_max.
inline TransmonParams at_flux(const TransmonParams& p, double phi) {
    return TransmonParams::from_frequency(flux_to_frequency(p, phi), p.e_c, p.alpha, p.f_max);
}

struct SubharmonicEffective {
    double eta = 0.0;
    double stark = 0.0;     // Hz, same sign as alpha
    double f_rabi_sub = 0.0; // Hz
};

/// Closed-form three-wave-mixing strength, Stark shift and Rabi rate; omega_r in rad/s.
inline SubharmonicEffective subharmonic_effective(const TransmonParams& p, double f_d, double omega_r) {
    const double wq = constants::two_pi * p.f_q;
    const double a = constants::two_pi * p.alpha;
    const double wp = wq - a;
    const double wd = constants::two_pi * f_d;
    const double den = wd * wd - wp * wp;
    if (std::abs(den) < 1e-3 * wp * wp)
        throw Error(Errc::near_pole, "dynamics", "drive sits on the omega_q - alpha pole",
                    "move the drive away from f_q - alpha");
    if (std::abs(wd - wq / 3.0) > 0.2 * wq / 3.0)
        throw Error(Errc::invalid_argument, "dynamics", "subharmonic drive must lie within 20% of f_q/3");
    SubharmonicEffective s;
    s.eta = omega_r * wp / den;
    s.stark = 2.0 * a * s.eta * s.eta / 3.0 / constants::two_pi;
    s.f_rabi_sub = 2.0 * std::abs(a) * std::abs(s.eta * s.eta * s.eta) / 3.0 / constants::two_pi;
    return s;
}

namespace detail {

struct QuarticCalibration {
    double w_p = 0.0; // rad/s
    double a4 = 0.0;  // rad/s
};

/// H = w_p n + (a4/12) x^4 (x^4 built with 4 spare levels, then truncated) such that the dressed
/// 0-1 splitting is w_q and the dressed anharmonicity is a.
/// d = 2 has no anharmonicity: a4 comes from the three-level fit, w_p is re-solved for the 0-1 splitting.
inline std::pair<cmat, QuarticCalibration> quartic_hamiltonian(int d, double wq, double a) {
    if (d < 3) {
        auto [h3, c] = quartic_hamiltonian(3, wq, a);
        cmat h = h3.topLeftCorner(d, d);
        if (d == 2) {
            c.w_p = wq - (h(1, 1).real() - c.w_p - h(0, 0).real());
            h(1, 1) = h(0, 0) + wq;
        }
        return {h, c};
    }
    const auto big = LadderOperators::make(d + 4);
    const cmat x = big.x();
    const cmat x4 = (x * x * x * x).topLeftCorner(d, d) / 12.0;
    const cmat n = big.n.topLeftCorner(d, d);
    QuarticCalibration c{wq - a, a};
    for (int it = 0; it < 60; ++it) {
        Eigen::SelfAdjointEigenSolver<cmat> es(c.w_p * n + c.a4 * x4);
        const auto& e = es.eigenvalues();
        const auto& v = es.eigenvectors();
        const Eigen::Vector2d f(e[1] - e[0] - wq, e[2] - 2 * e[1] + e[0] - a);
        // Hellmann-Feynman derivatives
        auto dn = [&](int k) { return (v.col(k).adjoint() * n * v.col(k))(0, 0).real(); };
        auto dx = [&](int k) { return (v.col(k).adjoint() * x4 * v.col(k))(0, 0).real(); };
        Eigen::Matrix2d j;
        j << dn(1) - dn(0), dx(1) - dx(0), dn(2) - 2 * dn(1) + dn(0), dx(2) - 2 * dx(1) + dx(0);
        const Eigen::Vector2d step = j.partialPivLu().solve(f);
        c.w_p -= step[0];
        c.a4 -= step[1];
        if (std::abs(step[0]) < 1e-15 * wq && std::abs(step[1]) < 1e-13 * std::abs(a)) break;
    }
    return {c.w_p * n + c.a4 * x4, c};
}

inline cmat eigenbasis(const cmat& h) {
    Eigen::SelfAdjointEigenSolver<cmat> es(h);
    cmat v = es.eigenvectors();
    // fix the global phase of each column so the largest component is real and positive
    for (Eigen::Index k = 0; k < v.cols(); ++k) {
        Eigen::Index i;
        v.col(k).cwiseAbs().maxCoeff(&i);
        v.col(k) *= std::polar(1.0, -std::arg(v(i, k)));
    }
    return v;
}

} // namespace detail

inline Generator build_hamiltonian(Frame frame, const TransmonParams& p, const PulseSpec& pulse, int d,
                                   LabModel model = LabModel::quartic) {
    pulse.validate();
    if (frame == Frame::rotating_subharmonic && d < 3)
        throw Error(Errc::dimension, "dynamics", "subharmonic frame needs d >= 3",
                    "three-wave mixing passes through the second excited level");
    const auto o = LadderOperators::make(d);
    const double wq = constants::two_pi * p.f_q;
    const double a = constants::two_pi * p.alpha;
    const double wd = constants::two_pi * pulse.f_d;
    const double om = constants::two_pi * pulse.rabi;
    const PulseSpec pl = pulse;
    Generator g;
    g.frame = frame;
    g.d = d;
    g.pulse = pulse;
    switch (frame) {
    case Frame::lab: {
        if (model == LabModel::kerr) {
            g.h0 = wq * o.n + 0.5 * a * o.kerr;
            g.basis = cmat::Identity(d, d);
        } else {
            g.h0 = detail::quartic_hamiltonian(d, wq, a).first;
            g.basis = detail::eigenbasis(g.h0);
        }
        const double phi = pulse.phase;
        if (om != 0.0)
            g.terms.push_back({o.x(), [pl, om, wd, phi](double t) { return om * pl.env(t) * std::cos(wd * t + phi); }});
        const double f_ref = std::max(p.f_q, pulse.f_d);
        g.dt_max = 1.0 / (50.0 * f_ref);
        if (wd > 0) g.period = constants::two_pi / wd;
        g.half_period_parity = pulse.envelope == Envelope::rectangular || pulse.ramp == 0.0;
        break;
    }
    case Frame::rotating_resonant: {
        g.h0 = (wq - wd) * o.n + 0.5 * a * o.kerr;
        g.basis = cmat::Identity(d, d);
        const cmat c = 0.5 * (std::polar(1.0, -pulse.phase) * o.bdag + std::polar(1.0, pulse.phase) * o.b);
        if (om != 0.0) g.terms.push_back({c, [pl, om](double t) { return om * pl.env(t); }});
        break;
    }
    case Frame::rotating_subharmonic: {
        const double delta_d = wd - wq / 3.0;
        g.h0 = -3.0 * delta_d * o.n + 0.5 * a * o.kerr;
        g.basis = cmat::Identity(d, d);
        if (om != 0.0) {
            const double eta = subharmonic_effective(p, pulse.f_d, om).eta;
            g.terms.push_back({o.n, [pl, eta, a](double t) {
                                   const double e = eta * pl.env(t);
                                   return 2.0 * a * e * e;
                               }});
            const cmat c = std::polar(1.0, -3.0 * pulse.phase) * o.bdag + std::polar(1.0, 3.0 * pulse.phase) * o.b;
            g.terms.push_back({c, [pl, eta, a](double t) {
                                   const double e = eta * pl.env(t);
                                   return a / 3.0 * e * e * e;
                               }});
        }
        break;
    }
    }
    return g;
}

struct EvolveOptions {
    double rtol = 1e-12;
    double atol = 1e-15;
    std::optional<double> dt_max; // overrides the generator's value
    std::size_t samples = 201;    // uniform grid including both ends
};

struct EvolutionTrace {
    Frame frame = Frame::lab;
    int d = 0;
    PulseSpec pulse;
    std::vector<double> t;
    Eigen::MatrixXd populations; // rows = samples, columns = levels in the readout basis
    cvec final_state;
    double max_norm_error = 0.0;
    std::size_t steps = 0;

    std::vector<double> excited() const {
        std::vector<double> e(t.size());
        for (Eigen::Index i = 0; i < populations.rows(); ++i)
            e[static_cast<std::size_t>(i)] = populations.row(i).tail(populations.cols() - 1).sum();
        return e;
    }
    std::vector<double> level(int k) const {
        std::vector<double> e(t.size());
        for (Eigen::Index i = 0; i < populations.rows(); ++i) e[static_cast<std::size_t>(i)] = populations(i, k);
        return e;
    }
};

namespace detail {

/// Adaptive Dormand-Prince 5(4) for dY/dt = -i H(t) Y from t0 to t1 (Y may hold several columns).
template <int D = Eigen::Dynamic, int C = Eigen::Dynamic>
class DormandPrince {
public:
    using Mat = Eigen::Matrix<std::complex<double>, D, C>;
    using Op = Eigen::Matrix<std::complex<double>, D, D>;

    DormandPrince(const Generator& g, double rtol, double atol, double dt_max)
        : h0_(g.h0), rtol_(rtol), atol_(atol), dt_max_(dt_max) {
        for (const auto& k : g.terms) {
            ops_.push_back(k.op);
            coeffs_.push_back(k.coeff);
        }
    }

    std::size_t steps() const { return steps_; }

    void advance(Mat& y, double t0, double t1) {
        double t = t0;
        if (h_ <= 0) h_ = std::min(dt_max_, (t1 - t0) / 16.0);
        if (!(h_ > 0)) return;
        while (t < t1) {
            const double remaining = t1 - t;
            bool last = false;
            double h = std::min({h_, dt_max_});
            if (h >= remaining) {
                h = remaining;
                last = true;
            }
            const double h_min = 1e-14 * std::max(std::abs(t), std::abs(t1 - t0));
            if (h < h_min && !last)
                throw Error(Errc::stiffness, "dynamics", "step size underflow at t = " + std::to_string(t) + " s",
                            "reduce the drive strength or loosen the tolerance");
            Mat k1 = f(t, y);
            Mat k2 = f(t + c2 * h, y + h * (a21 * k1));
            Mat k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
            Mat k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
            Mat k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            Mat k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            Mat yn = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            Mat k7 = f(t + h, yn);
            Mat err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            double en = 0.0;
            for (Eigen::Index c = 0; c < y.cols(); ++c) {
                const double sc = atol_ + rtol_ * std::max(y.col(c).norm(), yn.col(c).norm());
                en = std::max(en, err.col(c).norm() / sc);
            }
            if (!std::isfinite(en)) en = 1e10;
            if (en <= 1.0) {
                t = last ? t1 : t + h;
                y = std::move(yn);
                ++steps_;
                const double grow = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
                if (!last || grow < 1.0) h_ = h * grow;
            } else {
                h_ = h * std::clamp(0.9 * std::pow(en, -0.25), 0.1, 0.9);
                if (h_ < h_min)
                    throw Error(Errc::stiffness, "dynamics", "step size underflow at t = " + std::to_string(t) + " s",
                                "reduce the drive strength or loosen the tolerance");
            }
        }
    }

private:
    Mat f(double t, const Mat& y) const {
        Op h = h0_;
        for (std::size_t k = 0; k < ops_.size(); ++k) {
            const double c = coeffs_[k](t);
            if (c != 0.0) h += c * ops_[k];
        }
        Mat r;
        r.noalias() = h * y;
        return std::complex<double>(0.0, -1.0) * r;
    }

    Op h0_;
    std::vector<Op, Eigen::aligned_allocator<Op>> ops_;
    std::vector<std::function<double(double)>> coeffs_;
    double rtol_, atol_, dt_max_;
    double h_ = 0.0;
    std::size_t steps_ = 0;

    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
};

/// Calls f with a compile-time dimension tag for small truncations.
template <class F>
decltype(auto) with_dimension(int d, F&& f) {
    switch (d) {
    case 2: return f(std::integral_constant<int, 2>{});
    case 3: return f(std::integral_constant<int, 3>{});
    case 4: return f(std::integral_constant<int, 4>{});
    case 5: return f(std::integral_constant<int, 5>{});
    case 7: return f(std::integral_constant<int, 7>{});
    case 9: return f(std::integral_constant<int, 9>{});
    case 11: return f(std::integral_constant<int, 11>{});
    default: return f(std::integral_constant<int, Eigen::Dynamic>{});
    }
}

inline void record(EvolutionTrace& tr, Eigen::Index row, const cmat& basis, const cvec& psi) {
    const cvec c = basis.adjoint() * psi;
    tr.populations.row(row) = c.cwiseAbs2().transpose();
    tr.max_norm_error = std::max(tr.max_norm_error, std::abs(psi.squaredNorm() - 1.0));
}

inline EvolutionTrace empty_trace(const Generator& g, std::size_t samples) {
    EvolutionTrace tr;
    tr.frame = g.frame;
    tr.d = g.d;
    tr.pulse = g.pulse;
    tr.t.resize(samples);
    tr.populations.resize(static_cast<Eigen::Index>(samples), g.d);
    return tr;
}

inline cvec check_initial(const Generator& g, const cvec& psi0) {
    if (psi0.size() != g.d) throw Error(Errc::dimension, "dynamics", "initial state has the wrong dimension");
    if (std::abs(psi0.squaredNorm() - 1.0) > 1e-10)
        throw Error(Errc::invalid_argument, "dynamics", "initial state is not normalised");
    return psi0;
}

} // namespace detail

/// Readout-basis level k as a state vector.
inline cvec basis_state(const Generator& g, int k) {
    if (k < 0 || k >= g.d) throw Error(Errc::dimension, "dynamics", "level outside the truncation");
    return g.basis.col(k);
}

inline EvolutionTrace evolve(const Generator& g, double t_span, const cvec& psi0, const EvolveOptions& opt = {}) {
    if (!(t_span > 0)) throw Error(Errc::invalid_argument, "dynamics", "time span must be > 0");
    if (opt.samples < 2) throw Error(Errc::invalid_argument, "dynamics", "need at least 2 samples");
    detail::check_initial(g, psi0);
    auto tr = detail::empty_trace(g, opt.samples);
    detail::with_dimension(g.d, [&](auto dim) {
        constexpr int D = decltype(dim)::value;
        detail::DormandPrince<D, 1> dp(g, opt.rtol, opt.atol, opt.dt_max.value_or(g.dt_max));
        typename detail::DormandPrince<D, 1>::Mat y = psi0;
        double t = 0.0;
        for (std::size_t i = 0; i < opt.samples; ++i) {
            const double ti = t_span * static_cast<double>(i) / static_cast<double>(opt.samples - 1);
            if (ti > t) dp.advance(y, t, ti);
            t = ti;
            tr.t[i] = ti;
            detail::record(tr, static_cast<Eigen::Index>(i), g.basis, y);
        }
        tr.final_state = y;
        tr.steps = dp.steps();
    });
    return tr;
}

/// One-period propagator of a periodic generator.
inline cmat period_propagator(const Generator& g, const EvolveOptions& opt = {}) {
    if (!(g.period > 0)) throw Error(Errc::invalid_argument, "dynamics", "generator is not periodic");
    cmat u = detail::with_dimension(g.d, [&](auto dim) -> cmat {
        constexpr int D = decltype(dim)::value;
        detail::DormandPrince<D, D> dp(g, opt.rtol, opt.atol, opt.dt_max.value_or(g.dt_max));
        typename detail::DormandPrince<D, D>::Mat y = cmat::Identity(g.d, g.d);
        dp.advance(y, 0.0, g.half_period_parity ? 0.5 * g.period : g.period);
        return y;
    });
    if (!g.half_period_parity) return u;
    // U(T) = P U(T/2) P U(T/2)
    cmat pu = u;
    for (Eigen::Index i = 1; i < pu.rows(); i += 2) pu.row(i) *= -1.0;
    for (Eigen::Index j = 1; j < pu.cols(); j += 2) pu.col(j) *= -1.0;
    return pu * u;
}

/// Stroboscopic evolution: samples at every `stride`-th drive period, exact up to the period propagator.
inline EvolutionTrace evolve_periodic(const Generator& g, std::size_t stride, const cvec& psi0,
                                      const EvolveOptions& opt = {}) {
    if (stride == 0 || opt.samples < 2) throw Error(Errc::invalid_argument, "dynamics", "bad sampling");
    if (g.pulse.envelope != Envelope::rectangular)
        throw Error(Errc::invalid_argument, "dynamics", "stroboscopic evolution needs a rectangular pulse");
    cvec y = detail::check_initial(g, psi0);
    // nearest unitary (polar factor) so repeated application cannot drift in norm
    const Eigen::JacobiSVD<cmat> svd(period_propagator(g, opt), Eigen::ComputeFullU | Eigen::ComputeFullV);
    const cmat u = svd.matrixU() * svd.matrixV().adjoint();
    cmat us = cmat::Identity(g.d, g.d);
    for (std::size_t k = 0; k < stride; ++k) us = u * us;
    auto tr = detail::empty_trace(g, opt.samples);
    for (std::size_t i = 0; i < opt.samples; ++i) {
        tr.t[i] = g.period * static_cast<double>(stride * i);
        detail::record(tr, static_cast<Eigen::Index>(i), g.basis, y);
        y = us * y;
    }
    tr.final_state = y;
    return tr;
}

struct FloquetGap {
    double gap = 0.0; // rad/s between the two Floquet states with most weight on readout levels 0 and 1
    std::array<double, 2> weight{};
};

inline FloquetGap floquet_gap(const Generator& g, const EvolveOptions& opt = {}) {
    const cmat u = period_propagator(g, opt);
    Eigen::ComplexEigenSolver<cmat> es(u);
    const cmat w = g.basis.leftCols(2).adjoint() * es.eigenvectors();
    std::vector<std::pair<double, Eigen::Index>> weight;
    for (Eigen::Index k = 0; k < w.cols(); ++k) weight.push_back({w.col(k).squaredNorm(), k});
    std::sort(weight.begin(), weight.end(), [](auto& a, auto& b) { return a.first > b.first; });
    const double wd = constants::two_pi / g.period;
    const double q0 = -std::arg(es.eigenvalues()[weight[0].second]) / g.period;
    const double q1 = -std::arg(es.eigenvalues()[weight[1].second]) / g.period;
    double dq = std::remainder(q0 - q1, wd);
    FloquetGap r;
    r.gap = std::abs(dq);
    r.weight = {weight[0].first, weight[1].first};
    return r;
}

struct SubharmonicResonance {
    double eta = 0.0;
    double omega_r = 0.0;  // rad/s, fixed from eta at f_q/3
    double f_d = 0.0;      // resonant drive frequency, Hz
    double stark = 0.0;    // f_d - f_q/3, Hz
    double f_rabi = 0.0;   // minimum Floquet gap / 2pi, Hz
};

/// Lab-frame resonance of the subharmonic drive located by minimising the Floquet gap over f_d.
inline SubharmonicResonance find_subharmonic_resonance(const TransmonParams& p, double eta, int d,
                                                       LabModel model = LabModel::quartic,
                                                       const EvolveOptions& opt = {1e-9, 1e-12, {}, 201}) {
    if (!(eta > 0)) throw Error(Errc::invalid_argument, "dynamics", "eta must be > 0");
    const double wq = constants::two_pi * p.f_q, a = constants::two_pi * p.alpha;
    const double wp = wq - a, wd0 = wq / 3.0;
    SubharmonicResonance r;
    r.eta = eta;
    r.omega_r = eta * std::abs(wd0 * wd0 - wp * wp) / wp;
    const double predicted = 2.0 * p.alpha * eta * eta / 3.0; // Hz
    PulseSpec pulse;
    pulse.rabi = r.omega_r / constants::two_pi;
    pulse.duration = 1.0;
    auto gap = [&](double f_d) {
        pulse.f_d = f_d;
        return floquet_gap(build_hamiltonian(Frame::lab, p, pulse, d, model), opt).gap;
    };
    const double f0 = p.f_q / 3.0;
    const int n = 11;
    double best = infinity;
    int ib = 0;
    std::vector<double> fs(n);
    for (int i = 0; i < n; ++i) {
        fs[static_cast<std::size_t>(i)] = f0 + predicted * 2.5 * i / (n - 1);
        const double gi = gap(fs[static_cast<std::size_t>(i)]);
        if (gi < best) {
            best = gi;
            ib = i;
        }
    }
    double lo = fs[static_cast<std::size_t>(std::max(ib - 1, 0))];
    double hi = fs[static_cast<std::size_t>(std::min(ib + 1, n - 1))];
    if (lo > hi) std::swap(lo, hi);
    std::uintmax_t iters = 60;
    const auto m = boost::math::tools::brent_find_minima(gap, lo, hi, 20, iters);
    r.f_d = m.first;
    r.stark = m.first - f0;
    r.f_rabi = m.second / constants::two_pi;
    return r;
}

struct Oscillation {
    double frequency = 0.0; // Hz, positive
    double decay = 0.0;     // 1/e time of the envelope, s (infinite if none)
    double amplitude = 0.0;
    double offset = 0.0;
    FitResult fit;
};

inline Oscillation extract_oscillation(const std::vector<double>& t, const std::vector<double>& y,
                                       double confidence = 0.999) {
    if (t.size() != y.size() || t.size() < 8)
        throw Error(Errc::invalid_argument, "dynamics", "trace too short for an oscillation fit");
    const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
    const double scale = std::max({std::abs(*mn), std::abs(*mx), 1e-300});
    auto none = [] {
        return Error(Errc::no_oscillation, "dynamics", "trace shows no oscillation",
                     "lengthen the trace or increase the drive");
    };
    if (*mx - *mn <= 1e-12 * scale) throw none();
    FitResult f;
    try {
        f = fit(FitModel::decaying_cosine(), t, y);
    } catch (const Error& e) {
        if (e.code() == Errc::degenerate_fit) throw none();
        throw;
    }
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double rss0 = 0.0;
    for (double v : y) rss0 += (v - mean) * (v - mean);
    const double rss1 = f.residual_norm * f.residual_norm;
    const double n = static_cast<double>(y.size());
    const double d1 = 4.0, d2 = n - 5.0;
    if (rss1 > 0) {
        const double stat = ((rss0 - rss1) / d1) / (rss1 / d2);
        const boost::math::fisher_f dist(d1, d2);
        // the frequency is searched over about n/2 independent bins
        const double p_value = (1.0 - confidence) / (0.5 * n);
        if (!(stat > boost::math::quantile(boost::math::complement(dist, p_value)))) throw none();
    } else if (!(rss0 > 0)) {
        throw none();
    }
    Oscillation o;
    o.frequency = std::abs(f.param("frequency"));
    const double rate = f.param("decay_rate");
    o.decay = rate > 0 ? 1.0 / rate : infinity;
    o.amplitude = std::abs(f.param("amplitude"));
    o.offset = f.param("offset");
    o.fit = f;
    return o;
}

inline Oscillation extract_oscillation(const EvolutionTrace& tr) { return extract_oscillation(tr.t, tr.excited()); }

enum class ScanMode { resonant, subharmonic };

struct SpectroscopyMap {
    std::vector<double> flux;
    std::vector<double> f_d;
    Eigen::MatrixXd excited; // rows = flux, columns = drive frequency
};

/// Pulse-averaged excited population for a constant rotating-frame generator started in |0>.
inline double averaged_excited_population(const Generator& g, double duration) {
    const cmat h = g.at(0.5 * duration);
    Eigen::SelfAdjointEigenSolver<cmat> es(h);
    const cmat& v = es.eigenvectors();
    const Eigen::VectorXd& e = es.eigenvalues();
    const Eigen::VectorXd w0 = (v.adjoint() * basis_state(g, 0)).cwiseAbs2();
    // P_0(t) = sum_jk w_j w_k exp(-i (E_j - E_k) t)
    std::complex<double> acc = 0.0;
    for (Eigen::Index j = 0; j < e.size(); ++j)
        for (Eigen::Index k = 0; k < e.size(); ++k) {
            const double x = (e[j] - e[k]) * duration;
            const std::complex<double> avg =
                std::abs(x) < 1e-8 ? std::complex<double>(1.0, 0.0)
                                   : (std::exp(std::complex<double>(0.0, -x)) - 1.0) / std::complex<double>(0.0, -x);
            acc += w0[j] * w0[k] * avg;
        }
    return std::clamp(1.0 - acc.real(), 0.0, 1.0);
}

/// Excited population averaged over a rectangular pulse, for each (flux, drive frequency) pair.
inline SpectroscopyMap spectroscopy_scan(const TransmonParams& p, const std::vector<double>& flux,
                                         const std::vector<double>& f_d, const PulseSpec& pulse, int d,
                                         ScanMode mode = ScanMode::resonant) {
    pulse.validate();
    SpectroscopyMap m{flux, f_d, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(flux.size()),
                                                       static_cast<Eigen::Index>(f_d.size()))};
    for (std::size_t i = 0; i < flux.size(); ++i) {
        const TransmonParams q = at_flux(p, flux[i]);
        for (std::size_t j = 0; j < f_d.size(); ++j) {
            PulseSpec s = pulse;
            s.f_d = f_d[j];
            s.envelope = Envelope::rectangular;
            const auto g = build_hamiltonian(
                mode == ScanMode::resonant ? Frame::rotating_resonant : Frame::rotating_subharmonic, q, s, d);
            m.excited(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                averaged_excited_population(g, s.duration);
        }
    }
    return m;
}

} // namespace qdrive
