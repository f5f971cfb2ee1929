#pragma once

#include <qdrive/constants.hpp>
#include <qdrive/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace qdrive {

enum class ModelId { lorentzian, decaying_cosine, exponential_decay, flux_arch, polynomial };

class FitModel {
public:
    static FitModel lorentzian() { return FitModel(ModelId::lorentzian); }
    static FitModel decaying_cosine() { return FitModel(ModelId::decaying_cosine); }
    static FitModel exponential_decay() { return FitModel(ModelId::exponential_decay); }
    static FitModel flux_arch() { return FitModel(ModelId::flux_arch); }
    static FitModel polynomial(int degree) {
        if (degree < 0) throw Error(Errc::invalid_argument, "fitting", "polynomial degree must be >= 0");
        FitModel m(ModelId::polynomial);
        m.degree_ = degree;
        return m;
    }
    static FitModel from_name(const std::string& name) {
        if (name == "lorentzian") return lorentzian();
        if (name == "decaying_cosine") return decaying_cosine();
        if (name == "exponential_decay" || name == "exponential") return exponential_decay();
        if (name == "flux_arch") return flux_arch();
        if (name.rfind("polynomial", 0) == 0) {
            const auto colon = name.find(':');
            return polynomial(colon == std::string::npos ? 1 : std::stoi(name.substr(colon + 1)));
        }
        throw Error(Errc::invalid_argument, "fitting", "unknown model '" + name + "'",
                    "use lorentzian, decaying_cosine, exponential_decay, flux_arch or polynomial:N");
    }

    ModelId id() const { return id_; }
    int degree() const { return degree_; }

    std::string name() const {
        switch (id_) {
        case ModelId::lorentzian: return "lorentzian";
        case ModelId::decaying_cosine: return "decaying_cosine";
        case ModelId::exponential_decay: return "exponential_decay";
        case ModelId::flux_arch: return "flux_arch";
        default: return "polynomial:" + std::to_string(degree_);
        }
    }

    std::vector<std::string> parameter_names() const {
        switch (id_) {
        case ModelId::lorentzian: return {"center", "width", "amplitude", "offset"};
        case ModelId::decaying_cosine: return {"amplitude", "frequency", "phase", "decay_rate", "offset"};
        case ModelId::exponential_decay: return {"amplitude", "tau", "offset"};
        case ModelId::flux_arch: return {"f_max", "e_c", "phi_offset"};
        default: {
            std::vector<std::string> n;
            for (int k = 0; k <= degree_; ++k) n.push_back("c" + std::to_string(k));
            return n;
        }
        }
    }

    Eigen::Index parameter_count() const { return static_cast<Eigen::Index>(parameter_names().size()); }

    double eval(double x, const Eigen::VectorXd& p) const {
        switch (id_) {
        case ModelId::lorentzian: {
            const double u = 2.0 * (x - p[0]) / p[1];
            return p[2] / (1.0 + u * u) + p[3];
        }
        case ModelId::decaying_cosine:
            return p[0] * std::exp(-p[3] * x) * std::cos(constants::two_pi * p[1] * x + p[2]) + p[4];
        case ModelId::exponential_decay: return p[0] * std::exp(-x / p[1]) + p[2];
        case ModelId::flux_arch:
            return (p[0] + p[1]) * std::sqrt(std::abs(std::cos(constants::pi * (x - p[2])))) - p[1];
        default: {
            double v = 0.0;
            for (Eigen::Index k = p.size() - 1; k >= 0; --k) v = v * x + p[k];
            return v;
        }
        }
    }

    /// Row of partial derivatives at x.
    void gradient(double x, const Eigen::VectorXd& p, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> g) const {
        switch (id_) {
        case ModelId::lorentzian: {
            const double u = 2.0 * (x - p[0]) / p[1];
            const double d = 1.0 + u * u;
            g[0] = p[2] * 4.0 * u / (p[1] * d * d);
            g[1] = p[2] * 2.0 * u * u / (p[1] * d * d);
            g[2] = 1.0 / d;
            g[3] = 1.0;
            break;
        }
        case ModelId::decaying_cosine: {
            const double e = std::exp(-p[3] * x);
            const double th = constants::two_pi * p[1] * x + p[2];
            const double c = std::cos(th), s = std::sin(th);
            g[0] = e * c;
            g[1] = -p[0] * e * s * constants::two_pi * x;
            g[2] = -p[0] * e * s;
            g[3] = -x * p[0] * e * c;
            g[4] = 1.0;
            break;
        }
        case ModelId::exponential_decay: {
            const double e = std::exp(-x / p[1]);
            g[0] = e;
            g[1] = p[0] * e * x / (p[1] * p[1]);
            g[2] = 1.0;
            break;
        }
        case ModelId::flux_arch: {
            const double arg = constants::pi * (x - p[2]);
            const double c = std::cos(arg);
            const double s = std::sqrt(std::abs(c));
            g[0] = s;
            g[1] = s - 1.0;
            g[2] = s > 1e-12 ? (p[0] + p[1]) * (c >= 0 ? 1.0 : -1.0) * constants::pi * std::sin(arg) / (2.0 * s) : 0.0;
            break;
        }
        default: {
            double xp = 1.0;
            for (Eigen::Index k = 0; k < p.size(); ++k) {
                g[k] = xp;
                xp *= x;
            }
        }
        }
    }

private:
    explicit FitModel(ModelId id) : id_(id) {}
    ModelId id_;
    int degree_ = 0;
};

struct FitResult {
    std::string model;
    std::vector<std::string> names;
    Eigen::VectorXd params;
    Eigen::VectorXd sigma;
    double residual_norm = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;

    double param(const std::string& n) const { return params[index(n)]; }
    double uncertainty(const std::string& n) const { return sigma[index(n)]; }

private:
    Eigen::Index index(const std::string& n) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == n) return static_cast<Eigen::Index>(i);
        throw Error(Errc::invalid_argument, "fitting", "model has no parameter '" + n + "'");
    }
};

struct FitOptions {
    int max_iterations = 200;
    double lambda0 = 1e-3;
    double gradient_tolerance = 1e-10; // |J_k . r| / (|J_k| |y|) over columns k
    double step_tolerance = 1e-14;
    double rank_tolerance = 1e-10;     // relative singular value of the column-normalised Jacobian
};

namespace detail {

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double m = *mid;
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
    return m;
}

/// Least-squares amplitude of cos/sin at frequency f after removing the mean.
inline std::pair<double, double> quadratures(const std::vector<double>& x, const std::vector<double>& y, double f,
                                             std::size_t lo, std::size_t hi) {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(hi - lo), 3);
    Eigen::VectorXd b(static_cast<Eigen::Index>(hi - lo));
    for (std::size_t i = lo; i < hi; ++i) {
        const auto r = static_cast<Eigen::Index>(i - lo);
        a(r, 0) = std::cos(constants::two_pi * f * x[i]);
        a(r, 1) = std::sin(constants::two_pi * f * x[i]);
        a(r, 2) = 1.0;
        b[r] = y[i];
    }
    Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
    return {c[0], c[1]};
}

/// Frequency of the strongest spectral line (4x oversampled scan with parabolic refinement).
inline double dominant_frequency(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    const double span = x.back() - x.front();
    if (!(span > 0)) return 0.0;
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    const double df = 1.0 / (4.0 * span);
    const double f_max = 0.5 * static_cast<double>(n - 1) / span;
    std::vector<double> power;
    for (double f = df; f <= f_max; f += df) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += (y[i] - mean) * std::polar(1.0, -constants::two_pi * f * x[i]);
        power.push_back(std::norm(acc));
    }
    if (power.empty()) return 1.0 / span;
    const auto k = static_cast<std::size_t>(std::max_element(power.begin(), power.end()) - power.begin());
    double shift = 0.0;
    if (k > 0 && k + 1 < power.size()) {
        const double a = power[k - 1], b = power[k], c = power[k + 1];
        const double den = a - 2.0 * b + c;
        if (den != 0.0) shift = std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
    }
    return (static_cast<double>(k) + 1.0 + shift) * df;
}

} // namespace detail

/// Data-driven starting point for each model shape.
inline Eigen::VectorXd auto_initial(const FitModel& m, const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    Eigen::VectorXd p(m.parameter_count());
    const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
    switch (m.id()) {
    case ModelId::lorentzian: {
        const double med = detail::median(y);
        const bool peak = (*mx - med) >= (med - *mn);
        const auto k = static_cast<std::size_t>((peak ? mx : mn) - y.begin());
        const double amp = y[k] - med;
        std::size_t lo = k, hi = k;
        while (lo > 0 && std::abs(y[lo - 1] - med) >= 0.5 * std::abs(amp)) --lo;
        while (hi + 1 < n && std::abs(y[hi + 1] - med) >= 0.5 * std::abs(amp)) ++hi;
        double width = x[hi] - x[lo];
        const double step = (x.back() - x.front()) / static_cast<double>(std::max<std::size_t>(n - 1, 1));
        if (!(width > step)) width = step;
        p << x[k], width, amp, med;
        break;
    }
    case ModelId::decaying_cosine: {
        const double f = detail::dominant_frequency(x, y);
        const auto [c, s] = detail::quadratures(x, y, f, 0, n);
        const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
        const auto [c1, s1] = detail::quadratures(x, y, f, 0, n / 2);
        const auto [c2, s2] = detail::quadratures(x, y, f, n / 2, n);
        const double a1 = std::hypot(c1, s1), a2 = std::hypot(c2, s2);
        const double dt = 0.5 * (x.back() - x.front());
        double decay = (a1 > 0 && a2 > 0 && dt > 0) ? std::log(a1 / a2) / dt : 0.0;
        if (!std::isfinite(decay) || decay < 0) decay = 0.0;
        // amplitude at t = 0 and phase from the whole-trace quadratures
        const double amp = std::hypot(c, s) * (decay > 0 ? std::exp(decay * 0.5 * (x.front() + x.back())) : 1.0);
        p << amp, f, std::atan2(-s, c), decay, mean;
        break;
    }
    case ModelId::exponential_decay: {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
        const double first = y[order.front()], last = y[order.back()];
        const double sgn = first >= last ? 1.0 : -1.0;
        const double c0 = last - sgn * 1e-3 * std::abs(first - last);
        double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = sgn * (y[i] - c0);
            if (!(z > 0)) continue;
            const double l = std::log(z);
            sx += x[i];
            sy += l;
            sxx += x[i] * x[i];
            sxy += x[i] * l;
            cnt += 1;
        }
        double tau = 0.5 * (x.back() - x.front()), amp = first - c0;
        if (cnt >= 2) {
            const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
            const double icpt = (sy - slope * sx) / cnt;
            if (slope < 0 && std::isfinite(slope)) {
                tau = -1.0 / slope;
                amp = sgn * std::exp(icpt);
            }
        }
        p << amp, tau, c0;
        break;
    }
    case ModelId::flux_arch: {
        const auto k = static_cast<std::size_t>(mx - y.begin());
        p << *mx, 0.03 * *mx, x[k];
        break;
    }
    default: {
        Eigen::MatrixXd a(static_cast<Eigen::Index>(n), m.parameter_count());
        Eigen::VectorXd b(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            m.gradient(x[i], Eigen::VectorXd::Zero(m.parameter_count()), a.row(static_cast<Eigen::Index>(i)));
            b[static_cast<Eigen::Index>(i)] = y[i];
        }
        p = a.colPivHouseholderQr().solve(b);
    }
    }
    return p;
}

/// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt scaling).
inline FitResult fit(const FitModel& m, const std::vector<double>& x, const std::vector<double>& y,
                     std::optional<Eigen::VectorXd> initial = {}, const FitOptions& opt = {}) {
    const Eigen::Index P = m.parameter_count();
    const auto N = static_cast<Eigen::Index>(x.size());
    if (x.size() != y.size()) throw Error(Errc::shape, "fitting", "x and y lengths differ");
    if (N < P + 1)
        throw Error(Errc::invalid_argument, "fitting",
                    "need at least " + std::to_string(P + 1) + " samples for " + m.name());
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw Error(Errc::invalid_argument, "fitting", "non-finite sample at index " + std::to_string(i));

    Eigen::VectorXd p = initial ? *initial : auto_initial(m, x, y);
    if (p.size() != P) throw Error(Errc::invalid_argument, "fitting", "initial guess has the wrong length");

    Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), N);
    auto residual = [&](const Eigen::VectorXd& q) {
        Eigen::VectorXd r(N);
        for (Eigen::Index i = 0; i < N; ++i) r[i] = m.eval(x[static_cast<std::size_t>(i)], q) - yv[i];
        return r;
    };
    auto jacobian = [&](const Eigen::VectorXd& q) {
        Eigen::MatrixXd j(N, P);
        for (Eigen::Index i = 0; i < N; ++i) m.gradient(x[static_cast<std::size_t>(i)], q, j.row(i));
        return j;
    };
    const double data_norm = std::max(yv.norm(), 1e-300);
    // |J_k . r| / (|J_k| |y|): zero at a stationary point, small for an exact fit
    auto grad_measure = [&](const Eigen::MatrixXd& j, const Eigen::VectorXd& r) {
        const double rn = data_norm;
        if (r.norm() == 0.0) return 0.0;
        double worst = 0.0;
        for (Eigen::Index k = 0; k < P; ++k) {
            const double cn = j.col(k).norm();
            if (cn > 0) worst = std::max(worst, std::abs(j.col(k).dot(r)) / (cn * rn));
        }
        return worst;
    };

    FitResult res;
    res.model = m.name();
    res.names = m.parameter_names();
    Eigen::VectorXd r = residual(p);
    if (!r.allFinite()) throw Error(Errc::invalid_argument, "fitting", "model is not finite at the initial guess");
    double cost = r.squaredNorm();
    double lambda = opt.lambda0;
    const double floor = 1e-30 * std::max(1.0, yv.squaredNorm());
    int it = 0;
    bool done = false;
    while (it < opt.max_iterations && !done) {
        ++it;
        const Eigen::MatrixXd j = jacobian(p);
        if (grad_measure(j, r) < opt.gradient_tolerance || cost <= floor) {
            res.converged = true;
            break;
        }
        const Eigen::MatrixXd a = j.transpose() * j;
        const Eigen::VectorXd g = j.transpose() * r;
        Eigen::VectorXd d = a.diagonal();
        for (Eigen::Index k = 0; k < P; ++k)
            if (!(d[k] > 0)) d[k] = 1.0;
        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd damped = a;
            damped.diagonal() += lambda * d;
            const Eigen::VectorXd step = -damped.ldlt().solve(g);
            const Eigen::VectorXd pn = p + step;
            const Eigen::VectorXd rn = residual(pn);
            const double cn = rn.allFinite() ? rn.squaredNorm() : std::numeric_limits<double>::infinity();
            if (cn < cost) {
                const double rel = (step.array().abs() / (p.array().abs() + 1e-300)).maxCoeff();
                const bool tiny = rel < opt.step_tolerance || (cost - cn) <= 1e-15 * cost;
                p = pn;
                r = rn;
                cost = cn;
                lambda = std::max(lambda / 2.0, 1e-15);
                accepted = true;
                if (tiny) {
                    res.converged = grad_measure(jacobian(p), r) < 1e-8 || cost <= floor;
                    done = true;
                }
            } else {
                lambda *= 3.0;
                if (lambda > 1e16) {
                    // no descent direction left at machine precision
                    res.converged = grad_measure(j, r) < 1e-8;
                    done = true;
                    break;
                }
            }
        }
    }
    if (m.id() == ModelId::decaying_cosine) {
        // (A, phi) and (-A, phi + pi) are the same curve; report A >= 0 and phi in (-pi, pi]
        if (p[0] < 0) {
            p[0] = -p[0];
            p[2] += constants::pi;
        }
        p[2] = std::remainder(p[2], constants::two_pi);
    }
    const Eigen::MatrixXd j = jacobian(p);
    res.params = p;
    res.iterations = it;
    res.residual_norm = std::sqrt(cost);
    res.gradient_norm = grad_measure(j, r);

    Eigen::VectorXd scale(P);
    for (Eigen::Index k = 0; k < P; ++k) scale[k] = j.col(k).norm();
    if ((scale.array() == 0.0).any())
        throw Error(Errc::degenerate_fit, "fitting", m.name() + ": a parameter has no effect at the optimum",
                    "the data carry no information about it; fix it or choose another model");
    const Eigen::MatrixXd js = j * scale.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(js);
    const auto sv = svd.singularValues();
    if (sv[P - 1] < opt.rank_tolerance * sv[0])
        throw Error(Errc::degenerate_fit, "fitting", m.name() + ": Jacobian is rank-deficient at the optimum",
                    "the data do not constrain every parameter");
    const Eigen::MatrixXd inv = (js.transpose() * js).inverse();
    const double dof = static_cast<double>(N - P);
    const double s2 = cost / dof;
    res.sigma.resize(P);
    for (Eigen::Index k = 0; k < P; ++k) res.sigma[k] = std::sqrt(std::max(inv(k, k) * s2, 0.0)) / scale[k];
    return res;
}

inline FitResult fit(const FitModel& m, const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& initial) {
    return fit(m, x, y, Eigen::Map<const Eigen::VectorXd>(initial.data(), static_cast<Eigen::Index>(initial.size())));
}

struct ScalingFit {
    double c2 = 0.0;        // Stark coefficient, Hz per V^2
    double c3 = 0.0;        // Rabi coefficient, Hz per V^3
    double c2_sigma = 0.0;
    double c3_sigma = 0.0;
    double stark_residual = 0.0; // relative residual norms
    double rabi_residual = 0.0;
};

namespace detail {

/// y = c x^k by least squares: (c, sigma, relative residual).
inline std::array<double, 3> monomial_fit(const std::vector<double>& x, const std::vector<double>& y, int k) {
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double b = std::pow(x[i], k);
        sxx += b * b;
        sxy += b * y[i];
        syy += y[i] * y[i];
    }
    if (!(sxx > 0)) throw Error(Errc::degenerate_fit, "fitting", "all amplitudes are zero");
    const double c = sxy / sxx;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - c * std::pow(x[i], k);
        rss += e * e;
    }
    const double sigma = std::sqrt(rss / static_cast<double>(x.size() - 1) / sxx);
    return {c, sigma, syy > 0 ? std::sqrt(rss / syy) : 0.0};
}

} // namespace detail

/// Stark shift against c2 V^2 and Rabi rate against c3 V^3, no lower-order terms.
inline ScalingFit fit_stark_rabi_scaling(const std::vector<double>& amplitudes, const std::vector<double>& stark,
                                         const std::vector<double>& rabi) {
    if (amplitudes.size() < 4) throw Error(Errc::invalid_argument, "fitting", "need at least 4 amplitude points");
    if (stark.size() != amplitudes.size() || rabi.size() != amplitudes.size())
        throw Error(Errc::shape, "fitting", "amplitude, Stark and Rabi columns differ in length");
    ScalingFit s;
    const auto a = detail::monomial_fit(amplitudes, stark, 2);
    const auto b = detail::monomial_fit(amplitudes, rabi, 3);
    s.c2 = a[0];
    s.c2_sigma = a[1];
    s.stark_residual = a[2];
    s.c3 = b[0];
    s.c3_sigma = b[1];
    s.rabi_residual = b[2];
    return s;
}

/// Model values plus seeded Gaussian noise.
inline std::vector<double> synthesize_trace(const FitModel& m, const Eigen::VectorXd& params, const std::vector<double>& x,
                                            double noise_sigma, std::uint64_t seed) {
    if (!(noise_sigma >= 0)) throw Error(Errc::invalid_argument, "fitting", "noise sigma must be >= 0");
    if (params.size() != m.parameter_count()) throw Error(Errc::invalid_argument, "fitting", "wrong parameter count");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = m.eval(x[i], params);
        if (noise_sigma > 0) y[i] += noise_sigma * noise(rng);
    }
    return y;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

} // namespace qdrive
