#pragma once

#include <qdrive/constants.hpp>
#include <qdrive/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace qdrive {

using cplx = std::complex<double>;

enum class ElementKind { tline, capacitor, inductor, resistor };

struct TLineParams {
    double z0 = 50.0;
    double eps_eff = 1.0;
    double length = 0.0;         // m
    double atten_db_per_m = 0.0; // dB/m
    bool operator==(const TLineParams&) const = default;
};

struct Element {
    ElementKind kind = ElementKind::capacitor;
    std::string a, b;
    double value = 0.0; // F, H or ohm; unused for lines
    TLineParams line;
    std::string label;
    bool operator==(const Element&) const = default;
};

struct Port {
    int index = 1;
    std::string node;
    double z_ref = 50.0;
    bool operator==(const Port&) const = default;
};

class Netlist {
public:
    std::vector<Element> elements;
    std::vector<Port> ports;
    std::set<std::string> grounds;

    bool operator==(const Netlist&) const = default;

    Netlist& ground(const std::string& node) {
        grounds.insert(node);
        return *this;
    }
    Netlist& capacitor(const std::string& a, const std::string& b, double c, std::string label = {}) {
        return lumped(ElementKind::capacitor, a, b, c, std::move(label));
    }
    Netlist& inductor(const std::string& a, const std::string& b, double l, std::string label = {}) {
        return lumped(ElementKind::inductor, a, b, l, std::move(label));
    }
    Netlist& resistor(const std::string& a, const std::string& b, double r, std::string label = {}) {
        return lumped(ElementKind::resistor, a, b, r, std::move(label));
    }
    Netlist& tline(const std::string& a, const std::string& b, TLineParams p, std::string label = {}) {
        Element e;
        e.kind = ElementKind::tline;
        e.a = a;
        e.b = b;
        e.line = p;
        e.label = std::move(label);
        elements.push_back(std::move(e));
        return *this;
    }
    Netlist& port(const std::string& node, double z_ref = 50.0) {
        ports.push_back({static_cast<int>(ports.size()) + 1, node, z_ref});
        return *this;
    }

    bool is_ground(const std::string& n) const { return grounds.count(n) != 0; }

    std::set<std::string> nodes() const {
        std::set<std::string> out(grounds.begin(), grounds.end());
        for (const auto& e : elements) {
            out.insert(e.a);
            out.insert(e.b);
        }
        return out;
    }

    Element* find(const std::string& label) {
        for (auto& e : elements)
            if (e.label == label) return &e;
        return nullptr;
    }
    const Element* find(const std::string& label) const {
        for (const auto& e : elements)
            if (e.label == label) return &e;
        return nullptr;
    }

    const Port& port_by_index(int index) const {
        for (const auto& p : ports)
            if (p.index == index) return p;
        throw Error(Errc::invalid_argument, "network", "no port with index " + std::to_string(index),
                    "ports are numbered consecutively from 1");
    }

    /// Throws on any broken invariant.
    void validate() const {
        auto fail = [](Errc c, const std::string& m, const std::string& hint = {}) {
            throw Error(c, "network", m, hint);
        };
        if (grounds.empty()) fail(Errc::topology, "no ground node", "add a 'GND <node>' statement");
        const auto all = nodes();
        for (std::size_t i = 0; i < elements.size(); ++i) {
            const auto& e = elements[i];
            const std::string where = "element " + std::to_string(i + 1);
            if (e.a.empty() || e.b.empty()) fail(Errc::topology, where + ": empty node name");
            if (e.kind == ElementKind::tline) {
                const auto& p = e.line;
                if (!(p.z0 > 0) || !std::isfinite(p.z0)) fail(Errc::invalid_argument, where + ": z0 must be > 0");
                if (!(p.eps_eff >= 1) || !std::isfinite(p.eps_eff))
                    fail(Errc::invalid_argument, where + ": eps_eff must be >= 1");
                if (!(p.length >= 0) || !std::isfinite(p.length))
                    fail(Errc::invalid_argument, where + ": length must be >= 0");
                if (!(p.atten_db_per_m >= 0) || !std::isfinite(p.atten_db_per_m))
                    fail(Errc::invalid_argument, where + ": attenuation must be >= 0");
            } else {
                if (!(e.value > 0) || !std::isfinite(e.value))
                    fail(Errc::invalid_argument, where + ": value must be positive and finite");
                if (e.a == e.b) fail(Errc::topology, where + ": both terminals on node '" + e.a + "'");
            }
        }
        std::set<int> seen;
        std::set<std::string> port_nodes;
        for (const auto& p : ports) {
            if (!seen.insert(p.index).second)
                fail(Errc::topology, "duplicate port index " + std::to_string(p.index));
            if (!all.count(p.node)) fail(Errc::topology, "port " + std::to_string(p.index) + " on undefined node '" + p.node + "'");
            if (is_ground(p.node)) fail(Errc::topology, "port " + std::to_string(p.index) + " sits on a ground node");
            if (!port_nodes.insert(p.node).second)
                fail(Errc::topology, "two ports share node '" + p.node + "'");
            if (!(p.z_ref > 0) || !std::isfinite(p.z_ref))
                fail(Errc::invalid_argument, "port " + std::to_string(p.index) + ": reference impedance must be > 0");
        }
        for (int i = 1; i <= static_cast<int>(ports.size()); ++i)
            if (!seen.count(i)) fail(Errc::topology, "port indices must be consecutive from 1", "missing port " + std::to_string(i));
    }

private:
    Netlist& lumped(ElementKind k, const std::string& a, const std::string& b, double v, std::string label) {
        Element e;
        e.kind = k;
        e.a = a;
        e.b = b;
        e.value = v;
        e.label = std::move(label);
        elements.push_back(std::move(e));
        return *this;
    }
};

/// Series or shunt role name of an element (shunt = one terminal grounded).
inline std::string element_role(const Netlist& n, const Element& e) {
    if (e.kind == ElementKind::tline) return "TLine";
    const bool shunt = n.is_ground(e.a) || n.is_ground(e.b);
    switch (e.kind) {
    case ElementKind::capacitor: return shunt ? "ShuntCap" : "SeriesCap";
    case ElementKind::inductor: return shunt ? "ShuntInd" : "SeriesInd";
    default: return "Resistor";
    }
}

class FrequencyGrid {
public:
    static FrequencyGrid linear(double start, double stop, std::size_t n) {
        if (n < 2) throw Error(Errc::invalid_argument, "network", "a frequency range needs at least 2 points");
        if (!(start > 0) || !(stop > start) || !std::isfinite(stop))
            throw Error(Errc::invalid_argument, "network", "frequency range must satisfy 0 < start < stop");
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i)
            f[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(n - 1);
        f.back() = stop;
        return FrequencyGrid(std::move(f));
    }
    static FrequencyGrid from_list(std::vector<double> f) {
        if (f.empty()) throw Error(Errc::invalid_argument, "network", "empty frequency list");
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (!(f[i] > 0) || !std::isfinite(f[i]))
                throw Error(Errc::invalid_argument, "network", "frequencies must be positive and finite");
            if (i > 0 && !(f[i] > f[i - 1]))
                throw Error(Errc::invalid_argument, "network", "frequencies must be strictly increasing");
        }
        return FrequencyGrid(std::move(f));
    }
    /// 2001 points over 1-10 GHz.
    static FrequencyGrid standard() { return linear(1e9, 10e9, 2001); }

    const std::vector<double>& values() const { return f_; }
    std::size_t size() const { return f_.size(); }
    double operator[](std::size_t i) const { return f_[i]; }

private:
    explicit FrequencyGrid(std::vector<double> f) : f_(std::move(f)) {}
    std::vector<double> f_;
};

inline double db_per_m_to_np_per_m(double db) { return db * std::log(10.0) / 20.0; }

inline cplx propagation_constant(const TLineParams& p, double f) {
    const double beta = constants::two_pi * f * std::sqrt(p.eps_eff) / constants::c;
    return {db_per_m_to_np_per_m(p.atten_db_per_m), beta};
}

/// ABCD matrix of a uniform line segment.
inline Eigen::Matrix2cd tline_two_port(double z0, double eps_eff, double length, double atten_db_per_m, double f) {
    if (!(z0 > 0) || !(eps_eff >= 1) || !(length >= 0) || !(atten_db_per_m >= 0) || !(f > 0))
        throw Error(Errc::invalid_argument, "network", "tline_two_port: argument out of range");
    const cplx gl = propagation_constant({z0, eps_eff, length, atten_db_per_m}, f) * length;
    const cplx ch = std::cosh(gl), sh = std::sinh(gl);
    Eigen::Matrix2cd m;
    m << ch, z0 * sh, sh / z0, ch;
    if (!m.allFinite())
        throw Error(Errc::numeric_range, "network", "line two-port overflows (alpha*l too large)",
                    "reduce attenuation or length");
    return m;
}

inline Eigen::Matrix2cd tline_two_port(const TLineParams& p, double f) {
    return tline_two_port(p.z0, p.eps_eff, p.length, p.atten_db_per_m, f);
}

namespace detail {

/// coth and csch evaluated through e^{-2z} so large loss does not overflow.
inline std::pair<cplx, cplx> coth_csch(cplx z) {
    if (z.real() < 0) z = -z;
    const cplx q = std::exp(-2.0 * z);
    const cplx den = 1.0 - q;
    return {(1.0 + q) / den, 2.0 * std::exp(-z) / den};
}

struct NodeMap {
    std::map<std::string, int> index; // -1 ground
    std::vector<std::string> names;   // representative per index
};

inline std::string find_root(std::map<std::string, std::string>& parent, const std::string& x) {
    std::string r = x;
    while (parent[r] != r) r = parent[r];
    std::string c = x;
    while (parent[c] != r) {
        std::string nx = parent[c];
        parent[c] = r;
        c = nx;
    }
    return r;
}

/// Ground aliases and zero-length lines collapse node names together.
inline NodeMap build_node_map(const Netlist& n) {
    std::map<std::string, std::string> parent;
    for (const auto& x : n.nodes()) parent[x] = x;
    auto unite = [&](const std::string& a, const std::string& b) {
        auto ra = find_root(parent, a), rb = find_root(parent, b);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    };
    const std::string* g0 = n.grounds.empty() ? nullptr : &*n.grounds.begin();
    for (const auto& g : n.grounds) unite(*g0, g);
    for (const auto& e : n.elements)
        if (e.kind == ElementKind::tline && e.line.length == 0.0) unite(e.a, e.b);

    NodeMap m;
    const std::string groot = g0 ? find_root(parent, *g0) : std::string{};
    std::map<std::string, int> root_index;
    for (const auto& [name, _] : parent) {
        const auto r = find_root(parent, name);
        if (g0 && r == groot) {
            m.index[name] = -1;
            continue;
        }
        auto it = root_index.find(r);
        if (it == root_index.end()) {
            it = root_index.emplace(r, static_cast<int>(m.names.size())).first;
            m.names.push_back(r);
        }
        m.index[name] = it->second;
    }
    return m;
}

inline bool near_line_pole(const Netlist& n, double f) {
    for (const auto& e : n.elements) {
        if (e.kind != ElementKind::tline || e.line.length == 0.0 || e.line.atten_db_per_m > 0) continue;
        const double x = propagation_constant(e.line, f).imag() * e.line.length / constants::pi;
        const double k = std::round(x);
        if (k >= 1 && std::abs(x - k) < 1e-6 * x) return true;
    }
    return false;
}

} // namespace detail

struct NodalAdmittance {
    Eigen::MatrixXcd y;
    std::vector<std::string> nodes; // row/column labels
    std::map<std::string, int> index; // node name -> row, -1 for ground
    double f_eval = 0.0;
    bool shifted = false;
};

/// Node-admittance matrix over non-ground nodes. Frequencies sitting on a lossless-line pole are
/// moved to f(1+1e-6) and flagged.
inline NodalAdmittance assemble_admittance_matrix(const Netlist& n, double f) {
    n.validate();
    if (!(f > 0) || !std::isfinite(f)) throw Error(Errc::invalid_argument, "network", "frequency must be > 0");
    NodalAdmittance out;
    out.f_eval = f;
    if (detail::near_line_pole(n, f)) {
        out.f_eval = f * (1.0 + 1e-6);
        out.shifted = true;
    }
    const auto m = detail::build_node_map(n);
    out.nodes = m.names;
    out.index = m.index;
    const auto N = static_cast<Eigen::Index>(m.names.size());
    out.y = Eigen::MatrixXcd::Zero(N, N);
    const double w = constants::two_pi * out.f_eval;

    auto stamp = [&](int i, int j, cplx y11, cplx y12) {
        if (i >= 0) out.y(i, i) += y11;
        if (j >= 0) out.y(j, j) += y11;
        if (i >= 0 && j >= 0) {
            out.y(i, j) += y12;
            out.y(j, i) += y12;
        }
    };
    for (const auto& e : n.elements) {
        const int i = m.index.at(e.a), j = m.index.at(e.b);
        switch (e.kind) {
        case ElementKind::capacitor: {
            const cplx y{0.0, w * e.value};
            stamp(i, j, y, -y);
            break;
        }
        case ElementKind::inductor: {
            const cplx y{0.0, -1.0 / (w * e.value)};
            stamp(i, j, y, -y);
            break;
        }
        case ElementKind::resistor: {
            const cplx y{1.0 / e.value, 0.0};
            stamp(i, j, y, -y);
            break;
        }
        case ElementKind::tline: {
            if (e.line.length == 0.0) break;
            const cplx gl = propagation_constant(e.line, out.f_eval) * e.line.length;
            const auto [ct, cs] = detail::coth_csch(gl);
            if (i >= 0) out.y(i, i) += ct / e.line.z0;
            if (j >= 0) out.y(j, j) += ct / e.line.z0;
            if (i >= 0 && j >= 0) {
                out.y(i, j) += -cs / e.line.z0;
                out.y(j, i) += -cs / e.line.z0;
            }
            break;
        }
        }
    }
    if (!out.y.allFinite())
        throw Error(Errc::numeric_range, "network", "non-finite admittance at f = " + std::to_string(f) + " Hz");
    return out;
}

enum class Termination { matched, grounded, open };

namespace detail {

/// Nodes in connected groups that touch no ground, line, or anchor node make the reduction singular.
inline void check_anchored(const Netlist& n, const std::set<std::string>& anchors) {
    const auto m = build_node_map(n);
    const int N = static_cast<int>(m.names.size());
    std::vector<int> parent(N);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> root = [&](int x) { return parent[x] == x ? x : parent[x] = root(parent[x]); };
    std::vector<char> anchored(N, 0);
    for (const auto& e : n.elements) {
        const int i = m.index.at(e.a), j = m.index.at(e.b);
        if (e.kind == ElementKind::tline) {
            if (i >= 0) anchored[i] = 1;
            if (j >= 0) anchored[j] = 1;
        }
        if (i < 0 && j >= 0) anchored[j] = 1;
        if (j < 0 && i >= 0) anchored[i] = 1;
        if (i >= 0 && j >= 0) parent[root(i)] = root(j);
    }
    for (const auto& a : anchors) {
        auto it = m.index.find(a);
        if (it != m.index.end() && it->second >= 0) anchored[it->second] = 1;
    }
    std::vector<char> comp_ok(N, 0);
    for (int i = 0; i < N; ++i)
        if (anchored[i]) comp_ok[root(i)] = 1;
    std::string floating;
    for (int i = 0; i < N; ++i)
        if (!comp_ok[root(i)]) floating += (floating.empty() ? "" : ", ") + m.names[i];
    if (!floating.empty())
        throw Error(Errc::topology, "network", "floating subgraph with nodes: " + floating,
                    "connect these nodes to ground, a port, or a line");
}

inline Eigen::MatrixXcd schur_reduce(const Eigen::MatrixXcd& y, const std::vector<int>& keep) {
    const auto N = y.rows();
    std::vector<int> rest;
    std::vector<char> is_keep(static_cast<std::size_t>(N), 0);
    for (int k : keep) is_keep[static_cast<std::size_t>(k)] = 1;
    for (int i = 0; i < N; ++i)
        if (!is_keep[static_cast<std::size_t>(i)]) rest.push_back(i);
    const auto P = static_cast<Eigen::Index>(keep.size()), R = static_cast<Eigen::Index>(rest.size());
    Eigen::MatrixXcd ypp(P, P), ypr(P, R), yrp(R, P), yrr(R, R);
    for (Eigen::Index a = 0; a < P; ++a) {
        for (Eigen::Index b = 0; b < P; ++b) ypp(a, b) = y(keep[a], keep[b]);
        for (Eigen::Index b = 0; b < R; ++b) ypr(a, b) = y(keep[a], rest[b]);
    }
    for (Eigen::Index a = 0; a < R; ++a) {
        for (Eigen::Index b = 0; b < P; ++b) yrp(a, b) = y(rest[a], keep[b]);
        for (Eigen::Index b = 0; b < R; ++b) yrr(a, b) = y(rest[a], rest[b]);
    }
    if (R == 0) return ypp;
    Eigen::MatrixXcd red = ypp - ypr * yrr.partialPivLu().solve(yrp);
    if (!red.allFinite())
        throw Error(Errc::numeric_range, "network", "singular internal reduction",
                    "an internal LC resonance sits exactly on a grid point; perturb the grid");
    return red;
}

} // namespace detail

struct FrequencySweepResult {
    std::vector<double> grid;
    std::vector<Eigen::MatrixXcd> s;
    std::vector<bool> shifted;
    std::optional<std::vector<cplx>> y_driving;
    int driving_port = 0;

    std::size_t size() const { return grid.size(); }
    std::size_t ports() const { return s.empty() ? 0 : static_cast<std::size_t>(s.front().rows()); }
};

/// S-matrix at one frequency.
inline Eigen::MatrixXcd s_matrix(const Netlist& n, double f, bool* shifted = nullptr) {
    const auto na = assemble_admittance_matrix(n, f);
    if (shifted) *shifted = na.shifted;
    std::vector<int> keep;
    Eigen::VectorXd sqz(static_cast<Eigen::Index>(n.ports.size()));
    std::vector<Port> ports = n.ports;
    std::sort(ports.begin(), ports.end(), [](const Port& a, const Port& b) { return a.index < b.index; });
    for (std::size_t k = 0; k < ports.size(); ++k) {
        keep.push_back(na.index.at(ports[k].node));
        sqz(static_cast<Eigen::Index>(k)) = std::sqrt(ports[k].z_ref);
    }
    const Eigen::MatrixXcd yp = detail::schur_reduce(na.y, keep);
    const Eigen::MatrixXcd a = sqz.asDiagonal() * yp * sqz.asDiagonal();
    const auto P = a.rows();
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(P, P);
    Eigen::MatrixXcd s = (I + a).partialPivLu().solve(I - a);
    return s;
}

inline FrequencySweepResult s_parameters(const Netlist& n, const FrequencyGrid& grid) {
    n.validate();
    if (n.ports.empty()) throw Error(Errc::topology, "network", "netlist has no ports", "add a PORT statement");
    std::set<std::string> anchors;
    for (const auto& p : n.ports) anchors.insert(p.node);
    detail::check_anchored(n, anchors);
    FrequencySweepResult r;
    r.grid = grid.values();
    r.s.reserve(grid.size());
    for (double f : grid.values()) {
        bool sh = false;
        r.s.push_back(s_matrix(n, f, &sh));
        r.shifted.push_back(sh);
    }
    return r;
}

using TerminationMap = std::map<int, Termination>;

/// Every port other than `at_port` matched to its reference impedance.
inline TerminationMap all_matched(const Netlist& n, int at_port) {
    TerminationMap t;
    for (const auto& p : n.ports)
        if (p.index != at_port) t[p.index] = Termination::matched;
    return t;
}

namespace detail {

inline cplx driving_point_at(const Netlist& n, const Port& at, const TerminationMap& terms, double f, bool* shifted) {
    auto na = assemble_admittance_matrix(n, f);
    if (shifted) *shifted = na.shifted;
    std::vector<char> drop(static_cast<std::size_t>(na.y.rows()), 0);
    for (const auto& p : n.ports) {
        if (p.index == at.index) continue;
        const int i = na.index.at(p.node);
        switch (terms.at(p.index)) {
        case Termination::matched: na.y(i, i) += 1.0 / p.z_ref; break;
        case Termination::grounded: drop[static_cast<std::size_t>(i)] = 1; break;
        case Termination::open: break;
        }
    }
    const int k = na.index.at(at.node);
    std::vector<int> live;
    for (int i = 0; i < na.y.rows(); ++i)
        if (!drop[static_cast<std::size_t>(i)]) live.push_back(i);
    if (drop[static_cast<std::size_t>(k)]) return {std::numeric_limits<double>::infinity(), 0.0};
    Eigen::MatrixXcd y(static_cast<Eigen::Index>(live.size()), static_cast<Eigen::Index>(live.size()));
    int kk = 0;
    for (std::size_t a = 0; a < live.size(); ++a) {
        if (live[a] == k) kk = static_cast<int>(a);
        for (std::size_t b = 0; b < live.size(); ++b)
            y(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = na.y(live[a], live[b]);
    }
    return schur_reduce(y, {kk})(0, 0);
}

inline std::set<std::string> driving_anchors(const Netlist& n, int at_port, const TerminationMap& terms) {
    std::set<std::string> anchors{n.port_by_index(at_port).node};
    for (const auto& p : n.ports) {
        if (p.index == at_port) continue;
        auto it = terms.find(p.index);
        if (it == terms.end())
            throw Error(Errc::invalid_argument, "network",
                        "no termination given for port " + std::to_string(p.index),
                        "give every other port a matched, grounded or open termination");
        if (it->second != Termination::open) anchors.insert(p.node);
    }
    return anchors;
}

} // namespace detail

struct DrivingPointResult {
    std::vector<cplx> y;
    std::vector<bool> shifted;
};

/// Admittance seen in parallel at a port node with the other ports terminated as given.
inline DrivingPointResult driving_point_admittance(const Netlist& n, int at_port, const TerminationMap& terms,
                                                   const FrequencyGrid& grid) {
    n.validate();
    const Port& at = n.port_by_index(at_port);
    detail::check_anchored(n, detail::driving_anchors(n, at_port, terms));
    DrivingPointResult r;
    for (double f : grid.values()) {
        bool sh = false;
        r.y.push_back(detail::driving_point_at(n, at, terms, f, &sh));
        r.shifted.push_back(sh);
    }
    return r;
}

inline cplx driving_point_admittance(const Netlist& n, int at_port, const TerminationMap& terms, double f) {
    return driving_point_admittance(n, at_port, terms, FrequencyGrid::from_list({f})).y.front();
}

/// S-parameters plus the driving-point admittance at one port.
inline FrequencySweepResult sweep(const Netlist& n, const FrequencyGrid& grid, int at_port, const TerminationMap& terms) {
    auto r = s_parameters(n, grid);
    auto y = driving_point_admittance(n, at_port, terms, grid);
    for (std::size_t i = 0; i < r.shifted.size(); ++i) r.shifted[i] = r.shifted[i] || y.shifted[i];
    r.y_driving = std::move(y.y);
    r.driving_port = at_port;
    return r;
}

struct StopBand {
    double center = 0.0;    // midpoint of the interval
    double bandwidth = 0.0;
    double f_lo = 0.0;
    double f_hi = 0.0;
    double peak = 0.0;      // grid frequency of largest T1 inside
};

/// Intervals where C_q / Re[Y_in] exceeds the threshold, edges interpolated in log Re[Y_in].
inline std::vector<StopBand> find_stopband(const std::vector<double>& f, const std::vector<cplx>& y_in, double c_q,
                                           double t1_threshold) {
    if (!(c_q > 0) || !(t1_threshold > 0))
        throw Error(Errc::invalid_argument, "network", "find_stopband: c_q and threshold must be > 0");
    if (f.size() != y_in.size()) throw Error(Errc::shape, "network", "grid and admittance lengths differ");
    const double g_thr = c_q / t1_threshold;
    auto lg = [](double g) { return std::log(std::max(g, 1e-300)); };
    auto inside = [&](std::size_t i) { return y_in[i].real() < g_thr; };
    auto crossing = [&](std::size_t i, std::size_t j) {
        const double a = lg(y_in[i].real()), b = lg(y_in[j].real()), t = lg(g_thr);
        if (a == b) return 0.5 * (f[i] + f[j]);
        const double u = std::clamp((t - a) / (b - a), 0.0, 1.0);
        return f[i] + u * (f[j] - f[i]);
    };
    std::vector<StopBand> out;
    std::size_t i = 0;
    while (i < f.size()) {
        if (!inside(i)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        std::size_t best = i;
        while (j + 1 < f.size() && inside(j + 1)) {
            ++j;
            if (y_in[j].real() < y_in[best].real()) best = j;
        }
        StopBand b;
        b.f_lo = i == 0 ? f[0] : crossing(i - 1, i);
        b.f_hi = j + 1 == f.size() ? f[j] : crossing(j, j + 1);
        b.center = 0.5 * (b.f_lo + b.f_hi);
        b.bandwidth = b.f_hi - b.f_lo;
        b.peak = f[best];
        out.push_back(b);
        i = j + 1;
    }
    return out;
}

inline std::vector<StopBand> find_stopband(const FrequencySweepResult& sweep, double c_q, double t1_threshold) {
    if (!sweep.y_driving)
        throw Error(Errc::invalid_argument, "network", "sweep carries no driving-point admittance",
                    "run the sweep with a driving port");
    return find_stopband(sweep.grid, *sweep.y_driving, c_q, t1_threshold);
}

struct SplittingOptions {
    std::string top_label = "Ctop";
    std::string bottom_label = "Cbot";
    int drive_port = 1;
    int qubit_port = 2;
    double f_lo = 3e9;
    double f_hi = 7e9;
    std::size_t points = 8001;
    double ridge_db = 60.0; // dips and the ridge between them are judged against the window's peak |S21|
};

struct SplittingPoint {
    double offset = 0.0;
    double splitting = 0.0;
    double f_first = 0.0; // lower dip, NaN when unresolved
    double f_second = 0.0;
};

namespace detail {

inline double s21_db(const Netlist& n, double f, int out_port, int in_port) {
    const auto s = s_matrix(n, f);
    return 20.0 * std::log10(std::max(std::abs(s(out_port - 1, in_port - 1)), 1e-300));
}

/// Golden-section refinement of a grid minimum of |S21| in dB.
inline double refine_min(const Netlist& n, double a, double b, int po, int pi) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = s21_db(n, c, po, pi), fd = s21_db(n, d, po, pi);
    for (int it = 0; it < 80 && (b - a) > 1e-9 * b; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = s21_db(n, c, po, pi);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = s21_db(n, d, po, pi);
        }
    }
    return 0.5 * (a + b);
}

} // namespace detail

/// Transmission-dip separation of a two-tap half-wave filter as the top tap shrinks to C_bot(1 - offset).
inline std::vector<SplittingPoint> asymmetry_splitting(const Netlist& base, double c_bot,
                                                       const std::vector<double>& offsets,
                                                       const SplittingOptions& opt = {}) {
    if (!(c_bot > 0)) throw Error(Errc::invalid_argument, "network", "c_bot must be > 0");
    if (!base.find(opt.top_label) || !base.find(opt.bottom_label))
        throw Error(Errc::invalid_argument, "network",
                    "netlist lacks capacitors labelled '" + opt.top_label + "' and '" + opt.bottom_label + "'",
                    "label the two tap capacitors with label=");
    const auto grid = FrequencyGrid::linear(opt.f_lo, opt.f_hi, opt.points);
    std::vector<SplittingPoint> out;
    for (double off : offsets) {
        if (!(off >= 0.0 && off < 0.5)) throw Error(Errc::invalid_argument, "network", "offset must lie in [0, 0.5)");
        Netlist n = base;
        n.find(opt.bottom_label)->value = c_bot;
        n.find(opt.top_label)->value = c_bot * (1.0 - off);
        const auto sw = s_parameters(n, grid);
        std::vector<double> db(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            db[i] = 20.0 * std::log10(std::max(std::abs(sw.s[i](opt.qubit_port - 1, opt.drive_port - 1)), 1e-300));
        const double peak = *std::max_element(db.begin(), db.end());
        const double floor = peak - opt.ridge_db;
        std::vector<std::size_t> mins;
        for (std::size_t i = 1; i + 1 < db.size(); ++i)
            if (db[i] <= db[i - 1] && db[i] < db[i + 1] && db[i] < floor) mins.push_back(i);
        std::sort(mins.begin(), mins.end(), [&](std::size_t a, std::size_t b) { return db[a] < db[b]; });

        SplittingPoint pt{off, 0.0, std::nan(""), std::nan("")};
        if (!mins.empty()) {
            const std::size_t m1 = mins.front();
            for (std::size_t k = 1; k < mins.size(); ++k) {
                const std::size_t m2 = mins[k];
                const auto [lo, hi] = std::minmax(m1, m2);
                const double ridge = *std::max_element(db.begin() + static_cast<std::ptrdiff_t>(lo),
                                                       db.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
                if (ridge < floor) continue;
                const double fa = detail::refine_min(n, grid[lo - 1], grid[lo + 1], opt.qubit_port, opt.drive_port);
                const double fb = detail::refine_min(n, grid[hi - 1], grid[hi + 1], opt.qubit_port, opt.drive_port);
                pt.f_first = fa;
                pt.f_second = fb;
                pt.splitting = fb - fa;
                break;
            }
        }
        out.push_back(pt);
    }
    return out;
}

} // namespace qdrive
