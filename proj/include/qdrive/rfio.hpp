#pragma once

#include <qdrive/error.hpp>
#include <qdrive/network.hpp>
#include <qdrive/units.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace qdrive {

/// Shortest text that reads back to the same double (17 significant digits).
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

struct Token {
    std::string_view text;
    int column;
};

inline std::vector<Token> tokenize_line(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r' || line[i] == ',')) ++i;
        if (i >= line.size()) break;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r' && line[j] != ',') ++j;
        out.push_back({line.substr(i, j - i), static_cast<int>(i) + 1});
        i = j;
    }
    return out;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            out.push_back(text.substr(start));
            break;
        }
        out.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

inline std::string upper(std::string_view s) {
    std::string u(s);
    for (auto& ch : u) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return u;
}

inline std::string printable(std::string_view s) {
    std::string o;
    for (unsigned char ch : s.substr(0, 32)) {
        if (ch >= 0x20 && ch < 0x7f) {
            o += static_cast<char>(ch);
        } else {
            char b[8];
            std::snprintf(b, sizeof b, "\\x%02x", ch);
            o += b;
        }
    }
    return o;
}

} // namespace detail

// ---------------------------------------------------------------- netlists

/// Reads the line-oriented netlist format:
///   GND node...
///   C|L|R a b value [label=NAME]
///   TL a b z0=.. eeff=.. len=.. [atten=..] [label=NAME]
///   PORT index node [zref]
/// '#' starts a comment. Keywords are case-insensitive; node names are not.
inline Netlist parse_netlist(std::string_view text) {
    Netlist n;
    std::map<int, int> port_line;
    std::vector<std::pair<Port, detail::Token>> pending_ports;
    const auto lines = detail::split_lines(text);
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const int line_no = static_cast<int>(li) + 1;
        auto toks = detail::tokenize_line(lines[li]);
        for (std::size_t k = 0; k < toks.size(); ++k)
            if (!toks[k].text.empty() && toks[k].text.front() == '#') {
                toks.resize(k);
                break;
            }
        if (toks.empty()) continue;
        auto fail = [&](const detail::Token& t, const std::string& msg) -> void {
            throw ParseError("rfio", line_no, t.column, msg);
        };
        auto number = [&](const detail::Token& t, std::string_view s) {
            auto v = try_parse_quantity(s);
            if (!v) fail(t, "malformed number '" + detail::printable(s) + "'");
            return *v;
        };
        const std::string kw = detail::upper(toks[0].text);
        if (kw == "GND") {
            if (toks.size() < 2) fail(toks[0], "GND needs a node name");
            for (std::size_t k = 1; k < toks.size(); ++k) n.grounds.insert(std::string(toks[k].text));
        } else if (kw == "C" || kw == "L" || kw == "R") {
            if (toks.size() < 4) fail(toks[0], kw + " needs two nodes and a value");
            Element e;
            e.kind = kw == "C" ? ElementKind::capacitor : kw == "L" ? ElementKind::inductor : ElementKind::resistor;
            e.a = std::string(toks[1].text);
            e.b = std::string(toks[2].text);
            e.value = number(toks[3], toks[3].text);
            if (!(e.value > 0)) fail(toks[3], "element value must be positive");
            if (e.a == e.b) fail(toks[2], "both terminals on the same node");
            for (std::size_t k = 4; k < toks.size(); ++k) {
                auto eq = toks[k].text.find('=');
                if (eq == std::string_view::npos || detail::upper(toks[k].text.substr(0, eq)) != "LABEL")
                    fail(toks[k], "unexpected parameter '" + detail::printable(toks[k].text) + "'");
                e.label = std::string(toks[k].text.substr(eq + 1));
            }
            n.elements.push_back(std::move(e));
        } else if (kw == "TL") {
            if (toks.size() < 3) fail(toks[0], "TL needs two nodes");
            Element e;
            e.kind = ElementKind::tline;
            e.a = std::string(toks[1].text);
            e.b = std::string(toks[2].text);
            bool z0 = false, ee = false, len = false;
            for (std::size_t k = 3; k < toks.size(); ++k) {
                auto eq = toks[k].text.find('=');
                if (eq == std::string_view::npos) fail(toks[k], "expected key=value");
                const auto key = detail::upper(toks[k].text.substr(0, eq));
                const auto val = toks[k].text.substr(eq + 1);
                if (key == "LABEL") {
                    e.label = std::string(val);
                    continue;
                }
                const double v = number(toks[k], val);
                if (key == "Z0") {
                    e.line.z0 = v;
                    z0 = true;
                    if (!(v > 0)) fail(toks[k], "z0 must be positive");
                } else if (key == "EEFF" || key == "EPS") {
                    e.line.eps_eff = v;
                    ee = true;
                    if (!(v >= 1)) fail(toks[k], "eeff must be at least 1");
                } else if (key == "LEN") {
                    e.line.length = v;
                    len = true;
                    if (!(v >= 0)) fail(toks[k], "len must be non-negative");
                } else if (key == "ATTEN") {
                    e.line.atten_db_per_m = v;
                    if (!(v >= 0)) fail(toks[k], "atten must be non-negative");
                } else {
                    fail(toks[k], "unknown TL parameter '" + detail::printable(key) + "'");
                }
            }
            if (!z0 || !ee || !len) fail(toks[0], "TL requires z0=, eeff= and len=");
            n.elements.push_back(std::move(e));
        } else if (kw == "PORT") {
            if (toks.size() < 3 || toks.size() > 4) fail(toks[0], "PORT needs an index, a node and an optional impedance");
            int idx = 0;
            auto [p, ec] = std::from_chars(toks[1].text.data(), toks[1].text.data() + toks[1].text.size(), idx);
            if (ec != std::errc{} || p != toks[1].text.data() + toks[1].text.size() || idx < 1)
                fail(toks[1], "port index must be a positive integer");
            if (port_line.count(idx))
                fail(toks[1], "duplicate port index " + std::to_string(idx) + " (first on line " +
                                  std::to_string(port_line[idx]) + ")");
            port_line[idx] = line_no;
            Port port{idx, std::string(toks[2].text), 50.0};
            if (toks.size() == 4) {
                auto zt = toks[3].text;
                if (auto eq = zt.find('='); eq != std::string_view::npos) zt = zt.substr(eq + 1);
                port.z_ref = number(toks[3], zt);
                if (!(port.z_ref > 0)) fail(toks[3], "reference impedance must be positive");
            }
            pending_ports.push_back({port, toks[2]});
        } else {
            fail(toks[0], "unknown element kind '" + detail::printable(toks[0].text) + "'");
        }
    }
    const auto nodes = n.nodes();
    for (const auto& [port, tok] : pending_ports) {
        if (!nodes.count(port.node))
            throw ParseError("rfio", port_line[port.index], tok.column,
                             "PORT " + std::to_string(port.index) + " references undefined node '" +
                                 detail::printable(port.node) + "'");
        n.ports.push_back(port);
    }
    std::sort(n.ports.begin(), n.ports.end(), [](const Port& a, const Port& b) { return a.index < b.index; });
    if (n.grounds.empty()) throw Error(Errc::topology, "rfio", "no ground node", "add a 'GND <node>' line");
    try {
        n.validate();
    } catch (const Error& e) {
        throw Error(e.code(), "rfio", e.what(), e.hint());
    }
    return n;
}

inline std::string serialize_netlist(const Netlist& n) {
    std::string out;
    for (const auto& g : n.grounds) out += "GND " + g + "\n";
    for (const auto& e : n.elements) {
        switch (e.kind) {
        case ElementKind::tline:
            out += "TL " + e.a + " " + e.b + " z0=" + format_double(e.line.z0) + " eeff=" + format_double(e.line.eps_eff) +
                   " len=" + format_double(e.line.length);
            if (e.line.atten_db_per_m != 0.0) out += " atten=" + format_double(e.line.atten_db_per_m);
            break;
        case ElementKind::capacitor: out += "C " + e.a + " " + e.b + " " + format_double(e.value); break;
        case ElementKind::inductor: out += "L " + e.a + " " + e.b + " " + format_double(e.value); break;
        case ElementKind::resistor: out += "R " + e.a + " " + e.b + " " + format_double(e.value); break;
        }
        if (!e.label.empty()) out += " label=" + e.label;
        out += "\n";
    }
    for (const auto& p : n.ports)
        out += "PORT " + std::to_string(p.index) + " " + p.node + " " + format_double(p.z_ref) + "\n";
    return out;
}

// ---------------------------------------------------------------- touchstone

enum class TsFormat { RI, MA, DB };

inline const char* ts_format_name(TsFormat f) {
    switch (f) {
    case TsFormat::RI: return "RI";
    case TsFormat::MA: return "MA";
    default: return "DB";
    }
}

struct TouchstoneBlock {
    std::string unit = "GHz";
    TsFormat format = TsFormat::RI;
    double r_ref = 50.0;
    int ports = 0;
    std::vector<double> freq;             // Hz
    std::vector<Eigen::MatrixXcd> data;   // complex S per frequency
};

inline double unit_scale(std::string_view unit) {
    const auto u = detail::upper(unit);
    if (u == "HZ") return 1.0;
    if (u == "KHZ") return 1e3;
    if (u == "MHZ") return 1e6;
    if (u == "GHZ") return 1e9;
    return 0.0;
}

inline std::string canonical_unit(std::string_view unit) {
    const auto u = detail::upper(unit);
    if (u == "HZ") return "Hz";
    if (u == "KHZ") return "kHz";
    if (u == "MHZ") return "MHz";
    return "GHz";
}

inline cplx decode_pair(TsFormat f, double a, double b) {
    constexpr double deg = constants::pi / 180.0;
    switch (f) {
    case TsFormat::RI: return {a, b};
    case TsFormat::MA: return std::polar(a, b * deg);
    default: return std::polar(std::pow(10.0, a / 20.0), b * deg);
    }
}

inline std::pair<double, double> encode_pair(TsFormat f, cplx v) {
    constexpr double deg = 180.0 / constants::pi;
    switch (f) {
    case TsFormat::RI: return {v.real(), v.imag()};
    case TsFormat::MA: return {std::abs(v), std::arg(v) * deg};
    default: {
        const double m = std::abs(v);
        return {m > 0 ? 20.0 * std::log10(m) : -1e4, std::arg(v) * deg};
    }
    }
}

/// Version-1 S-parameter text. `ports` = 0 infers the count from the layout of the first data row.
inline TouchstoneBlock parse_touchstone(std::string_view text, int ports = 0) {
    TouchstoneBlock blk;
    blk.format = TsFormat::MA;
    bool have_options = false;
    struct Num {
        double v;
        int line, col;
    };
    std::vector<Num> nums;
    std::vector<std::size_t> row_starts_per_line; // token count per data line
    const auto lines = detail::split_lines(text);
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const int line_no = static_cast<int>(li) + 1;
        std::string_view line = lines[li];
        if (auto bang = line.find('!'); bang != std::string_view::npos) line = line.substr(0, bang);
        auto toks = detail::tokenize_line(line);
        if (toks.empty()) continue;
        if (toks[0].text.front() == '#') {
            if (have_options) continue;
            have_options = true;
            std::vector<detail::Token> opts;
            if (toks[0].text.size() > 1) opts.push_back({toks[0].text.substr(1), toks[0].column + 1});
            opts.insert(opts.end(), toks.begin() + 1, toks.end());
            for (std::size_t k = 0; k < opts.size(); ++k) {
                const auto u = detail::upper(opts[k].text);
                if (unit_scale(u) > 0) {
                    blk.unit = canonical_unit(u);
                } else if (u == "S") {
                } else if (u == "Y" || u == "Z" || u == "G" || u == "H") {
                    throw Error(Errc::unsupported, "rfio", "parameter type " + u + " is not supported",
                                "only S-parameter files can be read");
                } else if (u == "RI") {
                    blk.format = TsFormat::RI;
                } else if (u == "MA") {
                    blk.format = TsFormat::MA;
                } else if (u == "DB") {
                    blk.format = TsFormat::DB;
                } else if (u == "R") {
                    if (k + 1 >= opts.size()) throw ParseError("rfio", line_no, opts[k].column, "R needs a value");
                    auto v = try_parse_quantity(opts[k + 1].text);
                    if (!v || !(*v > 0))
                        throw ParseError("rfio", line_no, opts[k + 1].column, "reference resistance must be positive");
                    blk.r_ref = *v;
                    ++k;
                } else {
                    throw ParseError("rfio", line_no, opts[k].column,
                                     "unknown option '" + detail::printable(opts[k].text) + "'");
                }
            }
            continue;
        }
        row_starts_per_line.push_back(toks.size());
        for (const auto& t : toks) {
            double v = 0;
            auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
            if (ec != std::errc{} || p != t.text.data() + t.text.size() || std::isnan(v))
                throw ParseError("rfio", line_no, t.column, "malformed number '" + detail::printable(t.text) + "'");
            nums.push_back({v, line_no, t.column});
        }
    }
    if (nums.empty()) throw Error(Errc::format, "rfio", "no data rows");
    if (ports == 0) {
        const auto first = row_starts_per_line.front();
        if (first == 3) ports = 1;
        else if (first == 7) ports = 3;
        else if (first == 9) ports = (row_starts_per_line.size() > 1 && row_starts_per_line[1] == 8) ? 4 : 2;
        else throw Error(Errc::format, "rfio", "cannot infer port count from a first row of " + std::to_string(first) + " values",
                         "pass the port count explicitly");
    }
    if (ports < 1 || ports > 4) throw Error(Errc::unsupported, "rfio", "only 1-4 ports are supported");
    blk.ports = ports;
    const std::size_t per_row = 1 + 2 * static_cast<std::size_t>(ports * ports);
    if (nums.size() % per_row != 0)
        throw Error(Errc::format, "rfio",
                    "value count " + std::to_string(nums.size()) + " is not a multiple of " + std::to_string(per_row));
    const double scale = unit_scale(blk.unit);
    for (std::size_t r = 0; r < nums.size() / per_row; ++r) {
        const Num* row = &nums[r * per_row];
        const double f = row[0].v * scale;
        if (!(f >= 0) || !std::isfinite(f)) throw ParseError("rfio", row[0].line, row[0].col, "bad frequency");
        if (!blk.freq.empty() && !(f > blk.freq.back()))
            throw Error(Errc::format, "rfio", "line " + std::to_string(row[0].line) + ": frequencies not strictly increasing");
        Eigen::MatrixXcd s(ports, ports);
        for (int k = 0; k < ports * ports; ++k) {
            int i = k / ports, j = k % ports;
            if (ports == 2) std::swap(i, j); // N11 N21 N12 N22
            s(i, j) = decode_pair(blk.format, row[1 + 2 * k].v, row[2 + 2 * k].v);
        }
        blk.freq.push_back(f);
        blk.data.push_back(std::move(s));
    }
    return blk;
}

inline std::string write_touchstone(const TouchstoneBlock& blk) {
    if (blk.ports < 1 || blk.ports > 4) throw Error(Errc::unsupported, "rfio", "only 1-4 ports are supported");
    if (blk.freq.size() != blk.data.size()) throw Error(Errc::shape, "rfio", "frequency and data counts differ");
    if (!(blk.r_ref > 0)) throw Error(Errc::invalid_argument, "rfio", "reference resistance must be positive");
    const double scale = unit_scale(blk.unit);
    if (scale == 0) throw Error(Errc::invalid_argument, "rfio", "unknown frequency unit " + blk.unit);
    std::string out = std::string("# ") + canonical_unit(blk.unit) + " S " + ts_format_name(blk.format) + " R " +
                      format_double(blk.r_ref) + "\n";
    const int N = blk.ports;
    for (std::size_t r = 0; r < blk.freq.size(); ++r) {
        if (r > 0 && !(blk.freq[r] > blk.freq[r - 1]))
            throw Error(Errc::format, "rfio", "frequencies not strictly increasing");
        const auto& s = blk.data[r];
        if (s.rows() != N || s.cols() != N) throw Error(Errc::shape, "rfio", "matrix size does not match port count");
        out += format_double(blk.freq[r] / scale);
        for (int k = 0; k < N * N; ++k) {
            int i = k / N, j = k % N;
            if (N == 2) std::swap(i, j);
            if (N > 2 && j == 0 && i > 0) out += "\n";
            const auto [a, b] = encode_pair(blk.format, s(i, j));
            out += " " + format_double(a) + " " + format_double(b);
        }
        out += "\n";
    }
    return out;
}

inline TouchstoneBlock to_touchstone(const FrequencySweepResult& sw, TsFormat fmt = TsFormat::RI, double r_ref = 50.0) {
    TouchstoneBlock b;
    b.format = fmt;
    b.r_ref = r_ref;
    b.ports = static_cast<int>(sw.ports());
    b.freq = sw.grid;
    b.data = sw.s;
    return b;
}

// ---------------------------------------------------------------- csv

struct Table {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    Table& add(std::string name, std::vector<double> col) {
        names.push_back(std::move(name));
        columns.push_back(std::move(col));
        return *this;
    }
    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    const std::vector<double>& column(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return columns[i];
        throw Error(Errc::invalid_argument, "rfio", "no column named '" + name + "'");
    }
};

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string o = "\"";
    for (char ch : s) {
        if (ch == '"') o += '"';
        o += ch;
    }
    return o + "\"";
}

} // namespace detail

inline std::string write_csv(const Table& t) {
    if (t.names.size() != t.columns.size()) throw Error(Errc::shape, "rfio", "column names and columns differ in count");
    for (const auto& c : t.columns)
        if (c.size() != t.rows()) throw Error(Errc::shape, "rfio", "ragged columns", "give every column the same length");
    std::string out;
    for (std::size_t i = 0; i < t.names.size(); ++i) out += (i ? "," : "") + detail::csv_field(t.names[i]);
    out += "\n";
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + format_double(t.columns[i][r]);
        out += "\n";
    }
    return out;
}

inline Table read_csv(std::string_view text) {
    Table t;
    const auto lines = detail::split_lines(text);
    bool header = false;
    for (std::size_t li = 0; li < lines.size(); ++li) {
        std::string_view line = lines[li];
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::vector<int> cols;
        std::string cur;
        bool quoted = false;
        int col = 1;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || (!quoted && line[i] == ',')) {
                fields.push_back(cur);
                cols.push_back(col);
                cur.clear();
                col = static_cast<int>(i) + 2;
                continue;
            }
            const char ch = line[i];
            if (ch == '"') {
                if (quoted && i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = !quoted;
                }
            } else {
                cur += ch;
            }
        }
        const int line_no = static_cast<int>(li) + 1;
        if (!header) {
            t.names = fields;
            t.columns.assign(fields.size(), {});
            header = true;
            continue;
        }
        if (fields.size() != t.names.size())
            throw ParseError("rfio", line_no, 1,
                             "expected " + std::to_string(t.names.size()) + " fields, found " + std::to_string(fields.size()));
        for (std::size_t k = 0; k < fields.size(); ++k) {
            double v = 0;
            const auto& f = fields[k];
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc{} || p != f.data() + f.size())
                throw ParseError("rfio", line_no, cols[k], "malformed number '" + detail::printable(f) + "'");
            t.columns[k].push_back(v);
        }
    }
    if (!header) throw Error(Errc::format, "rfio", "empty CSV");
    return t;
}

} // namespace qdrive
