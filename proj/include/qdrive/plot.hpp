#pragma once

#include <qdrive/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

/// Minimal SVG line plots: axes, ticks and one polyline per series.
namespace qdrive::plot {

struct Series {
    std::string name;
    std::vector<double> x, y;
};

struct Figure {
    std::string title;
    std::string x_label, y_label;
    bool log_y = false;
    std::vector<Series> series;
};

namespace detail {

inline std::string num(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return b;
}

inline std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

/// 1-2-5 tick positions covering [lo, hi].
inline std::vector<double> ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return t;
}

} // namespace detail

inline std::string to_svg(const Figure& fig) {
    const double W = 720, H = 450, L = 80, R = 20, T = 40, B = 60;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    auto ty = [&](double v) { return fig.log_y ? std::log10(v) : v; };
    for (const auto& s : fig.series) {
        if (s.x.size() != s.y.size()) throw Error(Errc::shape, "cli", "plot series '" + s.name + "' is ragged");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (fig.log_y && !(s.y[i] > 0))) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
    std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"450\" font-family=\"sans-serif\" "
                    "font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o += "<text x=\"360\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + detail::esc(fig.title) + "</text>\n";
    o += "<rect x=\"" + detail::num(L) + "\" y=\"" + detail::num(T) + "\" width=\"" + detail::num(W - L - R) +
         "\" height=\"" + detail::num(H - T - B) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : detail::ticks(x0, x1))
        o += "<line x1=\"" + detail::num(px(t)) + "\" y1=\"" + detail::num(H - B) + "\" x2=\"" + detail::num(px(t)) +
             "\" y2=\"" + detail::num(H - B + 5) + "\" stroke=\"black\"/><text x=\"" + detail::num(px(t)) + "\" y=\"" +
             detail::num(H - B + 18) + "\" text-anchor=\"middle\">" + detail::num(t) + "</text>\n";
    for (double t : detail::ticks(y0, y1))
        o += "<line x1=\"" + detail::num(L - 5) + "\" y1=\"" + detail::num(py(t)) + "\" x2=\"" + detail::num(L) +
             "\" y2=\"" + detail::num(py(t)) + "\" stroke=\"black\"/><text x=\"" + detail::num(L - 8) + "\" y=\"" +
             detail::num(py(t) + 4) + "\" text-anchor=\"end\">" + (fig.log_y ? "1e" + detail::num(t) : detail::num(t)) +
             "</text>\n";
    o += "<text x=\"" + detail::num(L + (W - L - R) / 2) + "\" y=\"" + detail::num(H - 15) + "\" text-anchor=\"middle\">" +
         detail::esc(fig.x_label) + "</text>\n";
    o += "<text transform=\"translate(18," + detail::num(T + (H - T - B) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         detail::esc(fig.y_label) + "</text>\n";
    for (std::size_t k = 0; k < fig.series.size(); ++k) {
        const auto& s = fig.series[k];
        const char* c = colors[k % 7];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (fig.log_y && !(s.y[i] > 0))) continue;
            pts += detail::num(px(s.x[i])) + "," + detail::num(py(ty(s.y[i]))) + " ";
        }
        o += "<polyline fill=\"none\" stroke=\"" + std::string(c) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        if (fig.series.size() > 1)
            o += "<text x=\"" + detail::num(W - R - 8) + "\" y=\"" + detail::num(T + 16 + 15 * k) + "\" text-anchor=\"end\" fill=\"" +
                 c + "\">" + detail::esc(s.name) + "</text>\n";
    }
    return o + "</svg>\n";
}

} // namespace qdrive::plot
