#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace qdrive {

namespace detail {

inline std::optional<double> prefix_scale(std::string_view p) {
    static constexpr std::array<std::pair<std::string_view, double>, 11> table{{
        {"a", 1e-18}, {"f", 1e-15}, {"p", 1e-12}, {"n", 1e-9}, {"u", 1e-6}, {"\xC2\xB5", 1e-6},
        {"m", 1e-3}, {"k", 1e3}, {"M", 1e6}, {"G", 1e9}, {"T", 1e12},
    }};
    for (const auto& [k, v] : table)
        if (p == k) return v;
    return std::nullopt;
}

inline bool is_unit(std::string_view u) {
    // a bare "m" is the milli prefix, so metres are only recognised after a prefix
    static constexpr std::array<std::string_view, 13> units{
        "F", "H", "Hz", "hz", "HZ", "ohm", "Ohm", "OHM", "\xCE\xA9", "s", "V", "K", "W"};
    for (auto x : units)
        if (u == x) return true;
    return false;
}

} // namespace detail

/// Parses "80aF", "5.9055mm", "1e9", "4.6f", "50ohm". Returns nullopt on anything malformed.
inline std::optional<double> try_parse_quantity(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    const char* first = s.data();
    if (*first == '+') ++first;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc{} || ptr == first) return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    std::string_view tail(ptr, static_cast<std::size_t>(s.data() + s.size() - ptr));
    if (tail.empty() || detail::is_unit(tail)) return v;
    for (std::size_t n : {std::size_t{2}, std::size_t{1}}) {
        if (tail.size() < n) continue;
        auto scale = detail::prefix_scale(tail.substr(0, n));
        if (!scale) continue;
        auto rest = tail.substr(n);
        if (rest.empty() || rest == "m" || detail::is_unit(rest)) return v * *scale;
    }
    return std::nullopt;
}

} // namespace qdrive
