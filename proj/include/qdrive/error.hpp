#pragma once

#include <stdexcept>
#include <string>

namespace qdrive {

enum class Errc {
    topology,
    numeric_range,
    parse,
    format,
    unsupported,
    passivity,
    divergence,
    dimension,
    stiffness,
    no_oscillation,
    degenerate_fit,
    non_convergence,
    shape,
    drive_too_weak,
    out_of_model,
    near_pole,
    invalid_argument,
};

inline const char* errc_name(Errc c) {
    switch (c) {
    case Errc::topology: return "topology error";
    case Errc::numeric_range: return "numeric-range error";
    case Errc::parse: return "parse error";
    case Errc::format: return "format error";
    case Errc::unsupported: return "unsupported feature";
    case Errc::passivity: return "passivity violation";
    case Errc::divergence: return "divergence";
    case Errc::dimension: return "dimension error";
    case Errc::stiffness: return "stiffness error";
    case Errc::no_oscillation: return "no oscillation";
    case Errc::degenerate_fit: return "degenerate fit";
    case Errc::non_convergence: return "non-convergence";
    case Errc::shape: return "shape error";
    case Errc::drive_too_weak: return "drive too weak";
    case Errc::out_of_model: return "out of model";
    case Errc::near_pole: return "near pole";
    case Errc::invalid_argument: return "invalid argument";
    }
    return "error";
}

/// Every domain failure in the library. `module()` names the originating module,
/// `hint()` is a one-line remediation suggestion shown by the CLI.
class Error : public std::runtime_error {
public:
    Error(Errc code, std::string module, const std::string& what, std::string hint = {})
        : std::runtime_error(what), code_(code), module_(std::move(module)), hint_(std::move(hint)) {}

    Errc code() const noexcept { return code_; }
    const std::string& module() const noexcept { return module_; }
    const std::string& hint() const noexcept { return hint_; }

private:
    Errc code_;
    std::string module_;
    std::string hint_;
};

/// Parse failures carry a 1-based position.
class ParseError : public Error {
public:
    ParseError(std::string module, int line, int column, const std::string& msg, std::string hint = {})
        : Error(Errc::parse, std::move(module),
                "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg,
                std::move(hint)),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

} // namespace qdrive
