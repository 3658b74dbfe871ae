#pragma once

#include <stdexcept>
#include <string>

namespace qipf {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A precondition on an argument was violated (range, sign, finiteness).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Two inputs that must share a dimension do not.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// The input is well formed but too degenerate to compute with
/// (zero variance, single class, empty side of a split).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// A file or config could not be parsed. `where` names the field path or
/// line that failed.
class ParseError : public Error {
public:
    ParseError(std::string where, const std::string& what)
        : Error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

/// A computation produced a non-finite value.
class NumericalError : public Error {
public:
    using Error::Error;
};

namespace detail {
[[noreturn]] void throw_invalid(const std::string& what);
void require_finite(double v, const char* name);
}  // namespace detail

}  // namespace qipf
