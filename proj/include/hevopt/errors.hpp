#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hevopt {

/// Base for every error raised by the library. The CLI maps the concrete
/// type to a process exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input text did not parse. `line()` is 1-based; 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Parsed input violates a data invariant (time ordering, sign, lengths...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Query outside an efficiency map's axis bounding box.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Query touches an infeasible node of an efficiency map.
class InfeasibleRegionError : public Error {
public:
    using Error::Error;
};

/// Measured efficiency above 100 %: the characterization data is wrong.
class CharacterizationError : public Error {
public:
    using Error::Error;
};

/// A simulation step demanded more than a component can deliver.
class EnvelopeError : public Error {
public:
    EnvelopeError(const std::string& what, std::size_t step)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// No admissible trajectory exists (vehicle runs flat, DP has no feasible path).
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Exhaustive search refused because the instance is too large.
class TooLargeError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace hevopt
