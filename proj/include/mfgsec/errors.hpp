#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfgsec {

// Base of every domain error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class SingularityError : public Error {
public:
    using Error::Error;
};

class NoInstrumentError : public Error {
public:
    using Error::Error;
};

class UnderdeterminedError : public Error {
public:
    using Error::Error;
};

class DegenerateScaleError : public Error {
public:
    using Error::Error;
};

class AliasingError : public Error {
public:
    using Error::Error;
};

class ConfigurationError : public Error {
public:
    using Error::Error;
};

class StateError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Raised when the Hawkes branching matrix is supercritical and no override was given.
class NonStationaryError : public Error {
public:
    NonStationaryError(const std::string& what, double radius) : Error(what), radius_(radius) {}
    double spectral_radius() const noexcept { return radius_; }

private:
    double radius_;
};

// Explicit transport step would violate the CFL condition.
class StabilityError : public Error {
public:
    StabilityError(const std::string& what, double suggested_dt)
        : Error(what), suggested_dt_(suggested_dt) {}
    double suggested_dt() const noexcept { return suggested_dt_; }

private:
    double suggested_dt_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// A replicated run failed; carries the index of the failing replication.
class RunError : public Error {
public:
    RunError(const std::string& what, std::size_t index)
        : Error("run " + std::to_string(index) + ": " + what), index_(index) {}
    std::size_t run_index() const noexcept { return index_; }

private:
    std::size_t index_;
};

}  // namespace mfgsec
