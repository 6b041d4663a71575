#ifndef CSTSIM_ERRORS_HPP
#define CSTSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cstsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An input lies outside the domain an operation accepts.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Two eigenvectors could not be told apart while tracking level labels.
class LabelingAmbiguity : public Error {
public:
    using Error::Error;
};

/// A linear system was singular or too ill-conditioned to trust.
class SingularSystem : public Error {
public:
    using Error::Error;
};

/// The trapping frequency does not exist (equal GS and ES drive amplitudes).
class UndefinedCst : public Error {
public:
    using Error::Error;
};

/// Integrator step violates the stability bound.
class StepSizeError : public Error {
public:
    using Error::Error;
};

/// Rate network with no open transfer path.
class DegenerateNetwork : public Error {
public:
    using Error::Error;
};

/// Fit could not proceed (collapsed centres, too few points, bad seeds).
class FitError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or data file. Carries an optional line number.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace cstsim

#endif
