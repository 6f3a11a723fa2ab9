#pragma once

#include <stdexcept>
#include <string>

namespace meshmorph {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mesh or reference configuration violates a structural invariant.
class MeshError : public Error {
public:
    using Error::Error;
};

/// An element has coincident corners or zero area and cannot be measured.
class DegenerateElementError : public Error {
public:
    using Error::Error;
};

/// A deformation state has det F <= 0 (or a non-positive Jacobian).
class InadmissibleStateError : public Error {
public:
    InadmissibleStateError(const std::string& what, long element)
        : Error(what), element_(element) {}
    long element() const noexcept { return element_; }

private:
    long element_;
};

/// Linear or nonlinear solver failure. `step` is the load step / increment index
/// the failure occurred in, or -1 when not applicable.
class SolverError : public Error {
public:
    SolverError(const std::string& what, int step = -1, double residual = -1.0)
        : Error(what), step_(step), residual_(residual) {}
    int step() const noexcept { return step_; }
    double residual() const noexcept { return residual_; }

private:
    int step_;
    double residual_;
};

/// Invalid user input: configuration, problem spec, motion file.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace meshmorph
