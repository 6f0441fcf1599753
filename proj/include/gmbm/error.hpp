#pragma once

#include <stdexcept>
#include <string>

namespace gmbm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter or configuration value violates its documented range.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Input data is malformed (non-symmetric matrix, length mismatch, bad file).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A latent vector has zero tail norm, so its spherical decomposition is undefined.
class DegenerateLatent : public Error {
public:
    using Error::Error;
};

class CalibrationFailure : public Error {
public:
    using Error::Error;
};

/// Request exceeds the dense bit-packed adjacency limit.
class CapacityError : public Error {
public:
    using Error::Error;
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, int iterations, double worst_residual)
        : Error(what), iterations_(iterations), worst_residual_(worst_residual) {}

    int iterations() const { return iterations_; }
    double worst_residual() const { return worst_residual_; }

private:
    int iterations_;
    double worst_residual_;
};

}  // namespace gmbm
