#pragma once

#include <stdexcept>
#include <string>

namespace qfiflow {

// Root of every error raised by the library. Each subclass corresponds to one
// failure mode callers are expected to distinguish.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class NonHermitian : public Error {
public:
    using Error::Error;
};

class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

// A density-matrix or trajectory invariant (trace, Hermiticity, positivity)
// drifted beyond its tolerance.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

// A decay rate diverges at the requested time (|h(t)| inside the guard band).
class RateSingularity : public Error {
public:
    using Error::Error;
};

// The integrator could not advance: step halving bottomed out, or a rate
// singularity was hit inside a step.
class StepSizeUnderflow : public Error {
public:
    using Error::Error;
};

// The parameter derivative has weight on the joint kernel of rho, where the
// SLD is undefined and the QFI diverges.
class SupportInconsistency : public Error {
public:
    using Error::Error;
};

class NonpositiveQfi : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

} // namespace qfiflow
