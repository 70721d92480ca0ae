#ifndef DOPO_ERRORS_HPP
#define DOPO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dopo {

// Bad physical or configuration input (maps to CLI exit code 2).
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string &what) : std::invalid_argument(what) {}
};

// Resonator outside the open stability interval 0 < g1*g2 < 1, or a
// degenerate waist denominator.
class GeometryError : public ValidationError {
public:
    explicit GeometryError(const std::string &what) : ValidationError(what) {}
};

// Numerical failure at runtime: divergence, singular resolvent, ...
// (maps to CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string &what) : std::runtime_error(what) {}
};

// A spectrum was requested for a selector that overlaps a zero (Goldstone)
// mode of the drift; the stationary spectrum diverges there.
class GoldstoneOverlapError : public NumericalError {
public:
    GoldstoneOverlapError(const std::string &what, double overlap)
        : NumericalError(what), overlap_(overlap) {}
    double overlap() const { return overlap_; }

private:
    double overlap_;
};

} // namespace dopo

#endif
