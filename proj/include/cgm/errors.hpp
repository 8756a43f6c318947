#pragma once

#include <stdexcept>
#include <string>

namespace cgm {

/// Precondition failure (dimension mismatch, wrong signature, bad arguments).
class ContractViolation : public std::invalid_argument {
public:
    explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// A Gram matrix is numerically singular; carries the measured condition number.
class DegenerateSubspaceError : public std::runtime_error {
public:
    DegenerateSubspaceError(const std::string& what, double condition_number)
        : std::runtime_error(what), condition_number(condition_number) {}
    double condition_number;
};

/// A reconstruction hypothesis failed; names the hypothesis and the worst grid point.
class HypothesisViolation : public std::runtime_error {
public:
    HypothesisViolation(const std::string& hypothesis, double value, int iu, int iv)
        : std::runtime_error("hypothesis violated: " + hypothesis + " (residual " +
                             std::to_string(value) + " at grid point (" + std::to_string(iu) +
                             "," + std::to_string(iv) + "))"),
          hypothesis(hypothesis), value(value), iu(iu), iv(iv) {}
    std::string hypothesis;
    double value;
    int iu, iv;
};

/// Pointwise data contradicts a global consequence (e.g. rank 0 but V not constant).
class InconsistencyError : public std::runtime_error {
public:
    explicit InconsistencyError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cgm
