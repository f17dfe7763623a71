#pragma once

#include <stdexcept>
#include <string>

namespace fle {

/// Invalid parameters: outside the admissible (n, s, p, alpha, ...) range.
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Evaluation requested exactly at a kernel singularity the caller must split around.
class SingularInputError : public DomainError {
public:
    explicit SingularInputError(const std::string& what) : DomainError(what) {}
};

/// Iterative method or quadrature failed to reach its target.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved " + std::to_string(achieved) + ")"),
          achieved_(achieved) {}

    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Discrete scheme violated a property it must preserve (e.g. the supersolution bound).
class SchemeError : public std::runtime_error {
public:
    explicit SchemeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fle
