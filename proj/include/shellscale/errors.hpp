#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace shellscale {

// Base of every error raised by the library. Callers that only care about
// "something went wrong" can catch this single type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t offset, std::vector<std::string> expected, const std::string& found);
    std::size_t offset() const noexcept { return offset_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t offset_;
    std::vector<std::string> expected_;
};

class UnknownIdentifier : public Error {
public:
    UnknownIdentifier(std::string name, std::size_t offset);
    const std::string& name() const noexcept { return name_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    std::string name_;
    std::size_t offset_;
};

class DomainError : public Error {
public:
    DomainError(const std::string& what, std::string subexpression);
    const std::string& subexpression() const noexcept { return subexpression_; }

private:
    std::string subexpression_;
};

class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(double min_eigenvalue, std::array<double, 3> point);
    double min_eigenvalue() const noexcept { return min_eigenvalue_; }
    const std::array<double, 3>& point() const noexcept { return point_; }

private:
    double min_eigenvalue_;
    std::array<double, 3> point_;
};

class InsufficientJetOrder : public Error {
public:
    using Error::Error;
};

class IntegrabilityViolation : public Error {
public:
    IntegrabilityViolation(const std::string& what, double defect);
    double defect() const noexcept { return defect_; }

private:
    double defect_;
};

class SingularFrame : public Error {
public:
    using Error::Error;
};

class SingularReduction : public Error {
public:
    using Error::Error;
};

class SolverDiverged : public Error {
public:
    SolverDiverged(const std::string& what, double residual);
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class DegenerateDeformation : public Error {
public:
    DegenerateDeformation(const std::string& what, double determinant);
    double determinant() const noexcept { return determinant_; }

private:
    double determinant_;
};

// Optimizer failures keep the last accepted iterate so callers can still
// inspect or report it.
class OptimizerError : public Error {
public:
    OptimizerError(const std::string& what, std::vector<double> last_iterate, double last_value);
    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
    double last_value() const noexcept { return last_value_; }

private:
    std::vector<double> last_iterate_;
    double last_value_;
};

class LineSearchFailed : public OptimizerError {
public:
    using OptimizerError::OptimizerError;
};

class MaxIterations : public OptimizerError {
public:
    using OptimizerError::OptimizerError;
};

class ConfigError : public Error {
public:
    ConfigError(std::string key_path, const std::string& message);
    const std::string& key_path() const noexcept { return key_path_; }

private:
    std::string key_path_;
};

}  // namespace shellscale
