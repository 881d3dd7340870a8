#include "shellscale/errors.hpp"

#include <sstream>

namespace shellscale {

namespace {

std::string syntax_message(std::size_t offset, const std::vector<std::string>& expected,
                           const std::string& found) {
    std::ostringstream os;
    os << "syntax error at offset " << offset << ": expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i > 0) os << (i + 1 == expected.size() ? " or " : ", ");
        os << expected[i];
    }
    os << ", found " << found;
    return os.str();
}

std::string point_message(double min_eig, const std::array<double, 3>& p) {
    std::ostringstream os;
    os.precision(17);
    os << "metric is not positive definite at (" << p[0] << ", " << p[1] << ", " << p[2]
       << "): smallest eigenvalue " << min_eig;
    return os.str();
}

}  // namespace

SyntaxError::SyntaxError(std::size_t offset, std::vector<std::string> expected, const std::string& found)
    : Error(syntax_message(offset, expected, found)), offset_(offset), expected_(std::move(expected)) {}

UnknownIdentifier::UnknownIdentifier(std::string name, std::size_t offset)
    : Error("unknown identifier '" + name + "' at offset " + std::to_string(offset)),
      name_(std::move(name)),
      offset_(offset) {}

DomainError::DomainError(const std::string& what, std::string subexpression)
    : Error(what + " in '" + subexpression + "'"), subexpression_(std::move(subexpression)) {}

NotPositiveDefinite::NotPositiveDefinite(double min_eigenvalue, std::array<double, 3> point)
    : Error(point_message(min_eigenvalue, point)), min_eigenvalue_(min_eigenvalue), point_(point) {}

IntegrabilityViolation::IntegrabilityViolation(const std::string& what, double defect)
    : Error(what), defect_(defect) {}

SolverDiverged::SolverDiverged(const std::string& what, double residual) : Error(what), residual_(residual) {}

DegenerateDeformation::DegenerateDeformation(const std::string& what, double determinant)
    : Error(what), determinant_(determinant) {}

OptimizerError::OptimizerError(const std::string& what, std::vector<double> last_iterate, double last_value)
    : Error(what), last_iterate_(std::move(last_iterate)), last_value_(last_value) {}

ConfigError::ConfigError(std::string key_path, const std::string& message)
    : Error(key_path.empty() ? message : key_path + " " + message), key_path_(std::move(key_path)) {}

}  // namespace shellscale
