#pragma once

#include <stdexcept>
#include <string>

namespace rsc {

// Precondition on a physical input violated (non-positive mass, |m| > F, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Integration, steady-state or fitting machinery could not deliver a result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Configuration text could not be turned into a valid configuration.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& message, int line = 0, std::string field = {})
        : std::runtime_error(format(message, line, field)), line_(line), field_(std::move(field)) {}

    int line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    static std::string format(const std::string& message, int line, const std::string& field) {
        std::string out;
        if (line > 0) out += "line " + std::to_string(line) + ": ";
        if (!field.empty()) out += "'" + field + "': ";
        return out + message;
    }

    int line_;
    std::string field_;
};

} // namespace rsc
