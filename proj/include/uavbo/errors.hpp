#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace uavbo {

/// The GP system matrix could not be factorized even after diagonal jitter.
class ConditioningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (profile, config, scan data, trace).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One or more invariants failed. `issues()` lists each failed field.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> issues)
        : std::runtime_error(join(issues)), issues_(std::move(issues)) {}
    explicit ValidationError(const std::string& issue)
        : ValidationError(std::vector<std::string>{issue}) {}

    const std::vector<std::string>& issues() const { return issues_; }

private:
    static std::string join(const std::vector<std::string>& issues) {
        std::string out = "validation failed";
        for (const auto& s : issues) out += "\n  " + s;
        return out;
    }

    std::vector<std::string> issues_;
};

}  // namespace uavbo
