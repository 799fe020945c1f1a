#pragma once

#include <stdexcept>
#include <string>

namespace insnn {

// Error categories used across the library. The CLI maps the category
// name into its one-line machine-parsable error output.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& msg)
        : std::runtime_error(category + ": " + msg), category_(std::move(category)) {}
    const std::string& category() const { return category_; }

private:
    std::string category_;
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error("dimension", msg) {}
};

struct ParameterError : Error {
    explicit ParameterError(const std::string& msg) : Error("parameter", msg) {}
};

struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error("format", msg) {}
};

struct FitError : Error {
    explicit FitError(const std::string& msg) : Error("fit", msg) {}
};

struct TrainingError : Error {
    explicit TrainingError(const std::string& msg) : Error("training", msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error("io", msg) {}
};

} // namespace insnn
