#pragma once

#include <stdexcept>
#include <string>

namespace ddao {

// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorCategory { invalid_argument, config, numerics, truncation, io };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& what) : Error(ErrorCategory::invalid_argument, what) {}
};

struct ConfigError : Error {
    ConfigError(std::string key, const std::string& what)
        : Error(ErrorCategory::config, key + ": " + what), key(std::move(key)) {}
    std::string key;
};

struct NumericsError : Error {
    NumericsError(const std::string& what, double time) : Error(ErrorCategory::numerics, what), time(time) {}
    double time;  // last good time
};

struct TruncationError : Error {
    TruncationError(const std::string& what, double time, double tail)
        : Error(ErrorCategory::truncation, what), time(time), tail(tail) {}
    double time;
    double tail;  // occupation of the top Fock levels when the alarm fired
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

inline int exit_code(ErrorCategory c) noexcept {
    switch (c) {
    case ErrorCategory::config:
    case ErrorCategory::invalid_argument: return 2;
    case ErrorCategory::numerics: return 3;
    case ErrorCategory::truncation: return 4;
    case ErrorCategory::io: return 5;
    }
    return 1;
}

}  // namespace ddao
