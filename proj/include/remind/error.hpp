#pragma once

#include <stdexcept>
#include <string>

namespace remind {

enum class ErrorKind {
    Config,      // bad or missing configuration
    Format,      // malformed input file
    Parameter,   // argument outside its documented range
    Data,        // invalid data content (bad ids, OOV tokens, ...)
    Capability,  // oracle lacks a capability a scorer requires
    Oracle,      // transport / replay failure talking to the model
    Metric,      // metric undefined for the given inputs
    Training,    // classifier training cannot proceed
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config: return "config";
        case ErrorKind::Format: return "format";
        case ErrorKind::Parameter: return "parameter";
        case ErrorKind::Data: return "data";
        case ErrorKind::Capability: return "capability";
        case ErrorKind::Oracle: return "oracle";
        case ErrorKind::Metric: return "metric";
        case ErrorKind::Training: return "training";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + " error: " + message),
          kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace remind
