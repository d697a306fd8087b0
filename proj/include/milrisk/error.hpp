#pragma once

#include <stdexcept>
#include <string>

namespace milrisk {

enum class ErrorKind {
    Config,
    Io,
    Format,
    SignalTooShort,
    NoPeaksFound,
    DegenerateAmplitude,
    NoInstances,
    ShapeMismatch,
    EmptyBag,
    EmptyScores,
    OneClassOnly,
    TooFewPatients,
    EmptyGroup,
    NonFiniteLoss,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Process exit code for an error kind: 1 usage/config, 2 data, 3 numerical.
int exit_code(ErrorKind kind);

}  // namespace milrisk
