#include "milrisk/error.hpp"

namespace milrisk {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config: return "ConfigError";
        case ErrorKind::Io: return "IoError";
        case ErrorKind::Format: return "FormatError";
        case ErrorKind::SignalTooShort: return "SignalTooShort";
        case ErrorKind::NoPeaksFound: return "NoPeaksFound";
        case ErrorKind::DegenerateAmplitude: return "DegenerateAmplitude";
        case ErrorKind::NoInstances: return "NoInstances";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::EmptyBag: return "EmptyBag";
        case ErrorKind::EmptyScores: return "EmptyScores";
        case ErrorKind::OneClassOnly: return "OneClassOnly";
        case ErrorKind::TooFewPatients: return "TooFewPatients";
        case ErrorKind::EmptyGroup: return "EmptyGroup";
        case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    }
    return "Error";
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config: return 1;
        case ErrorKind::NonFiniteLoss: return 3;
        default: return 2;
    }
}

}  // namespace milrisk
