#include "qesp/error.hpp"

namespace qesp {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::Truncated: return "Truncated";
    case Errc::InvalidHeader: return "InvalidHeader";
    case Errc::BadChecksum: return "BadChecksum";
    case Errc::UnsupportedOptions: return "UnsupportedOptions";
    case Errc::MalformedPacket: return "MalformedPacket";
    case Errc::BadKeyLength: return "BadKeyLength";
    case Errc::BadIvLength: return "BadIvLength";
    case Errc::BadBlockAlignment: return "BadBlockAlignment";
    case Errc::DuplicateSpi: return "DuplicateSpi";
    case Errc::SequenceExhausted: return "SequenceExhausted";
    case Errc::UnknownSpi: return "UnknownSpi";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::ReplayRejected: return "ReplayRejected";
    case Errc::BadPadding: return "BadPadding";
    case Errc::FiveTupleMismatch: return "FiveTupleMismatch";
    case Errc::OversizePacket: return "OversizePacket";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

int exit_code(Errc code) {
  switch (code) {
    case Errc::ConfigError: return 3;
    case Errc::Truncated: return 10;
    case Errc::InvalidHeader: return 11;
    case Errc::BadChecksum: return 12;
    case Errc::UnsupportedOptions: return 13;
    case Errc::MalformedPacket: return 14;
    case Errc::BadKeyLength: return 20;
    case Errc::BadIvLength: return 21;
    case Errc::BadBlockAlignment: return 22;
    case Errc::DuplicateSpi: return 30;
    case Errc::SequenceExhausted: return 31;
    case Errc::UnknownSpi: return 32;
    case Errc::AuthFailure: return 40;
    case Errc::ReplayRejected: return 41;
    case Errc::BadPadding: return 42;
    case Errc::FiveTupleMismatch: return 43;
    case Errc::OversizePacket: return 44;
  }
  return 1;
}

}  // namespace qesp
