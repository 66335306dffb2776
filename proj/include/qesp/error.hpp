#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qesp {

// Every failure the library can report. Values are stable: the CLI exit
// codes are derived from them (see exit_code()).
enum class Errc {
  Truncated,
  InvalidHeader,
  BadChecksum,
  UnsupportedOptions,
  MalformedPacket,
  BadKeyLength,
  BadIvLength,
  BadBlockAlignment,
  DuplicateSpi,
  SequenceExhausted,
  UnknownSpi,
  AuthFailure,
  ReplayRejected,
  BadPadding,
  FiveTupleMismatch,
  OversizePacket,
  ConfigError,
};

std::string_view to_string(Errc code);

// Process exit code for a given error; 0 is never returned.
int exit_code(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace qesp
