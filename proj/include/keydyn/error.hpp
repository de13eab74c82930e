#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace keydyn {

enum class Errc {
  MalformedLine,
  OrphanStroke,
  NegativeHold,
  NonMonotonicPress,
  DuplicateStrokeKind,
  OutOfRange,
  InsufficientData,
  NonFiniteInput,
  VersionMismatch,
  CorruptModel,
  InvalidProfile,
  TooFewUsers,
  InvalidArgument,
  Io,
};

std::string_view to_string(Errc code);

/// Every failure raised by the library carries one of the codes above; the
/// message always starts with the code name so diagnostics are greppable.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(detail.empty()
                               ? std::string(to_string(code))
                               : std::string(to_string(code)) + " " + detail),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace keydyn
