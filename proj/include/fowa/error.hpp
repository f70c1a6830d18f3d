#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace fowa {

// Every failure carries a stable machine-readable code; the CLI prints the
// code verbatim on the diagnostic stream so callers can match on it.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

namespace errc {
inline constexpr const char* carrier_mismatch = "CarrierMismatch";
inline constexpr const char* mul_on_group = "MulOnGroup";
inline constexpr const char* arity_mismatch = "ArityMismatch";
inline constexpr const char* arity_error = "ArityError";
inline constexpr const char* parse_error = "ParseError";
inline constexpr const char* syntax_error = "SyntaxError";
inline constexpr const char* type_error = "TypeError";
inline constexpr const char* distinctness_error = "DistinctnessError";
inline constexpr const char* locality_violation = "LocalityViolation";
inline constexpr const char* unknown_element = "UnknownElement";
inline constexpr const char* signature_mismatch = "SignatureMismatch";
inline constexpr const char* unbound_variable = "UnboundVariable";
inline constexpr const char* not_in_fragment = "NotInFragment";
inline constexpr const char* not_local = "NotLocal";
inline constexpr const char* no_anchors = "NoAnchors";
inline constexpr const char* missing_one_weight = "MissingOneWeight";
inline constexpr const char* blowup_exceeded = "BlowupExceeded";
inline constexpr const char* out_of_range = "OutOfRange";
inline constexpr const char* empty_training = "EmptyTraining";
inline constexpr const char* io_error = "IoError";
}  // namespace errc

[[noreturn]] inline void fail(const char* code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, const char* code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace fowa
