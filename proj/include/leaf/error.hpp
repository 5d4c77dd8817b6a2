#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace leaf {

enum class Errc {
  invalid_argument,
  duplicate_id,
  empty_input,
  malformed_input,
  unknown_id,
  id_mismatch,
  io,
  unsupported_format,
  missing_placeholder,
  empty_output,
  unparseable,
  no_answer,
  empty_response,
  transport,
  http_status,
  fixture_miss,
  retries_exhausted,
};

// Stable snake_case name, used in the CLI's machine-readable error object.
std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace leaf
