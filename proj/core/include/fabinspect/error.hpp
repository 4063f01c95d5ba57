#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fabinspect {

enum class Errc {
  io,                  // open/read/write failure
  missing_file,
  malformed_header,
  unsupported_maxval,
  truncated_data,
  invalid_argument,    // precondition violated by the caller
  config,              // bad configuration or usage
  degenerate_input,    // e.g. constant image that cannot be stretched
  insufficient_blocks,
  corrupt_artifact,    // checkpoint or ensemble manifest failed validation
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace fabinspect
