#include "fabinspect/error.hpp"

namespace fabinspect {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::io: return "io";
    case Errc::missing_file: return "missing file";
    case Errc::malformed_header: return "malformed header";
    case Errc::unsupported_maxval: return "unsupported maxval";
    case Errc::truncated_data: return "truncated pixel data";
    case Errc::invalid_argument: return "invalid argument";
    case Errc::config: return "configuration error";
    case Errc::degenerate_input: return "degenerate input";
    case Errc::insufficient_blocks: return "insufficient blocks";
    case Errc::corrupt_artifact: return "corrupt artifact";
  }
  return "unknown";
}

}  // namespace fabinspect
