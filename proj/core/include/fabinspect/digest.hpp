#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace fabinspect {

/// 64-bit FNV-1a. Used for artifact fingerprints, not for security.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t state = 0xcbf29ce484222325ull) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;

std::string to_hex(std::uint64_t value);

/// Hex FNV-1a digest of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

}  // namespace fabinspect
