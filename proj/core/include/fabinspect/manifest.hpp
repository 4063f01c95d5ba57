#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fabinspect {

/// Class index 0 is defect_free, 1 is defective.
enum class Label : int { defect_free = 0, defective = 1 };

std::string_view to_string(Label label) noexcept;
std::optional<Label> parse_label(std::string_view text) noexcept;

struct ManifestRow {
  std::string path;  // as written in the CSV; relative paths resolve against the manifest directory
  std::string fabric_type;
  Label label = Label::defect_free;
  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

/// Rows of a `path,fabric_type,label` CSV plus the directory used to resolve
/// relative sample paths.
struct Manifest {
  std::vector<ManifestRow> rows;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestRow& row) const;
  std::vector<std::string> fabric_types() const;  // distinct, in type order
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);
std::string format_manifest(const std::vector<ManifestRow>& rows);

/// Type identifiers compare numerically when both are integers, otherwise
/// lexicographically.
bool fabric_type_less(std::string_view a, std::string_view b) noexcept;

}  // namespace fabinspect
