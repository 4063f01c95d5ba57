#include "fabinspect/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "fabinspect/error.hpp"

namespace fabinspect {

std::string_view to_string(Label label) noexcept {
  return label == Label::defective ? "defective" : "defect_free";
}

std::optional<Label> parse_label(std::string_view text) noexcept {
  if (text == "defect_free") return Label::defect_free;
  if (text == "defective") return Label::defective;
  return std::nullopt;
}

std::filesystem::path Manifest::resolve(const ManifestRow& row) const {
  std::filesystem::path p(row.path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<std::string> Manifest::fabric_types() const {
  std::vector<std::string> types;
  for (const auto& row : rows) types.push_back(row.fabric_type);
  std::sort(types.begin(), types.end(), [](const std::string& a, const std::string& b) {
    return fabric_type_less(a, b);
  });
  types.erase(std::unique(types.begin(), types.end()), types.end());
  return types;
}

namespace {

std::optional<long long> as_integer(std::string_view s) noexcept {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

bool fabric_type_less(std::string_view a, std::string_view b) noexcept {
  const auto ia = as_integer(a);
  const auto ib = as_integer(b);
  if (ia && ib && *ia != *ib) return *ia < *ib;
  return a < b;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::missing_file, "cannot open manifest " + path.string());
  }
  Manifest manifest;
  manifest.base_dir = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    if (!header_seen) {
      if (text != "path,fabric_type,label") {
        throw Error(Errc::config, path.string() + ":" + std::to_string(line_no) +
                                      ": expected header 'path,fabric_type,label'");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
      throw Error(Errc::config, path.string() + ":" + std::to_string(line_no) + ": expected 3 fields");
    }
    const auto label = parse_label(fields[2]);
    if (!label) {
      throw Error(Errc::config, path.string() + ":" + std::to_string(line_no) + ": unknown label '" +
                                    fields[2] + "'");
    }
    manifest.rows.push_back(ManifestRow{fields[0], fields[1], *label});
  }
  if (!header_seen) {
    throw Error(Errc::config, path.string() + ": empty manifest (no header)");
  }
  return manifest;
}

std::string format_manifest(const std::vector<ManifestRow>& rows) {
  std::string out = "path,fabric_type,label\n";
  for (const auto& row : rows) {
    out += row.path;
    out += ',';
    out += row.fabric_type;
    out += ',';
    out += to_string(row.label);
    out += '\n';
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(Errc::io, "cannot write manifest " + path.string());
  }
  out << format_manifest(rows);
  if (!out) {
    throw Error(Errc::io, "write failed: " + path.string());
  }
}

}  // namespace fabinspect
