#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace lrsmooth {

/// Shortest text that round-trips is not required; 17 significant digits is.
std::string format_double(double x);
double parse_double(std::string_view text, std::string_view context);
long long parse_int(std::string_view text, std::string_view context);
std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

/// Section-qualified key = value text. Lines starting with '#' or ';' are
/// comments; "[name]" opens a section; keys before any section belong to "".
struct KeyValueText {
  struct Entry {
    std::string section;
    std::string key;
    std::string value;
    int line = 0;
  };
  std::vector<Entry> entries;

  static KeyValueText parse(std::string_view text, std::string_view source_name);
  static KeyValueText load(std::filesystem::path const &path);

  /// Rejects duplicate keys; returns "section.key" -> entry.
  std::map<std::string, Entry> by_path(std::string_view source_name) const;
};

std::string read_file(std::filesystem::path const &path);
/// Writes bytes exactly (LF line endings are the caller's).
void write_file(std::filesystem::path const &path, std::string_view contents);

/// 64-bit FNV-1a, used to fingerprint data files.
std::uint64_t fnv1a64(std::string_view bytes);

} // namespace lrsmooth
