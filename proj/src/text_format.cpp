#include "lrsmooth/text_format.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lrsmooth/errors.hpp"

namespace lrsmooth {

std::string format_double(double x) {
  if (x == 0) return "0"; // folds -0
  char buf[40];
  int const n = std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf, static_cast<std::size_t>(n));
}

double parse_double(std::string_view text, std::string_view context) {
  text = trim(text);
  double x = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError(std::string(context) + ": expected a number, got '" + std::string(text) + "'");
  }
  return x;
}

long long parse_int(std::string_view text, std::string_view context) {
  text = trim(text);
  long long x = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError(std::string(context) + ": expected an integer, got '" + std::string(text) + "'");
  }
  return x;
}

std::string_view trim(std::string_view s) {
  auto const ws = " \t\r\n";
  auto const b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto const e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto const pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

KeyValueText KeyValueText::parse(std::string_view text, std::string_view source_name) {
  KeyValueText out;
  std::string section;
  int line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    auto where = [&] { return std::string(source_name) + ":" + std::to_string(line_no); };
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(where() + ": unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ValidationError(where() + ": empty section name");
      continue;
    }
    auto const eq = line.find('=');
    if (eq == std::string_view::npos) throw ValidationError(where() + ": expected 'key = value'");
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ValidationError(where() + ": empty key");
    out.entries.push_back({section, std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
  }
  return out;
}

KeyValueText KeyValueText::load(std::filesystem::path const &path) {
  return parse(read_file(path), path.string());
}

std::map<std::string, KeyValueText::Entry> KeyValueText::by_path(std::string_view source_name) const {
  std::map<std::string, Entry> out;
  for (auto const &e : entries) {
    auto path = e.section.empty() ? e.key : e.section + "." + e.key;
    if (!out.emplace(path, e).second) {
      throw ValidationError(std::string(source_name) + ":" + std::to_string(e.line) + ": duplicate key '" + path + "'");
    }
  }
  return out;
}

std::string read_file(std::filesystem::path const &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(std::filesystem::path const &path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace lrsmooth
