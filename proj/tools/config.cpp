#include "config.hpp"

#include <charconv>
#include <sstream>

#include "emsaudit/error.hpp"
#include "emsaudit/io.hpp"

namespace emsaudit::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  }
  return true;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string_view source) {
  KeyValueConfig cfg;
  cfg.source_ = std::string(source);
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto where = [&] { return std::string(source) + ":" + std::to_string(line_no) + ": "; };
    // Strip a comment outside of quotes.
    char quote = 0;
    std::size_t cut = raw.size();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const char c = raw[i];
      if (quote == 0 && (c == '"' || c == '\'')) {
        quote = c;
      } else if (c == quote && (quote == '\'' || raw[i - 1] != '\\')) {
        quote = 0;
      }
      if (c == '#' && quote == 0) {
        cut = i;
        break;
      }
    }
    const std::string_view line = trim(std::string_view(raw).substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(where() + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!valid_key(section)) throw Error(where() + "invalid section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(where() + "expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw Error(where() + "invalid key");
    std::string parsed;
    if (!value.empty() && value.front() == '"') {
      if (value.size() < 2 || value.back() != '"') throw Error(where() + "unterminated string");
      value = value.substr(1, value.size() - 2);
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (value[i] == '\\' && i + 1 < value.size()) {
          const char next = value[++i];
          parsed += next == 'n' ? '\n' : next == 't' ? '\t' : next;
        } else {
          parsed += value[i];
        }
      }
    } else if (!value.empty() && value.front() == '\'') {
      // Literal string, no escapes.
      if (value.size() < 2 || value.back() != '\'') throw Error(where() + "unterminated string");
      parsed = std::string(value.substr(1, value.size() - 2));
    } else {
      if (value.empty()) throw Error(where() + "missing value");
      parsed = std::string(value);
    }
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (!cfg.values_.emplace(full, parsed).second) throw Error(where() + "duplicate key " + full);
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  return parse(io::read_file(path), path.string());
}

std::optional<std::string> KeyValueConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<long long> KeyValueConfig::get_int(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
  if (ec != std::errc() || ptr != s->data() + s->size()) {
    throw Error(source_ + ": " + key + " must be an integer, got '" + *s + "'");
  }
  return v;
}

std::optional<double> KeyValueConfig::get_double(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(*s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s->size()) throw Error(source_ + ": " + key + " must be a number, got '" + *s + "'");
  return v;
}

std::optional<bool> KeyValueConfig::get_bool(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  if (*s == "true") return true;
  if (*s == "false") return false;
  throw Error(source_ + ": " + key + " must be true or false");
}

}  // namespace emsaudit::cli
