#include "tilebench/core/config.hpp"

#include <charconv>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tilebench/core/errors.hpp"
#include "tilebench/core/io.hpp"
#include "tilebench/core/score_table.hpp"

namespace tilebench {

namespace pt = boost::property_tree;

namespace {

template <typename T>
T parse_number(const std::string& key, std::string_view text) {
  text = trim(text);
  T value{};
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw ConfigError("key '" + key + "': cannot parse '" + std::string(text) + "'");
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  if (trim(text).empty()) return out;
  for (const auto& part : split(text, ',')) out.push_back(parse_number<T>(key, part));
  return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  KeyValueConfig cfg;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      cfg.entries_[name] = std::string(trim(node.data()));
      continue;
    }
    for (const auto& [key, leaf] : node) cfg.entries_[name + "." + key] = std::string(trim(leaf.data()));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  return parse(read_text(path));
}

std::string KeyValueConfig::to_string() const {
  std::ostringstream out;
  std::string section;
  for (const auto& [key, value] : entries_) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
      out << key << " = " << value << '\n';
      continue;
    }
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << key.substr(dot + 1) << " = " << value << '\n';
  }
  return out.str();
}

bool KeyValueConfig::contains(const std::string& key) const { return entries_.count(key) != 0; }

std::optional<std::string> KeyValueConfig::raw(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return raw(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto v = raw(key);
  return v ? parse_number<double>(key, *v) : fallback;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
  auto v = raw(key);
  return v ? parse_number<long long>(key, *v) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto v = raw(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + *v + "'");
}

std::vector<int> KeyValueConfig::get_ints(const std::string& key, const std::vector<int>& fallback) const {
  auto v = raw(key);
  return v ? parse_list<int>(key, *v) : fallback;
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key,
                                                const std::vector<double>& fallback) const {
  auto v = raw(key);
  return v ? parse_list<double>(key, *v) : fallback;
}

std::vector<std::string> KeyValueConfig::get_strings(const std::string& key,
                                                     const std::vector<std::string>& fallback) const {
  auto v = raw(key);
  if (!v) return fallback;
  std::vector<std::string> out;
  if (trim(*v).empty()) return out;
  for (const auto& part : split(*v, ',')) out.emplace_back(trim(part));
  return out;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) { entries_[key] = value; }
void KeyValueConfig::set(const std::string& key, double value) { entries_[key] = format_double(value); }
void KeyValueConfig::set(const std::string& key, long long value) { entries_[key] = std::to_string(value); }
void KeyValueConfig::set(const std::string& key, bool value) { entries_[key] = value ? "true" : "false"; }

void KeyValueConfig::set(const std::string& key, const std::vector<int>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + std::to_string(values[i]);
  entries_[key] = s;
}

void KeyValueConfig::set(const std::string& key, const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + format_double(values[i]);
  entries_[key] = s;
}

void KeyValueConfig::merge_section(const KeyValueConfig& other, const std::string& prefix) {
  const std::string p = prefix + ".";
  for (const auto& [key, value] : other.entries_) {
    if (key.rfind(p, 0) == 0) entries_[key] = value;
  }
}

}  // namespace tilebench
