#include "tio/util/config.hpp"

#include <fmt/format.h>

#include <boost/property_tree/ini_parser.hpp>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "tio/util/error.hpp"

namespace pt = boost::property_tree;

namespace tio::util {

KeyValueConfig KeyValueConfig::read(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream is(text);
  try {
    pt::read_ini(is, cfg.tree_);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

void KeyValueConfig::write(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << str();
}

std::string KeyValueConfig::str() const {
  std::ostringstream os;
  pt::write_ini(os, tree_);
  return os.str();
}

bool KeyValueConfig::contains(const std::string& key) const { return tree_.get_child_optional(key).has_value(); }

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return tree_.get<std::string>(key, fallback);
}

std::string KeyValueConfig::require_string(const std::string& key) const {
  auto v = tree_.get_optional<std::string>(key);
  if (!v) throw ConfigError("missing required key '" + key + "'");
  return *v;
}

namespace {

template <class T, class Parse>
T parse_key(const pt::ptree& tree, const std::string& key, T fallback, Parse&& parse) {
  auto v = tree.get_optional<std::string>(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    T out = parse(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' has invalid value '" + *v + "'");
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  return parse_key<double>(tree_, key, fallback, [](const std::string& s, std::size_t* n) { return std::stod(s, n); });
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
  return parse_key<std::int64_t>(tree_, key, fallback,
                                 [](const std::string& s, std::size_t* n) { return std::stoll(s, n); });
}

std::uint64_t KeyValueConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
  return parse_key<std::uint64_t>(tree_, key, fallback, [](const std::string& s, std::size_t* n) {
    if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
    return std::stoull(s, n);
  });
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto v = tree_.get_optional<std::string>(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ConfigError("key '" + key + "' has invalid boolean '" + *v + "'");
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  auto v = tree_.get_optional<std::string>(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(*v)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "' has invalid list element '" + item + "'");
    }
  }
  return out;
}

std::vector<std::size_t> KeyValueConfig::get_sizes(const std::string& key,
                                                   const std::vector<std::size_t>& fallback) const {
  auto v = tree_.get_optional<std::string>(key);
  if (!v) return fallback;
  std::vector<std::size_t> out;
  for (const auto& item : split_list(*v)) {
    try {
      std::size_t used = 0;
      if (!item.empty() && item[0] == '-') throw std::invalid_argument("negative");
      out.push_back(static_cast<std::size_t>(std::stoull(item, &used)));
      if (used != item.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "' has invalid list element '" + item + "'");
    }
  }
  return out;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) { tree_.put(key, value); }
void KeyValueConfig::set(const std::string& key, double value) { tree_.put(key, fmt::format("{:.17g}", value)); }
void KeyValueConfig::set(const std::string& key, std::int64_t value) { tree_.put(key, std::to_string(value)); }
void KeyValueConfig::set(const std::string& key, std::uint64_t value) { tree_.put(key, std::to_string(value)); }
void KeyValueConfig::set(const std::string& key, bool value) { tree_.put(key, value ? "true" : "false"); }

void KeyValueConfig::set(const std::string& key, const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + fmt::format("{:.17g}", values[i]);
  tree_.put(key, s);
}

void KeyValueConfig::set_sizes(const std::string& key, const std::vector<std::size_t>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + std::to_string(values[i]);
  tree_.put(key, s);
}

void KeyValueConfig::merge(const KeyValueConfig& other) {
  for (const auto& [section, child] : other.tree_) {
    for (const auto& [key, value] : child) tree_.put(section + "." + key, value.data());
  }
}

std::vector<std::string> KeyValueConfig::keys() const {
  std::vector<std::string> out;
  for (const auto& [section, child] : tree_) {
    for (const auto& [key, value] : child) out.push_back(section + "." + key);
  }
  return out;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a_hex(const std::string& text) { return fmt::format("{:016x}", fnv1a(text)); }

std::size_t thread_cap() {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TIO_FORGE_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return hw;
}

}  // namespace tio::util
