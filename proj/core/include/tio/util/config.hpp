#pragma once

#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tio::util {

/**
 * \brief Line-oriented `key = value` text with `[section]` headers.
 *
 * Keys are addressed as "section.key". Doubles are written with 17
 * significant digits so a written file re-reads to identical values.
 */
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig read(const std::filesystem::path& path);
  static KeyValueConfig parse(const std::string& text);
  void write(const std::filesystem::path& path) const;
  std::string str() const;

  bool contains(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::size_t> get_sizes(const std::string& key, const std::vector<std::size_t>& fallback) const;

  std::string require_string(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }
  void set(const std::string& key, bool value);
  void set(const std::string& key, const std::vector<double>& values);
  void set_sizes(const std::string& key, const std::vector<std::size_t>& values);

  /// Copies every key of `other` under its own section names, overwriting.
  void merge(const KeyValueConfig& other);
  /// Every key as "section.key", in file order.
  std::vector<std::string> keys() const;

  const boost::property_tree::ptree& tree() const { return tree_; }

 private:
  boost::property_tree::ptree tree_;
};

/// FNV-1a 64-bit hash rendered as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& text);
std::uint64_t fnv1a(const std::string& text);

/// Reads the TIO_FORGE_THREADS cap, defaulting to the hardware concurrency.
std::size_t thread_cap();

}  // namespace tio::util
