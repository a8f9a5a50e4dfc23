#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include <vector>

namespace emotod {

inline constexpr std::string_view kDontCare = "dontcare";

/// Shared value canon: case folding, whitespace collapse, comma removal,
/// a variant->canonical table and a dontcare class.
///
/// Config file layout (JSON):
///   {"mappings": {"center": "centre", ...},
///    "dontcare": ["any", "don't care", ...],
///    "placeholders": ["name", "address", ...]}   // optional, extends vocabulary
class Normalizer {
 public:
  Normalizer();

  static Normalizer from_file(const std::filesystem::path& path);
  static Normalizer from_json_text(std::string_view json_text);

  std::string value(std::string_view raw) const;

  /// Domain and slot names: lowercase, no surrounding whitespace.
  std::string key(std::string_view raw) const;

  void add_mapping(std::string_view variant, std::string_view canonical);
  void add_dontcare(std::string_view variant);

  const std::set<std::string>& placeholders() const { return placeholders_; }
  void add_placeholder(std::string_view name);

 private:
  std::map<std::string, std::string> mappings_;
  std::set<std::string> dontcare_;
  std::set<std::string> placeholders_;
};

}  // namespace emotod
