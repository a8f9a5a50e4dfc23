#include "emotod/normalize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "emotod/errors.hpp"
#include "emotod/text.hpp"

namespace emotod {
namespace {

std::string fold_value(std::string_view raw) {
  std::string s = text::to_lower(raw);
  for (char& c : s) {
    if (c == ',') c = ' ';
  }
  return text::collapse_whitespace(s);
}

const char* const kDefaultDontCare[] = {
    "dontcare", "dont care", "don't care", "do n't care", "do not care",
    "doesn't matter", "does not matter", "any",
};

// Placeholders that may appear bracketed in delexicalized responses.
const char* const kDefaultPlaceholders[] = {
    "address", "area", "arriveby", "choice", "day", "department", "departure",
    "destination", "duration", "entrancefee", "food", "internet", "leaveat", "name",
    "openhours", "parking", "people", "phone", "postcode", "price", "pricerange", "ref",
    "stars", "stay", "time", "trainid", "type", "car",
};

}  // namespace

Normalizer::Normalizer() {
  for (const char* v : kDefaultDontCare) dontcare_.insert(v);
  for (const char* p : kDefaultPlaceholders) placeholders_.insert(p);
}

Normalizer Normalizer::from_json_text(std::string_view json_text) {
  Normalizer n;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("normalization config: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("normalization config: expected an object");
  try {
    if (doc.contains("mappings")) {
      for (const auto& [variant, canonical] : doc.at("mappings").items()) {
        n.add_mapping(variant, canonical.get<std::string>());
      }
    }
    if (doc.contains("dontcare")) {
      for (const auto& v : doc.at("dontcare")) n.add_dontcare(v.get<std::string>());
    }
    if (doc.contains("placeholders")) {
      for (const auto& p : doc.at("placeholders")) n.add_placeholder(p.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("normalization config: ") + e.what());
  }
  return n;
}

Normalizer Normalizer::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open normalization config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

void Normalizer::add_mapping(std::string_view variant, std::string_view canonical) {
  mappings_[fold_value(variant)] = fold_value(canonical);
}

void Normalizer::add_dontcare(std::string_view variant) { dontcare_.insert(fold_value(variant)); }

void Normalizer::add_placeholder(std::string_view name) {
  placeholders_.insert(text::to_lower(text::trim(name)));
}

std::string Normalizer::value(std::string_view raw) const {
  std::string v = fold_value(raw);
  if (auto it = mappings_.find(v); it != mappings_.end()) v = it->second;
  if (dontcare_.count(v)) return std::string(kDontCare);
  return v;
}

std::string Normalizer::key(std::string_view raw) const {
  return text::to_lower(text::trim(raw));
}

}  // namespace emotod
