// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "json.hpp"
#include "stratdisc/procedural.hpp"

namespace stratdisc {

/// Phrase templates for atoms and step connectives, loaded from JSON.
class TranslationDictionary {
 public:
  explicit TranslationDictionary(nlohmann::json j) : j_(std::move(j)) {}
  static TranslationDictionary load(const std::string& path);
  /// data/translation.json of the source tree.
  static const TranslationDictionary& standard();

  const nlohmann::json& json() const { return j_; }
  /// Template by key; throws MissingEntry.
  const std::string& text(const std::string& key) const;
  /// Atom entry; throws MissingEntry naming the atom.
  const nlohmann::json& atom(const std::string& name) const;
  /// Replace the step header, e.g. to speak of destinations.
  void set_header(const std::string& header) { j_["header"] = header; }

 private:
  nlohmann::json j_;
};

/// Numbered steps in plain English. Throws MissingEntry.
std::string translate(const ProceduralFormula& f, const TranslationDictionary& dict = TranslationDictionary::standard());
std::string translate(const Condition& c, const TranslationDictionary& dict = TranslationDictionary::standard());

}  // namespace stratdisc
