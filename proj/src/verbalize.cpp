// SPDX-License-Identifier: Apache-2.0
#include <fstream>

#include "stratdisc/errors.hpp"
#include "stratdisc/verbalize.hpp"

#ifndef STRATDISC_DATA_DIR
#define STRATDISC_DATA_DIR "data"
#endif

namespace stratdisc {
namespace {

std::string fill(std::string s, const std::string& key, const std::string& value) {
  const std::string pat = "{" + key + "}";
  for (std::size_t p = s.find(pat); p != std::string::npos; p = s.find(pat, p + value.size()))
    s.replace(p, pat.size(), value);
  return s;
}

std::string_view name_of(dsl::Atom a) { return dsl::info(a).name; }

// Positive or negated form of an atom field, with the argument filled in.
std::string form(const TranslationDictionary& d, const dsl::Literal& l, const char* field) {
  const auto& e = d.atom(std::string(name_of(l.atom)));
  if (!e.contains(field)) throw MissingEntry(std::string(name_of(l.atom)) + " has no " + field + " phrase");
  return fill(e.at(field).at(l.negated ? 1 : 0).get<std::string>(), "arg", std::to_string(l.arg));
}

bool has(const TranslationDictionary& d, const dsl::Literal& l, const char* field) {
  return d.atom(std::string(name_of(l.atom))).contains(field);
}

// Bullets describing the nodes a step clicks plus conditions on the state.
struct Description {
  std::vector<std::string> adjectives, nouns, clauses, state;

  std::string set_phrase(const TranslationDictionary& d) const {
    std::string s;
    for (const auto& a : adjectives) s += a + " ";
    return s + (nouns.empty() ? d.text("default_noun") : nouns.front());
  }
};

void describe_literal(const TranslationDictionary& d, const dsl::Literal& l, Description& out);

void describe_inner(const TranslationDictionary& d, const dsl::Expr& e, Description& out) {
  for (const auto& l : e.conjuncts) describe_literal(d, l, out);
}

std::string selector_phrase(const TranslationDictionary& d, dsl::Atom sel, const char* mode, const std::string& set) {
  const auto& e = d.atom(std::string(name_of(sel)));
  if (!e.contains("selector") || !e.at("selector").contains(mode))
    throw MissingEntry(std::string(name_of(sel)) + " has no selector phrase");
  return fill(e.at("selector").at(mode).get<std::string>(), "set", set);
}

void describe_literal(const TranslationDictionary& d, const dsl::Literal& l, Description& out) {
  d.atom(std::string(name_of(l.atom)));  // every atom needs an entry
  if (l.atom == dsl::Atom::among || l.atom == dsl::Atom::all) {
    Description inner;
    if (l.inner) describe_inner(d, *l.inner, inner);
    const std::string set = inner.set_phrase(d);
    if (l.atom == dsl::Atom::all) {
      if (!l.selector) throw MissingEntry("all without a selector");
      out.state.push_back(selector_phrase(d, *l.selector, "all", set));
      return;
    }
    out.adjectives.insert(out.adjectives.end(), inner.adjectives.begin(), inner.adjectives.end());
    out.nouns.insert(out.nouns.end(), inner.nouns.begin(), inner.nouns.end());
    out.clauses.insert(out.clauses.end(), inner.clauses.begin(), inner.clauses.end());
    out.state.insert(out.state.end(), inner.state.begin(), inner.state.end());
    if (l.selector) out.clauses.push_back(selector_phrase(d, *l.selector, "among", set));
    return;
  }
  const auto scope = dsl::info(l.atom).scope;
  if (scope == dsl::Scope::list) {
    out.clauses.push_back(selector_phrase(d, l.atom, "among", d.text("default_noun")));
    return;
  }
  if (scope == dsl::Scope::state) {
    out.state.push_back(form(d, l, "condition"));
    return;
  }
  const auto& e = d.atom(std::string(name_of(l.atom)));
  if (e.value("as_long_as", false)) {
    out.state.push_back(form(d, l, "clause"));
  } else if (has(d, l, "adjective")) {
    out.adjectives.push_back(form(d, l, "adjective"));
  } else if (has(d, l, "noun")) {
    out.nouns.push_back(form(d, l, "noun"));
  } else {
    out.clauses.push_back(form(d, l, "clause"));
  }
}

std::string condition_phrase(const TranslationDictionary& d, const dsl::Expr& e) {
  std::string s;
  for (std::size_t i = 0; i < e.conjuncts.size(); ++i) {
    const auto& l = e.conjuncts[i];
    std::string p;
    if (l.atom == dsl::Atom::among || l.atom == dsl::Atom::all) {
      Description inner;
      if (l.inner) describe_inner(d, *l.inner, inner);
      if (!l.selector) throw MissingEntry(std::string(name_of(l.atom)) + " condition without a selector");
      p = selector_phrase(d, *l.selector, "all", inner.set_phrase(d));
    } else {
      p = form(d, l, "condition");
    }
    s += (i ? " and " : "") + p;
  }
  return s;
}

void bullets(std::string& out, const std::vector<std::string>& items) {
  for (std::size_t i = 0; i < items.size(); ++i)
    out += "\n   - " + items[i] + (i + 1 == items.size() ? "." : ",");
}

std::string step_text(const Step& st, const TranslationDictionary& d) {
  if (st.conj.is_false) return d.text("false");
  std::string s;
  const std::string until = st.kind == StepKind::until ? translate(st.until, d) : "";
  if (st.conj.is_true()) {
    if (st.kind == StepKind::once) s = d.text("true_once");
    if (st.kind == StepKind::hold) s = d.text("true_hold");
    if (st.kind == StepKind::until) s = fill(d.text("true_until"), "cond", until);
  } else {
    Description desc;
    for (const auto& p : st.conj.preds) describe_inner(d, *p, desc);
    std::vector<std::string> main;
    if (!desc.adjectives.empty() || !desc.nouns.empty()) {
      std::string adj;
      for (const auto& a : desc.adjectives) adj += a + " ";
      main.push_back(fill(fill(d.text("identity"), "adjectives", adj), "noun",
                          desc.nouns.empty() ? d.text("default_noun") : desc.nouns.front()));
      for (std::size_t i = 1; i < desc.nouns.size(); ++i)
        main.push_back(fill(fill(d.text("identity"), "adjectives", ""), "noun", desc.nouns[i]));
    }
    main.insert(main.end(), desc.clauses.begin(), desc.clauses.end());
    if (main.empty()) {
      s = d.text("header_any");
    } else {
      s = d.text(st.kind == StepKind::once ? "header_once" : "header");
      bullets(s, main);
    }
    if (!desc.state.empty()) {
      s += "\n   " + d.text("as_long_as");
      bullets(s, desc.state);
    }
    if (st.kind == StepKind::until) s += "\n   " + fill(d.text("until"), "cond", until);
    if (st.kind == StepKind::hold) s += "\n   " + d.text("hold");
  }
  if (st.unless) s += "\n   " + fill(d.text("unless"), "cond", translate(*st.unless, d));
  return s;
}

}  // namespace

TranslationDictionary TranslationDictionary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingData("cannot open translation dictionary " + path);
  return TranslationDictionary(nlohmann::json::parse(in));
}

const TranslationDictionary& TranslationDictionary::standard() {
  static const TranslationDictionary d = load(std::string(STRATDISC_DATA_DIR) + "/translation.json");
  return d;
}

const std::string& TranslationDictionary::text(const std::string& key) const {
  auto it = j_.find(key);
  if (it == j_.end() || !it->is_string()) throw MissingEntry("dictionary has no template " + key);
  return it->get_ref<const std::string&>();
}

const nlohmann::json& TranslationDictionary::atom(const std::string& name) const {
  auto atoms = j_.find("atoms");
  if (atoms == j_.end() || !atoms->contains(name)) throw MissingEntry("dictionary has no entry for " + name);
  return atoms->at(name);
}

std::string translate(const Condition& c, const TranslationDictionary& dict) {
  std::string s;
  for (std::size_t i = 0; i < c.disjuncts.size(); ++i)
    s += (i ? dict.text("or") : "") + condition_phrase(dict, *c.disjuncts[i]);
  return s;
}

std::string translate(const ProceduralFormula& f, const TranslationDictionary& dict) {
  // a lone no-click step reads as a sentence, not a list
  if (f.steps.size() == 1 && f.steps[0].conj.is_false && !f.steps[0].unless && !f.loop_target)
    return step_text(f.steps[0], dict);
  std::string out;
  std::size_t k = 1;
  for (const auto& st : f.steps) {
    out += (k > 1 ? "\n" : "") + std::to_string(k) + ". " + step_text(st, dict);
    ++k;
  }
  if (f.loop_target) {
    const std::string target = std::to_string(*f.loop_target + 1);
    out += "\n" + std::to_string(k) + ". " +
           (f.loop_unless ? fill(fill(dict.text("loop_unless"), "step", target), "cond", translate(*f.loop_unless, dict))
                          : fill(dict.text("loop"), "step", target));
  }
  return out;
}

}  // namespace stratdisc
