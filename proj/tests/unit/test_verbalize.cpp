// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "stratdisc/errors.hpp"
#include "stratdisc/verbalize.hpp"

using namespace stratdisc;

namespace {

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("golden translations") {
  CHECK(translate(parse_procedural("False UNTIL IT STOPS APPLYING")) == "Do not click.");
  const auto any = translate(parse_procedural("True UNTIL IT STOPS APPLYING"));
  CHECK(contains(any, "Terminate or click on some random nodes and then terminate."));
  CHECK(contains(any, "Repeat this step as long as possible."));

  const auto leaves = translate(parse_procedural("among(not(is_observed) and is_leaf) UNTIL are_leaves_observed"));
  INFO(leaves);
  CHECK(contains(leaves, "Click on the nodes satisfying all of the following conditions:"));
  CHECK(contains(leaves, "they are unobserved leaves"));
  CHECK(contains(leaves, "Repeat this step until all the leaves are observed"));
}

TEST_CASE("step connectives") {
  const auto two = translate(parse_procedural(
      "among(not(is_observed) and is_root) UNTIL are_roots_observed AND NEXT "
      "among(not(is_observed) and is_leaf) UNTIL IT STOPS APPLYING UNLESS is_positive_observed"));
  INFO(two);
  CHECK(contains(two, "1."));
  CHECK(contains(two, "2."));
  CHECK(contains(two, "unless"));
  CHECK(contains(two, "in which case stop"));

  const auto loop = translate(parse_procedural("among(not(is_observed) and is_root) AND NEXT "
                                               "among(not(is_observed) and is_leaf) GO TO "
                                               "among(not(is_observed) and is_root)"));
  INFO(loop);
  CHECK(contains(loop, "GOTO step 1"));

  TranslationDictionary dict = TranslationDictionary::standard();
  dict.set_header("Click on the destinations satisfying all of the following conditions:");
  CHECK(contains(translate(parse_procedural("is_leaf UNTIL IT STOPS APPLYING"), dict), "destinations"));
}

TEST_CASE("every catalog predicate and condition translates") {
  const auto& cat = dsl::Catalog::standard();
  const auto allowed = dsl::allowed_condition_predicates();
  std::size_t failures = 0;
  for (std::size_t i = 0; i < cat.size(); ++i) {
    Conjunction c;
    c.preds.push_back(cat[i].expr);
    ProceduralFormula f = hold_formula(c);
    if (i % 3 == 0) {
      f.steps[0].kind = StepKind::until;
      f.steps[0].until.disjuncts = {allowed[i % allowed.size()], allowed[(i / 3) % allowed.size()]};
    }
    if (i % 5 == 0) f.steps[0].unless = Condition{{allowed[(i / 5) % allowed.size()]}};
    try {
      const auto text = translate(f);
      failures += text.empty();
    } catch (const MissingEntry&) {
      ++failures;
    }
  }
  CHECK(failures == 0);
  for (const auto& p : allowed) CHECK(!translate(Condition{{p}}).empty());
}

TEST_CASE("translation is deterministic") {
  const auto f = parse_procedural("among(not(is_observed) and is_leaf) UNTIL (is_previous_observed_max or are_leaves_observed)");
  const auto a = translate(f), b = translate(f);
  CHECK(a == b);
  CHECK(translate(parse_procedural(to_string(f))) == a);
}

TEST_CASE("missing dictionary entries") {
  auto j = TranslationDictionary::standard().json();
  REQUIRE(j.contains("atoms"));
  j["atoms"].erase("is_leaf");
  const TranslationDictionary dict(j);
  try {
    translate(parse_procedural("is_leaf UNTIL IT STOPS APPLYING"), dict);
    FAIL("expected MissingEntry");
  } catch (const MissingEntry& e) {
    CHECK(contains(e.what(), "is_leaf"));
  }
  CHECK_THROWS_AS(dict.text("no_such_key"), MissingEntry);
}
