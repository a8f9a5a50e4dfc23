#include <doctest.h>

#include <fstream>

#include "emotod/corpus.hpp"
#include "emotod/errors.hpp"
#include "emotod/knowledge_base.hpp"
#include "synthetic.hpp"

using namespace emotod;

namespace {

const std::filesystem::path kSample(EMOTOD_SAMPLE_DIR);

KnowledgeBase sample_kb() {
  return load_knowledge_base(kSample / "kb", load_normalizer(kSample / "corpus"));
}

std::vector<std::string> ids(const std::vector<Entity>& es) {
  std::vector<std::string> out;
  for (const auto& e : es) out.push_back(e.id());
  return out;
}

}  // namespace

TEST_CASE("sample knowledge base loads every domain") {
  const auto kb = sample_kb();
  CHECK(kb.domains() == std::vector<std::string>{"attraction", "hotel", "restaurant", "train"});
  CHECK(kb.table("restaurant").size() == 6);
  CHECK(kb.table("train").front().id() == "tr2000");
  CHECK(kb.has_attribute("hotel", "stars"));
  CHECK_FALSE(kb.has_attribute("hotel", "people"));
  CHECK_THROWS_AS(kb.table("taxi"), UnknownDomain);
}

TEST_CASE("query filters on every known constraint in table order") {
  const auto kb = sample_kb();
  BeliefState b;
  b.set("restaurant", "food", "italian");
  CHECK(ids(query(kb, b, "restaurant")) ==
        std::vector<std::string>{"frankie and bennys", "pizza hut cherry hinton",
                                 "pizza hut fen ditton"});
  b.set("restaurant", "area", "south");
  b.set("restaurant", "pricerange", "cheap");
  CHECK(ids(query(kb, b, "restaurant")) == std::vector<std::string>{"pizza hut cherry hinton"});
  b.set("restaurant", "area", "west");
  CHECK(query(kb, b, "restaurant").empty());
}

TEST_CASE("dontcare and booking slots do not constrain") {
  const auto kb = sample_kb();
  BeliefState b;
  b.set("hotel", "area", "dontcare");
  b.set("hotel", "people", "3");
  b.set("hotel", "stay", "2");
  CHECK(query(kb, b, "hotel").size() == kb.table("hotel").size());
  b.set("hotel", "area", "any");
  CHECK(query(kb, b, "hotel").size() == kb.table("hotel").size());
}

TEST_CASE("train times compare as times") {
  const auto kb = sample_kb();
  BeliefState b;
  b.set("train", "destination", "ely");
  b.set("train", "leaveat", "10:00");
  CHECK(ids(query(kb, b, "train")) == std::vector<std::string>{"tr1234", "tr5167"});
  b.set("train", "arriveby", "13:00");
  CHECK(ids(query(kb, b, "train")) == std::vector<std::string>{"tr1234"});
  b.set("train", "leaveat", "11:50");
  CHECK(ids(query(kb, b, "train")) == std::vector<std::string>{"tr1234"});
}

TEST_CASE("values are matched through the shared canon") {
  const auto kb = sample_kb();
  BeliefState b;
  b.set("restaurant", "area", "center");
  CHECK(ids(query(kb, b, "restaurant")) ==
        std::vector<std::string>{"la raza", "the golden curry"});
  CHECK(entity_matches(kb, kb.table("restaurant").front(), {{"area", "Center"}}));
  CHECK_FALSE(entity_matches(kb, kb.table("restaurant").front(), {{"area", "north"}}));
}

TEST_CASE("identifiers are required and unique") {
  KnowledgeBase kb;
  kb.add_entity("hotel", {{"name", "A"}, {"area", "north"}});
  CHECK_THROWS_AS(kb.add_entity("hotel", {{"name", "a"}}), SchemaError);
  CHECK_THROWS_AS(kb.add_entity("hotel", {{"area", "north"}}), SchemaError);
  CHECK_THROWS_AS(kb.add_entity("train", {{"name", "x"}}), SchemaError);
  CHECK(identifier_slot("train") == "trainid");
  CHECK(identifier_slot("police") == "name");
}

TEST_CASE("knowledge base file errors") {
  CHECK_THROWS_AS(load_knowledge_base("/nonexistent/kb"), SchemaError);
  const auto dir = testing::scratch_dir("kb_bad");
  std::ofstream(dir / "hotel.json") << R"({"name": "x"})";
  CHECK_THROWS_AS(load_knowledge_base(dir), SchemaError);
  std::ofstream(dir / "hotel.json") << R"([{"name": "x", "stars": 4, "location": [52.1, 0.1]}])";
  const auto kb = load_knowledge_base(dir);
  CHECK(*kb.table("hotel").front().get("stars") == "4");
  CHECK(kb.table("hotel").front().get("location") == nullptr);
}

TEST_CASE("lexicalize resolves extras, then entity, then belief") {
  const auto kb = sample_kb();
  const Entity& e = kb.table("restaurant").front();  // La Raza
  BeliefState b;
  b.set("restaurant", "people", "4");
  b.set("hotel", "stay", "2");
  const auto r = lexicalize("[name] at [address] for [people] , [stay] nights , ref [ref] . [car]",
                            &e, b, {{"ref", "ABCD1234"}});
  CHECK(r.text == "La Raza at 4 - 6 Rose Crescent for 4 , 2 nights , ref ABCD1234 . [car]");
  CHECK(r.unresolved == std::vector<std::string>{"car"});
  // Extras win over entity attributes.
  CHECK(lexicalize("[name]", &e, b, {{"name", "X"}}).text == "X");
  CHECK(lexicalize("[name] [name]", nullptr, {}, {}).unresolved == std::vector<std::string>{"name"});
  // Brackets that are not placeholders pass through.
  CHECK(lexicalize("[Not One] [] [", &e, b, {}).text == "[Not One] [] [");
}

TEST_CASE("booking references are stable") {
  const auto a = booking_reference("SMP0002", 3);
  CHECK(a.size() == 8);
  CHECK(a == booking_reference("SMP0002", 3));
  CHECK(a != booking_reference("SMP0002", 4));
  for (char c : a) CHECK(((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')));
}

TEST_CASE("placeholders_in") {
  CHECK(placeholders_in("[name] is at [address] [Bad] [] [x") ==
        std::vector<std::string>{"name", "address"});
}

TEST_CASE("synthetic knowledge base round trips through files") {
  const auto synth = testing::make_synthetic({.emotion_counts = {20, 1, 1, 1, 1, 1, 5}});
  const auto dir = testing::scratch_dir("kb_rt");
  testing::write_synthetic(synth, dir);
  const auto kb = load_knowledge_base(dir / "kb");
  for (const auto& d : synth.kb.domains()) CHECK(kb.table(d) == synth.kb.table(d));
}

TEST_CASE("toy table queries") {
  KnowledgeBase kb;
  kb.add_entity("restaurant", {{"name", "A"}, {"food", "spanish"}, {"area", "centre"}});
  kb.add_entity("restaurant", {{"name", "B"}, {"food", "italian"}, {"area", "centre"}});
  BeliefState b;
  CHECK(ids(query(kb, b, "restaurant")) == std::vector<std::string>{"a", "b"});
  b.set("restaurant", "food", "spanish");
  CHECK(ids(query(kb, b, "restaurant")) == std::vector<std::string>{"a"});
  b.set("restaurant", "food", "dontcare");
  CHECK(ids(query(kb, b, "restaurant")) == std::vector<std::string>{"a", "b"});
  b.set("restaurant", "food", "thai");
  CHECK(query(kb, b, "restaurant").empty());
  CHECK_THROWS_AS(query(kb, b, "hotel"), UnknownDomain);
}

TEST_CASE("an empty knowledge base directory") {
  const auto dir = testing::scratch_dir("kb_empty");
  const auto kb = load_knowledge_base(dir);
  CHECK(kb.domains().empty());
  CHECK_FALSE(kb.has_domain("restaurant"));
}

TEST_CASE("lexicalize examples") {
  KnowledgeBase kb;
  kb.add_entity("restaurant", {{"name", "La Tasca"}, {"area", "centre"}});
  const Entity& a = kb.table("restaurant").front();
  const auto r = lexicalize("[name] is in the [area]", &a, {}, {});
  CHECK(r.text == "La Tasca is in the centre");
  CHECK(r.unresolved.empty());
  CHECK(lexicalize("I have [choice] options", nullptr, {}, {{"choice", "3"}}).text ==
        "I have 3 options");
  const auto call = lexicalize("call [phone]", &a, {}, {});
  CHECK(call.text == "call [phone]");
  CHECK(call.unresolved == std::vector<std::string>{"phone"});
}

TEST_CASE("duplicate entity errors name the entity") {
  KnowledgeBase kb;
  kb.add_entity("restaurant", {{"name", "La Tasca"}});
  try {
    kb.add_entity("restaurant", {{"name", "la tasca"}});
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("la tasca") != std::string::npos);
  }
}
