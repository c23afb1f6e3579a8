#include "tkg/records.hpp"

#include "tkg/errors.hpp"
#include "tkg/hash.hpp"
#include "tkg/schema.hpp"

#include "doctest.h"

using namespace tkg;

namespace {

const EntitySchema& schema() { return EntitySchema::egocentric(); }
const DelimiterConfig kDelims{};

Chunk chunk_at(Timestamp anchor, std::string text) {
    Chunk c;
    c.chunk_id = "c-test";
    c.anchor = anchor;
    c.text = std::move(text);
    return c;
}

} // namespace

TEST_CASE("entity records parse with five fields") {
    std::string text = "(\"entity\"<|>\"John\"<|>\"person\"<|>\"Picks up the mug\"<|>"
                       "\"name:John|gender:None\")##(\"content_keywords\"<|>\"morning routine\")"
                       "<|COMPLETE|>";
    ParsedOutput out = parse_extraction_output(text, kDelims, schema());
    CHECK(out.faults.empty());
    REQUIRE(out.records.size() == 2);
    const auto* ent = std::get_if<EntityRec>(&out.records[0]);
    REQUIRE(ent != nullptr);
    CHECK(ent->name == "John");
    CHECK(ent->type == EntityType::person);
    CHECK(ent->description == "Picks up the mug");
    CHECK(ent->attributes.at("name") == "John");
    CHECK(ent->attributes.count("gender") == 0); // None values drop
    const auto* kw = std::get_if<KeywordsRec>(&out.records[1]);
    REQUIRE(kw != nullptr);
    CHECK(kw->keywords == std::vector<std::string>{"morning routine"});
}

TEST_CASE("relationship records parse with six fields") {
    std::string text =
        "(\"relationship\"<|>\"John\"<|>\"kitchen\"<|>\"John is in the kitchen\"<|>"
        "\"location, presence\"<|>\"8\")<|COMPLETE|>";
    ParsedOutput out = parse_extraction_output(text, kDelims, schema());
    CHECK(out.faults.empty());
    REQUIRE(out.records.size() == 1);
    const auto* rel = std::get_if<RelationRec>(&out.records[0]);
    REQUIRE(rel != nullptr);
    CHECK(rel->source == "John");
    CHECK(rel->target == "kitchen");
    CHECK(rel->keywords == std::vector<std::string>{"location", "presence"});
    CHECK(rel->strength == doctest::Approx(8.0));
}

TEST_CASE("bad records produce faults without aborting the parse") {
    std::string text = "(\"entity\"<|>\"A\"<|>\"person\"<|>\"desc\"<|>\"name:A\")##"
                       "(\"entity\"<|>\"missing fields\")##"
                       "(\"relationship\"<|>\"A\"<|>\"B\"<|>\"d\"<|>\"k\"<|>\"not-a-number\")##"
                       "(\"entity\"<|>\"B\"<|>\"creature\"<|>\"bad type\"<|>\"name:B\")##"
                       "(\"entity\"<|>\"C\"<|>\"object\"<|>\"ok\"<|>\"name:C\")<|COMPLETE|>";
    ParsedOutput out = parse_extraction_output(text, kDelims, schema());
    CHECK(out.records.size() == 2); // A and C survive
    CHECK(out.faults.size() == 3);
    for (const ParseFault& f : out.faults) CHECK_FALSE(f.reason.empty());
}

TEST_CASE("unknown attribute keys are reported without dropping the record") {
    std::string text = "(\"entity\"<|>\"A\"<|>\"person\"<|>\"d\"<|>\"name:A|badkey:x\")";
    ParsedOutput out = parse_extraction_output(text, kDelims, schema());
    REQUIRE(out.records.size() == 1);
    CHECK(out.faults.empty());
    REQUIRE(out.attribute_faults.size() == 1);
    CHECK(out.attribute_faults[0] == "A: unknown attribute key: badkey");
    const auto* ent = std::get_if<EntityRec>(&out.records[0]);
    REQUIRE(ent != nullptr);
    CHECK(ent->attributes.at("name") == "A");
}

TEST_CASE("text after the completion delimiter is ignored") {
    std::string text = "(\"content_keywords\"<|>\"a, b\")<|COMPLETE|>"
                       "(\"entity\"<|>\"X\"<|>\"person\"<|>\"d\"<|>\"name:X\")";
    ParsedOutput out = parse_extraction_output(text, kDelims, schema());
    CHECK(out.records.size() == 1);
    CHECK(std::holds_alternative<KeywordsRec>(out.records[0]));
}

TEST_CASE("empty and whitespace output parse to nothing") {
    CHECK(parse_extraction_output("", kDelims, schema()).records.empty());
    CHECK(parse_extraction_output("  \n ", kDelims, schema()).records.empty());
    CHECK(parse_extraction_output("<|COMPLETE|>", kDelims, schema()).records.empty());
}

TEST_CASE("attribute parsing matches keys case-insensitively") {
    std::vector<std::string> faults;
    auto attrs = parse_attributes("Name:Bob|GENDER:male|nonsense|badkey:x|habits:tea",
                                  schema().attribute_keys(EntityType::person), &faults);
    CHECK(attrs.at("name") == "Bob");
    CHECK(attrs.at("gender") == "male");
    CHECK(attrs.at("habits") == "tea");
    CHECK(attrs.count("badkey") == 0);
    CHECK(faults.size() == 2);
}

TEST_CASE("later duplicate attribute keys win") {
    auto attrs = parse_attributes("name:first|name:second",
                                  schema().attribute_keys(EntityType::person), nullptr);
    CHECK(attrs.at("name") == "second");
}

TEST_CASE("records round-trip through serialize and parse") {
    EntityRec e;
    e.name = "silver watch";
    e.type = EntityType::object;
    e.description = "A watch on the desk";
    e.attributes = {{"name", "silver watch"}, {"color", "silver"}};
    RelationRec r;
    r.source = "John";
    r.target = "silver watch";
    r.description = "John owns the watch";
    r.keywords = {"ownership"};
    r.strength = 9.0;
    KeywordsRec k;
    k.keywords = {"desk", "morning"};

    std::string text = serialize_record(e, kDelims) + "##" + serialize_record(r, kDelims) + "##" +
                       serialize_record(k, kDelims) + kDelims.completion;
    ParsedOutput out = parse_extraction_output(text, kDelims, schema());
    REQUIRE(out.faults.empty());
    REQUIRE(out.records.size() == 3);
    CHECK(std::get<EntityRec>(out.records[0]) == e);
    CHECK(std::get<RelationRec>(out.records[1]) == r);
    CHECK(std::get<KeywordsRec>(out.records[2]) == k);
}

TEST_CASE("custom delimiters are honored") {
    DelimiterConfig d;
    d.tuple = "@@";
    d.record = ";;";
    d.completion = "[END]";
    d.validate();
    std::string text = "(\"entity\"@@\"A\"@@\"person\"@@\"desc\"@@\"name:A\");;"
                       "(\"content_keywords\"@@\"k1, k2\")[END]";
    ParsedOutput out = parse_extraction_output(text, d, schema());
    CHECK(out.faults.empty());
    CHECK(out.records.size() == 2);
}

TEST_CASE("delimiter validation rejects ambiguous sets") {
    DelimiterConfig same;
    same.tuple = "##";
    CHECK_THROWS_AS(same.validate(), Error);
    DelimiterConfig substr;
    substr.tuple = "<|";
    substr.completion = "<|DONE";
    CHECK_THROWS_AS(substr.validate(), Error);
    DelimiterConfig empty;
    empty.record = "";
    CHECK_THROWS_AS(empty.validate(), Error);
}

TEST_CASE("extraction prompt embeds anchor, text, and delimiters") {
    Chunk c = chunk_at({2, 40182}, "John picks up the yellow mug.");
    std::string prompt = render_extraction_prompt(c, schema(), kDelims, "English", "");
    CHECK(prompt.find("[DAY2 11:09:42]") != std::string::npos);
    CHECK(prompt.find("John picks up the yellow mug.") != std::string::npos);
    CHECK(prompt.find("<|>") != std::string::npos);
    CHECK(prompt.find("<|COMPLETE|>") != std::string::npos);
    CHECK(prompt.find("English") != std::string::npos);
    CHECK(prompt.find("{input_text}") == std::string::npos);
    CHECK(prompt.find("{tuple_delimiter}") == std::string::npos);
    CHECK(prompt.find("{record_delimiter}") == std::string::npos);
    CHECK(prompt.find("{completion_delimiter}") == std::string::npos);
    CHECK(prompt.find("{language}") == std::string::npos);
    CHECK(prompt.find("{entity_types}") == std::string::npos);
    for (const char* type : {"person", "location", "object", "event"})
        CHECK(prompt.find(type) != std::string::npos);
}

TEST_CASE("prompt ends with the chunk input block") {
    Chunk c = chunk_at({1, 0}, "Short text");
    std::string prompt = render_extraction_prompt(c, schema(), kDelims, "English", "");
    std::string tail = "Text:\n[DAY1 00:00:00]\nShort text\n######################\nOutput:\n";
    REQUIRE(prompt.size() >= tail.size());
    CHECK(prompt.substr(prompt.size() - tail.size()) == tail);
}

TEST_CASE("parser is total on random garbage") {
    Rng rng(0xabadULL);
    const std::string alphabet = "()\"<|>#ABCperson,:|0123 \n";
    for (int i = 0; i < 2000; ++i) {
        std::string junk;
        std::size_t len = rng.below(200);
        for (std::size_t j = 0; j < len; ++j) junk += alphabet[rng.below(alphabet.size())];
        CHECK_NOTHROW(parse_extraction_output(junk, kDelims, schema()));
    }
}
