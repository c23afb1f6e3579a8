#include "tkg/records.hpp"

#include "tkg/errors.hpp"
#include "tkg/timeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>

namespace tkg {
namespace {

std::string_view trim_view(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Trims and removes one layer of matching double quotes. Extractors
// frequently quote fields beyond the record tag.
std::string_view unquote(std::string_view s) {
    s = trim_view(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = trim_view(s.substr(1, s.size() - 2));
    return s;
}

std::vector<std::string_view> split_on(std::string_view text, std::string_view sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t hit = text.find(sep, pos);
        if (hit == std::string_view::npos) {
            out.push_back(text.substr(pos));
            return out;
        }
        out.push_back(text.substr(pos, hit - pos));
        pos = hit + sep.size();
    }
}

std::vector<std::string> split_keywords(std::string_view field) {
    std::vector<std::string> out;
    for (std::string_view part : split_on(field, ",")) {
        part = unquote(part);
        // A quote pair around the whole field leaves one stray quote on
        // the first and last part; strip boundary quotes unpaired too.
        while (!part.empty() && part.front() == '"') part.remove_prefix(1);
        while (!part.empty() && part.back() == '"') part.remove_suffix(1);
        std::string kw = normalize_name(part);
        if (kw.empty()) continue;
        bool dup = std::any_of(out.begin(), out.end(), [&](const std::string& k) {
            return normalized_key(k) == normalized_key(kw);
        });
        if (!dup) out.push_back(std::move(kw));
    }
    return out;
}

bool parse_strength(std::string_view field, double& out) {
    std::string buf(trim_view(field));
    if (buf.empty()) return false;
    char* end = nullptr;
    double v = std::strtod(buf.c_str(), &end);
    if (end == buf.c_str()) return false;
    while (*end != '\0') {
        if (!std::isspace(static_cast<unsigned char>(*end))) return false;
        ++end;
    }
    out = v;
    return true;
}

void require_no_delimiter(std::string_view field, const DelimiterConfig& config) {
    for (std::string_view d : {std::string_view(config.tuple), std::string_view(config.record),
                               std::string_view(config.completion)}) {
        if (field.find(d) != std::string_view::npos)
            throw Error(Errc::bad_record, "field contains delimiter '" + std::string(d) + "'");
    }
    if (field.find('\n') != std::string_view::npos)
        throw Error(Errc::bad_record, "field contains newline");
}

} // namespace

std::map<std::string, std::string> parse_attributes(std::string_view text,
                                                    std::span<const std::string> schema_keys,
                                                    std::vector<std::string>* faults) {
    std::map<std::string, std::string> out;
    text = trim_view(text);
    if (text.empty()) return out;
    for (std::string_view part : split_on(text, "|")) {
        part = trim_view(part);
        if (part.empty()) continue;
        std::size_t colon = part.find(':');
        if (colon == std::string_view::npos) {
            if (faults) faults->push_back("attribute without ':': " + std::string(part));
            continue;
        }
        std::string key = normalized_key(part.substr(0, colon));
        std::string value(unquote(part.substr(colon + 1)));
        auto it = std::find_if(schema_keys.begin(), schema_keys.end(),
                               [&](const std::string& k) { return normalized_key(k) == key; });
        if (it == schema_keys.end()) {
            if (faults) faults->push_back("unknown attribute key: " + key);
            continue;
        }
        if (value.empty() || normalized_key(value) == "none") {
            out.erase(*it);
            continue;
        }
        out[*it] = value; // later duplicates win
    }
    return out;
}

ParsedOutput parse_extraction_output(std::string_view text, const DelimiterConfig& config,
                                     const EntitySchema& schema) {
    ParsedOutput out;
    std::size_t done = text.find(config.completion);
    if (done != std::string_view::npos) text = text.substr(0, done);

    std::size_t index = 0;
    for (std::string_view piece : split_on(text, config.record)) {
        piece = trim_view(piece);
        if (piece.empty()) continue;
        std::size_t rec = index++;
        auto fault = [&](std::string reason) {
            out.faults.push_back({rec, std::move(reason)});
        };

        if (piece.front() != '(' || piece.back() != ')') {
            fault("record not parenthesized");
            continue;
        }
        piece = trim_view(piece.substr(1, piece.size() - 2));
        std::vector<std::string_view> fields = split_on(piece, config.tuple);
        std::string tag = normalized_key(unquote(fields[0]));

        if (tag == "entity") {
            if (fields.size() != 5) {
                fault("entity record has " + std::to_string(fields.size()) + " fields, expected 5");
                continue;
            }
            EntityRec e;
            e.name = normalize_name(unquote(fields[1]));
            if (e.name.empty()) {
                fault("entity with empty name");
                continue;
            }
            auto type = entity_type_from(unquote(fields[2]));
            if (!type) {
                fault("unknown entity type: " + std::string(unquote(fields[2])));
                continue;
            }
            e.type = *type;
            e.description = std::string(unquote(fields[3]));
            std::vector<std::string> attr_faults;
            e.attributes =
                parse_attributes(unquote(fields[4]), schema.attribute_keys(e.type), &attr_faults);
            for (std::string& f : attr_faults)
                out.attribute_faults.push_back(e.name + ": " + f);
            out.records.push_back(std::move(e));
        } else if (tag == "relationship") {
            if (fields.size() != 6) {
                fault("relationship record has " + std::to_string(fields.size()) +
                      " fields, expected 6");
                continue;
            }
            RelationRec r;
            r.source = normalize_name(unquote(fields[1]));
            r.target = normalize_name(unquote(fields[2]));
            if (r.source.empty() || r.target.empty()) {
                fault("relationship with empty endpoint");
                continue;
            }
            r.description = std::string(unquote(fields[3]));
            r.keywords = split_keywords(fields[4]);
            if (!parse_strength(unquote(fields[5]), r.strength)) {
                fault("bad relationship strength: " + std::string(trim_view(fields[5])));
                continue;
            }
            out.records.push_back(std::move(r));
        } else if (tag == "content_keywords") {
            if (fields.size() != 2) {
                fault("content_keywords record has " + std::to_string(fields.size()) +
                      " fields, expected 2");
                continue;
            }
            out.records.push_back(KeywordsRec{split_keywords(fields[1])});
        } else {
            fault("unknown record tag: " + tag);
        }
    }
    return out;
}

std::string serialize_record(const ExtractionRecord& record, const DelimiterConfig& config) {
    const std::string& td = config.tuple;
    std::ostringstream os;
    if (const auto* e = std::get_if<EntityRec>(&record)) {
        std::string attrs;
        for (const auto& [k, v] : e->attributes) {
            if (!attrs.empty()) attrs += "|";
            attrs += k + ":" + v;
        }
        for (std::string_view f : {std::string_view(e->name), std::string_view(e->description),
                                   std::string_view(attrs)})
            require_no_delimiter(f, config);
        os << "(\"entity\"" << td << e->name << td << to_string(e->type) << td << e->description
           << td << attrs << ")";
    } else if (const auto* r = std::get_if<RelationRec>(&record)) {
        std::string kws;
        for (const std::string& k : r->keywords) {
            if (!kws.empty()) kws += ", ";
            kws += k;
        }
        for (std::string_view f : {std::string_view(r->source), std::string_view(r->target),
                                   std::string_view(r->description), std::string_view(kws)})
            require_no_delimiter(f, config);
        os << "(\"relationship\"" << td << r->source << td << r->target << td << r->description
           << td << kws << td << r->strength << ")";
    } else {
        const auto& k = std::get<KeywordsRec>(record);
        std::string kws;
        for (const std::string& kw : k.keywords) {
            if (!kws.empty()) kws += ", ";
            kws += kw;
        }
        require_no_delimiter(kws, config);
        os << "(\"content_keywords\"" << td << kws << ")";
    }
    return os.str();
}

std::string replace_all(std::string text, std::string_view needle, std::string_view replacement) {
    if (needle.empty()) return text;
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), replacement);
        pos += replacement.size();
    }
    return text;
}

namespace {

// clang-format off
constexpr const char* kExtractionTemplate = R"PROMPT(---Goal---
Given a text document that is potentially relevant to this activity and a list of entity types, identify all entities of those types from the text and all relationships among the identified entities.
Use {language} as output language.

---Steps---
1. Identify all entities. For each identified entity, extract the following information:
- entity_name: Name of the entity, use same language as input text. If English, capitalized the name.
- entity_type: One of the following types: [{entity_types}]
- entity_description: Comprehensive description of the entity's attributes and activities
Format each entity as ("entity"{tuple_delimiter}<entity_name>{tuple_delimiter}<entity_type>{tuple_delimiter}<entity_description>{tuple_delimiter}<entity_attributes>)
- entity_attributes: When extracting entities, also extract relevant attributes based on entity type. (format: "attr1:value1|attr2:value2") Required attributes for each type: [{entity_attributes}].Note: Ensure that valid information is generated and use "None" for missing or uncertain information

2. From the entities identified in step 1, identify all pairs of (source_entity, target_entity) that are *clearly related* to each other.
For each pair of related entities, extract the following information:
- source_entity: name of the source entity, as identified in step 1
- target_entity: name of the target entity, as identified in step 1
- relationship_description: explanation as to why you think the source entity and the target entity are related to each other
- relationship_strength: a numeric score indicating strength of the relationship between the source entity and target entity
- relationship_keywords: one or more high-level key words that summarize the overarching nature of the relationship, focusing on concepts or themes rather than specific details
Format each relationship as ("relationship"{tuple_delimiter}<source_entity>{tuple_delimiter}<target_entity>{tuple_delimiter}<relationship_description>{tuple_delimiter}<relationship_keywords>{tuple_delimiter}<relationship_strength>)

3. Identify high-level key words that summarize the main concepts, themes, or topics of the entire text. These should capture the overarching ideas present in the document.
Format the content-level key words as ("content_keywords"{tuple_delimiter}<high_level_keywords>)

4. Return output in {language} as a single list of all the entities and relationships identified in steps 1 and 2. Use **{record_delimiter}** as the list delimiter.

5. When finished, output {completion_delimiter}

######################
---Examples---
######################
{examples}

#############################
---Real Data---
######################
Entity_types: [{entity_types}]
Entity_attributes: [{entity_attributes}]

Text:
{input_text}
######################
Output:
)PROMPT";
// clang-format on

std::string format_schema_attributes(const EntitySchema& schema) {
    std::string out;
    for (EntityType t : {EntityType::person, EntityType::location, EntityType::object,
                         EntityType::event}) {
        if (!out.empty()) out += "; ";
        out += to_string(t);
        out += ": ";
        bool first = true;
        for (const std::string& k : schema.attribute_keys(t)) {
            if (!first) out += ", ";
            out += k;
            first = false;
        }
    }
    return out;
}

} // namespace

std::string render_extraction_prompt(const Chunk& chunk, const EntitySchema& schema,
                                     const DelimiterConfig& config, const std::string& language,
                                     const std::string& examples) {
    std::string types = "person, location, object, event";
    std::string input = format_timestamp(chunk.anchor) + "\n" + chunk.text;
    std::string p = kExtractionTemplate;
    p = replace_all(std::move(p), "{language}", language);
    p = replace_all(std::move(p), "{entity_types}", types);
    p = replace_all(std::move(p), "{entity_attributes}", format_schema_attributes(schema));
    p = replace_all(std::move(p), "{tuple_delimiter}", config.tuple);
    p = replace_all(std::move(p), "{record_delimiter}", config.record);
    p = replace_all(std::move(p), "{completion_delimiter}", config.completion);
    p = replace_all(std::move(p), "{examples}", examples);
    p = replace_all(std::move(p), "{input_text}", input);
    return p;
}

} // namespace tkg
