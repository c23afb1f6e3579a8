#pragma once

#include "tkg/chunking.hpp"
#include "tkg/schema.hpp"

#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace tkg {

// One extracted entity observation. Attribute values are raw strings;
// the "None" missing-value convention is already resolved by the
// parser (such pairs are dropped).
struct EntityRec {
    std::string name;  // normalized: trimmed, internal whitespace collapsed
    EntityType type = EntityType::object;
    std::string description;
    std::map<std::string, std::string> attributes;

    bool operator==(const EntityRec&) const = default;
};

struct RelationRec {
    std::string source;
    std::string target;
    std::string description;
    std::vector<std::string> keywords;
    double strength = 0.0;

    bool operator==(const RelationRec&) const = default;
};

struct KeywordsRec {
    std::vector<std::string> keywords;

    bool operator==(const KeywordsRec&) const = default;
};

using ExtractionRecord = std::variant<EntityRec, RelationRec, KeywordsRec>;

struct ParseFault {
    std::size_t record_index = 0;
    std::string reason;
};

struct ParsedOutput {
    std::vector<ExtractionRecord> records;
    std::vector<ParseFault> faults;
    // Sub-record diagnostics (unknown attribute keys) from records that
    // were kept anyway. Separate from faults so that every non-blank
    // piece lands in exactly one of records/faults.
    std::vector<std::string> attribute_faults;
};

// Total parser for untrusted extractor output. Splits on the record
// delimiter (stopping at the completion delimiter), then parses each
// non-blank piece as a parenthesized record with a quoted tag:
//   ("entity"{td}name{td}type{td}description{td}attrs)
//   ("relationship"{td}source{td}target{td}description{td}keywords{td}strength)
//   ("content_keywords"{td}keywords)
// Malformed pieces become faults and are skipped; the batch never
// aborts. Every non-blank piece lands in exactly one of records/faults.
ParsedOutput parse_extraction_output(std::string_view text, const DelimiterConfig& config,
                                     const EntitySchema& schema);

// Splits "attr1:value1|attr2:value2". Keys are matched case-insensitively
// against schema_keys; unknown keys and pairs without ':' are reported in
// faults and dropped. Values equal to "None" (any case) are omitted.
// Later duplicates of a key win.
std::map<std::string, std::string> parse_attributes(std::string_view text,
                                                    std::span<const std::string> schema_keys,
                                                    std::vector<std::string>* faults = nullptr);

// Inverse of the record grammar. Throws Error{bad_record} if any field
// contains one of the configured delimiters.
std::string serialize_record(const ExtractionRecord& record, const DelimiterConfig& config);

// Instantiates the extraction prompt template. The chunk anchor is
// prepended to the input text as a formatted timestamp line so the
// extractor can ground event start_time attributes.
std::string render_extraction_prompt(const Chunk& chunk, const EntitySchema& schema,
                                     const DelimiterConfig& config, const std::string& language,
                                     const std::string& examples);

// Replace-all helper shared by the prompt renderers.
[[nodiscard]] std::string replace_all(std::string text, std::string_view needle,
                                      std::string_view replacement);

} // namespace tkg
