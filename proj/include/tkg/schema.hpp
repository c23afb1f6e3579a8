#pragma once

#include "tkg/errors.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tkg {

// Closed world of entity types for egocentric life-log extraction.
enum class EntityType { person, location, object, event };

std::string_view to_string(EntityType type);
std::optional<EntityType> entity_type_from(std::string_view text);  // case-insensitive, trimmed

// Fixed attribute-key lists per entity type, in prompt-rendering order.
class EntitySchema {
public:
    const std::vector<std::string>& attribute_keys(EntityType type) const;
    bool has_attribute(EntityType type, std::string_view key) const;

    // The four-type schema for first-person daily-life logs:
    // person, location, object, event with their canonical attributes.
    static const EntitySchema& egocentric();

private:
    EntitySchema();
    std::vector<std::string> keys_[4];
};

// Delimiters for the extraction record format. Must be pairwise
// distinct and none a substring of another, otherwise the record
// grammar is ambiguous.
struct DelimiterConfig {
    std::string tuple = "<|>";
    std::string record = "##";
    std::string completion = "<|COMPLETE|>";

    void validate() const;  // throws Error{bad_config}
};

// Name normalization used everywhere entity names are compared or
// stored: trim and collapse internal whitespace, case preserved.
std::string normalize_name(std::string_view text);

// Lowercased normalize_name; the identity key for merging and lookup.
std::string normalized_key(std::string_view text);

} // namespace tkg
