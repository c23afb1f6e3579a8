#include "tkg/schema.hpp"

#include <algorithm>
#include <cctype>

namespace tkg {

std::string_view to_string(EntityType type) {
    switch (type) {
        case EntityType::person: return "person";
        case EntityType::location: return "location";
        case EntityType::object: return "object";
        case EntityType::event: return "event";
    }
    return "unknown";
}

std::optional<EntityType> entity_type_from(std::string_view text) {
    std::string lowered;
    lowered.reserve(text.size());
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (lowered == "person") return EntityType::person;
    if (lowered == "location") return EntityType::location;
    if (lowered == "object") return EntityType::object;
    if (lowered == "event") return EntityType::event;
    return std::nullopt;
}

EntitySchema::EntitySchema() {
    keys_[static_cast<int>(EntityType::person)] = {
        "name", "gender", "appearance", "preferences", "dislikes", "habits", "hometown"};
    keys_[static_cast<int>(EntityType::location)] = {"name", "description"};
    keys_[static_cast<int>(EntityType::object)] = {
        "name", "type", "color", "size", "condition", "owner", "purchase_information"};
    keys_[static_cast<int>(EntityType::event)] = {
        "name", "description", "start_time", "subject", "object", "location"};
}

const std::vector<std::string>& EntitySchema::attribute_keys(EntityType type) const {
    return keys_[static_cast<int>(type)];
}

bool EntitySchema::has_attribute(EntityType type, std::string_view key) const {
    const auto& keys = attribute_keys(type);
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

const EntitySchema& EntitySchema::egocentric() {
    static const EntitySchema schema;
    return schema;
}

void DelimiterConfig::validate() const {
    const std::string* all[] = {&tuple, &record, &completion};
    const char* names[] = {"tuple", "record", "completion"};
    for (int i = 0; i < 3; ++i) {
        if (all[i]->empty())
            throw Error(Errc::bad_config, std::string(names[i]) + " delimiter is empty");
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (i == j) continue;
            if (all[j]->find(*all[i]) != std::string::npos)
                throw Error(Errc::bad_config, std::string(names[i]) + " delimiter '" + *all[i] +
                                                  "' occurs inside " + names[j] + " delimiter '" + *all[j] + "'");
        }
    }
}

std::string normalize_name(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

std::string normalized_key(std::string_view text) {
    std::string out = normalize_name(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace tkg
