#include "tkg/config.hpp"

#include "tkg/errors.hpp"
#include "tkg/harness.hpp"
#include "tkg/hash.hpp"

#include <fstream>
#include <set>

namespace tkg {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& why) { throw Error(Errc::bad_config, why); }

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) bad("unknown config key '" + where + key + "'");
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        bad("config key '" + where + key + "' has the wrong type");
    }
}

ProviderConfig read_provider(const json& j, const std::string& where,
                             const ProviderConfig& defaults) {
    reject_unknown_keys(
        j, {"mode", "base_url", "model", "api_key_env", "retries", "dimension", "seed", "script"},
        where);
    ProviderConfig p = defaults;
    read_field(j, "mode", p.mode, where);
    read_field(j, "base_url", p.base_url, where);
    read_field(j, "model", p.model, where);
    read_field(j, "api_key_env", p.api_key_env, where);
    read_field(j, "retries", p.retries, where);
    read_field(j, "dimension", p.dimension, where);
    read_field(j, "seed", p.seed, where);
    read_field(j, "script", p.script, where);
    return p;
}

void check_mode(const ProviderConfig& p, const char* slot, bool none_ok) {
    if (p.mode == "mock" || p.mode == "http") return;
    if (none_ok && p.mode == "none") return;
    bad(std::string(slot) + " mode must be " + (none_ok ? "mock, http, or none" : "mock or http") +
        ", got '" + p.mode + "'");
}

} // namespace

void EngineConfig::validate() const {
    if (l_max < 1) bad("l_max must be positive");
    delimiters.validate();
    merge.validate();
    if (k < 1) bad("retrieval k must be positive");
    if (!components.nodes && !components.edges && !components.chunks)
        bad("no retrieval components selected");
    check_mode(extraction, "extraction", false);
    check_mode(answering, "answering", true);
    check_mode(embedding, "embedding", false);
    if (embedding.dimension < 1) bad("embedding dimension must be positive");
    for (const ProviderConfig* p : {&extraction, &answering, &embedding}) {
        if (p->retries < 0) bad("retries must be non-negative");
        if (p->mode == "http" && p->base_url.empty()) bad("http provider needs a base_url");
    }
    if (graph_path.empty()) bad("graph path must not be empty");
}

EngineConfig EngineConfig::from_json(const json& j) {
    if (!j.is_object()) bad("config root must be a JSON object");
    reject_unknown_keys(j,
                        {"l_max", "language", "delimiters", "merge", "retrieval", "extraction",
                         "answering", "embedding", "paths"},
                        "");
    EngineConfig c;
    read_field(j, "l_max", c.l_max, "");
    read_field(j, "language", c.language, "");
    if (j.contains("delimiters")) {
        const json& d = j.at("delimiters");
        reject_unknown_keys(d, {"tuple", "record", "completion"}, "delimiters.");
        read_field(d, "tuple", c.delimiters.tuple, "delimiters.");
        read_field(d, "record", c.delimiters.record, "delimiters.");
        read_field(d, "completion", c.delimiters.completion, "delimiters.");
    }
    if (j.contains("merge")) {
        const json& m = j.at("merge");
        reject_unknown_keys(m, {"tau_merge", "summarize_after", "strict_order"}, "merge.");
        read_field(m, "tau_merge", c.merge.tau_merge, "merge.");
        read_field(m, "summarize_after", c.merge.summarize_after, "merge.");
        read_field(m, "strict_order", c.merge.strict_order, "merge.");
    }
    if (j.contains("retrieval")) {
        const json& r = j.at("retrieval");
        reject_unknown_keys(r, {"k", "components"}, "retrieval.");
        read_field(r, "k", c.k, "retrieval.");
        if (r.contains("components")) {
            std::string csv;
            read_field(r, "components", csv, "retrieval.");
            c.components = ComponentSet::parse(csv);
        }
    }
    if (j.contains("extraction"))
        c.extraction = read_provider(j.at("extraction"), "extraction.", c.extraction);
    if (j.contains("answering"))
        c.answering = read_provider(j.at("answering"), "answering.", c.answering);
    if (j.contains("embedding"))
        c.embedding = read_provider(j.at("embedding"), "embedding.", c.embedding);
    if (j.contains("paths")) {
        const json& p = j.at("paths");
        reject_unknown_keys(p, {"graph", "cache"}, "paths.");
        read_field(p, "graph", c.graph_path, "paths.");
        read_field(p, "cache", c.cache_path, "paths.");
    }
    c.validate();
    return c;
}

EngineConfig EngineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) bad("cannot open config file '" + path + "'");
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) bad("config file '" + path + "' is not valid JSON");
    return from_json(j);
}

json EngineConfig::to_json() const {
    auto provider = [](const ProviderConfig& p, bool embedding) {
        json j{{"mode", p.mode},
               {"base_url", p.base_url},
               {"model", p.model},
               {"api_key_env", p.api_key_env},
               {"retries", p.retries}};
        if (embedding) {
            j["dimension"] = p.dimension;
            j["seed"] = p.seed;
        }
        if (!p.script.empty()) j["script"] = p.script;
        return j;
    };
    std::string components;
    if (this->components.nodes) components += "nodes";
    if (this->components.edges) components += components.empty() ? "edges" : ",edges";
    if (this->components.chunks) components += components.empty() ? "chunks" : ",chunks";
    return {{"l_max", l_max},
            {"language", language},
            {"delimiters",
             {{"tuple", delimiters.tuple},
              {"record", delimiters.record},
              {"completion", delimiters.completion}}},
            {"merge",
             {{"tau_merge", merge.tau_merge},
              {"summarize_after", merge.summarize_after},
              {"strict_order", merge.strict_order}}},
            {"retrieval", {{"k", k}, {"components", components}}},
            {"extraction", provider(extraction, false)},
            {"answering", provider(answering, false)},
            {"embedding", provider(embedding, true)},
            {"paths", {{"graph", graph_path}, {"cache", cache_path}}}};
}

std::unique_ptr<TextClient> EngineConfig::make_extraction_client() const {
    if (extraction.mode == "mock") return std::make_unique<CaptionExtractor>(delimiters);
    return std::make_unique<HttpChatClient>(HttpOptions{
        extraction.base_url, extraction.model, extraction.api_key_env, 60});
}

std::unique_ptr<TextClient> EngineConfig::make_answering_client() const {
    if (answering.mode == "none") return nullptr;
    if (answering.mode == "mock") {
        auto client = std::make_unique<ScriptedClient>();
        if (!answering.script.empty()) {
            std::ifstream in(answering.script);
            if (!in) bad("cannot open answering script '" + answering.script + "'");
            std::string line;
            std::size_t lineno = 0;
            while (std::getline(in, line)) {
                ++lineno;
                if (line.empty()) continue;
                json j = json::parse(line, nullptr, false);
                if (j.is_discarded() || !j.is_object() || !j.contains("completion"))
                    throw Error(Errc::corrupt_stream, "script line " + std::to_string(lineno) +
                                                          ": expected {\"prompt\"|\"hash\", "
                                                          "\"completion\"}");
                if (j.contains("prompt"))
                    client->add(j["prompt"].get<std::string>(),
                                j["completion"].get<std::string>());
                else if (j.contains("hash"))
                    client->add_hashed(j["hash"].get<std::string>(),
                                       j["completion"].get<std::string>());
                else
                    throw Error(Errc::corrupt_stream, "script line " + std::to_string(lineno) +
                                                          ": needs a prompt or hash key");
            }
        }
        return client;
    }
    return std::make_unique<HttpChatClient>(HttpOptions{
        answering.base_url, answering.model, answering.api_key_env, 60});
}

std::shared_ptr<EmbeddingProvider> EngineConfig::make_embedder() const {
    std::shared_ptr<EmbeddingProvider> inner;
    if (embedding.mode == "mock")
        inner = std::make_shared<HashingEmbedder>(embedding.dimension, embedding.seed);
    else
        inner = std::make_shared<HttpEmbedder>(
            HttpOptions{embedding.base_url, embedding.model, embedding.api_key_env, 60},
            embedding.dimension);
    if (!cache_path.empty()) return std::make_shared<CachedEmbedder>(std::move(inner), cache_path);
    return inner;
}

} // namespace tkg
