#pragma once

#include "tkg/clients.hpp"
#include "tkg/graph.hpp"
#include "tkg/retrieval.hpp"

#include "json.hpp"

#include <memory>
#include <string>

namespace tkg {

// One pluggable backend slot. mode selects the implementation:
//   "mock"  deterministic offline stand-in (caption-grammar extractor,
//           hash-scripted answering, hashing embedder)
//   "http"  OpenAI-style endpoint at base_url
//   "none"  slot left empty (answering only)
struct ProviderConfig {
    std::string mode = "mock";
    std::string base_url;
    std::string model;
    std::string api_key_env; // env var holding the bearer token, never the token itself
    int retries = 2;          // extra attempts per call before giving up
    std::size_t dimension = 256; // embedding only
    std::uint64_t seed = 0x5eed; // mock embedding only
    std::string script;          // mock answering: canned completions file
};

struct EngineConfig {
    std::size_t l_max = 1200;
    std::string language = "English";
    DelimiterConfig delimiters{};
    MergePolicy merge{};
    std::size_t k = kDefaultTopK;
    ComponentSet components{};
    ProviderConfig extraction{};
    ProviderConfig answering = [] {
        ProviderConfig p;
        p.mode = "none";
        return p;
    }();
    ProviderConfig embedding{};
    std::string graph_path = "graph.jsonl";
    std::string cache_path; // embedding cache, empty disables

    // Checks wrapped-type invariants and provider mode spellings.
    // Throws Error{bad_config}.
    void validate() const;

    // Strict parse: any key the schema does not define is rejected with
    // its JSON path. Missing keys keep their defaults.
    static EngineConfig from_json(const nlohmann::json& j);
    static EngineConfig load(const std::string& path);
    nlohmann::json to_json() const;

    std::unique_ptr<TextClient> make_extraction_client() const;
    // nullptr when answering.mode == "none".
    std::unique_ptr<TextClient> make_answering_client() const;
    std::shared_ptr<EmbeddingProvider> make_embedder() const;
};

} // namespace tkg
