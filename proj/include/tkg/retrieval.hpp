#pragma once

#include "tkg/clients.hpp"
#include "tkg/graph.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tkg {

inline constexpr std::size_t kDefaultTopK = 40;

enum class ElementKind { node, edge, chunk };
std::string_view to_string(ElementKind kind);

struct ComponentSet {
    bool nodes = true;
    bool edges = true;
    bool chunks = true;

    // Parses "nodes,edges,chunks" subsets; throws Error{bad_config}.
    static ComponentSet parse(std::string_view csv);
};

struct IndexEntry {
    std::string id;
    ElementKind kind = ElementKind::node;
    std::uint64_t fingerprint = 0; // hash of the indexed text, drives patching
    std::vector<double> vec;       // unit-normalized
};

struct RetrievalIndex {
    std::string provider_id;
    std::size_t dimension = 0;
    std::uint64_t graph_revision = 0; // staleness watermark
    std::vector<IndexEntry> entries;  // grouped node/edge/chunk, each id-sorted
};

// Text fed to the embedder for each element kind. Nodes render as
// "name. type. latest description. key:value ..."; edges as
// "source -- target. keywords. latest description"; chunks index their
// raw text.
std::string index_text(const EntityNode& node);
std::string index_text(const RelationEdge& edge, const TemporalGraph& graph);

RetrievalIndex build_index(const TemporalGraph& graph, EmbeddingProvider& provider);

// Re-embeds only new or changed elements and drops entries for removed
// ones; falls back to a full rebuild when the provider changed.
// Returns the number of elements (re)embedded.
std::size_t refresh_index(RetrievalIndex& index, const TemporalGraph& graph,
                          EmbeddingProvider& provider);

struct ScoredRef {
    std::string id;
    double score = 0.0;

    bool operator==(const ScoredRef&) const = default;
};

// Exact cosine ranking over entries of one kind. Stored vectors are
// unit length, so the score is a dot product. Descending score, ties by
// ascending id, at most k results. allowed, when present, restricts
// candidates (temporal filtering hands the live id set in here).
std::vector<ScoredRef> top_k(const RetrievalIndex& index, const std::vector<double>& query_vec,
                             std::size_t k, ElementKind kind,
                             const std::set<std::string>* allowed = nullptr);

struct KeywordSets {
    std::vector<std::string> high_level;
    std::vector<std::string> low_level;
    bool client_failed = false; // client path errored; heuristic used instead
};

// With a client, delegates and parses its JSON keyword lists; without
// one (or on client failure) falls back to a deterministic heuristic:
// quoted phrases and capitalized tokens become low-level keywords,
// adjacent content-word runs become low-level phrases, remaining
// content words become high-level keywords.
KeywordSets extract_keywords(const std::string& query, TextClient* client = nullptr);

struct RetrievalResult {
    std::vector<ScoredRef> nodes;
    std::vector<ScoredRef> edges;
    std::vector<ScoredRef> chunks;
    std::size_t k = kDefaultTopK;
    std::optional<Timestamp> t_q;
};

// Keyword-augmented retrieval: embeds the query text joined with its
// keywords, restricts candidates to the temporal filter at t_q when
// present, and ranks each requested component. Throws Error{stale_index}
// when the index watermark lags the graph revision.
RetrievalResult retrieve_context(const TemporalGraph& graph, const RetrievalIndex& index,
                                 const std::string& query, std::optional<Timestamp> t_q,
                                 EmbeddingProvider& provider, std::size_t k = kDefaultTopK,
                                 ComponentSet components = {}, TextClient* keyword_client = nullptr,
                                 KeywordSets* keywords_out = nullptr);

} // namespace tkg
