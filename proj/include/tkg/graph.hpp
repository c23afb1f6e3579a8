#pragma once

#include "tkg/chunking.hpp"
#include "tkg/clients.hpp"
#include "tkg/records.hpp"
#include "tkg/schema.hpp"
#include "tkg/timeline.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace tkg {

// Full observation history of one attribute, ascending by timestamp.
// The exported value is the latest entry; older entries let temporal
// views report the value as of any past instant.
struct AttributeValue {
    std::vector<std::pair<Timestamp, std::string>> history;

    const std::string& value() const { return history.back().second; }
    Timestamp updated_at() const { return history.back().first; }

    bool operator==(const AttributeValue&) const = default;
};

struct EntityNode {
    std::string id;
    EntityType type = EntityType::object;
    std::string name;
    std::vector<Timestamp> timestamps;                         // sorted, unique
    std::vector<std::pair<Timestamp, std::string>> descriptions; // ascending, aligned with mentions
    std::map<std::string, AttributeValue> attributes;
    std::set<std::string> source_chunks;
    // Anchor of the first direct entity observation. Absent for nodes
    // known only as relation endpoints; such nodes are stubs. Kept as a
    // timestamp so temporal views can clip it consistently.
    std::optional<Timestamp> confirmed_at;

    bool stub() const { return !confirmed_at.has_value(); }

    bool operator==(const EntityNode&) const = default;
};

struct EdgeKeyword {
    std::string text;
    Timestamp first_seen;

    bool operator==(const EdgeKeyword&) const = default;
};

struct RelationEdge {
    std::string id;
    std::string source; // endpoint node ids in lexicographic order;
    std::string target; // direction lives in each description entry
    std::vector<Timestamp> timestamps;
    std::vector<std::pair<Timestamp, std::string>> descriptions;
    std::vector<EdgeKeyword> keywords; // sorted by text, unique
    std::vector<std::pair<Timestamp, double>> strength_obs; // ascending; latest wins
    std::set<std::string> source_chunks;

    double strength() const { return strength_obs.empty() ? 0.0 : strength_obs.back().second; }

    bool operator==(const RelationEdge&) const = default;
};

struct MergePolicy {
    double tau_merge = 0.90;          // cosine threshold for name resolution
    std::size_t summarize_after = 100; // strict: summarize when |T| exceeds this
    bool strict_order = false;         // reject chunks older than the last applied anchor

    void validate() const;
};

struct MergeReport {
    std::size_t nodes_created = 0;
    std::size_t nodes_merged = 0;
    std::size_t edges_created = 0;
    std::size_t edges_merged = 0;
    std::size_t attributes_updated = 0;
    std::size_t stubs_created = 0;
    bool reapplied_chunk = false; // chunk id was already in the graph; call was a no-op
    std::vector<std::string> faults;

    void add(const MergeReport& other);
};

struct TemporalGraph {
    std::map<std::string, EntityNode> nodes;
    std::map<std::string, RelationEdge> edges;
    std::map<std::string, Chunk> chunks;
    std::uint64_t revision = 0;
    std::optional<Timestamp> last_anchor;

    const EntityNode* find_node(EntityType type, std::string_view name) const;
    std::size_t count_nodes(EntityType type) const;
    bool empty() const { return nodes.empty() && edges.empty() && chunks.empty(); }
};

std::string node_id_for(EntityType type, std::string_view normalized_name);
std::string edge_id_for(std::string_view node_a, std::string_view node_b);

// Merges one chunk's extraction records into the graph. Chunks must
// arrive in ascending (anchor, ingestion) order; a chunk id that is
// already present makes the call a reported no-op, which gives
// idempotent re-application. Entity resolution tries an exact
// normalized-name(+type) match first, then, when an embedder is
// supplied, cosine similarity against same-type nodes at or above
// policy.tau_merge (highest wins, ties to the smallest node id).
MergeReport apply_records(TemporalGraph& graph, const Chunk& chunk,
                          const std::vector<ExtractionRecord>& records, const MergePolicy& policy,
                          EmbeddingProvider* embedder = nullptr);

// Survival tests for the t_q sub-view, answerable without copying: a
// node survives when its first observation is at or before t_q; an edge
// additionally needs both endpoints to survive. These are the rules
// temporal_filter applies graph-wide.
bool visible_at(const EntityNode& node, Timestamp t_q);
bool visible_at(const TemporalGraph& graph, const RelationEdge& edge, Timestamp t_q);

// Prefix of a sorted timestamp list with entries at or before t_q.
std::span<const Timestamp> timestamps_through(const std::vector<Timestamp>& sorted, Timestamp t_q);

// Copies of one element restricted to observations in [lo, hi]:
// timestamps, descriptions, attribute histories, keywords, strength
// observations, and chunk references outside the window are dropped.
EntityNode clip_node(const EntityNode& node, const TemporalGraph& graph, Timestamp lo,
                     Timestamp hi);
RelationEdge clip_edge(const RelationEdge& edge, const TemporalGraph& graph, Timestamp lo,
                       Timestamp hi);

// Sub-view at query time: per-element truncation to observations at or
// before t_q. Elements whose truncated timestamp list is empty drop out;
// attribute values revert to the latest update at or before t_q.
TemporalGraph temporal_filter(const TemporalGraph& graph, Timestamp t_q);

// Edge-driven window view: edges with at least one timestamp inside the
// closed window, plus their endpoint nodes, with timestamps and
// descriptions restricted to the window. Attribute values reflect the
// state as of the window end.
TemporalGraph window_query(const TemporalGraph& graph, const TimeWindow& window);

// Compacts descriptions once |T| strictly exceeds policy.summarize_after:
// all but the most recent summarize_after entries collapse into one
// summary stamped with the oldest summarized timestamp. Timestamps are
// never truncated. Returns true if the element changed.
bool maybe_summarize(EntityNode& node, Summarizer& summarizer, const MergePolicy& policy);
bool maybe_summarize(RelationEdge& edge, Summarizer& summarizer, const MergePolicy& policy);
std::size_t summarize_overflow(TemporalGraph& graph, Summarizer& summarizer,
                               const MergePolicy& policy);

// Throws Error{corrupt_stream} describing the first violated structural
// invariant (ordering, alignment, referential integrity).
void check_invariants(const TemporalGraph& graph);

} // namespace tkg
