#include "tkg/graph.hpp"

#include "tkg/errors.hpp"
#include "tkg/hash.hpp"

#include <algorithm>
#include <cassert>

namespace tkg {
namespace {

void insert_sorted_unique(std::vector<Timestamp>& ts, Timestamp t) {
    auto it = std::lower_bound(ts.begin(), ts.end(), t);
    if (it == ts.end() || *it != t) ts.insert(it, t);
}

void insert_description(std::vector<std::pair<Timestamp, std::string>>& descs, Timestamp t,
                        std::string text) {
    auto it = std::upper_bound(descs.begin(), descs.end(), t,
                               [](Timestamp a, const auto& b) { return a < b.first; });
    descs.insert(it, {t, std::move(text)});
}

} // namespace

bool visible_at(const EntityNode& node, Timestamp t_q) {
    return !node.timestamps.empty() && node.timestamps.front() <= t_q;
}

bool visible_at(const TemporalGraph& graph, const RelationEdge& edge, Timestamp t_q) {
    if (edge.timestamps.empty() || !(edge.timestamps.front() <= t_q)) return false;
    auto s = graph.nodes.find(edge.source);
    auto t = graph.nodes.find(edge.target);
    return s != graph.nodes.end() && t != graph.nodes.end() && visible_at(s->second, t_q) &&
           visible_at(t->second, t_q);
}

std::span<const Timestamp> timestamps_through(const std::vector<Timestamp>& sorted,
                                              Timestamp t_q) {
    auto it = std::upper_bound(sorted.begin(), sorted.end(), t_q);
    return {sorted.data(), static_cast<std::size_t>(it - sorted.begin())};
}

// Restricts every timestamped component of an element to [lo, hi].
EntityNode clip_node(const EntityNode& node, const TemporalGraph& graph, Timestamp lo,
                     Timestamp hi) {
    EntityNode out;
    out.id = node.id;
    out.type = node.type;
    out.name = node.name;
    if (node.confirmed_at && lo <= *node.confirmed_at && *node.confirmed_at <= hi)
        out.confirmed_at = node.confirmed_at;
    for (Timestamp t : node.timestamps)
        if (lo <= t && t <= hi) out.timestamps.push_back(t);
    for (const auto& [t, d] : node.descriptions)
        if (lo <= t && t <= hi) out.descriptions.emplace_back(t, d);
    for (const auto& [key, av] : node.attributes) {
        AttributeValue clipped;
        for (const auto& entry : av.history)
            if (lo <= entry.first && entry.first <= hi) clipped.history.push_back(entry);
        if (!clipped.history.empty()) out.attributes.emplace(key, std::move(clipped));
    }
    for (const std::string& cid : node.source_chunks) {
        auto it = graph.chunks.find(cid);
        if (it != graph.chunks.end() && lo <= it->second.anchor && it->second.anchor <= hi)
            out.source_chunks.insert(cid);
    }
    return out;
}

RelationEdge clip_edge(const RelationEdge& edge, const TemporalGraph& graph, Timestamp lo,
                       Timestamp hi) {
    RelationEdge out;
    out.id = edge.id;
    out.source = edge.source;
    out.target = edge.target;
    for (Timestamp t : edge.timestamps)
        if (lo <= t && t <= hi) out.timestamps.push_back(t);
    for (const auto& [t, d] : edge.descriptions)
        if (lo <= t && t <= hi) out.descriptions.emplace_back(t, d);
    for (const EdgeKeyword& kw : edge.keywords)
        if (lo <= kw.first_seen && kw.first_seen <= hi) out.keywords.push_back(kw);
    for (const auto& obs : edge.strength_obs)
        if (lo <= obs.first && obs.first <= hi) out.strength_obs.push_back(obs);
    for (const std::string& cid : edge.source_chunks) {
        auto it = graph.chunks.find(cid);
        if (it != graph.chunks.end() && lo <= it->second.anchor && it->second.anchor <= hi)
            out.source_chunks.insert(cid);
    }
    return out;
}

namespace {

std::string latest_description(const std::vector<std::pair<Timestamp, std::string>>& descs) {
    return descs.empty() ? std::string() : descs.back().second;
}

// Text stand-in for an entity during similarity resolution.
std::string resolution_text(const std::string& name, const std::string& description) {
    if (description.empty()) return name;
    return name + ". " + description;
}

struct Resolver {
    TemporalGraph& graph;
    const MergePolicy& policy;
    EmbeddingProvider* embedder;

    // Exact normalized-name lookup; node ids are derived from the name,
    // so the id itself is the index.
    std::string exact(EntityType type, const std::string& norm_key) const {
        std::string id = node_id_for(type, norm_key);
        return graph.nodes.count(id) ? id : std::string();
    }

    std::string by_similarity(std::optional<EntityType> type, const std::string& name,
                              const std::string& description) const {
        if (!embedder) return {};
        std::vector<double> probe = embedder->embed(resolution_text(name, description));
        std::string best_id;
        double best = 0.0;
        for (const auto& [id, node] : graph.nodes) {
            if (type && node.type != *type) continue;
            std::vector<double> cand =
                embedder->embed(resolution_text(node.name, latest_description(node.descriptions)));
            double score = cosine_similarity(probe, cand);
            if (score < policy.tau_merge) continue;
            if (best_id.empty() || score > best || (score == best && id < best_id)) {
                best = score;
                best_id = id;
            }
        }
        return best_id;
    }

    std::string entity(EntityType type, const std::string& name, const std::string& description) const {
        std::string id = exact(type, normalized_key(name));
        if (!id.empty()) return id;
        return by_similarity(type, name, description);
    }

    // Relation endpoints carry no type; exact match scans the four types
    // in schema order, similarity scans every node.
    std::string endpoint(const std::string& name) const {
        std::string key = normalized_key(name);
        for (EntityType t : {EntityType::person, EntityType::location, EntityType::object,
                             EntityType::event}) {
            std::string id = exact(t, key);
            if (!id.empty()) return id;
        }
        return by_similarity(std::nullopt, name, "");
    }
};

void touch(EntityNode& node, Timestamp anchor, const std::string& chunk_id) {
    insert_sorted_unique(node.timestamps, anchor);
    node.source_chunks.insert(chunk_id);
}

} // namespace

void MergePolicy::validate() const {
    if (!(tau_merge > 0.0 && tau_merge <= 1.0))
        throw Error(Errc::bad_config, "tau_merge must be in (0, 1]");
    if (summarize_after == 0) throw Error(Errc::bad_config, "summarize_after must be positive");
}

void MergeReport::add(const MergeReport& other) {
    nodes_created += other.nodes_created;
    nodes_merged += other.nodes_merged;
    edges_created += other.edges_created;
    edges_merged += other.edges_merged;
    attributes_updated += other.attributes_updated;
    stubs_created += other.stubs_created;
    faults.insert(faults.end(), other.faults.begin(), other.faults.end());
}

const EntityNode* TemporalGraph::find_node(EntityType type, std::string_view name) const {
    auto it = nodes.find(node_id_for(type, normalized_key(name)));
    return it == nodes.end() ? nullptr : &it->second;
}

std::size_t TemporalGraph::count_nodes(EntityType type) const {
    std::size_t n = 0;
    for (const auto& [id, node] : nodes)
        if (node.type == type) ++n;
    return n;
}

std::string node_id_for(EntityType type, std::string_view normalized_name) {
    std::string material = std::string(to_string(type)) + "\x1f" + std::string(normalized_name);
    return "n" + to_hex(fnv1a64(material));
}

std::string edge_id_for(std::string_view node_a, std::string_view node_b) {
    std::string_view lo = std::min(node_a, node_b);
    std::string_view hi = std::max(node_a, node_b);
    return "e" + to_hex(fnv1a64(std::string(lo) + "\x1f" + std::string(hi)));
}

namespace {

EntityNode& get_or_create_node(TemporalGraph& graph, EntityType type, const std::string& name,
                               std::optional<Timestamp> confirmed_at, MergeReport& report) {
    std::string id = node_id_for(type, normalized_key(name));
    auto it = graph.nodes.find(id);
    if (it == graph.nodes.end()) {
        EntityNode node;
        node.id = id;
        node.type = type;
        node.name = name;
        node.confirmed_at = confirmed_at;
        it = graph.nodes.emplace(id, std::move(node)).first;
        if (!confirmed_at) {
            ++report.stubs_created;
            report.faults.push_back("unresolved relation endpoint '" + name +
                                    "' created as object stub");
        } else {
            ++report.nodes_created;
        }
    }
    return it->second;
}

void apply_attribute(EntityNode& node, const EntitySchema& schema, const std::string& key,
                     const std::string& value, Timestamp anchor, MergeReport& report) {
    if (value.empty()) return; // emptiness never erases
    if (!schema.has_attribute(node.type, key)) {
        report.faults.push_back(node.name + ": attribute '" + key + "' not in schema for " +
                                std::string(to_string(node.type)));
        return;
    }
    std::string stored = value;
    if (node.type == EntityType::event && key == "start_time") {
        try {
            stored = format_timestamp(parse_timestamp(value)); // canonicalize when well-formed
        } catch (const Error&) {
            report.faults.push_back(node.name + ": start_time kept verbatim (not a timestamp): " +
                                    value);
        }
    }
    AttributeValue& av = node.attributes[key];
    if (!av.history.empty() && anchor < av.updated_at()) return; // most recent wins
    av.history.emplace_back(anchor, stored);
    ++report.attributes_updated;
}

} // namespace

MergeReport apply_records(TemporalGraph& graph, const Chunk& chunk,
                          const std::vector<ExtractionRecord>& records, const MergePolicy& policy,
                          EmbeddingProvider* embedder) {
    policy.validate();
    MergeReport report;
    if (graph.chunks.count(chunk.chunk_id)) {
        report.reapplied_chunk = true;
        return report;
    }
    if (policy.strict_order && graph.last_anchor && chunk.anchor < *graph.last_anchor)
        throw Error(Errc::stale_chunk, "chunk " + chunk.chunk_id + " anchored " +
                                           format_timestamp(chunk.anchor) + " arrives after " +
                                           format_timestamp(*graph.last_anchor));

    const EntitySchema& schema = EntitySchema::egocentric();
    const Timestamp anchor = chunk.anchor;

    Chunk stored = chunk;
    for (const ExtractionRecord& rec : records) {
        if (const auto* kws = std::get_if<KeywordsRec>(&rec)) {
            for (const std::string& kw : kws->keywords) {
                bool dup = std::any_of(stored.keywords.begin(), stored.keywords.end(),
                                       [&](const std::string& k) {
                                           return normalized_key(k) == normalized_key(kw);
                                       });
                if (!dup) stored.keywords.push_back(kw);
            }
        }
    }
    graph.chunks.emplace(stored.chunk_id, stored);

    Resolver resolver{graph, policy, embedder};

    for (const ExtractionRecord& rec : records) {
        if (const auto* e = std::get_if<EntityRec>(&rec)) {
            std::string id = resolver.entity(e->type, e->name, e->description);
            EntityNode* node;
            if (id.empty()) {
                node = &get_or_create_node(graph, e->type, e->name, anchor, report);
            } else {
                node = &graph.nodes.at(id);
                ++report.nodes_merged;
                if (!node->confirmed_at) node->confirmed_at = anchor; // direct observation confirms a stub
            }
            touch(*node, anchor, stored.chunk_id);
            if (!e->description.empty())
                insert_description(node->descriptions, anchor, e->description);
            for (const auto& [k, v] : e->attributes)
                apply_attribute(*node, schema, k, v, anchor, report);
        } else if (const auto* r = std::get_if<RelationRec>(&rec)) {
            std::string sid = resolver.endpoint(r->source);
            if (sid.empty())
                sid = get_or_create_node(graph, EntityType::object, r->source, std::nullopt, report).id;
            std::string tid = resolver.endpoint(r->target);
            if (tid.empty())
                tid = get_or_create_node(graph, EntityType::object, r->target, std::nullopt, report).id;

            EntityNode& src = graph.nodes.at(sid);
            EntityNode& tgt = graph.nodes.at(tid);
            touch(src, anchor, stored.chunk_id);
            if (sid != tid) touch(tgt, anchor, stored.chunk_id);

            std::string eid = edge_id_for(sid, tid);
            auto it = graph.edges.find(eid);
            if (it == graph.edges.end()) {
                RelationEdge edge;
                edge.id = eid;
                edge.source = std::min(sid, tid);
                edge.target = std::max(sid, tid);
                it = graph.edges.emplace(eid, std::move(edge)).first;
                ++report.edges_created;
            } else {
                ++report.edges_merged;
            }
            RelationEdge& edge = it->second;
            insert_sorted_unique(edge.timestamps, anchor);
            edge.source_chunks.insert(stored.chunk_id);
            if (!r->description.empty())
                insert_description(edge.descriptions, anchor,
                                   src.name + " -> " + tgt.name + ": " + r->description);
            for (const std::string& kw : r->keywords) {
                auto pos = std::find_if(edge.keywords.begin(), edge.keywords.end(),
                                        [&](const EdgeKeyword& k) {
                                            return normalized_key(k.text) == normalized_key(kw);
                                        });
                if (pos == edge.keywords.end()) {
                    auto at = std::lower_bound(edge.keywords.begin(), edge.keywords.end(), kw,
                                               [](const EdgeKeyword& k, const std::string& s) {
                                                   return normalized_key(k.text) < normalized_key(s);
                                               });
                    edge.keywords.insert(at, {kw, anchor});
                }
            }
            auto at = std::upper_bound(
                edge.strength_obs.begin(), edge.strength_obs.end(), anchor,
                [](Timestamp a, const auto& b) { return a < b.first; });
            edge.strength_obs.insert(at, {anchor, r->strength});
        }
    }

    if (!graph.last_anchor || anchor > *graph.last_anchor) graph.last_anchor = anchor;
    ++graph.revision;
    return report;
}

TemporalGraph temporal_filter(const TemporalGraph& graph, Timestamp t_q) {
    const Timestamp lo = Timestamp::origin();
    TemporalGraph out;
    out.revision = graph.revision;
    for (const auto& [cid, chunk] : graph.chunks) {
        if (chunk.anchor <= t_q) {
            out.chunks.emplace(cid, chunk);
            if (!out.last_anchor || chunk.anchor > *out.last_anchor) out.last_anchor = chunk.anchor;
        }
    }
    for (const auto& [id, node] : graph.nodes)
        if (visible_at(node, t_q)) out.nodes.emplace(id, clip_node(node, graph, lo, t_q));
    for (const auto& [id, edge] : graph.edges)
        if (visible_at(graph, edge, t_q)) out.edges.emplace(id, clip_edge(edge, graph, lo, t_q));
    return out;
}

TemporalGraph window_query(const TemporalGraph& graph, const TimeWindow& window) {
    TemporalGraph out;
    out.revision = graph.revision;
    std::set<std::string> endpoint_ids;
    for (const auto& [id, edge] : graph.edges) {
        bool hit = std::any_of(edge.timestamps.begin(), edge.timestamps.end(),
                               [&](Timestamp t) { return window.contains(t); });
        if (!hit) continue;
        out.edges.emplace(id, clip_edge(edge, graph, window.start, window.end));
        endpoint_ids.insert(edge.source);
        endpoint_ids.insert(edge.target);
    }
    for (const std::string& id : endpoint_ids)
        out.nodes.emplace(id, clip_node(graph.nodes.at(id), graph, window.start, window.end));
    for (const auto& [cid, chunk] : graph.chunks) {
        if (window.contains(chunk.anchor)) {
            out.chunks.emplace(cid, chunk);
            if (!out.last_anchor || chunk.anchor > *out.last_anchor) out.last_anchor = chunk.anchor;
        }
    }
    return out;
}

namespace {

bool summarize_descriptions(std::vector<std::pair<Timestamp, std::string>>& descs,
                            std::size_t timestamps, Summarizer& summarizer,
                            const MergePolicy& policy) {
    if (timestamps <= policy.summarize_after) return false;
    if (descs.size() <= policy.summarize_after) return false;
    std::size_t n_old = descs.size() - policy.summarize_after;
    std::vector<std::string> old_texts;
    old_texts.reserve(n_old);
    for (std::size_t i = 0; i < n_old; ++i) old_texts.push_back(descs[i].second);
    std::string summary;
    try {
        summary = summarizer.summarize(old_texts);
    } catch (const Error& e) {
        throw Error(Errc::summarizer_failure, e.what()); // element left unchanged
    }
    std::vector<std::pair<Timestamp, std::string>> next;
    next.reserve(policy.summarize_after + 1);
    next.emplace_back(descs.front().first, std::move(summary));
    next.insert(next.end(), descs.begin() + static_cast<std::ptrdiff_t>(n_old), descs.end());
    if (next == descs) return false; // already compacted to this exact shape
    descs = std::move(next);
    return true;
}

} // namespace

bool maybe_summarize(EntityNode& node, Summarizer& summarizer, const MergePolicy& policy) {
    return summarize_descriptions(node.descriptions, node.timestamps.size(), summarizer, policy);
}

bool maybe_summarize(RelationEdge& edge, Summarizer& summarizer, const MergePolicy& policy) {
    return summarize_descriptions(edge.descriptions, edge.timestamps.size(), summarizer, policy);
}

std::size_t summarize_overflow(TemporalGraph& graph, Summarizer& summarizer,
                               const MergePolicy& policy) {
    std::size_t changed = 0;
    for (auto& [id, node] : graph.nodes)
        if (maybe_summarize(node, summarizer, policy)) ++changed;
    for (auto& [id, edge] : graph.edges)
        if (maybe_summarize(edge, summarizer, policy)) ++changed;
    if (changed) ++graph.revision;
    return changed;
}

namespace {

void fail_invariant(const std::string& what) { throw Error(Errc::corrupt_stream, what); }

void check_element_times(const std::string& label, const std::vector<Timestamp>& ts,
                         const std::vector<std::pair<Timestamp, std::string>>& descs) {
    for (std::size_t i = 1; i < ts.size(); ++i)
        if (!(ts[i - 1] < ts[i])) fail_invariant(label + ": timestamps not strictly ascending");
    for (std::size_t i = 1; i < descs.size(); ++i)
        if (descs[i].first < descs[i - 1].first)
            fail_invariant(label + ": descriptions out of order");
    for (const auto& [t, d] : descs)
        if (!std::binary_search(ts.begin(), ts.end(), t))
            fail_invariant(label + ": description timestamp " + format_timestamp(t) +
                           " missing from timestamp list");
}

} // namespace

void check_invariants(const TemporalGraph& graph) {
    const EntitySchema& schema = EntitySchema::egocentric();
    for (const auto& [id, node] : graph.nodes) {
        if (id != node.id) fail_invariant("node map key differs from node id " + node.id);
        if (node.id != node_id_for(node.type, normalized_key(node.name)))
            fail_invariant("node id not derived from name: " + node.name);
        check_element_times("node " + node.name, node.timestamps, node.descriptions);
        if (node.confirmed_at &&
            !std::binary_search(node.timestamps.begin(), node.timestamps.end(), *node.confirmed_at))
            fail_invariant("node " + node.name + ": confirmed_at missing from timestamps");
        for (const auto& [key, av] : node.attributes) {
            if (!schema.has_attribute(node.type, key))
                fail_invariant("node " + node.name + ": attribute '" + key + "' outside schema");
            if (av.history.empty()) fail_invariant("node " + node.name + ": empty attribute history");
            for (std::size_t i = 1; i < av.history.size(); ++i)
                if (av.history[i].first < av.history[i - 1].first)
                    fail_invariant("node " + node.name + ": attribute history out of order");
            for (const auto& [t, v] : av.history)
                if (!std::binary_search(node.timestamps.begin(), node.timestamps.end(), t))
                    fail_invariant("node " + node.name + ": attribute update at " +
                                   format_timestamp(t) + " missing from timestamps");
        }
        for (const std::string& cid : node.source_chunks)
            if (!graph.chunks.count(cid))
                fail_invariant("node " + node.name + " references unknown chunk " + cid);
    }
    for (const auto& [id, edge] : graph.edges) {
        if (id != edge.id) fail_invariant("edge map key differs from edge id " + edge.id);
        if (!graph.nodes.count(edge.source) || !graph.nodes.count(edge.target))
            fail_invariant("edge " + edge.id + " references missing endpoint");
        if (edge.source > edge.target) fail_invariant("edge " + edge.id + " endpoints not canonical");
        if (edge.id != edge_id_for(edge.source, edge.target))
            fail_invariant("edge id not derived from endpoints: " + edge.id);
        check_element_times("edge " + edge.id, edge.timestamps, edge.descriptions);
        for (std::size_t i = 1; i < edge.keywords.size(); ++i)
            if (!(normalized_key(edge.keywords[i - 1].text) < normalized_key(edge.keywords[i].text)))
                fail_invariant("edge " + edge.id + ": keywords not sorted/unique");
        for (const EdgeKeyword& kw : edge.keywords)
            if (!std::binary_search(edge.timestamps.begin(), edge.timestamps.end(), kw.first_seen))
                fail_invariant("edge " + edge.id + ": keyword first_seen missing from timestamps");
        for (std::size_t i = 1; i < edge.strength_obs.size(); ++i)
            if (edge.strength_obs[i].first < edge.strength_obs[i - 1].first)
                fail_invariant("edge " + edge.id + ": strength observations out of order");
        for (const std::string& cid : edge.source_chunks)
            if (!graph.chunks.count(cid))
                fail_invariant("edge " + edge.id + " references unknown chunk " + cid);
    }
}

} // namespace tkg
