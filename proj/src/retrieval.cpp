#include "tkg/retrieval.hpp"

#include "tkg/errors.hpp"
#include "tkg/hash.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>

namespace tkg {

using nlohmann::json;

std::string_view to_string(ElementKind kind) {
    switch (kind) {
    case ElementKind::node: return "node";
    case ElementKind::edge: return "edge";
    case ElementKind::chunk: return "chunk";
    }
    return "?";
}

ComponentSet ComponentSet::parse(std::string_view csv) {
    ComponentSet out{false, false, false};
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        std::size_t comma = csv.find(',', pos);
        std::string_view part = csv.substr(pos, comma == std::string_view::npos ? csv.npos : comma - pos);
        while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
        while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
        if (part == "nodes") out.nodes = true;
        else if (part == "edges") out.edges = true;
        else if (part == "chunks") out.chunks = true;
        else if (!part.empty())
            throw Error(Errc::bad_config, "unknown retrieval component '" + std::string(part) + "'");
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (!out.nodes && !out.edges && !out.chunks)
        throw Error(Errc::bad_config, "no retrieval components selected");
    return out;
}

std::string index_text(const EntityNode& node) {
    std::string out = node.name + ". " + std::string(to_string(node.type)) + ".";
    if (!node.descriptions.empty()) out += " " + node.descriptions.back().second;
    for (const auto& [key, av] : node.attributes) out += " " + key + ":" + av.value();
    return out;
}

std::string index_text(const RelationEdge& edge, const TemporalGraph& graph) {
    auto name_of = [&](const std::string& id) {
        auto it = graph.nodes.find(id);
        return it == graph.nodes.end() ? id : it->second.name;
    };
    std::string out = name_of(edge.source) + " -- " + name_of(edge.target) + ".";
    for (const EdgeKeyword& kw : edge.keywords) out += " " + kw.text;
    if (!edge.descriptions.empty()) out += " " + edge.descriptions.back().second;
    return out;
}

namespace {

std::vector<double> embed_normalized(EmbeddingProvider& provider, const std::string& text) {
    std::vector<double> v = provider.embed(text);
    if (v.size() != provider.dimension())
        throw Error(Errc::dimension_mismatch, "provider emitted " + std::to_string(v.size()) +
                                                  " dims, advertises " +
                                                  std::to_string(provider.dimension()));
    normalize_in_place(v);
    return v;
}

template <typename Fn>
void for_each_element(const TemporalGraph& graph, Fn&& fn) {
    for (const auto& [id, node] : graph.nodes) fn(id, ElementKind::node, index_text(node));
    for (const auto& [id, edge] : graph.edges) fn(id, ElementKind::edge, index_text(edge, graph));
    for (const auto& [id, chunk] : graph.chunks) fn(id, ElementKind::chunk, chunk.text);
}

} // namespace

RetrievalIndex build_index(const TemporalGraph& graph, EmbeddingProvider& provider) {
    RetrievalIndex index;
    index.provider_id = provider.id();
    index.dimension = provider.dimension();
    index.graph_revision = graph.revision;
    for_each_element(graph, [&](const std::string& id, ElementKind kind, const std::string& text) {
        index.entries.push_back({id, kind, fnv1a64(text), embed_normalized(provider, text)});
    });
    return index;
}

std::size_t refresh_index(RetrievalIndex& index, const TemporalGraph& graph,
                          EmbeddingProvider& provider) {
    if (index.provider_id != provider.id() || index.dimension != provider.dimension()) {
        std::size_t n = graph.nodes.size() + graph.edges.size() + graph.chunks.size();
        index = build_index(graph, provider);
        return n;
    }
    std::map<std::pair<int, std::string>, const IndexEntry*> old;
    for (const IndexEntry& e : index.entries) old[{static_cast<int>(e.kind), e.id}] = &e;
    std::vector<IndexEntry> next;
    std::size_t embedded = 0;
    for_each_element(graph, [&](const std::string& id, ElementKind kind, const std::string& text) {
        std::uint64_t fp = fnv1a64(text);
        auto it = old.find({static_cast<int>(kind), id});
        if (it != old.end() && it->second->fingerprint == fp) {
            next.push_back(*it->second);
        } else {
            next.push_back({id, kind, fp, embed_normalized(provider, text)});
            ++embedded;
        }
    });
    index.entries = std::move(next);
    index.graph_revision = graph.revision;
    return embedded;
}

std::vector<ScoredRef> top_k(const RetrievalIndex& index, const std::vector<double>& query_vec,
                             std::size_t k, ElementKind kind,
                             const std::set<std::string>* allowed) {
    if (k == 0) return {};
    if (query_vec.size() != index.dimension)
        throw Error(Errc::dimension_mismatch, "query has " + std::to_string(query_vec.size()) +
                                                  " dims, index has " +
                                                  std::to_string(index.dimension));
    std::vector<ScoredRef> scored;
    for (const IndexEntry& e : index.entries) {
        if (e.kind != kind) continue;
        if (allowed && !allowed->count(e.id)) continue;
        double dot = 0.0;
        for (std::size_t i = 0; i < e.vec.size(); ++i) dot += e.vec[i] * query_vec[i];
        scored.push_back({e.id, dot});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredRef& a, const ScoredRef& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

namespace {

const std::set<std::string>& stopwords() {
    static const std::set<std::string> words = {
        "a",     "an",    "and",   "are",  "as",    "at",    "be",   "been", "but",  "by",
        "did",   "do",    "does",  "for",  "from",  "had",   "has",  "have", "he",   "her",
        "his",   "how",   "i",     "in",   "into",  "is",    "it",   "its",  "of",   "on",
        "or",    "she",   "that",  "the",  "their", "them",  "then", "they", "this", "to",
        "was",   "we",    "were",  "what", "when",  "where", "which", "who", "whom", "why",
        "will",  "with",  "would", "you",  "your",  "about", "after", "before", "if", "not"};
    return words;
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '-';
}

struct Token {
    std::string text;
    bool capitalized = false;
};

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_word_char(text[i])) {
            ++i;
            continue;
        }
        std::size_t b = i;
        while (i < text.size() && is_word_char(text[i])) ++i;
        Token t;
        t.text = std::string(text.substr(b, i - b));
        t.capitalized = std::isupper(static_cast<unsigned char>(t.text[0])) != 0;
        out.push_back(std::move(t));
    }
    return out;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

void push_unique(std::vector<std::string>& list, std::string value) {
    std::string key = lower(value);
    for (const std::string& existing : list)
        if (lower(existing) == key) return;
    list.push_back(std::move(value));
}

KeywordSets heuristic_keywords(const std::string& query) {
    KeywordSets out;
    std::string rest = query;

    // Quoted phrases are taken verbatim as low-level keywords.
    std::size_t pos = 0;
    while ((pos = rest.find('"', pos)) != std::string::npos) {
        std::size_t end = rest.find('"', pos + 1);
        if (end == std::string::npos) break;
        std::string phrase = rest.substr(pos + 1, end - pos - 1);
        if (!phrase.empty()) push_unique(out.low_level, phrase);
        rest.erase(pos, end - pos + 1);
    }

    std::vector<Token> tokens = tokenize(rest);
    std::vector<std::string> run; // adjacent lowercase content words
    auto flush_run = [&]() {
        if (run.empty()) return;
        if (run.size() >= 2) {
            std::string phrase = run[0];
            for (std::size_t i = 1; i < run.size(); ++i) phrase += " " + run[i];
            push_unique(out.low_level, phrase);
        } else {
            push_unique(out.high_level, run[0]);
        }
        run.clear();
    };

    for (std::size_t i = 0; i < tokens.size();) {
        const Token& t = tokens[i];
        if (stopwords().count(lower(t.text))) {
            flush_run();
            ++i;
            continue;
        }
        if (t.capitalized) {
            flush_run();
            std::string phrase = t.text;
            ++i;
            while (i < tokens.size() && tokens[i].capitalized &&
                   !stopwords().count(lower(tokens[i].text))) {
                phrase += " " + tokens[i].text;
                ++i;
            }
            push_unique(out.low_level, phrase);
            continue;
        }
        run.push_back(t.text);
        ++i;
    }
    flush_run();
    return out;
}

std::string keyword_prompt(const std::string& query) {
    return "Extract search keywords from the question below. Reply with JSON only, in the shape\n"
           "{\"high_level_keywords\": [\"theme\", ...], \"low_level_keywords\": [\"entity or "
           "detail\", ...]}\n\nQuestion: " +
           query + "\nJSON:";
}

} // namespace

KeywordSets extract_keywords(const std::string& query, TextClient* client) {
    if (client) {
        try {
            std::string reply = client->complete(keyword_prompt(query));
            std::size_t brace = reply.find('{');
            if (brace != std::string::npos) reply = reply.substr(brace);
            json j = json::parse(reply, nullptr, false);
            if (!j.is_discarded() && j.is_object()) {
                KeywordSets out;
                for (const json& kw : j.value("high_level_keywords", json::array()))
                    if (kw.is_string()) push_unique(out.high_level, kw.get<std::string>());
                for (const json& kw : j.value("low_level_keywords", json::array()))
                    if (kw.is_string()) push_unique(out.low_level, kw.get<std::string>());
                return out;
            }
        } catch (const Error&) {
            // fall through to the heuristic
        }
        KeywordSets out = heuristic_keywords(query);
        out.client_failed = true;
        return out;
    }
    return heuristic_keywords(query);
}

RetrievalResult retrieve_context(const TemporalGraph& graph, const RetrievalIndex& index,
                                 const std::string& query, std::optional<Timestamp> t_q,
                                 EmbeddingProvider& provider, std::size_t k,
                                 ComponentSet components, TextClient* keyword_client,
                                 KeywordSets* keywords_out) {
    if (index.graph_revision != graph.revision)
        throw Error(Errc::stale_index, "index watermark " + std::to_string(index.graph_revision) +
                                           " lags graph revision " + std::to_string(graph.revision));
    if (index.provider_id != provider.id())
        throw Error(Errc::stale_index, "index was built by provider " + index.provider_id);

    KeywordSets keywords = extract_keywords(query, keyword_client);
    if (keywords_out) *keywords_out = keywords;
    std::string joint = query;
    for (const std::string& kw : keywords.low_level) joint += " " + kw;
    for (const std::string& kw : keywords.high_level) joint += " " + kw;
    std::vector<double> qvec = embed_normalized(provider, joint);

    std::optional<TemporalGraph> filtered;
    std::set<std::string> allowed_nodes, allowed_edges, allowed_chunks;
    if (t_q) {
        filtered = temporal_filter(graph, *t_q);
        for (const auto& [id, node] : filtered->nodes) allowed_nodes.insert(id);
        for (const auto& [id, edge] : filtered->edges) allowed_edges.insert(id);
        for (const auto& [id, chunk] : filtered->chunks) allowed_chunks.insert(id);
    }

    RetrievalResult result;
    result.k = k;
    result.t_q = t_q;
    if (components.nodes)
        result.nodes = top_k(index, qvec, k, ElementKind::node, t_q ? &allowed_nodes : nullptr);
    if (components.edges)
        result.edges = top_k(index, qvec, k, ElementKind::edge, t_q ? &allowed_edges : nullptr);
    if (components.chunks)
        result.chunks = top_k(index, qvec, k, ElementKind::chunk, t_q ? &allowed_chunks : nullptr);
    return result;
}

} // namespace tkg
