#include "tkg/qa.hpp"

#include "tkg/errors.hpp"
#include "tkg/records.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>
#include <span>

namespace tkg {

using nlohmann::json;

std::optional<std::pair<int, int>> time_of_day_seconds(std::string_view label) {
    if (label == "night") return std::pair{0, 21599};
    if (label == "morning") return std::pair{21600, 43199};
    if (label == "afternoon") return std::pair{43200, 64799};
    if (label == "evening") return std::pair{64800, 86399};
    return std::nullopt;
}

namespace {

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Filler words ignored when comparing an activity phrase against an
// event name, so "starting to play the piano" matches "play the piano".
const std::set<std::string>& filler_words() {
    static const std::set<std::string> words = {
        "the", "a",  "an",  "to",  "starting", "started", "start", "starts",
        "he",  "she", "they", "his", "her",     "their",   "it",    "its"};
    return words;
}

std::vector<std::string> canonical_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&]() {
        if (!cur.empty() && !filler_words().count(cur)) out.push_back(cur);
        cur.clear();
    };
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        else
            flush();
    }
    flush();
    std::sort(out.begin(), out.end());
    return out;
}

const EntityNode* pick_smaller_id(const EntityNode* a, const EntityNode* b) {
    if (!a) return b;
    if (!b) return a;
    return a->id <= b->id ? a : b;
}

// Read-only lens over the full graph at query time. Visibility and
// timestamp reads stop at t_q, so resolvers see exactly what
// temporal_filter would materialize without paying for the copy.
struct GraphAt {
    const TemporalGraph& graph;
    Timestamp t_q;

    bool has(const EntityNode& n) const { return visible_at(n, t_q); }
    bool has(const RelationEdge& e) const { return visible_at(graph, e, t_q); }
    std::span<const Timestamp> times(const EntityNode& n) const {
        return timestamps_through(n.timestamps, t_q);
    }
    std::span<const Timestamp> times(const RelationEdge& e) const {
        return timestamps_through(e.timestamps, t_q);
    }
    const EntityNode* find_node(EntityType type, const std::string& name) const {
        const EntityNode* n = graph.find_node(type, name);
        return n && has(*n) ? n : nullptr;
    }
};

// Normalized exact key, then canonical-token equality, then embedding
// similarity when available. Deterministic: token and embedding ties
// break toward the smaller node id.
const EntityNode* find_entity(const GraphAt& at, const std::string& name,
                              EmbeddingProvider* embedder,
                              std::optional<EntityType> only = std::nullopt) {
    for (EntityType t :
         {EntityType::person, EntityType::location, EntityType::object, EntityType::event}) {
        if (only && t != *only) continue;
        if (const EntityNode* n = at.find_node(t, name)) return n;
    }
    std::vector<std::string> want = canonical_tokens(name);
    if (!want.empty()) {
        const EntityNode* best = nullptr;
        for (const auto& [id, node] : at.graph.nodes) {
            if (only && node.type != *only) continue;
            if (!at.has(node)) continue;
            if (canonical_tokens(node.name) == want) best = pick_smaller_id(best, &node);
        }
        if (best) return best;
    }
    if (embedder) {
        std::vector<double> q = embedder->embed(name);
        const EntityNode* best = nullptr;
        double best_score = 0.5; // weak floor; below it a name match is noise
        for (const auto& [id, node] : at.graph.nodes) {
            if (only && node.type != *only) continue;
            if (!at.has(node)) continue;
            double s = cosine_similarity(q, embedder->embed(node.name));
            if (s > best_score || (best && s == best_score && id < best->id)) {
                best = &node;
                best_score = s;
            }
        }
        if (best) return best;
    }
    return nullptr;
}

std::string event_label(const EntityNode& event, const EntityNode& person) {
    const std::string& n = event.name;
    if (n.size() > person.name.size() + 1 && n.compare(0, person.name.size(), person.name) == 0 &&
        n[person.name.size()] == ' ')
        return n.substr(person.name.size() + 1);
    return n;
}

struct PersonEvent {
    const EntityNode* node;
    std::string label;
};

// Event nodes reachable from the person over one edge, labeled with
// the event name minus the person prefix.
std::vector<PersonEvent> events_of(const GraphAt& at, const EntityNode& person) {
    std::vector<PersonEvent> out;
    std::set<std::string> seen;
    for (const auto& [eid, edge] : at.graph.edges) {
        const std::string* other = nullptr;
        if (edge.source == person.id) other = &edge.target;
        else if (edge.target == person.id) other = &edge.source;
        else continue;
        if (!at.has(edge)) continue;
        auto it = at.graph.nodes.find(*other);
        if (it == at.graph.nodes.end() || it->second.type != EntityType::event) continue;
        if (!seen.insert(it->second.id).second) continue;
        out.push_back({&it->second, event_label(it->second, person)});
    }
    return out;
}

std::vector<PersonEvent> matching_events(const std::vector<PersonEvent>& events,
                                         const std::string& phrase) {
    std::vector<std::string> want = canonical_tokens(phrase);
    std::vector<PersonEvent> out;
    for (const PersonEvent& pe : events)
        if (canonical_tokens(pe.label) == want || canonical_tokens(pe.node->name) == want)
            out.push_back(pe);
    return out;
}

Answer make_resolved(std::string text, std::vector<Timestamp> cited,
                     std::vector<std::pair<std::string, ElementKind>> sources) {
    Answer a;
    a.text = std::move(text);
    a.cited_timestamps = std::move(cited);
    a.sources = std::move(sources);
    a.path = AnswerPath::resolved;
    return a;
}

std::optional<Answer> resolve_occurrence(const StructuredTemporalQuery& q, const GraphAt& at,
                                         EmbeddingProvider* embedder) {
    bool first = q.kind == StructuredKind::first_occurrence;
    std::vector<Timestamp> times;
    std::vector<std::pair<std::string, ElementKind>> sources;
    if (!q.object.empty()) {
        const EntityNode* person = find_entity(at, q.subject, embedder, EntityType::person);
        if (person) {
            for (const PersonEvent& pe : matching_events(events_of(at, *person), q.object)) {
                auto ts = at.times(*pe.node);
                times.insert(times.end(), ts.begin(), ts.end());
                sources.push_back({pe.node->id, ElementKind::node});
            }
        }
        if (times.empty()) {
            const EntityNode* node = find_entity(at, q.subject + " " + q.object, embedder);
            if (!node) node = find_entity(at, q.object, embedder);
            if (node) {
                auto ts = at.times(*node);
                times.assign(ts.begin(), ts.end());
                sources = {{node->id, ElementKind::node}};
            }
        }
    } else {
        const EntityNode* node = find_entity(at, q.subject, embedder);
        if (node) {
            auto ts = at.times(*node);
            times.assign(ts.begin(), ts.end());
            sources = {{node->id, ElementKind::node}};
        }
    }
    if (times.empty()) return std::nullopt;
    Timestamp t = first ? *std::min_element(times.begin(), times.end())
                        : *std::max_element(times.begin(), times.end());
    if (q.window && !q.window->contains(t)) return std::nullopt;
    return make_resolved(format_timestamp(t), {t}, std::move(sources));
}

std::optional<Answer> resolve_count(const StructuredTemporalQuery& q, const GraphAt& at,
                                    EmbeddingProvider* embedder) {
    const EntityNode* person = find_entity(at, q.subject, embedder, EntityType::person);
    std::vector<Timestamp> times;
    std::vector<std::pair<std::string, ElementKind>> sources;
    if (person) {
        for (const PersonEvent& pe : matching_events(events_of(at, *person), q.object)) {
            auto ts = at.times(*pe.node);
            times.insert(times.end(), ts.begin(), ts.end());
            sources.push_back({pe.node->id, ElementKind::node});
        }
    }
    if (times.empty()) {
        const EntityNode* node = find_entity(at, q.object, embedder);
        if (node) {
            auto ts = at.times(*node);
            times.assign(ts.begin(), ts.end());
            sources = {{node->id, ElementKind::node}};
        }
    }
    std::vector<Timestamp> counted;
    for (const Timestamp& t : times)
        if (!q.window || q.window->contains(t)) counted.push_back(t);
    // Zero matches is indistinguishable from a wrong entity match, so
    // hand those to the language-model path instead of asserting "0".
    if (counted.empty()) return std::nullopt;
    std::sort(counted.begin(), counted.end());
    const std::size_t count = counted.size();
    return make_resolved(std::to_string(count), std::move(counted), std::move(sources));
}

std::optional<Answer> resolve_where(const StructuredTemporalQuery& q, const GraphAt& at,
                                    EmbeddingProvider* embedder) {
    const EntityNode* subject = find_entity(at, q.subject, embedder, EntityType::object);
    if (!subject) subject = find_entity(at, q.subject, embedder);
    if (!subject) return std::nullopt;
    const EntityNode* best_loc = nullptr;
    const RelationEdge* best_edge = nullptr;
    std::optional<Timestamp> best_t;
    for (const auto& [eid, edge] : at.graph.edges) {
        const std::string* other = nullptr;
        if (edge.source == subject->id) other = &edge.target;
        else if (edge.target == subject->id) other = &edge.source;
        else continue;
        if (!at.has(edge)) continue;
        auto it = at.graph.nodes.find(*other);
        if (it == at.graph.nodes.end() || it->second.type != EntityType::location) continue;
        for (const Timestamp& t : at.times(edge)) {
            bool better = !best_t || t > *best_t ||
                          (t == *best_t && it->second.name < best_loc->name);
            if (better) {
                best_t = t;
                best_loc = &it->second;
                best_edge = &edge;
            }
        }
    }
    if (!best_t) return std::nullopt;
    return make_resolved(best_loc->name, {*best_t},
                         {{best_edge->id, ElementKind::edge}, {best_loc->id, ElementKind::node}});
}

std::optional<Answer> resolve_usual(const StructuredTemporalQuery& q, const GraphAt& at,
                                    EmbeddingProvider* embedder) {
    auto range = time_of_day_seconds(q.object);
    if (!range) return std::nullopt;
    const EntityNode* person = find_entity(at, q.subject, embedder, EntityType::person);
    if (!person) return std::nullopt;
    struct Tally {
        std::vector<Timestamp> times;
        std::string node_id;
    };
    std::map<std::string, Tally> by_label;
    for (const PersonEvent& pe : events_of(at, *person)) {
        for (const Timestamp& t : at.times(*pe.node)) {
            if (t.seconds_of_day < range->first || t.seconds_of_day > range->second) continue;
            Tally& tally = by_label[pe.label];
            tally.times.push_back(t);
            tally.node_id = pe.node->id;
        }
    }
    if (by_label.empty()) return std::nullopt;
    const std::string* best = nullptr;
    std::size_t best_n = 0;
    Timestamp best_earliest{};
    bool tie = false;
    for (auto& [label, tally] : by_label) {
        std::sort(tally.times.begin(), tally.times.end());
        if (!best || tally.times.size() > best_n ||
            (tally.times.size() == best_n && tally.times.front() < best_earliest)) {
            if (best && tally.times.size() == best_n) tie = true;
            best = &label;
            best_n = tally.times.size();
            best_earliest = tally.times.front();
        } else if (tally.times.size() == best_n) {
            tie = true;
        }
    }
    const Tally& win = by_label.at(*best);
    Answer a = make_resolved(*best, win.times, {{win.node_id, ElementKind::node}});
    if (tie) a.diagnostics = "ambiguous habit: multiple activities share the top count";
    return a;
}

std::optional<Answer> resolve_after(const StructuredTemporalQuery& q, const GraphAt& at,
                                    EmbeddingProvider* embedder) {
    const EntityNode* person = find_entity(at, q.subject, embedder, EntityType::person);
    if (!person) return std::nullopt;
    std::vector<PersonEvent> events = events_of(at, *person);
    std::vector<PersonEvent> refs = matching_events(events, q.object);
    std::optional<Timestamp> ref_latest;
    std::vector<std::pair<std::string, ElementKind>> sources;
    for (const PersonEvent& pe : refs) {
        auto ts = at.times(*pe.node);
        if (ts.empty()) continue;
        Timestamp t = ts.back(); // sorted, so the last entry is the latest
        if (!ref_latest || t > *ref_latest) ref_latest = t;
        sources.push_back({pe.node->id, ElementKind::node});
    }
    if (!ref_latest) return std::nullopt;
    const PersonEvent* best = nullptr;
    std::optional<Timestamp> best_t;
    for (const PersonEvent& pe : events) {
        for (const Timestamp& t : at.times(*pe.node)) {
            if (!(t > *ref_latest)) continue;
            bool better = !best_t || t < *best_t ||
                          (t == *best_t && pe.node->id < best->node->id);
            if (better) {
                best_t = t;
                best = &pe;
            }
        }
    }
    if (!best) return std::nullopt;
    sources.push_back({best->node->id, ElementKind::node});
    return make_resolved(best->label, {*ref_latest, *best_t}, std::move(sources));
}

} // namespace

std::optional<StructuredTemporalQuery> classify_structured(const std::string& question) {
    static const std::regex re_first_last(
        R"(^\s*When did (\w+) (first|last) (.+?)\??\s*$)", std::regex::icase);
    static const std::regex re_nth_time(
        R"(^\s*When did (\w+) (.+?) for the (first|last) time\??\s*$)", std::regex::icase);
    static const std::regex re_seen(
        R"(^\s*When was (?:the |a |an )?(.+?) (first|last) seen\??\s*$)", std::regex::icase);
    static const std::regex re_count(
        R"(^\s*How many times did (\w+) (.+?)(?: on day (\d+))?\??\s*$)", std::regex::icase);
    static const std::regex re_put(
        R"(^\s*Where did (\w+) last (?:put|place|move|leave) (?:the |a |an )?(.+?)\??\s*$)",
        std::regex::icase);
    static const std::regex re_seen_where(
        R"(^\s*Where (?:was|were) (?:the |a |an )?(.+?) last seen\??\s*$)", std::regex::icase);
    static const std::regex re_usual(
        R"(^\s*What does (\w+) usually do in the (morning|afternoon|evening|night)\??\s*$)",
        std::regex::icase);
    static const std::regex re_after(
        R"(^\s*What did (\w+) do (?:right |immediately )?after (.+?)\??\s*$)", std::regex::icase);

    std::smatch m;
    StructuredTemporalQuery q;
    if (std::regex_match(question, m, re_usual)) {
        q.kind = StructuredKind::usual_value;
        q.subject = m[1];
        q.object = lower(m[2]);
        return q;
    }
    if (std::regex_match(question, m, re_after)) {
        q.kind = StructuredKind::after_event;
        q.subject = m[1];
        q.object = m[2];
        return q;
    }
    if (std::regex_match(question, m, re_put)) {
        q.kind = StructuredKind::where_last_seen;
        q.subject = m[2];
        return q;
    }
    if (std::regex_match(question, m, re_seen_where)) {
        q.kind = StructuredKind::where_last_seen;
        q.subject = m[1];
        return q;
    }
    if (std::regex_match(question, m, re_count)) {
        q.kind = StructuredKind::count_occurrences;
        q.subject = m[1];
        q.object = m[2];
        if (m[3].matched) q.window = TimeWindow::whole_day(std::stoi(m[3]));
        return q;
    }
    if (std::regex_match(question, m, re_first_last)) {
        q.kind = lower(m[2]) == "first" ? StructuredKind::first_occurrence
                                        : StructuredKind::last_occurrence;
        q.subject = m[1];
        q.object = m[3];
        return q;
    }
    if (std::regex_match(question, m, re_nth_time)) {
        q.kind = lower(m[3]) == "first" ? StructuredKind::first_occurrence
                                        : StructuredKind::last_occurrence;
        q.subject = m[1];
        q.object = m[2];
        return q;
    }
    if (std::regex_match(question, m, re_seen)) {
        q.kind = lower(m[2]) == "first" ? StructuredKind::first_occurrence
                                        : StructuredKind::last_occurrence;
        q.subject = m[1];
        return q;
    }
    return std::nullopt;
}

std::optional<Answer> resolve_structured(const StructuredTemporalQuery& q,
                                         const TemporalGraph& graph, Timestamp t_q,
                                         EmbeddingProvider* embedder) {
    if (q.subject.empty()) return std::nullopt;
    GraphAt at{graph, t_q};
    switch (q.kind) {
    case StructuredKind::first_occurrence:
    case StructuredKind::last_occurrence:
        return resolve_occurrence(q, at, embedder);
    case StructuredKind::count_occurrences:
        return resolve_count(q, at, embedder);
    case StructuredKind::where_last_seen:
        return resolve_where(q, at, embedder);
    case StructuredKind::usual_value:
        return resolve_usual(q, at, embedder);
    case StructuredKind::after_event:
        return resolve_after(q, at, embedder);
    }
    return std::nullopt;
}

json ContextPayload::to_json() const {
    json entities_json = json::array();
    for (const ContextEntity& e : entities) {
        json attrs = json::object();
        for (const auto& [key, va] : e.attributes)
            attrs[key] = {{"value", va.first}, {"updated_at", va.second}};
        json descs = json::array();
        for (const auto& [ts, text] : e.descriptions) descs.push_back(json::array({ts, text}));
        entities_json.push_back({{"name", e.name},
                                 {"type", e.type},
                                 {"attributes", std::move(attrs)},
                                 {"timestamps", e.timestamps},
                                 {"descriptions", std::move(descs)}});
    }
    json relations_json = json::array();
    for (const ContextRelation& r : relations) {
        json descs = json::array();
        for (const auto& [ts, text] : r.descriptions) descs.push_back(json::array({ts, text}));
        relations_json.push_back({{"source", r.source},
                                  {"target", r.target},
                                  {"timestamps", r.timestamps},
                                  {"descriptions", std::move(descs)},
                                  {"keywords", r.keywords}});
    }
    json chunks_json = json::array();
    for (const ContextChunk& c : chunks)
        chunks_json.push_back({{"chunk_id", c.chunk_id}, {"anchor", c.anchor}, {"text", c.text}});
    return {{"entities", std::move(entities_json)},
            {"relations", std::move(relations_json)},
            {"chunks", std::move(chunks_json)}};
}

ContextPayload assemble_context(const TemporalGraph& graph, const RetrievalIndex& index,
                                const QARequest& request, std::size_t k,
                                EmbeddingProvider& provider, TextClient* keyword_client) {
    RetrievalResult ranked = retrieve_context(graph, index, request.question, request.t_q,
                                              provider, k, ComponentSet{true, true, true},
                                              keyword_client);
    TemporalGraph view = temporal_filter(graph, request.t_q);
    ContextPayload payload;
    for (const ScoredRef& ref : ranked.nodes) {
        const EntityNode& n = view.nodes.at(ref.id);
        ContextEntity e;
        e.name = n.name;
        e.type = std::string(to_string(n.type));
        for (const auto& [key, av] : n.attributes)
            e.attributes[key] = {av.value(), format_timestamp(av.updated_at())};
        for (const Timestamp& t : n.timestamps) e.timestamps.push_back(format_timestamp(t));
        for (const auto& [t, text] : n.descriptions)
            e.descriptions.push_back({format_timestamp(t), text});
        payload.entities.push_back(std::move(e));
        payload.refs.push_back({ref.id, ElementKind::node});
    }
    for (const ScoredRef& ref : ranked.edges) {
        const RelationEdge& edge = view.edges.at(ref.id);
        ContextRelation r;
        r.source = view.nodes.at(edge.source).name;
        r.target = view.nodes.at(edge.target).name;
        for (const Timestamp& t : edge.timestamps) r.timestamps.push_back(format_timestamp(t));
        for (const auto& [t, text] : edge.descriptions)
            r.descriptions.push_back({format_timestamp(t), text});
        for (const EdgeKeyword& kw : edge.keywords) r.keywords.push_back(kw.text);
        payload.relations.push_back(std::move(r));
        payload.refs.push_back({ref.id, ElementKind::edge});
    }
    for (const ScoredRef& ref : ranked.chunks) {
        const Chunk& c = view.chunks.at(ref.id);
        payload.chunks.push_back({c.chunk_id, format_timestamp(c.anchor), c.text});
        payload.refs.push_back({ref.id, ElementKind::chunk});
    }
    return payload;
}

namespace {

// Answering template; the timestamp-format and temporal-reasoning rule
// blocks must survive byte-identically into every rendered prompt.
constexpr const char* kQaTemplate =
    R"(---Role---

You are a helpful assistant responding to user query about Knowledge Graph and Document Chunks provided in JSON format below.


---Goal---

Generate a concise response based on Knowledge Base and follow Response Rules, considering both the context and the current query.
Based on the provided Knowledge Base, extract and summarize the specific facts, events, and details that directly answer the question. Do not include information not provided by Knowledge Base.


---Time Context---

TIMESTAMP FORMAT:
- Each query, node, and relationship has a timestamp in the format: [DayX, HH:MM:SS]
  where X ranges from 1 to 7, representing a 7-day period
  Example: [Day3, 14:30:00] represents Day 3 at 2:30 PM

QUERY TIMESTAMP AS REFERENCE POINT:
- Use the query's timestamp as "NOW" when interpreting time-related questions
- All relative time expressions (e.g., "recently", "last time", "2 hours ago", "yesterday") should be interpreted relative to the query timestamp

TEMPORAL REASONING:
- For questions about "first/earliest" or "last/latest":
  * Compare all relevant timestamps (Day1 < Day2, within same day compare HH:MM:SS)
  * "First" = earliest timestamp, "Last" = latest timestamp
  * Always cite specific timestamps in your answer

---Conversation History---
{history}

---Knowledge Graph and Document Chunks---
{context_data}

---Response Rules---

- Target format and length: {response_type}
- Use markdown formatting with appropriate section headings
- Please respond in the same language as the user's question.
- Ensure the response maintains continuity with the conversation history.
- List up to 5 most important reference sources at the end under "References" section. Clearly indicating whether each source is from Knowledge Graph (KG) or Document Chunks (DC), and include the file path if available, in the following format: [KG/DC] file_path
- If you don't know the answer, just say so.
- Do not make anything up. Do not include information not provided by the Knowledge Base.
- Addtional user prompt: {user_prompt}

{query_block}
Response:)";

std::string option_letter(std::size_t index) {
    return std::string(1, static_cast<char>('A' + index));
}

} // namespace

std::string render_qa_prompt(const ContextPayload& payload, const QARequest& request) {
    std::string history;
    for (const auto& [q, a] : request.history)
        history += "User: " + q + "\nAssistant: " + a + "\n";

    std::string query_block = "---Query---\n\nQuery timestamp (NOW): " +
                              format_timestamp(request.t_q) + "\nQuestion: " + request.question +
                              "\n";
    if (request.choices) {
        query_block += "Options:\n";
        for (std::size_t i = 0; i < request.choices->size(); ++i)
            query_block += option_letter(i) + ". " + (*request.choices)[i] + "\n";
        query_block += "Answer with the letter of the correct option only.\n";
    }

    std::string prompt = kQaTemplate;
    prompt = replace_all(std::move(prompt), "{history}", history);
    prompt = replace_all(std::move(prompt), "{context_data}", payload.to_json().dump(2));
    prompt = replace_all(std::move(prompt), "{response_type}", request.response_type);
    prompt = replace_all(std::move(prompt), "{user_prompt}", request.user_prompt);
    prompt = replace_all(std::move(prompt), "{query_block}", query_block);
    return prompt;
}

namespace {

std::vector<Timestamp> scan_timestamps(const std::string& text) {
    std::vector<Timestamp> out;
    std::size_t pos = 0;
    while ((pos = text.find('[', pos)) != std::string::npos) {
        std::size_t end = text.find(']', pos + 1);
        if (end == std::string::npos) break;
        try {
            Timestamp t = parse_timestamp(std::string_view(text).substr(pos, end - pos + 1));
            if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
            pos = end + 1;
        } catch (const Error&) {
            ++pos;
        }
    }
    return out;
}

bool is_boundary(const std::string& s, std::size_t i) {
    return i >= s.size() || !std::isalnum(static_cast<unsigned char>(s[i]));
}

// A bare letter, a standalone capital letter token, the full option
// text, or a reply containing exactly one option verbatim.
std::optional<std::size_t> parse_choice_reply(const std::string& reply,
                                              const std::vector<std::string>& choices) {
    std::string t = trim(reply);
    // A bare option letter, tolerant of case and wrapping punctuation:
    // "B", "b", "b)", "(C)", "A.".
    std::size_t b = 0;
    std::size_t e = t.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(t[b]))) ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(t[e - 1]))) --e;
    if (e - b == 1) {
        char c = static_cast<char>(std::toupper(static_cast<unsigned char>(t[b])));
        if (c >= 'A' && c < static_cast<char>('A' + choices.size()))
            return static_cast<std::size_t>(c - 'A');
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= 'A' && t[i] < static_cast<char>('A' + choices.size()) &&
            (i == 0 || is_boundary(t, i - 1)) && is_boundary(t, i + 1))
            return static_cast<std::size_t>(t[i] - 'A');
    }
    std::string tl = lower(t);
    for (std::size_t i = 0; i < choices.size(); ++i)
        if (tl == lower(choices[i])) return i;
    std::optional<std::size_t> contained;
    for (std::size_t i = 0; i < choices.size(); ++i) {
        if (tl.find(lower(choices[i])) != std::string::npos) {
            if (contained) return std::nullopt; // ambiguous
            contained = i;
        }
    }
    return contained;
}

// Maps a resolved free-text answer onto an option letter.
std::optional<std::size_t> match_choice(const std::string& text,
                                        const std::vector<std::string>& choices) {
    std::string tl = lower(trim(text));
    for (std::size_t i = 0; i < choices.size(); ++i)
        if (tl == lower(choices[i])) return i;
    std::optional<std::size_t> contained;
    for (std::size_t i = 0; i < choices.size(); ++i) {
        std::string cl = lower(choices[i]);
        if (cl.find(tl) != std::string::npos || tl.find(cl) != std::string::npos) {
            if (contained) return std::nullopt;
            contained = i;
        }
    }
    return contained;
}

Answer delegate(const QARequest& request, const TemporalGraph& graph,
                const RetrievalIndex& index, EmbeddingProvider& provider, TextClient* client,
                const AnswerOptions& options) {
    Answer a;
    if (!client) {
        a.diagnostics = "no answering client configured";
        return a;
    }
    ContextPayload payload =
        assemble_context(graph, index, request, options.k, provider, options.keyword_client);
    std::string prompt = render_qa_prompt(payload, request);
    std::string reply;
    try {
        reply = client->complete(prompt);
    } catch (const Error& e) {
        if (e.code() != Errc::client_failure) throw;
        a.sources = payload.refs;
        a.diagnostics = e.what();
        return a;
    }
    a.sources = payload.refs;
    a.cited_timestamps = scan_timestamps(reply);
    if (request.choices) {
        if (auto idx = parse_choice_reply(reply, *request.choices)) {
            a.text = option_letter(*idx);
            a.path = AnswerPath::delegated;
        } else {
            a.text = trim(reply);
            a.diagnostics = "reply matched no option";
        }
    } else {
        a.text = trim(reply);
        a.path = AnswerPath::delegated;
    }
    return a;
}

} // namespace

Answer answer(const QARequest& request, const TemporalGraph& graph, const RetrievalIndex& index,
              EmbeddingProvider& provider, TextClient* client, const AnswerOptions& options) {
    if (request.question.empty()) throw Error(Errc::empty_input, "empty question");
    if (!request.t_q.valid())
        throw Error(Errc::out_of_range, "query timestamp out of range");
    if (auto structured = classify_structured(request.question)) {
        TemporalGraph view = temporal_filter(graph, request.t_q);
        if (auto resolved = resolve_structured(*structured, view, options.name_match_embedder)) {
            if (!request.choices) return *resolved;
            if (auto idx = match_choice(resolved->text, *request.choices)) {
                resolved->text = option_letter(*idx);
                return *resolved;
            }
            Answer fallback = delegate(request, graph, index, provider, client, options);
            std::string note = "resolved answer '" + resolved->text + "' matched no option";
            fallback.diagnostics =
                fallback.diagnostics.empty() ? note : note + "; " + fallback.diagnostics;
            return fallback;
        }
    }
    return delegate(request, graph, index, provider, client, options);
}

} // namespace tkg
