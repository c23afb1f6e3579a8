#pragma once

#include "tkg/retrieval.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tkg {

// One question posed against the graph at a fixed reference time t_q.
struct QARequest {
    std::string question;
    Timestamp t_q;
    std::vector<std::pair<std::string, std::string>> history; // (question, answer) turns
    std::string response_type = "Multiple Paragraphs";
    std::string user_prompt;                                  // extra instruction, may be empty
    std::optional<std::vector<std::string>> choices;          // multiple-choice mode when set
};

struct ContextEntity {
    std::string name;
    std::string type;
    // key -> (current value, updated_at formatted)
    std::map<std::string, std::pair<std::string, std::string>> attributes;
    std::vector<std::string> timestamps;
    std::vector<std::pair<std::string, std::string>> descriptions; // (timestamp, text)
};

struct ContextRelation {
    std::string source;
    std::string target;
    std::vector<std::string> timestamps;
    std::vector<std::pair<std::string, std::string>> descriptions;
    std::vector<std::string> keywords;
};

struct ContextChunk {
    std::string chunk_id;
    std::string anchor;
    std::string text;
};

// Retrieval output shaped for the prompt. Every timestamp string
// parses back under the timeline grammar and every element passed the
// t_q filter. refs keeps the ranked element ids for answer sourcing.
struct ContextPayload {
    std::vector<ContextEntity> entities;
    std::vector<ContextRelation> relations;
    std::vector<ContextChunk> chunks;
    std::vector<std::pair<std::string, ElementKind>> refs;

    nlohmann::json to_json() const;
};

enum class StructuredKind {
    first_occurrence,
    last_occurrence,
    count_occurrences,
    where_last_seen,
    usual_value,
    after_event,
};

// A question the engine can answer without a language model: pure
// min/max/count/mode arithmetic over matched timestamp sets.
struct StructuredTemporalQuery {
    StructuredKind kind = StructuredKind::first_occurrence;
    std::string subject;               // entity name as written in the question
    std::string object;                // activity phrase, tracked object, or day-part label
    std::optional<TimeWindow> window;  // count restriction, e.g. one whole day
};

enum class AnswerPath { resolved, delegated, unanswerable };

struct Answer {
    std::string text;
    std::vector<Timestamp> cited_timestamps;
    std::vector<std::pair<std::string, ElementKind>> sources;
    AnswerPath path = AnswerPath::unanswerable;
    std::string diagnostics; // ambiguity notes, client errors, fallbacks taken
};

// Seconds-of-day range for a coarse day part: morning, afternoon,
// evening, night. Unknown labels yield nullopt.
std::optional<std::pair<int, int>> time_of_day_seconds(std::string_view label);

// Pattern gateway for the deterministic path. Recognizes first/last
// occurrence, "how many times ... on day N", "where ... last put" /
// "where was ... last seen", "usually ... in the <day part>", and
// "right after ..." questions. Anything else is unstructured.
std::optional<StructuredTemporalQuery> classify_structured(const std::string& question);

// Answers a structured query from an already filtered graph view.
// Name matching tries the normalized exact key, then canonical-token
// equality, then (when an embedder is supplied) cosine similarity.
// Returns nullopt when no entity matches or the timestamp set is
// empty; the caller falls through to the language-model path.
std::optional<Answer> resolve_structured(const StructuredTemporalQuery& q,
                                         const TemporalGraph& view,
                                         EmbeddingProvider* embedder = nullptr);

// Runs temporally filtered retrieval for the request and shapes the
// results into the prompt payload. Throws Error{stale_index} when the
// index lags the graph.
ContextPayload assemble_context(const TemporalGraph& graph, const RetrievalIndex& index,
                                const QARequest& request, std::size_t k,
                                EmbeddingProvider& provider, TextClient* keyword_client = nullptr);

// Instantiates the answering prompt: substitutes history, context
// JSON, response type and user prompt into the fixed template, then
// appends a query block carrying t_q as the NOW reference, the
// question, and (in multiple-choice mode) the lettered options.
std::string render_qa_prompt(const ContextPayload& payload, const QARequest& request);

struct AnswerOptions {
    std::size_t k = kDefaultTopK;
    TextClient* keyword_client = nullptr;        // separate keyword extractor, optional
    EmbeddingProvider* name_match_embedder = nullptr; // resolver fallback, optional
};

// Full pipeline: structured resolution first, language-model fallback
// second. Client failures surface as an unanswerable Answer with
// diagnostics rather than an exception.
Answer answer(const QARequest& request, const TemporalGraph& graph, const RetrievalIndex& index,
              EmbeddingProvider& provider, TextClient* client, const AnswerOptions& options = {});

} // namespace tkg
