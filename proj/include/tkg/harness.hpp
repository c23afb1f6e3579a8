#pragma once

#include "tkg/qa.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tkg {

// One recurring activity the simulator can schedule. day_part limits
// when it may fire ("any", "morning", "afternoon", "evening");
// recurrence is the per-day chance the template is eligible at all.
struct ActivityTemplate {
    std::string verb_phrase;   // base form, e.g. "play the piano"
    int arity = 1;             // participants; the grammar covers 1
    int location_index = 0;    // fixed venue, index into the location vocabulary
    std::string day_part = "any";
    double recurrence = 1.0;
};

struct WorldSpec {
    std::uint64_t seed = 42;
    int days = 7;
    int n_persons = 6;
    int n_objects = 12;
    int n_locations = 8;
    std::vector<ActivityTemplate> activities; // empty selects the built-in table
    double habit_bias = 0.7;      // pull toward the person's habitual activity
    double placement_share = 0.3; // fraction of slots that move an object
    int events_per_day = 60;
    int day_start = 28800; // 08:00, first slot opens here
    int day_end = 79200;   // 22:00, no slot starts at or after this

    // Throws Error{bad_config} on empty vocabularies, days < 1,
    // probabilities outside [0,1], or a slot layout that cannot keep
    // event times strictly increasing.
    void validate() const;
};

enum class GoldKind { activity, placement };

struct GoldEvent {
    Timestamp time;
    GoldKind kind = GoldKind::activity;
    std::string person;
    std::string activity; // verb phrase; activities only
    std::string object;   // placements only
    std::string location;
};

// Ground truth: every simulated event in strictly increasing time
// order. Object locations at any instant are the fold of placements.
struct GoldLog {
    std::vector<GoldEvent> events;
    std::vector<std::string> persons;
    std::vector<std::string> objects;
    std::vector<std::string> locations;
    std::vector<std::string> activities; // verb phrases in template order
};

// Seeded simulation: per day, events_per_day slots spread over
// [day_start, day_end) with sub-minute jitter; each slot holds one
// caption sentence. Objects are moved only by their owners. Emits one
// document per day plus the matching gold log; byte-identical per seed.
std::pair<std::vector<SourceDocument>, GoldLog> generate_world(const WorldSpec& spec);

// Deterministic extraction stand-in: inverts the generator grammar.
// Given an extraction prompt, it parses the chunk text back out and
// emits delimiter records for the persons, objects, locations, events,
// and relations each sentence encodes. Unparseable sentences yield no
// records, so free-form text degrades soft.
class CaptionExtractor : public TextClient {
public:
    explicit CaptionExtractor(DelimiterConfig delimiters = {});

    std::string complete(const std::string& prompt) override;
    std::string id() const override { return "caption-extractor"; }

    std::size_t calls() const { return calls_; }

private:
    DelimiterConfig delimiters_;
    std::size_t calls_ = 0;
};

enum class QuestionCategory {
    entity_log,      // how many times
    event_recall,    // first / last occurrence
    habit_insight,   // usually
    task_dependency, // right after
    entity_tracking, // where
};

std::string_view to_string(QuestionCategory category);
std::optional<QuestionCategory> question_category_from(std::string_view text);

struct GeneratedQuestion {
    std::string text;
    QuestionCategory category = QuestionCategory::event_recall;
    std::string variant; // "first","last","count","usual","after","where_put","where_seen"
    Timestamp t_q;
    std::string gold;                 // always one of choices
    std::vector<std::string> choices; // exactly 4
    // Oracle metadata; mirrors what the question text mentions.
    std::string person;
    std::string activity;
    std::string object_name;
    std::string time_of_day;
    std::optional<int> day;
    Timestamp evidence_time; // deciding gold timestamp, for gap reports
};

// Templated question synthesis with exact per-category balance.
// Distractors come from the same vocabulary as the gold answer and
// never equal it; t_q always falls after the deciding evidence.
// Throws Error{insufficient_evidence} when the log cannot support a
// category at the requested count.
std::vector<GeneratedQuestion> generate_questions(const GoldLog& gold,
                                                  std::size_t n_per_category, std::uint64_t seed);

// Brute-force scan of gold events at or before q.t_q; never consults
// the graph. Throws Error{insufficient_evidence} if the question's
// evidence lies after t_q, which would mean the generator is broken.
std::string oracle_answer(const GoldLog& gold, const GeneratedQuestion& q);

// Full extraction pipeline over pre-chunked input: renders the
// extraction prompt per chunk, runs the client, parses the records,
// and merges them in ascending anchor order. Parse and merge faults
// accumulate into report.
TemporalGraph build_graph_from_chunks(std::vector<Chunk> chunks, const MergePolicy& policy,
                                      TextClient& extractor, EmbeddingProvider* embedder = nullptr,
                                      MergeReport* report = nullptr,
                                      const std::string& language = "English");

struct EvalOptions {
    std::size_t l_max = 13; // one generator sentence per chunk
    MergePolicy policy{};
    std::size_t k = kDefaultTopK;
    std::uint64_t embed_seed = 0x5eed;
    TextClient* answering_client = nullptr; // optional; resolver handles the closed grammar
};

struct CategoryScore {
    std::size_t asked = 0;
    std::size_t correct = 0;

    double accuracy() const { return asked == 0 ? 0.0 : static_cast<double>(correct) / asked; }
};

struct EvalReport {
    std::map<std::string, CategoryScore> per_category;
    CategoryScore overall;
    std::size_t resolved = 0;
    std::size_t delegated = 0;
    std::size_t unanswerable = 0;
    double latency_p50_ms = 0.0;
    double latency_p90_ms = 0.0;
    double latency_p99_ms = 0.0;
    std::map<int, CategoryScore> per_day;             // keyed by t_q day
    std::map<std::string, CategoryScore> per_gap;     // t_q minus evidence buckets
    std::vector<std::string> mismatches;              // "question | got | want"

    std::string to_text() const;
    nlohmann::json to_json() const;
};

// Builds the graph from docs, indexes it, answers every question, and
// scores exact letter match against gold. Deterministic for a fixed
// (docs, questions, options) triple.
EvalReport evaluate(const std::vector<SourceDocument>& docs,
                    const std::vector<GeneratedQuestion>& questions, const EvalOptions& options);

// QA batch format: JSON lines {"question","timestamp","choices"?,
// "gold"?} plus optional category/variant tags written by the
// generator. Throws Error{corrupt_stream} with the line number.
void write_questions_jsonl(std::ostream& out, std::span<const GeneratedQuestion> questions);
std::vector<GeneratedQuestion> read_questions_jsonl(std::istream& in);

} // namespace tkg
