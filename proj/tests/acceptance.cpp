// Acceptance gate. Each criterion prints exactly one PASS/FAIL line;
// the exit status is the number of failures. Every tolerance and
// runtime budget is pinned here, not in a config file.

#include "tkg/chunking.hpp"
#include "tkg/clients.hpp"
#include "tkg/errors.hpp"
#include "tkg/graph.hpp"
#include "tkg/graph_io.hpp"
#include "tkg/harness.hpp"
#include "tkg/hash.hpp"
#include "tkg/qa.hpp"
#include "tkg/records.hpp"
#include "tkg/retrieval.hpp"
#include "tkg/schema.hpp"
#include "tkg/timeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

using namespace tkg;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

Outcome fail(std::string detail) { return {false, std::move(detail)}; }
Outcome pass(std::string detail) { return {true, std::move(detail)}; }

std::string word(Rng& rng) {
    std::string w;
    std::size_t len = 2 + rng.below(7);
    for (std::size_t i = 0; i < len; ++i) w += static_cast<char>('a' + rng.below(26));
    return w;
}

std::string sentence(Rng& rng, std::size_t n_words) {
    std::string s;
    for (std::size_t i = 0; i < n_words; ++i) {
        if (i) s += ' ';
        s += word(rng);
    }
    return s;
}

// ---------------------------------------------------------------- 1
// Timeline laws: 10,000 random valid timestamps round-trip through
// format/parse exactly; the relative-time rules (last/first/yesterday/
// today/N-ago) behave per contract, including underflow.

Outcome check_timeline() {
    Rng rng(0x71e11);
    for (int i = 0; i < 10000; ++i) {
        Timestamp t{1 + static_cast<int>(rng.below(500000)),
                    static_cast<int>(rng.below(86400))};
        Timestamp back = parse_timestamp(format_timestamp(t));
        if (back != t) return fail("round-trip mismatch at " + format_timestamp(t));
    }

    const std::vector<Timestamp> cand = {{1, 30000}, {2, 30000}, {3, 30000}};
    int cases = 0;
    auto want_ts = [&](const RelativeExpr& e, Timestamp t_q, Timestamp want) -> bool {
        ++cases;
        ResolvedTime got = resolve_relative(e, t_q, cand);
        return std::holds_alternative<Timestamp>(got) && std::get<Timestamp>(got) == want;
    };
    auto want_window = [&](const RelativeExpr& e, Timestamp t_q, TimeWindow want) -> bool {
        ++cases;
        ResolvedTime got = resolve_relative(e, t_q, cand);
        return std::holds_alternative<TimeWindow>(got) && std::get<TimeWindow>(got) == want;
    };
    auto want_error = [&](auto&& fn, Errc code) -> bool {
        ++cases;
        try {
            fn();
        } catch (const Error& e) {
            return e.code() == code;
        }
        return false;
    };

    if (!want_ts(RelativeExpr::last_time(), {2, 40000}, {2, 30000}))
        return fail("last_time picked the wrong candidate");
    if (!want_ts(RelativeExpr::last_time(), {2, 30000}, {1, 30000}))
        return fail("last_time must be strictly before t_q");
    if (!want_ts(RelativeExpr::first_time(), {3, 70000}, {1, 30000}))
        return fail("first_time wrong");
    if (!want_window(RelativeExpr::yesterday(), {3, 50}, TimeWindow::whole_day(2)))
        return fail("yesterday window wrong");
    if (!want_window(RelativeExpr::today(), {3, 50}, TimeWindow::whole_day(3)))
        return fail("today window wrong");
    if (!want_ts(RelativeExpr::ago(Duration::hours(2)), {2, 3600}, {1, 82800}))
        return fail("ago failed to borrow across the day boundary");
    if (!want_ts(RelativeExpr::ago(Duration::minutes(2)), {2, 100}, {1, 86380}))
        return fail("ago borrow arithmetic wrong");
    if (!want_error([&] { resolve_relative(RelativeExpr::last_time(), {1, 100}, cand); },
                    Errc::no_candidate))
        return fail("last_time before all observations must raise no_candidate");
    if (!want_error([&] { resolve_relative(RelativeExpr::first_time(), {1, 100}, {}); },
                    Errc::no_candidate))
        return fail("first_time on empty candidates must raise no_candidate");
    if (!want_error([&] { resolve_relative(RelativeExpr::yesterday(), {1, 500}, cand); },
                    Errc::underflow))
        return fail("yesterday on day 1 must underflow");
    if (!want_error([&] { resolve_relative(RelativeExpr::ago(Duration::minutes(1)), {1, 59}, cand); },
                    Errc::underflow))
        return fail("ago before the origin must underflow");
    ++cases;
    if (subtract({2, 100}, Duration::minutes(2)) != Timestamp{1, 86380})
        return fail("subtract borrow wrong");

    return pass("10000 round-trips, " + std::to_string(cases) + " relative-rule cases");
}

// ---------------------------------------------------------------- 2
// Parser robustness: fuzz >= 100,000 mutated extraction records. The
// parser must never throw, the conservation law (records + faults =
// non-blank record-delimiter splits up to the completion marker) must
// hold, and unmutated batches must round-trip exactly.

std::size_t count_candidates(std::string_view text, const DelimiterConfig& config) {
    std::size_t done = text.find(config.completion);
    if (done != std::string_view::npos) text = text.substr(0, done);
    std::size_t n = 0;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = text.find(config.record, pos);
        std::string_view piece =
            next == std::string_view::npos ? text.substr(pos) : text.substr(pos, next - pos);
        std::size_t b = 0, e = piece.size();
        while (b < e && std::isspace(static_cast<unsigned char>(piece[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(piece[e - 1]))) --e;
        if (e > b) ++n;
        if (next == std::string_view::npos) break;
        pos = next + config.record.size();
    }
    return n;
}

Outcome check_parser() {
    Rng rng(0xf2f2);
    const DelimiterConfig config{};
    const EntitySchema& schema = EntitySchema::egocentric();

    auto safe_word = [&] {
        std::string w = word(rng);
        if (normalized_key(w) == "none") w += "x"; // "None" values vanish by contract
        return w;
    };
    auto make_record = [&]() -> ExtractionRecord {
        switch (rng.below(3)) {
        case 0: {
            EntityRec e;
            e.name = safe_word();
            e.type = static_cast<EntityType>(rng.below(4));
            e.description = sentence(rng, 1 + rng.below(5));
            const auto& keys = schema.attribute_keys(e.type);
            if (!keys.empty() && rng.chance(0.5))
                e.attributes[keys[rng.below(keys.size())]] = safe_word();
            return e;
        }
        case 1: {
            RelationRec r;
            r.source = safe_word();
            r.target = safe_word();
            r.description = sentence(rng, 1 + rng.below(5));
            std::size_t nk = 1 + rng.below(3);
            for (std::size_t i = 0; i < nk; ++i) r.keywords.push_back(safe_word());
            r.strength = static_cast<double>(rng.below(10));
            return r;
        }
        default: {
            KeywordsRec k;
            std::size_t nk = 1 + rng.below(4);
            for (std::size_t i = 0; i < nk; ++i) k.keywords.push_back(safe_word());
            return k;
        }
        }
    };

    const std::string fragments[] = {"<|>", "##", "(", ")", "\"", "<|COMPLETE|>",
                                     "entity", "relationship", "\n", ":", "|"};
    std::size_t fuzzed = 0, batches = 0;
    while (fuzzed < 100000) {
        std::size_t n = 1 + rng.below(6);
        std::vector<std::string> pieces;
        std::string text;
        for (std::size_t i = 0; i < n; ++i) {
            pieces.push_back(serialize_record(make_record(), config));
            if (i) text += config.record + "\n";
            text += pieces.back();
        }
        if (rng.chance(0.5)) text += config.record + config.completion;

        ParsedOutput clean = parse_extraction_output(text, config, schema);
        if (!clean.faults.empty())
            return fail("valid batch produced a fault: " + clean.faults.front().reason);
        if (clean.records.size() != n)
            return fail("valid batch lost records: " + std::to_string(clean.records.size()) +
                        " of " + std::to_string(n));
        for (std::size_t i = 0; i < n; ++i)
            if (serialize_record(clean.records[i], config) != pieces[i])
                return fail("round-trip not exact for: " + pieces[i]);

        std::string mut = text;
        std::size_t ops = 1 + rng.below(5);
        for (std::size_t i = 0; i < ops && !mut.empty(); ++i) {
            switch (rng.below(6)) {
            case 0: mut[rng.below(mut.size())] = static_cast<char>(rng.below(256)); break;
            case 1: {
                const std::string& f = fragments[rng.below(std::size(fragments))];
                mut.insert(rng.below(mut.size() + 1), f);
                break;
            }
            case 2: {
                std::size_t at = rng.below(mut.size());
                mut.erase(at, rng.below(9));
                break;
            }
            case 3: {
                std::size_t at = rng.below(mut.size());
                std::size_t len = std::min(rng.below(12), mut.size() - at);
                mut.insert(rng.below(mut.size() + 1), mut.substr(at, len));
                break;
            }
            case 4: mut.resize(rng.below(mut.size() + 1)); break;
            default:
                std::swap(mut[rng.below(mut.size())], mut[rng.below(mut.size())]);
                break;
            }
        }

        ParsedOutput out = parse_extraction_output(mut, config, schema);
        std::size_t want = count_candidates(mut, config);
        if (out.records.size() + out.faults.size() != want)
            return fail("conservation violated: " + std::to_string(out.records.size()) + " + " +
                        std::to_string(out.faults.size()) + " != " + std::to_string(want));
        fuzzed += n;
        ++batches;
    }
    return pass(std::to_string(fuzzed) + " records in " + std::to_string(batches) +
                " mutated batches, conservation exact");
}

// ---------------------------------------------------------------- 3
// Merge determinism and the anchor-union law across 50 seeded corpora.

Outcome check_merge() {
    std::size_t total_chunks = 0, total_nodes = 0;
    for (int i = 0; i < 50; ++i) {
        WorldSpec spec;
        spec.seed = 9000 + static_cast<std::uint64_t>(i) * 17;
        spec.days = 1 + i % 3;
        spec.events_per_day = 40 + (i * 7) % 80;
        spec.n_persons = 4 + i % 4;
        spec.n_objects = 8;
        spec.n_locations = 6;
        auto [docs, gold] = generate_world(spec);
        std::vector<Chunk> chunks = chunk_documents(docs, 13);
        if (chunks.size() > 500)
            return fail("corpus " + std::to_string(i) + " exceeds 500 chunks");
        total_chunks += chunks.size();

        CaptionExtractor ex1, ex2;
        TemporalGraph g1 = build_graph_from_chunks(chunks, {}, ex1);
        TemporalGraph g2 = build_graph_from_chunks(chunks, {}, ex2);
        if (export_graph(g1, ExportFormat::jsonl) != export_graph(g2, ExportFormat::jsonl))
            return fail("rebuild not byte-identical on corpus " + std::to_string(i));
        total_nodes += g1.nodes.size();

        // Brute-force re-scan: a node's timestamps must equal the set of
        // anchors of the chunks that mentioned its name, either as an
        // entity record or as a relation endpoint.
        std::map<std::string, std::string> by_name;
        for (const auto& [id, node] : g1.nodes) {
            if (by_name.count(node.name))
                return fail("duplicate node name breaks the oracle: " + node.name);
            by_name[node.name] = id;
        }
        std::map<std::string, std::set<Timestamp>> want;
        const EntitySchema& schema = EntitySchema::egocentric();
        const DelimiterConfig delims{};
        CaptionExtractor scan;
        for (const Chunk& c : chunks) {
            std::string prompt = render_extraction_prompt(c, schema, delims, "English", "");
            ParsedOutput parsed = parse_extraction_output(scan.complete(prompt), delims, schema);
            auto mention = [&](const std::string& name) -> bool {
                auto it = by_name.find(name);
                if (it == by_name.end()) return false;
                want[it->second].insert(c.anchor);
                return true;
            };
            for (const ExtractionRecord& rec : parsed.records) {
                if (const auto* e = std::get_if<EntityRec>(&rec)) {
                    if (!mention(e->name)) return fail("entity name not in graph: " + e->name);
                } else if (const auto* r = std::get_if<RelationRec>(&rec)) {
                    if (!mention(r->source)) return fail("endpoint not in graph: " + r->source);
                    if (!mention(r->target)) return fail("endpoint not in graph: " + r->target);
                }
            }
        }
        if (want.size() != g1.nodes.size())
            return fail("oracle covers " + std::to_string(want.size()) + " nodes, graph has " +
                        std::to_string(g1.nodes.size()));
        for (const auto& [id, node] : g1.nodes) {
            const std::set<Timestamp>& anchors = want[id];
            std::vector<Timestamp> expect(anchors.begin(), anchors.end());
            if (node.timestamps != expect)
                return fail("union law violated for node '" + node.name + "'");
        }
    }
    return pass("50 corpora, " + std::to_string(total_chunks) + " chunks, " +
                std::to_string(total_nodes) + " nodes byte-identical and union-exact");
}

// ---------------------------------------------------------------- 4
// Temporal-filter oracle, filter monotonicity, and retrieval leakage.

Outcome check_filter() {
    Rng rng(0x4f11);
    HashingEmbedder embedder(64, 0x5eed);
    std::size_t leak_calls = 0;
    for (int i = 0; i < 20; ++i) {
        WorldSpec spec;
        spec.seed = 4000 + static_cast<std::uint64_t>(i) * 31;
        spec.days = 2 + i % 2;
        spec.events_per_day = 30 + (i * 5) % 40;
        auto [docs, gold] = generate_world(spec);
        std::vector<Chunk> chunks = chunk_documents(docs, 13);
        CaptionExtractor ex;
        TemporalGraph g = build_graph_from_chunks(chunks, {}, ex);

        std::vector<Timestamp> probes;
        for (int p = 0; p < 10; ++p)
            probes.push_back({1 + static_cast<int>(rng.below(spec.days + 1)),
                              static_cast<int>(rng.below(86400))});

        for (const Timestamp& t_q : probes) {
            TemporalGraph filtered = temporal_filter(g, t_q);
            std::vector<Chunk> visible;
            for (const Chunk& c : chunks)
                if (c.anchor <= t_q) visible.push_back(c);
            CaptionExtractor replay;
            TemporalGraph rebuilt = build_graph_from_chunks(visible, {}, replay);
            if (!graphs_equal(filtered, rebuilt))
                return fail("filter != rebuild at " + format_timestamp(t_q) + " on corpus " +
                            std::to_string(i));
        }

        std::sort(probes.begin(), probes.end());
        for (std::size_t p = 1; p < probes.size(); ++p) {
            TemporalGraph lo = temporal_filter(g, probes[p - 1]);
            TemporalGraph hi = temporal_filter(g, probes[p]);
            if (lo.nodes.size() > hi.nodes.size() || lo.edges.size() > hi.edges.size())
                return fail("monotonicity violated between " + format_timestamp(probes[p - 1]) +
                            " and " + format_timestamp(probes[p]));
            if (!graphs_equal(temporal_filter(hi, probes[p - 1]), lo))
                return fail("filter composition differs at " + format_timestamp(probes[p - 1]));
        }

        RetrievalIndex index = build_index(g, embedder);
        for (int j = 0; j < 50; ++j) {
            Timestamp t_q{1 + static_cast<int>(rng.below(spec.days + 1)),
                          static_cast<int>(rng.below(86400))};
            std::string query = sentence(rng, 2 + rng.below(4));
            if (!gold.persons.empty() && rng.chance(0.5))
                query += " " + gold.persons[rng.below(gold.persons.size())];
            RetrievalResult res = retrieve_context(g, index, query, t_q, embedder, 8);
            TemporalGraph view = temporal_filter(g, t_q);
            for (const ScoredRef& ref : res.nodes)
                if (!view.nodes.count(ref.id))
                    return fail("node " + ref.id + " leaked past " + format_timestamp(t_q));
            for (const ScoredRef& ref : res.edges)
                if (!view.edges.count(ref.id))
                    return fail("edge " + ref.id + " leaked past " + format_timestamp(t_q));
            for (const ScoredRef& ref : res.chunks)
                if (!view.chunks.count(ref.id))
                    return fail("chunk " + ref.id + " leaked past " + format_timestamp(t_q));
            ++leak_calls;
        }
    }
    return pass("200 oracle probes, 180 monotonicity steps, " + std::to_string(leak_calls) +
                " leak-free retrievals");
}

// Random non-caption corpus used by the retrieval and export checks.
TemporalGraph random_graph(Rng& rng, int tag, int max_day, std::size_t max_chunks) {
    TemporalGraph g;
    std::size_t m = 1 + rng.below(max_chunks);
    for (std::size_t c = 0; c < m; ++c) {
        Chunk chunk;
        chunk.chunk_id = "c" + std::to_string(tag) + "_" + std::to_string(c);
        chunk.anchor = {1 + static_cast<int>(rng.below(max_day)),
                        static_cast<int>(rng.below(86400))};
        chunk.text = sentence(rng, 3 + rng.below(8));
        chunk.token_count = count_tokens(chunk.text);

        std::vector<ExtractionRecord> records;
        std::size_t ne = 1 + rng.below(3);
        for (std::size_t e = 0; e < ne; ++e) {
            EntityRec rec;
            rec.name = "item " + std::to_string(rng.below(60));
            rec.type = static_cast<EntityType>(rng.below(4));
            rec.description = sentence(rng, 2 + rng.below(4));
            records.push_back(rec);
        }
        std::size_t nr = 1 + rng.below(2);
        for (std::size_t r = 0; r < nr; ++r) {
            RelationRec rec;
            rec.source = "item " + std::to_string(rng.below(60));
            rec.target = "item " + std::to_string(rng.below(60));
            rec.description = sentence(rng, 2 + rng.below(4));
            rec.keywords.push_back(word(rng));
            rec.strength = static_cast<double>(rng.below(10));
            records.push_back(rec);
        }
        if (rng.chance(0.3)) records.push_back(KeywordsRec{{word(rng), word(rng)}});
        apply_records(g, chunk, records, {}, nullptr);
    }
    return g;
}

// ---------------------------------------------------------------- 5
// Retrieval oracle: top_k against exhaustive cosine ranking.

Outcome check_retrieval() {
    Rng rng(0x5e77);
    HashingEmbedder embedder(96, 0xbeef);
    std::size_t rankings = 0, elements = 0;
    for (int i = 0; i < 100; ++i) {
        TemporalGraph g = random_graph(rng, i, 5, 40);
        std::size_t size = g.nodes.size() + g.edges.size() + g.chunks.size();
        if (size > 1000) return fail("corpus " + std::to_string(i) + " exceeds 1000 elements");
        elements += size;

        RetrievalIndex index = build_index(g, embedder);
        for (int p = 0; p < 3; ++p) {
            std::vector<double> q = embedder.embed(sentence(rng, 1 + rng.below(5)));
            std::size_t k = 1 + rng.below(80);
            for (ElementKind kind : {ElementKind::node, ElementKind::edge, ElementKind::chunk}) {
                std::vector<ScoredRef> got = top_k(index, q, k, kind, nullptr);
                std::vector<ScoredRef> brute;
                for (const IndexEntry& entry : index.entries) {
                    if (entry.kind != kind) continue;
                    double score = 0.0;
                    for (std::size_t d = 0; d < q.size(); ++d) score += entry.vec[d] * q[d];
                    brute.push_back({entry.id, score});
                }
                std::sort(brute.begin(), brute.end(), [](const ScoredRef& a, const ScoredRef& b) {
                    if (a.score != b.score) return a.score > b.score;
                    return a.id < b.id;
                });
                if (brute.size() > k) brute.resize(k);
                if (got.size() != brute.size())
                    return fail("result size " + std::to_string(got.size()) + ", brute " +
                                std::to_string(brute.size()));
                for (std::size_t j = 0; j < got.size(); ++j) {
                    if (got[j].id != brute[j].id)
                        return fail("rank " + std::to_string(j) + " id mismatch: " + got[j].id +
                                    " vs " + brute[j].id);
                    if (std::fabs(got[j].score - brute[j].score) > 1e-9)
                        return fail("score drift " +
                                    std::to_string(std::fabs(got[j].score - brute[j].score)));
                }
                ++rankings;
            }
        }
    }
    return pass("100 corpora (" + std::to_string(elements) + " elements), " +
                std::to_string(rankings) + " rankings exact within 1e-9");
}

// ---------------------------------------------------------------- 6
// Cypher-export parity: evaluating the exported timestamps with plain
// string comparison (the export keeps them lexicographically ordered
// for single-digit days) must select the same edges as window_query.

Outcome check_cypher() {
    Rng rng(0xc661);
    std::size_t compared = 0;
    for (int i = 0; i < 20; ++i) {
        TemporalGraph g = random_graph(rng, 1000 + i, 9, 30);
        Timestamp a{1 + static_cast<int>(rng.below(9)), static_cast<int>(rng.below(86400))};
        Timestamp b{1 + static_cast<int>(rng.below(9)), static_cast<int>(rng.below(86400))};
        if (b < a) std::swap(a, b);
        TimeWindow window{a, b};

        std::set<std::string> want;
        TemporalGraph view = window_query(g, window);
        for (const auto& [id, edge] : view.edges) want.insert(edge.source + "|" + edge.target);

        const std::string lo = format_timestamp(window.start);
        const std::string hi = format_timestamp(window.end);
        std::set<std::string> got;
        std::istringstream lines(export_graph(g, ExportFormat::cypher));
        std::string line;
        auto field = [&](const std::string& after) -> std::string {
            std::size_t at = line.find(after);
            if (at == std::string::npos) return {};
            at += after.size();
            return line.substr(at, line.find('"', at) - at);
        };
        while (std::getline(lines, line)) {
            if (line.find("[:RELATED") == std::string::npos) continue;
            std::string src = field("(a {id: \"");
            std::string dst = field("(b {id: \"");
            std::string ts = field("timestamp: \"");
            if (src.empty() || dst.empty() || ts.empty())
                return fail("unparseable cypher line: " + line.substr(0, 60));
            if (lo <= ts && ts <= hi) got.insert(src + "|" + dst);
        }
        if (got != want)
            return fail("edge sets differ on corpus " + std::to_string(i) + ": cypher " +
                        std::to_string(got.size()) + ", window_query " +
                        std::to_string(want.size()));
        compared += want.size();
    }
    return pass("20 graphs, string-evaluated windows match window_query (" +
                std::to_string(compared) + " edges)");
}

// ---------------------------------------------------------------- 7
// End-to-end synthetic QA on the default 6-person, 7-day world.

Outcome check_qa() {
    WorldSpec spec;
    auto [docs, gold] = generate_world(spec);
    std::vector<GeneratedQuestion> questions =
        generate_questions(gold, 50, spec.seed ^ 0x9e3779b9ULL);
    if (questions.size() < 250)
        return fail("only " + std::to_string(questions.size()) + " questions generated");
    for (const GeneratedQuestion& q : questions)
        if (oracle_answer(gold, q) != q.gold)
            return fail("generator gold disagrees with oracle on: " + q.text);

    EvalReport report = evaluate(docs, questions, EvalOptions{});
    double accuracy = report.overall.accuracy();
    std::ostringstream detail;
    detail.setf(std::ios::fixed);
    detail.precision(3);
    detail << questions.size() << " questions, accuracy " << accuracy << " (resolved "
           << report.resolved << ", delegated " << report.delegated << ", unanswerable "
           << report.unanswerable << ")";
    if (accuracy < 0.95) {
        std::string msg = detail.str();
        for (std::size_t i = 0; i < report.mismatches.size() && i < 3; ++i)
            msg += "; miss: " + report.mismatches[i];
        return fail(msg);
    }
    return pass(detail.str());
}

// ---------------------------------------------------------------- 8
// Scaling probe: cumulative-day evaluation. Accuracy may drift at most
// 5 percentage points and the median per-question latency must grow
// sub-linearly in graph size (nodes + edges).

Outcome check_scaling() {
    double acc_min = 1.0, acc_max = 0.0;
    double lat_first = 0.0, lat_last = 0.0;
    std::size_t size_first = 0, size_last = 0;
    std::ostringstream table;
    table.setf(std::ios::fixed);
    table.precision(2);

    for (int d = 1; d <= 7; ++d) {
        WorldSpec spec;
        spec.days = d;
        auto [docs, gold] = generate_world(spec);
        std::vector<GeneratedQuestion> questions =
            generate_questions(gold, 10, 0xabcd + static_cast<std::uint64_t>(d));

        EvalReport a = evaluate(docs, questions, EvalOptions{});
        EvalReport b = evaluate(docs, questions, EvalOptions{});
        double p50 = std::min(a.latency_p50_ms, b.latency_p50_ms);
        double accuracy = a.overall.accuracy();

        CaptionExtractor ex;
        TemporalGraph g = build_graph_from_chunks(chunk_documents(docs, 13), {}, ex);
        std::size_t size = g.nodes.size() + g.edges.size();

        acc_min = std::min(acc_min, accuracy);
        acc_max = std::max(acc_max, accuracy);
        if (d == 1) {
            lat_first = p50;
            size_first = size;
        }
        lat_last = p50;
        size_last = size;
        table << (d > 1 ? " " : "") << "d" << d << ":" << accuracy << "/" << p50 << "ms/"
              << size;
    }

    double drift = acc_max - acc_min;
    double lat_ratio = lat_last / std::max(lat_first, 1e-6);
    double size_ratio = static_cast<double>(size_last) / std::max<std::size_t>(size_first, 1);
    std::ostringstream detail;
    detail.setf(std::ios::fixed);
    detail.precision(2);
    detail << "drift " << drift * 100 << "pp, p50 x" << lat_ratio << " vs size x" << size_ratio
           << " [" << table.str() << "]";
    if (drift > 0.05) return fail("accuracy drift exceeds 5pp: " + detail.str());
    if (!(lat_ratio < size_ratio)) return fail("latency grew super-linearly: " + detail.str());
    return pass(detail.str());
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget_s;
        Outcome (*fn)();
    };
    const Criterion criteria[] = {
        {"timeline round-trip and relative-time rules", 5, check_timeline},
        {"extraction parser fuzz and conservation law", 60, check_parser},
        {"merge determinism and anchor-union law", 120, check_merge},
        {"temporal-filter oracle, monotonicity, leak-free retrieval", 120, check_filter},
        {"top-k retrieval against exhaustive ranking", 60, check_retrieval},
        {"cypher export parity with window queries", 30, check_cypher},
        {"end-to-end synthetic QA accuracy >= 0.95", 300, check_qa},
        {"scaling probe: accuracy drift and latency growth", 600, check_scaling},
    };

    int failures = 0;
    int index = 0;
    for (const Criterion& c : criteria) {
        ++index;
        auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.fn();
        } catch (const std::exception& e) {
            outcome = fail(std::string("unexpected exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool in_budget = secs < c.budget_s;
        bool ok = outcome.ok && in_budget;
        if (!ok) ++failures;
        std::printf("[%d/8] %s  %s — %s (%.2fs, budget %.0fs)%s\n", index, ok ? "PASS" : "FAIL",
                    c.name, outcome.detail.c_str(), secs, c.budget_s,
                    in_budget ? "" : " [over budget]");
        std::fflush(stdout);
    }
    std::printf("acceptance: %d/8 criteria passed\n", 8 - failures);
    return failures;
}
