#include "tkg/config.hpp"
#include "tkg/errors.hpp"
#include "tkg/graph_io.hpp"
#include "tkg/harness.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace tkg;

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kClient = 3;
constexpr int kUnanswerable = 4;

int exit_code_for(const Error& e) {
    switch (e.code()) {
    case Errc::client_failure:
    case Errc::summarizer_failure:
        return kClient;
    default:
        return kUsage;
    }
}

std::vector<SourceDocument> read_docs(const std::vector<std::string>& paths) {
    std::vector<SourceDocument> docs;
    for (const std::string& path : paths) {
        std::ifstream in(path);
        if (!in) throw Error(Errc::corrupt_stream, "cannot open '" + path + "'");
        std::vector<SourceDocument> part = read_segments_jsonl(in);
        docs.insert(docs.end(), std::make_move_iterator(part.begin()),
                    std::make_move_iterator(part.end()));
    }
    return docs;
}

TemporalGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::corrupt_stream, "cannot open graph file '" + path + "'");
    return import_graph(in);
}

// Write-then-rename so an interrupted run never leaves a torn file.
void write_file_atomically(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::corrupt_stream, "cannot write '" + tmp + "'");
        out << content;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw Error(Errc::corrupt_stream, "cannot move '" + tmp + "' onto '" + path + "'");
}

void apply_mock_override(EngineConfig& config) {
    config.extraction.mode = "mock";
    config.embedding.mode = "mock";
    if (config.answering.mode == "http") config.answering.mode = "none";
    config.cache_path.clear();
}

int cmd_ingest(const EngineConfig& config, const std::vector<std::string>& inputs,
               const std::string& output) {
    std::vector<SourceDocument> docs = read_docs(inputs);
    std::vector<Chunk> chunks = chunk_documents(docs, config.l_max);
    std::ofstream out(output, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::corrupt_stream, "cannot write '" + output + "'");
    write_chunks_jsonl(out, chunks);

    std::vector<std::size_t> tokens;
    for (const Chunk& c : chunks) tokens.push_back(c.token_count);
    std::sort(tokens.begin(), tokens.end());
    std::cout << chunks.size() << " chunks, l_max " << config.l_max << "\n";
    std::cout << "tokens: min=" << tokens.front() << " p50=" << tokens[tokens.size() / 2]
              << " max=" << tokens.back() << "\n";
    const std::size_t buckets[] = {16, 64, 256, 1024, 4096};
    std::size_t from = 0;
    for (std::size_t cap : buckets) {
        std::size_t n = 0;
        for (std::size_t t : tokens)
            if (t >= from && t < cap) ++n;
        if (n > 0) std::cout << "  [" << from << "," << cap << ") " << n << "\n";
        from = cap;
    }
    return kOk;
}

int cmd_build(const EngineConfig& config, const std::string& chunks_path,
              const std::string& output, bool resume, int checkpoint_every) {
    std::vector<Chunk> chunks;
    {
        std::ifstream in(chunks_path);
        if (!in) throw Error(Errc::corrupt_stream, "cannot open '" + chunks_path + "'");
        chunks = read_chunks_jsonl(in);
    }
    std::sort(chunks.begin(), chunks.end(), [](const Chunk& a, const Chunk& b) {
        if (a.anchor != b.anchor) return a.anchor < b.anchor;
        return a.chunk_id < b.chunk_id;
    });

    TemporalGraph graph;
    if (resume) {
        std::ifstream in(output);
        if (in) {
            graph = import_graph(in);
            std::cerr << "resuming: " << graph.chunks.size() << " chunks already applied\n";
        }
    }

    std::unique_ptr<TextClient> extractor = config.make_extraction_client();
    std::shared_ptr<EmbeddingProvider> embedder = config.make_embedder();
    const EntitySchema& schema = EntitySchema::egocentric();
    MergeReport total;
    std::size_t applied = 0;
    for (const Chunk& chunk : chunks) {
        if (graph.chunks.count(chunk.chunk_id)) continue;
        const std::string prompt =
            render_extraction_prompt(chunk, schema, config.delimiters, config.language, "");
        std::string completion;
        for (int attempt = 0;; ++attempt) {
            try {
                completion = extractor->complete(prompt);
                break;
            } catch (const Error& e) {
                if (e.code() != Errc::client_failure || attempt >= config.extraction.retries)
                    throw;
                std::cerr << "retrying chunk " << chunk.chunk_id << ": " << e.what() << "\n";
            }
        }
        ParsedOutput parsed = parse_extraction_output(completion, config.delimiters, schema);
        for (const ParseFault& f : parsed.faults)
            total.faults.push_back(chunk.chunk_id + ": " + f.reason);
        total.add(apply_records(graph, chunk, parsed.records, config.merge, embedder.get()));
        ++applied;
        if (checkpoint_every > 0 && applied % static_cast<std::size_t>(checkpoint_every) == 0)
            write_file_atomically(output, export_graph(graph, ExportFormat::jsonl));
    }
    write_file_atomically(output, export_graph(graph, ExportFormat::jsonl));

    std::cout << "applied " << applied << " chunks -> " << output << "\n";
    std::cout << "nodes: " << total.nodes_created << " created, " << total.nodes_merged
              << " merged, " << total.stubs_created << " stubs\n";
    std::cout << "edges: " << total.edges_created << " created, " << total.edges_merged
              << " merged\n";
    std::cout << "attributes updated: " << total.attributes_updated << "\n";
    std::cout << "faults: " << total.faults.size() << "\n";
    for (const std::string& f : total.faults) std::cerr << "fault: " << f << "\n";
    return kOk;
}

int cmd_ask(const EngineConfig& config, const std::string& graph_path,
            const std::string& question, const std::string& at,
            const std::vector<std::string>& choices) {
    QARequest request;
    request.question = question;
    request.t_q = parse_timestamp(at);
    if (!choices.empty()) {
        if (choices.size() < 2) throw Error(Errc::bad_config, "need at least two choices");
        request.choices = choices;
        request.response_type = "Multiple Choice";
    }

    TemporalGraph graph = load_graph(graph_path);
    std::shared_ptr<EmbeddingProvider> embedder = config.make_embedder();
    RetrievalIndex index = build_index(graph, *embedder);
    std::unique_ptr<TextClient> client = config.make_answering_client();
    AnswerOptions options;
    options.k = config.k;
    Answer a = answer(request, graph, index, *embedder, client.get(), options);

    const char* path = a.path == AnswerPath::resolved     ? "structured"
                       : a.path == AnswerPath::delegated ? "delegated"
                                                          : "unanswerable";
    if (a.path == AnswerPath::unanswerable) {
        std::cerr << "unanswerable: " << (a.diagnostics.empty() ? "no answer" : a.diagnostics)
                  << "\n";
        return kUnanswerable;
    }
    std::cout << "answer: " << a.text << "\n";
    std::cout << "path: " << path << "\n";
    std::cout << "cited:";
    for (const Timestamp& t : a.cited_timestamps) std::cout << " " << format_timestamp(t);
    std::cout << "\nsources:";
    std::size_t shown = 0;
    for (const auto& [id, kind] : a.sources) {
        if (++shown > 10) {
            std::cout << " ...";
            break;
        }
        std::cout << " " << id << "(" << to_string(kind) << ")";
    }
    std::cout << "\n";
    if (!a.diagnostics.empty()) std::cerr << "note: " << a.diagnostics << "\n";
    return kOk;
}

int cmd_export(const std::string& graph_path, const std::string& format,
               const std::string& output) {
    TemporalGraph graph = load_graph(graph_path);
    std::string text = export_graph(graph, export_format_from(format));
    if (output.empty() || output == "-") {
        std::cout << text;
    } else {
        write_file_atomically(output, text);
        std::cerr << "wrote " << output << "\n";
    }
    return kOk;
}

int cmd_stats(const std::string& graph_path, const std::string& at, const std::string& from,
              const std::string& to) {
    TemporalGraph graph = load_graph(graph_path);
    if (!at.empty()) {
        graph = temporal_filter(graph, parse_timestamp(at));
    } else if (!from.empty() || !to.empty()) {
        if (from.empty() || to.empty())
            throw Error(Errc::bad_config, "--from and --to must be given together");
        graph = window_query(graph, {parse_timestamp(from), parse_timestamp(to)});
    }
    const std::size_t persons = graph.count_nodes(EntityType::person);
    const std::size_t events = graph.count_nodes(EntityType::event);
    const std::size_t objects = graph.count_nodes(EntityType::object);
    const std::size_t locations = graph.count_nodes(EntityType::location);
    std::cout << graph.nodes.size() << " entities (" << persons << " persons, " << events
              << " events, " << objects << " objects, " << locations << " locations), "
              << graph.edges.size() << " relationships\n";
    std::cout << graph.chunks.size() << " chunks\n";
    return kOk;
}

int cmd_gen(std::uint64_t seed, int days, std::size_t per_category,
            const std::string& out_segments, const std::string& out_questions,
            const std::string& out_gold) {
    WorldSpec spec;
    spec.seed = seed;
    spec.days = days;
    auto [docs, gold] = generate_world(spec);
    std::vector<GeneratedQuestion> questions =
        per_category == 0 ? std::vector<GeneratedQuestion>{}
                          : generate_questions(gold, per_category, seed ^ 0x9e3779b9ULL);
    for (const GeneratedQuestion& q : questions) {
        if (oracle_answer(gold, q) != q.gold)
            throw Error(Errc::insufficient_evidence, "oracle disagrees with gold for: " + q.text);
    }

    {
        std::ostringstream buf;
        write_segments_jsonl(buf, docs);
        write_file_atomically(out_segments, buf.str());
    }
    if (!out_questions.empty()) {
        std::ostringstream buf;
        write_questions_jsonl(buf, questions);
        write_file_atomically(out_questions, buf.str());
    }
    if (!out_gold.empty()) {
        std::ostringstream buf;
        for (const GoldEvent& e : gold.events) {
            nlohmann::json j{{"time", format_timestamp(e.time)},
                             {"kind", e.kind == GoldKind::activity ? "activity" : "placement"},
                             {"person", e.person},
                             {"location", e.location}};
            if (!e.activity.empty()) j["activity"] = e.activity;
            if (!e.object.empty()) j["object"] = e.object;
            buf << j.dump() << '\n';
        }
        write_file_atomically(out_gold, buf.str());
    }
    std::cout << docs.size() << " documents, " << gold.events.size() << " events, "
              << questions.size() << " questions\n";
    return kOk;
}

int cmd_eval(const EngineConfig& config, std::uint64_t seed, int days, std::size_t per_category,
             const std::string& segments_path, const std::string& questions_path, bool as_json) {
    std::vector<SourceDocument> docs;
    std::vector<GeneratedQuestion> questions;
    EvalOptions options;
    options.k = config.k;
    options.policy = config.merge;
    if (!segments_path.empty() || !questions_path.empty()) {
        if (segments_path.empty() || questions_path.empty())
            throw Error(Errc::bad_config, "--segments and --questions must be given together");
        docs = read_docs({segments_path});
        std::ifstream in(questions_path);
        if (!in) throw Error(Errc::corrupt_stream, "cannot open '" + questions_path + "'");
        questions = read_questions_jsonl(in);
        options.l_max = config.l_max;
    } else {
        WorldSpec spec;
        spec.seed = seed;
        spec.days = days;
        GoldLog gold;
        std::tie(docs, gold) = generate_world(spec);
        questions = generate_questions(gold, per_category, seed ^ 0x9e3779b9ULL);
        for (const GeneratedQuestion& q : questions) {
            if (oracle_answer(gold, q) != q.gold)
                throw Error(Errc::insufficient_evidence,
                            "oracle disagrees with gold for: " + q.text);
        }
    }
    EvalReport report = evaluate(docs, questions, options);
    if (as_json)
        std::cout << report.to_json().dump(2) << "\n";
    else
        std::cout << report.to_text();
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"temporal knowledge-graph engine for timestamped life logs"};
    app.require_subcommand(1);

    std::string config_path;
    bool mock = false;
    app.add_option("--config", config_path, "engine config JSON file")->envname("TKG_CONFIG");
    app.add_flag("--mock", mock, "force offline mock providers");

    auto* ingest = app.add_subcommand("ingest", "segment files into a chunk store");
    std::vector<std::string> ingest_inputs;
    std::string ingest_output = "chunks.jsonl";
    ingest->add_option("inputs", ingest_inputs, "segment JSONL files")->required();
    ingest->add_option("-o,--output", ingest_output, "chunk store path");

    auto* build = app.add_subcommand("build", "extract entities and build the graph");
    std::string build_chunks;
    std::string build_output;
    bool build_resume = false;
    int checkpoint_every = 64;
    build->add_option("chunks", build_chunks, "chunk store path")->required();
    build->add_option("-o,--output", build_output, "graph file (defaults to config paths.graph)");
    build->add_flag("--resume", build_resume, "skip chunks already in the output graph");
    build->add_option("--checkpoint-every", checkpoint_every,
                      "write the graph every N chunks (0 disables)");

    auto* ask = app.add_subcommand("ask", "answer a question against the graph");
    std::string ask_graph;
    std::string ask_question;
    std::string ask_at;
    std::vector<std::string> ask_choices;
    std::string ask_components;
    std::size_t ask_k = 0;
    ask->add_option("question", ask_question, "the question text")->required();
    ask->add_option("--graph", ask_graph, "graph file (defaults to config paths.graph)");
    ask->add_option("--at", ask_at, "query timestamp, e.g. \"[DAY2 14:30:00]\"")->required();
    ask->add_option("--choices", ask_choices, "multiple-choice options");
    ask->add_option("--k", ask_k, "retrieval depth override");
    ask->add_option("--components", ask_components, "retrieval components, e.g. nodes,edges");

    auto* exp = app.add_subcommand("export", "serialize the graph");
    std::string export_graph_path;
    std::string export_format = "jsonl";
    std::string export_output;
    exp->add_option("graph", export_graph_path, "graph file")->required();
    exp->add_option("--format", export_format, "jsonl, dot, or cypher");
    exp->add_option("-o,--output", export_output, "output path (default stdout)");

    auto* stats = app.add_subcommand("stats", "print entity and relationship counts");
    std::string stats_graph;
    std::string stats_at;
    std::string stats_from;
    std::string stats_to;
    stats->add_option("graph", stats_graph, "graph file")->required();
    stats->add_option("--at", stats_at, "count the temporally filtered view");
    stats->add_option("--from", stats_from, "window start timestamp");
    stats->add_option("--to", stats_to, "window end timestamp");

    auto* gen = app.add_subcommand("gen", "generate a synthetic world");
    std::uint64_t gen_seed = 42;
    int gen_days = 7;
    std::size_t gen_per_category = 20;
    std::string gen_segments = "segments.jsonl";
    std::string gen_questions = "questions.jsonl";
    std::string gen_gold;
    gen->add_option("--seed", gen_seed, "world seed");
    gen->add_option("--days", gen_days, "number of days");
    gen->add_option("--per-category", gen_per_category, "questions per category");
    gen->add_option("--segments", gen_segments, "segments output path");
    gen->add_option("--questions", gen_questions, "questions output path");
    gen->add_option("--gold", gen_gold, "gold event log output path (optional)");

    auto* eval = app.add_subcommand("eval", "run the end-to-end evaluation");
    std::uint64_t eval_seed = 42;
    int eval_days = 7;
    std::size_t eval_per_category = 20;
    std::string eval_segments;
    std::string eval_questions;
    std::size_t eval_k = 0;
    bool eval_json = false;
    eval->add_option("--seed", eval_seed, "world seed");
    eval->add_option("--days", eval_days, "number of days");
    eval->add_option("--per-category", eval_per_category, "questions per category");
    eval->add_option("--segments", eval_segments, "evaluate docs from this file");
    eval->add_option("--questions", eval_questions, "evaluate questions from this file");
    eval->add_option("--k", eval_k, "retrieval depth override");
    eval->add_flag("--json", eval_json, "emit the report as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        EngineConfig config;
        if (!config_path.empty()) config = EngineConfig::load(config_path);
        if (mock) apply_mock_override(config);

        if (*ingest) return cmd_ingest(config, ingest_inputs, ingest_output);
        if (*build)
            return cmd_build(config, build_chunks,
                             build_output.empty() ? config.graph_path : build_output,
                             build_resume, checkpoint_every);
        if (*ask) {
            if (ask_k > 0) config.k = ask_k;
            if (!ask_components.empty()) config.components = ComponentSet::parse(ask_components);
            return cmd_ask(config, ask_graph.empty() ? config.graph_path : ask_graph,
                           ask_question, ask_at, ask_choices);
        }
        if (*exp) return cmd_export(export_graph_path, export_format, export_output);
        if (*stats) return cmd_stats(stats_graph, stats_at, stats_from, stats_to);
        if (*gen)
            return cmd_gen(gen_seed, gen_days, gen_per_category, gen_segments, gen_questions,
                           gen_gold);
        if (*eval) {
            if (eval_k > 0) config.k = eval_k;
            return cmd_eval(config, eval_seed, eval_days, eval_per_category, eval_segments,
                            eval_questions, eval_json);
        }
        std::cerr << "no command given\n";
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
}
