#include "tkg/graph_io.hpp"

#include "tkg/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace tkg {

using nlohmann::json;

ExportFormat export_format_from(std::string_view name) {
    if (name == "jsonl") return ExportFormat::jsonl;
    if (name == "dot") return ExportFormat::dot;
    if (name == "cypher") return ExportFormat::cypher;
    throw Error(Errc::unsupported_format, "unknown export format '" + std::string(name) + "'");
}

namespace {

json timestamps_to_json(const std::vector<Timestamp>& ts) {
    json arr = json::array();
    for (Timestamp t : ts) arr.push_back(format_timestamp(t));
    return arr;
}

json descriptions_to_json(const std::vector<std::pair<Timestamp, std::string>>& descs) {
    json arr = json::array();
    for (const auto& [t, d] : descs) arr.push_back(json::array({format_timestamp(t), d}));
    return arr;
}

std::string export_jsonl(const TemporalGraph& graph) {
    std::string out;
    for (const auto& [id, node] : graph.nodes) {
        json attrs = json::object();
        for (const auto& [key, av] : node.attributes)
            attrs[key] = {{"value", av.value()}, {"updated_at", format_timestamp(av.updated_at())}};
        json line = {{"kind", "node"},
                     {"id", node.id},
                     {"type", std::string(to_string(node.type))},
                     {"name", node.name},
                     {"attributes", attrs},
                     {"timestamps", timestamps_to_json(node.timestamps)},
                     {"descriptions", descriptions_to_json(node.descriptions)},
                     {"chunks", json(node.source_chunks)}};
        if (node.stub()) line["stub"] = true;
        out += line.dump();
        out += "\n";
    }
    for (const auto& [id, edge] : graph.edges) {
        json kws = json::array();
        for (const EdgeKeyword& kw : edge.keywords) kws.push_back(kw.text);
        json line = {{"kind", "edge"},
                     {"id", edge.id},
                     {"source", edge.source},
                     {"target", edge.target},
                     {"timestamps", timestamps_to_json(edge.timestamps)},
                     {"descriptions", descriptions_to_json(edge.descriptions)},
                     {"keywords", kws},
                     {"strength", edge.strength()},
                     {"chunks", json(edge.source_chunks)}};
        out += line.dump();
        out += "\n";
    }
    for (const auto& [id, chunk] : graph.chunks) {
        json line = chunk_to_json(chunk);
        line["kind"] = "chunk";
        out += line.dump();
        out += "\n";
    }
    return out;
}

std::string dot_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    return out;
}

std::string export_dot(const TemporalGraph& graph) {
    std::string out = "digraph G {\n";
    for (const auto& [id, node] : graph.nodes) {
        out += "  \"" + id + "\" [label=\"" + dot_escape(node.name) + ":" +
               std::string(to_string(node.type)) + "\"];\n";
    }
    for (const auto& [id, edge] : graph.edges) {
        std::string label =
            edge.descriptions.empty() ? std::string() : edge.descriptions.back().second;
        out += "  \"" + edge.source + "\" -> \"" + edge.target + "\" [label=\"" +
               dot_escape(label) + "\"];\n";
    }
    out += "}\n";
    return out;
}

std::string cypher_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '\\' || c == '"') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    return out;
}

std::string upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::string export_cypher(const TemporalGraph& graph) {
    std::string out;
    for (const auto& [id, node] : graph.nodes) {
        out += "CREATE (:" + upper(to_string(node.type)) + " {id: \"" + node.id + "\", name: \"" +
               cypher_escape(node.name) + "\"});\n";
    }
    for (const auto& [id, edge] : graph.edges) {
        for (Timestamp t : edge.timestamps) {
            std::string desc;
            for (const auto& [dt, dd] : edge.descriptions) {
                if (dt == t) {
                    desc = dd;
                    break;
                }
            }
            out += "MATCH (a {id: \"" + edge.source + "\"}), (b {id: \"" + edge.target +
                   "\"}) CREATE (a)-[:RELATED {timestamp: \"" + format_timestamp(t) +
                   "\", description: \"" + cypher_escape(desc) + "\"}]->(b);\n";
        }
    }
    return out;
}

} // namespace

std::string export_graph(const TemporalGraph& graph, ExportFormat format) {
    switch (format) {
    case ExportFormat::jsonl: return export_jsonl(graph);
    case ExportFormat::dot: return export_dot(graph);
    case ExportFormat::cypher: return export_cypher(graph);
    }
    throw Error(Errc::unsupported_format, "unknown export format");
}

namespace {

[[noreturn]] void corrupt(std::size_t line, const std::string& why) {
    throw Error(Errc::corrupt_stream, why, line);
}

Timestamp read_ts(const json& j, std::size_t line) {
    if (!j.is_string()) corrupt(line, "timestamp is not a string");
    try {
        return parse_timestamp(j.get<std::string>());
    } catch (const Error& e) {
        corrupt(line, std::string("bad timestamp: ") + e.what());
    }
}

std::vector<Timestamp> read_ts_list(const json& j, std::size_t line) {
    if (!j.is_array()) corrupt(line, "timestamps is not an array");
    std::vector<Timestamp> out;
    for (const json& item : j) out.push_back(read_ts(item, line));
    return out;
}

std::vector<std::pair<Timestamp, std::string>> read_descs(const json& j, std::size_t line) {
    if (!j.is_array()) corrupt(line, "descriptions is not an array");
    std::vector<std::pair<Timestamp, std::string>> out;
    for (const json& item : j) {
        if (!item.is_array() || item.size() != 2 || !item[1].is_string())
            corrupt(line, "description entry is not [timestamp, text]");
        out.emplace_back(read_ts(item[0], line), item[1].get<std::string>());
    }
    return out;
}

const json& need(const json& j, const char* key, std::size_t line) {
    auto it = j.find(key);
    if (it == j.end()) corrupt(line, std::string("missing key '") + key + "'");
    return *it;
}

} // namespace

TemporalGraph import_graph(std::istream& in) {
    TemporalGraph graph;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) corrupt(lineno, "line is not valid JSON");
        if (!j.is_object()) corrupt(lineno, "line is not a JSON object");
        std::string kind = need(j, "kind", lineno).get<std::string>();
        if (kind == "node") {
            EntityNode node;
            node.id = need(j, "id", lineno).get<std::string>();
            auto type = entity_type_from(need(j, "type", lineno).get<std::string>());
            if (!type) corrupt(lineno, "unknown entity type");
            node.type = *type;
            node.name = need(j, "name", lineno).get<std::string>();
            if (node.id != node_id_for(node.type, normalized_key(node.name)))
                corrupt(lineno, "node id does not match name and type");
            node.timestamps = read_ts_list(need(j, "timestamps", lineno), lineno);
            if (node.timestamps.empty()) corrupt(lineno, "node has no timestamps");
            node.descriptions = read_descs(need(j, "descriptions", lineno), lineno);
            const json& attrs = need(j, "attributes", lineno);
            if (!attrs.is_object()) corrupt(lineno, "attributes is not an object");
            for (auto it = attrs.begin(); it != attrs.end(); ++it) {
                if (!it.value().contains("value") || !it.value().contains("updated_at"))
                    corrupt(lineno, "attribute entry missing value/updated_at");
                AttributeValue av;
                av.history.emplace_back(read_ts(it.value()["updated_at"], lineno),
                                        it.value()["value"].get<std::string>());
                node.attributes.emplace(it.key(), std::move(av));
            }
            for (const json& cid : need(j, "chunks", lineno))
                node.source_chunks.insert(cid.get<std::string>());
            bool stub = j.value("stub", false);
            if (!stub) node.confirmed_at = node.timestamps.front();
            if (graph.nodes.count(node.id)) corrupt(lineno, "duplicate node id " + node.id);
            graph.nodes.emplace(node.id, std::move(node));
        } else if (kind == "edge") {
            RelationEdge edge;
            edge.id = need(j, "id", lineno).get<std::string>();
            edge.source = need(j, "source", lineno).get<std::string>();
            edge.target = need(j, "target", lineno).get<std::string>();
            if (edge.id != edge_id_for(edge.source, edge.target))
                corrupt(lineno, "edge id does not match endpoints");
            edge.timestamps = read_ts_list(need(j, "timestamps", lineno), lineno);
            if (edge.timestamps.empty()) corrupt(lineno, "edge has no timestamps");
            edge.descriptions = read_descs(need(j, "descriptions", lineno), lineno);
            for (const json& kw : need(j, "keywords", lineno))
                edge.keywords.push_back({kw.get<std::string>(), edge.timestamps.front()});
            std::sort(edge.keywords.begin(), edge.keywords.end(),
                      [](const EdgeKeyword& a, const EdgeKeyword& b) {
                          return normalized_key(a.text) < normalized_key(b.text);
                      });
            double strength = need(j, "strength", lineno).get<double>();
            edge.strength_obs.emplace_back(edge.timestamps.back(), strength);
            for (const json& cid : need(j, "chunks", lineno))
                edge.source_chunks.insert(cid.get<std::string>());
            if (graph.edges.count(edge.id)) corrupt(lineno, "duplicate edge id " + edge.id);
            graph.edges.emplace(edge.id, std::move(edge));
        } else if (kind == "chunk") {
            Chunk chunk;
            try {
                chunk = chunk_from_json(j);
            } catch (const Error& e) {
                corrupt(lineno, e.what());
            }
            if (graph.chunks.count(chunk.chunk_id))
                corrupt(lineno, "duplicate chunk id " + chunk.chunk_id);
            if (!graph.last_anchor || chunk.anchor > *graph.last_anchor)
                graph.last_anchor = chunk.anchor;
            graph.chunks.emplace(chunk.chunk_id, std::move(chunk));
        } else {
            corrupt(lineno, "unknown line kind '" + kind + "'");
        }
    }
    try {
        check_invariants(graph);
    } catch (const Error& e) {
        throw Error(Errc::corrupt_stream, std::string("integrity check failed: ") + e.what());
    }
    graph.revision = 1;
    return graph;
}

TemporalGraph import_graph_text(const std::string& text) {
    std::istringstream in(text);
    return import_graph(in);
}

bool graphs_equal(const TemporalGraph& a, const TemporalGraph& b) {
    return export_graph(a, ExportFormat::jsonl) == export_graph(b, ExportFormat::jsonl);
}

} // namespace tkg
