#pragma once

#include "tkg/graph.hpp"

#include <iosfwd>
#include <string>

namespace tkg {

enum class ExportFormat { jsonl, dot, cypher };

// Accepts "jsonl", "dot", "cypher"; throws Error{unsupported_format}.
ExportFormat export_format_from(std::string_view name);

// jsonl is loss-free up to the exported schema (import inverts it);
// dot labels nodes "name:type" and edges with their latest description;
// cypher emits one relationship CREATE per edge timestamp so string
// comparison on the timestamp property reproduces window queries.
std::string export_graph(const TemporalGraph& graph, ExportFormat format);

TemporalGraph import_graph(std::istream& in);
TemporalGraph import_graph_text(const std::string& text);

// Equality at the persistence boundary: identical jsonl export bytes.
bool graphs_equal(const TemporalGraph& a, const TemporalGraph& b);

} // namespace tkg
