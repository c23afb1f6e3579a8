#pragma once

#include "tkg/timeline.hpp"

#include "json.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tkg {

// One timestamped caption/transcript span from a source stream.
struct Segment {
    Timestamp timestamp;
    std::string text;

    bool operator==(const Segment&) const = default;
};

// An ordered stream of segments from one wearer/source. Segment
// timestamps must be non-decreasing within a document.
struct SourceDocument {
    std::string doc_id;
    std::vector<Segment> segments;

    bool operator==(const SourceDocument&) const = default;
};

// Byte slice of one segment contributing to a chunk. byte_end ==
// segment text size unless the segment was hard-split.
struct SourceSpan {
    std::string doc_id;
    std::size_t segment_index = 0;
    std::size_t byte_begin = 0;
    std::size_t byte_end = 0;

    bool operator==(const SourceSpan&) const = default;
};

// Token-bounded text span anchored at the earliest timestamp it covers.
// Extracted facts are attributed to the anchor, which pins them to their
// first observation.
struct Chunk {
    std::string chunk_id;  // stable, content-derived
    Timestamp anchor;
    std::string text;
    std::size_t token_count = 0;
    std::vector<SourceSpan> source;
    std::vector<std::string> keywords;  // content-level keywords attached during graph build

    bool operator==(const Chunk&) const = default;
};

// Deterministic word count: maximal runs of non-whitespace bytes,
// where whitespace is the Unicode white-space set decoded from UTF-8.
// Malformed UTF-8 bytes count as word bytes, so the function is total.
std::size_t count_tokens(std::string_view text);

// Greedy packing in document order: whole segments are appended while
// the running token total stays within l_max, then the chunk is cut.
// A single segment larger than l_max is hard-split at token boundaries
// into l_max-sized pieces. Output is ordered by (anchor, document
// order) and is a pure function of the inputs.
// Throws Error{empty_input} when docs contain no segments at all.
std::vector<Chunk> chunk_documents(std::span<const SourceDocument> docs, std::size_t l_max);

// Ingestion file format: JSON lines {"doc_id","timestamp","text"}, one
// segment per line. Lines may interleave documents; per-document
// timestamp order must be non-decreasing. Throws Error{corrupt_stream}
// with the offending line number.
std::vector<SourceDocument> read_segments_jsonl(std::istream& in);
void write_segments_jsonl(std::ostream& out, std::span<const SourceDocument> docs);

// Chunk store file for the CLI pipeline (same schema as graph chunk
// lines, without the "kind" tag).
void write_chunks_jsonl(std::ostream& out, std::span<const Chunk> chunks);
std::vector<Chunk> read_chunks_jsonl(std::istream& in);

// One-object JSON codec shared by the chunk store and graph export.
nlohmann::json chunk_to_json(const Chunk& chunk);
Chunk chunk_from_json(const nlohmann::json& j);

} // namespace tkg
