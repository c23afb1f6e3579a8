#include "tkg/chunking.hpp"

#include "tkg/hash.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>

namespace tkg {

std::string to_hex(std::uint64_t value) {
    static const char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

namespace {

// Unicode white-space codepoints beyond ASCII.
bool is_space_codepoint(std::uint32_t cp) {
    if (cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' || cp == '\f') return true;
    switch (cp) {
        case 0x0085: case 0x00A0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Decodes one UTF-8 codepoint at `i`; malformed bytes decode as a
// single non-space unit so the scan is total.
std::uint32_t decode_at(std::string_view s, std::size_t i, std::size_t& len) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    len = 1;
    if (c < 0x80) return c;
    int extra = 0;
    std::uint32_t cp = 0;
    if ((c & 0xE0) == 0xC0) { extra = 1; cp = c & 0x1F; }
    else if ((c & 0xF0) == 0xE0) { extra = 2; cp = c & 0x0F; }
    else if ((c & 0xF8) == 0xF0) { extra = 3; cp = c & 0x07; }
    else return 0xFFFD;
    if (i + static_cast<std::size_t>(extra) >= s.size()) return 0xFFFD;
    for (int k = 1; k <= extra; ++k) {
        unsigned char cont = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
        if ((cont & 0xC0) != 0x80) return 0xFFFD;
        cp = (cp << 6) | (cont & 0x3F);
    }
    len = static_cast<std::size_t>(extra) + 1;
    return cp;
}

// Byte offsets where each token starts.
std::vector<std::size_t> token_starts(std::string_view text) {
    std::vector<std::size_t> starts;
    bool in_token = false;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t len = 1;
        std::uint32_t cp = decode_at(text, i, len);
        if (is_space_codepoint(cp)) {
            in_token = false;
        } else if (!in_token) {
            starts.push_back(i);
            in_token = true;
        }
        i += len;
    }
    return starts;
}

std::string make_chunk_id(const std::string& doc_id, std::size_t first_segment,
                          std::size_t byte_begin, std::string_view text) {
    std::uint64_t h = fnv1a64(doc_id);
    h = fnv1a64(std::to_string(first_segment), h);
    h = fnv1a64(std::to_string(byte_begin), h);
    h = fnv1a64(text, h);
    return "c" + to_hex(h);
}

struct ChunkBuilder {
    std::string text;
    std::size_t tokens = 0;
    Timestamp anchor{};
    std::vector<SourceSpan> source;

    bool empty() const { return source.empty(); }

    void add(const std::string& doc_id, std::size_t seg_index, const Timestamp& ts,
             std::string_view slice, std::size_t byte_begin, std::size_t slice_tokens) {
        if (source.empty()) {
            anchor = ts;
        } else {
            text.push_back('\n');
        }
        text.append(slice);
        tokens += slice_tokens;
        source.push_back({doc_id, seg_index, byte_begin, byte_begin + slice.size()});
    }

    Chunk finish() {
        Chunk c;
        c.anchor = anchor;
        c.text = std::move(text);
        c.token_count = tokens;
        c.source = std::move(source);
        c.chunk_id = make_chunk_id(c.source.front().doc_id, c.source.front().segment_index,
                                   c.source.front().byte_begin, c.text);
        return c;
    }
};

} // namespace

std::size_t count_tokens(std::string_view text) {
    return token_starts(text).size();
}

std::vector<Chunk> chunk_documents(std::span<const SourceDocument> docs, std::size_t l_max) {
    if (l_max == 0) throw Error(Errc::bad_config, "l_max must be positive");

    std::vector<Chunk> chunks;
    std::size_t total_segments = 0;

    for (const auto& doc : docs) {
        total_segments += doc.segments.size();
        ChunkBuilder cur;
        auto close = [&] {
            if (!cur.empty()) {
                chunks.push_back(cur.finish());
                cur = ChunkBuilder{};
            }
        };

        for (std::size_t si = 0; si < doc.segments.size(); ++si) {
            const Segment& seg = doc.segments[si];
            const auto starts = token_starts(seg.text);
            const std::size_t n = starts.size();

            if (n > l_max) {
                // Hard split: each l_max-token piece becomes its own
                // chunk; pieces are exact byte slices so concatenation
                // reproduces the segment.
                close();
                for (std::size_t piece = 0; piece * l_max < n; ++piece) {
                    std::size_t from = piece == 0 ? 0 : starts[piece * l_max];
                    std::size_t to = (piece + 1) * l_max < n ? starts[(piece + 1) * l_max] : seg.text.size();
                    std::size_t piece_tokens = std::min(l_max, n - piece * l_max);
                    ChunkBuilder hb;
                    hb.add(doc.doc_id, si, seg.timestamp,
                           std::string_view(seg.text).substr(from, to - from), from, piece_tokens);
                    chunks.push_back(hb.finish());
                }
                continue;
            }

            if (!cur.empty() && cur.tokens + n > l_max) close();
            cur.add(doc.doc_id, si, seg.timestamp, seg.text, 0, n);
        }
        close();
    }

    if (total_segments == 0) throw Error(Errc::empty_input, "no segments to chunk");

    // Document order is the input order; stable sort keeps it among
    // equal anchors.
    std::stable_sort(chunks.begin(), chunks.end(),
                     [](const Chunk& a, const Chunk& b) { return a.anchor < b.anchor; });
    return chunks;
}

namespace {

using nlohmann::json;

json span_to_json(const SourceSpan& s) {
    return json{{"doc_id", s.doc_id},
                {"segment", s.segment_index},
                {"bytes", json::array({s.byte_begin, s.byte_end})}};
}

SourceSpan span_from_json(const json& j) {
    SourceSpan s;
    s.doc_id = j.at("doc_id").get<std::string>();
    s.segment_index = j.at("segment").get<std::size_t>();
    s.byte_begin = j.at("bytes").at(0).get<std::size_t>();
    s.byte_end = j.at("bytes").at(1).get<std::size_t>();
    return s;
}

} // namespace

json chunk_to_json(const Chunk& c) {
    json spans = json::array();
    for (const auto& s : c.source) spans.push_back(span_to_json(s));
    json out{{"id", c.chunk_id},
             {"anchor", format_timestamp(c.anchor)},
             {"text", c.text},
             {"tokens", c.token_count},
             {"source", std::move(spans)}};
    if (!c.keywords.empty()) out["keywords"] = c.keywords;
    return out;
}

Chunk chunk_from_json(const json& j) {
    Chunk c;
    c.chunk_id = j.at("id").get<std::string>();
    c.anchor = parse_timestamp(j.at("anchor").get<std::string>());
    c.text = j.at("text").get<std::string>();
    c.token_count = j.at("tokens").get<std::size_t>();
    for (const auto& s : j.at("source")) c.source.push_back(span_from_json(s));
    if (j.contains("keywords")) c.keywords = j.at("keywords").get<std::vector<std::string>>();
    return c;
}

std::vector<SourceDocument> read_segments_jsonl(std::istream& in) {
    std::vector<SourceDocument> docs;
    std::map<std::string, std::size_t> index;  // doc_id -> position, first appearance order
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw Error(Errc::corrupt_stream, "line " + std::to_string(line_no) + ": not a JSON object", line_no);
        try {
            std::string doc_id = j.at("doc_id").get<std::string>();
            Segment seg;
            seg.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
            seg.text = j.at("text").get<std::string>();
            auto [it, inserted] = index.try_emplace(doc_id, docs.size());
            if (inserted) docs.push_back(SourceDocument{doc_id, {}});
            SourceDocument& doc = docs[it->second];
            if (!doc.segments.empty() && seg.timestamp < doc.segments.back().timestamp)
                throw Error(Errc::corrupt_stream,
                            "line " + std::to_string(line_no) + ": timestamps regress within doc '" + doc_id + "'",
                            line_no);
            doc.segments.push_back(std::move(seg));
        } catch (const json::exception& e) {
            throw Error(Errc::corrupt_stream, "line " + std::to_string(line_no) + ": " + e.what(), line_no);
        } catch (const Error& e) {
            if (e.code() == Errc::corrupt_stream) throw;
            throw Error(Errc::corrupt_stream, "line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
    return docs;
}

void write_segments_jsonl(std::ostream& out, std::span<const SourceDocument> docs) {
    for (const auto& doc : docs) {
        for (const auto& seg : doc.segments) {
            json j{{"doc_id", doc.doc_id}, {"timestamp", format_timestamp(seg.timestamp)}, {"text", seg.text}};
            out << j.dump() << '\n';
        }
    }
}

void write_chunks_jsonl(std::ostream& out, std::span<const Chunk> chunks) {
    for (const auto& c : chunks) out << chunk_to_json(c).dump() << '\n';
}

std::vector<Chunk> read_chunks_jsonl(std::istream& in) {
    std::vector<Chunk> chunks;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw Error(Errc::corrupt_stream, "line " + std::to_string(line_no) + ": bad JSON", line_no);
        try {
            chunks.push_back(chunk_from_json(j));
        } catch (const json::exception& e) {
            throw Error(Errc::corrupt_stream, "line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
    return chunks;
}

} // namespace tkg
