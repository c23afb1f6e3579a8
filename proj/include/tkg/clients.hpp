#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tkg {

// Synchronous text-completion backend. Implementations throw
// Error{client_failure} when no answer can be produced.
class TextClient {
public:
    virtual ~TextClient() = default;
    virtual std::string complete(const std::string& prompt) = 0;
    virtual std::string id() const = 0;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<double> embed(const std::string& text) = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string id() const = 0;
    virtual std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts);
};

// Collapses a list of dated description entries into one entry.
class Summarizer {
public:
    virtual ~Summarizer() = default;
    virtual std::string summarize(const std::vector<std::string>& entries) = 0;
};

// Deterministic offline embedder: feature hashing of word unigrams and
// bigrams into a fixed-dimension signed count vector, L2-normalized.
// Texts sharing vocabulary land near each other, which is enough for
// name resolution and retrieval tests without a model.
class HashingEmbedder final : public EmbeddingProvider {
public:
    explicit HashingEmbedder(std::size_t dimension = 256, std::uint64_t seed = 0x5eedULL);
    std::vector<double> embed(const std::string& text) override;
    std::size_t dimension() const override { return dim_; }
    std::string id() const override;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

// Canned responses keyed by exact prompt text or by the hex FNV-1a
// hash of the prompt; used to script LLM behaviour in tests and
// offline replays. Unknown prompts throw unless a fallback is set.
class ScriptedClient final : public TextClient {
public:
    void add(std::string prompt, std::string response);
    void add_hashed(std::string prompt_hash, std::string response);
    void set_fallback(std::string response) { fallback_ = std::move(response); }
    std::string complete(const std::string& prompt) override;
    std::string id() const override { return "scripted"; }
    std::size_t calls() const { return calls_; }

private:
    std::map<std::string, std::string> canned_;
    std::map<std::string, std::string> hashed_;
    std::optional<std::string> fallback_;
    std::size_t calls_ = 0;
};

// Concatenates the first sentence of every entry, capped at max_bytes.
// Deterministic, and applying it to its own output is the identity for
// single-sentence summaries, so repeated compaction stays stable.
class FirstSentenceSummarizer final : public Summarizer {
public:
    explicit FirstSentenceSummarizer(std::size_t max_bytes = 200) : max_bytes_(max_bytes) {}
    std::string summarize(const std::vector<std::string>& entries) override;

private:
    std::size_t max_bytes_;
};

// Delegates summarization to a text client with a fixed instruction.
class ClientSummarizer final : public Summarizer {
public:
    explicit ClientSummarizer(TextClient& client) : client_(client) {}
    std::string summarize(const std::vector<std::string>& entries) override;

private:
    TextClient& client_;
};

struct HttpOptions {
    std::string base_url;       // e.g. "http://localhost:8080"
    std::string model;
    std::string api_key_env;    // name of env var holding the bearer token
    int timeout_seconds = 60;
};

// OpenAI-style /v1/chat/completions client.
class HttpChatClient final : public TextClient {
public:
    explicit HttpChatClient(HttpOptions options);
    std::string complete(const std::string& prompt) override;
    std::string id() const override;

private:
    HttpOptions opt_;
};

// OpenAI-style /v1/embeddings client.
class HttpEmbedder final : public EmbeddingProvider {
public:
    HttpEmbedder(HttpOptions options, std::size_t dimension);
    std::vector<double> embed(const std::string& text) override;
    std::size_t dimension() const override { return dim_; }
    std::string id() const override;

private:
    HttpOptions opt_;
    std::size_t dim_;
};

// Wraps a provider with an append-only JSONL cache keyed by provider id
// and text hash, so repeated builds do not refetch vectors.
class CachedEmbedder final : public EmbeddingProvider {
public:
    CachedEmbedder(std::shared_ptr<EmbeddingProvider> inner, std::string cache_path);
    std::vector<double> embed(const std::string& text) override;
    std::size_t dimension() const override { return inner_->dimension(); }
    std::string id() const override { return inner_->id(); }
    std::size_t hits() const { return hits_; }

private:
    std::shared_ptr<EmbeddingProvider> inner_;
    std::string path_;
    std::map<std::string, std::vector<double>> cache_;
    std::size_t hits_ = 0;
};

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);
void normalize_in_place(std::vector<double>& v);

} // namespace tkg
