#include "tkg/clients.hpp"

#include "tkg/errors.hpp"
#include "tkg/hash.hpp"

#include "httplib.h"
#include "json.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>

namespace tkg {

using nlohmann::json;

std::vector<std::vector<double>> EmbeddingProvider::embed_batch(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) out.push_back(embed(t));
    return out;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw Error(Errc::dimension_mismatch, "cosine of " + std::to_string(a.size()) + " vs " +
                                                  std::to_string(b.size()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

void normalize_in_place(std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    if (n == 0.0) return;
    n = std::sqrt(n);
    for (double& x : v) x /= n;
}

HashingEmbedder::HashingEmbedder(std::size_t dimension, std::uint64_t seed)
    : dim_(dimension), seed_(seed) {
    if (dim_ == 0) throw Error(Errc::bad_config, "embedding dimension must be positive");
}

std::string HashingEmbedder::id() const {
    return "hash-" + std::to_string(dim_) + "-" + to_hex(seed_);
}

std::vector<double> HashingEmbedder::embed(const std::string& text) {
    std::vector<double> v(dim_, 0.0);
    std::vector<std::string> words;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));

    auto bump = [&](const std::string& gram) {
        std::uint64_t h = fnv1a64(gram, seed_);
        v[h % dim_] += (h >> 63) ? -1.0 : 1.0;
    };
    for (std::size_t i = 0; i < words.size(); ++i) {
        bump(words[i]);
        if (i + 1 < words.size()) bump(words[i] + " " + words[i + 1]);
    }
    if (words.empty()) v[seed_ % dim_] = 1.0;
    normalize_in_place(v);
    return v;
}

void ScriptedClient::add(std::string prompt, std::string response) {
    canned_[std::move(prompt)] = std::move(response);
}

void ScriptedClient::add_hashed(std::string prompt_hash, std::string response) {
    hashed_[std::move(prompt_hash)] = std::move(response);
}

std::string ScriptedClient::complete(const std::string& prompt) {
    ++calls_;
    auto it = canned_.find(prompt);
    if (it != canned_.end()) return it->second;
    if (!hashed_.empty()) {
        auto hit = hashed_.find(to_hex(fnv1a64(prompt)));
        if (hit != hashed_.end()) return hit->second;
    }
    if (fallback_) return *fallback_;
    throw Error(Errc::client_failure, "no scripted response for prompt of " +
                                          std::to_string(prompt.size()) + " bytes");
}

std::string FirstSentenceSummarizer::summarize(const std::vector<std::string>& entries) {
    if (entries.empty()) throw Error(Errc::empty_input, "nothing to summarize");
    std::string out;
    for (const std::string& entry : entries) {
        std::string s = entry;
        std::size_t dot = s.find('.');
        if (dot != std::string::npos) s.resize(dot + 1);
        if (!out.empty()) out += ' ';
        out += s;
        if (out.size() >= max_bytes_) {
            out.resize(max_bytes_);
            break;
        }
    }
    return out;
}

std::string ClientSummarizer::summarize(const std::vector<std::string>& entries) {
    if (entries.empty()) throw Error(Errc::empty_input, "nothing to summarize");
    std::string prompt =
        "Summarize the following dated notes into one concise sentence. Keep concrete "
        "facts, names and the earliest date mentioned.\n\n";
    for (const std::string& e : entries) {
        prompt += e;
        prompt += "\n";
    }
    prompt += "\nSummary:";
    std::string out = client_.complete(prompt);
    std::size_t b = out.find_first_not_of(" \t\r\n");
    std::size_t e = out.find_last_not_of(" \t\r\n");
    if (b == std::string::npos) throw Error(Errc::summarizer_failure, "empty summary");
    return out.substr(b, e - b + 1);
}

namespace {

std::string bearer_from_env(const std::string& var) {
    if (var.empty()) return {};
    const char* v = std::getenv(var.c_str());
    return v ? std::string(v) : std::string();
}

json post_json(const HttpOptions& opt, const std::string& path, const json& body) {
    httplib::Client cli(opt.base_url);
    cli.set_connection_timeout(opt.timeout_seconds);
    cli.set_read_timeout(opt.timeout_seconds);
    httplib::Headers headers;
    std::string key = bearer_from_env(opt.api_key_env);
    if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res)
        throw Error(Errc::client_failure,
                    "no response from " + opt.base_url + path + ": " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw Error(Errc::client_failure,
                    opt.base_url + path + " returned HTTP " + std::to_string(res->status));
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded())
        throw Error(Errc::client_failure, "response from " + path + " is not valid JSON");
    return parsed;
}

} // namespace

HttpChatClient::HttpChatClient(HttpOptions options) : opt_(std::move(options)) {
    if (opt_.base_url.empty()) throw Error(Errc::bad_config, "chat client needs a base_url");
}

std::string HttpChatClient::id() const { return "http-chat:" + opt_.model; }

std::string HttpChatClient::complete(const std::string& prompt) {
    json body = {{"model", opt_.model},
                 {"temperature", 0},
                 {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
    json res = post_json(opt_, "/v1/chat/completions", body);
    try {
        return res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(Errc::client_failure, std::string("unexpected chat payload: ") + e.what());
    }
}

HttpEmbedder::HttpEmbedder(HttpOptions options, std::size_t dimension)
    : opt_(std::move(options)), dim_(dimension) {
    if (opt_.base_url.empty()) throw Error(Errc::bad_config, "embedder needs a base_url");
    if (dim_ == 0) throw Error(Errc::bad_config, "embedding dimension must be positive");
}

std::string HttpEmbedder::id() const { return "http-embed:" + opt_.model; }

std::vector<double> HttpEmbedder::embed(const std::string& text) {
    json body = {{"model", opt_.model}, {"input", text}};
    json res = post_json(opt_, "/v1/embeddings", body);
    std::vector<double> v;
    try {
        v = res.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw Error(Errc::client_failure, std::string("unexpected embedding payload: ") + e.what());
    }
    if (v.size() != dim_)
        throw Error(Errc::dimension_mismatch, "provider returned dimension " +
                                                  std::to_string(v.size()) + ", configured " +
                                                  std::to_string(dim_));
    return v;
}

CachedEmbedder::CachedEmbedder(std::shared_ptr<EmbeddingProvider> inner, std::string cache_path)
    : inner_(std::move(inner)), path_(std::move(cache_path)) {
    if (!inner_) throw Error(Errc::bad_config, "cache needs an inner provider");
    if (path_.empty()) return;
    std::ifstream in(path_);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("id") || !j.contains("h") || !j.contains("v"))
            throw Error(Errc::corrupt_stream, "bad embedding cache entry", lineno);
        if (j["id"] != inner_->id()) continue;
        cache_[j["h"].get<std::string>()] = j["v"].get<std::vector<double>>();
    }
}

std::vector<double> CachedEmbedder::embed(const std::string& text) {
    std::string h = to_hex(fnv1a64(text));
    auto it = cache_.find(h);
    if (it != cache_.end()) {
        ++hits_;
        return it->second;
    }
    std::vector<double> v = inner_->embed(text);
    cache_[h] = v;
    if (!path_.empty()) {
        std::ofstream out(path_, std::ios::app);
        json j = {{"id", inner_->id()}, {"h", h}, {"v", v}};
        out << j.dump() << "\n";
    }
    return v;
}

} // namespace tkg
