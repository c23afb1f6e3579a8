#include "tkg/config.hpp"

#include "tkg/errors.hpp"

#include "doctest.h"

using namespace tkg;
using nlohmann::json;

TEST_CASE("defaults survive an empty config") {
    EngineConfig c = EngineConfig::from_json(json::object());
    CHECK(c.l_max == 1200);
    CHECK(c.language == "English");
    CHECK(c.k == kDefaultTopK);
    CHECK(c.merge.tau_merge == doctest::Approx(0.90));
    CHECK(c.merge.summarize_after == 100);
    CHECK(c.delimiters.tuple == "<|>");
    CHECK(c.extraction.mode == "mock");
    CHECK(c.answering.mode == "none");
    CHECK(c.embedding.mode == "mock");
    CHECK(c.graph_path == "graph.jsonl");
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("fields parse from nested json") {
    json j = {
        {"l_max", 64},
        {"language", "German"},
        {"delimiters", {{"tuple", "@@"}, {"record", ";;"}, {"completion", "[END]"}}},
        {"merge", {{"tau_merge", 0.8}, {"summarize_after", 10}, {"strict_order", true}}},
        {"retrieval", {{"k", 5}, {"components", "nodes,edges"}}},
        {"extraction", {{"mode", "mock"}, {"retries", 1}}},
        {"answering", {{"mode", "mock"}, {"script", "replies.jsonl"}}},
        {"embedding", {{"mode", "mock"}, {"dimension", 32}, {"seed", 99}}},
        {"paths", {{"graph", "out/graph.jsonl"}, {"cache", "out/cache.jsonl"}}},
    };
    EngineConfig c = EngineConfig::from_json(j);
    CHECK(c.l_max == 64);
    CHECK(c.language == "German");
    CHECK(c.delimiters.record == ";;");
    CHECK(c.merge.tau_merge == doctest::Approx(0.8));
    CHECK(c.merge.strict_order);
    CHECK(c.k == 5);
    CHECK(c.components.nodes);
    CHECK_FALSE(c.components.chunks);
    CHECK(c.extraction.retries == 1);
    CHECK(c.answering.mode == "mock");
    CHECK(c.answering.script == "replies.jsonl");
    CHECK(c.embedding.dimension == 32);
    CHECK(c.embedding.seed == 99);
    CHECK(c.graph_path == "out/graph.jsonl");
    CHECK(c.cache_path == "out/cache.jsonl");
}

TEST_CASE("unknown keys are rejected with their path") {
    auto rejects = [](const json& j, const std::string& needle) {
        try {
            EngineConfig::from_json(j);
            FAIL_CHECK("expected bad_config for ", needle);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::bad_config);
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    rejects({{"lmax", 5}}, "lmax");
    rejects({{"merge", {{"tau", 0.5}}}}, "merge.tau");
    rejects({{"retrieval", {{"topk", 3}}}}, "retrieval.topk");
    rejects({{"embedding", {{"dimensions", 64}}}}, "embedding.dimensions");
    rejects({{"paths", {{"graphfile", "x"}}}}, "paths.graphfile");
}

TEST_CASE("invalid values fail validation") {
    json tau = {{"merge", {{"tau_merge", 1.5}}}};
    CHECK_THROWS_AS(EngineConfig::from_json(tau), Error);
    json zero_l = {{"l_max", 0}};
    CHECK_THROWS_AS(EngineConfig::from_json(zero_l), Error);
    json bad_mode = {{"extraction", {{"mode", "quantum"}}}};
    CHECK_THROWS_AS(EngineConfig::from_json(bad_mode), Error);
    json no_url = {{"answering", {{"mode", "http"}}}};
    CHECK_THROWS_AS(EngineConfig::from_json(no_url), Error);
    json wrong_type = {{"l_max", "many"}};
    CHECK_THROWS_AS(EngineConfig::from_json(wrong_type), Error);
}

TEST_CASE("config round-trips through json") {
    EngineConfig c;
    c.l_max = 13;
    c.k = 7;
    c.merge.tau_merge = 0.85;
    c.answering.mode = "mock";
    c.cache_path = "cache.jsonl";
    EngineConfig back = EngineConfig::from_json(c.to_json());
    CHECK(back.l_max == 13);
    CHECK(back.k == 7);
    CHECK(back.merge.tau_merge == doctest::Approx(0.85));
    CHECK(back.answering.mode == "mock");
    CHECK(back.cache_path == "cache.jsonl");
}

TEST_CASE("factories build the offline providers") {
    EngineConfig c;
    c.embedding.dimension = 16;
    auto extractor = c.make_extraction_client();
    REQUIRE(extractor != nullptr);
    CHECK(extractor->id() == "caption-extractor");
    CHECK(c.make_answering_client() == nullptr); // mode none
    auto embedder = c.make_embedder();
    REQUIRE(embedder != nullptr);
    CHECK(embedder->dimension() == 16);
    CHECK(embedder->embed("abc").size() == 16);

    c.answering.mode = "mock";
    auto answering = c.make_answering_client();
    REQUIRE(answering != nullptr);
    CHECK(answering->id() == "scripted");
}
