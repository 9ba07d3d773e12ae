#pragma once

// Deterministic offline providers. They produce well-formed payloads for every
// pipeline task so the whole program can run without network access; output
// depends only on the request contents.

#include <cstdint>
#include <functional>
#include <string>

#include "podforge/providers.hpp"

namespace podforge {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

class MockCompletionProvider : public CompletionProvider {
public:
    std::string complete(const CompletionRequest& request) override;
};

// Hash-projection embedder: every token maps to a fixed pseudo-random vector
// and a text embeds to the normalized sum over its tokens.
class HashEmbedder : public EmbeddingProvider {
public:
    explicit HashEmbedder(std::size_t dimension = 64) : dimension_(dimension) {}

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
    std::string id() const override;

private:
    std::size_t dimension_;
};

// Embeds with a user function; for tests and bindings.
class FunctionEmbedder : public EmbeddingProvider {
public:
    using Fn = std::function<Embedding(const std::string&)>;
    FunctionEmbedder(Fn fn, std::string id) : fn_(std::move(fn)), id_(std::move(id)) {}

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
    std::string id() const override { return id_; }

private:
    Fn fn_;
    std::string id_;
};

// Tone bursts whose pitch follows the reference voice and whose length
// follows the word count: 0.3 s + 0.06 s per word.
class MockTtsProvider : public TtsProvider {
public:
    explicit MockTtsProvider(int sample_rate_hz = 24000) : rate_(sample_rate_hz) {}

    std::vector<std::uint8_t> synthesize(const TtsRequest& request) override;

    static double duration_for(const std::string& text);

private:
    int rate_;
};

// Seeded noise (sound effects) or a soft chord (music) of exactly the
// requested duration.
class MockTtaProvider : public TtaProvider {
public:
    explicit MockTtaProvider(int sample_rate_hz = 24000) : rate_(sample_rate_hz) {}

    std::vector<std::uint8_t> generate(const TtaRequest& request) override;

private:
    int rate_;
};

}  // namespace podforge
