#pragma once

// Network and subprocess backends.
//
// Completion: POST {model, messages, temperature, seed?}; the reply may be an
// OpenAI-style {"choices":[{"message":{"content":...}}]} or {"text": ...}.
// Embedding: POST {model, input:[...]}; reply {"data":[{"embedding":[...]}]}
// or {"embeddings":[[...]]}.
// TTS / TTA: POST the payloads from synthesis.hpp; reply is WAV bytes.
// Connection failures, timeouts, 429 and 5xx are TransportErrors.

#include <chrono>
#include <string>
#include <vector>

#include "podforge/providers.hpp"

namespace podforge {

struct HttpEndpoint {
    std::string url;  // scheme://host[:port]/path
    std::string api_key;
    std::chrono::seconds timeout{120};
};

class HttpCompletionProvider : public CompletionProvider {
public:
    HttpCompletionProvider(HttpEndpoint endpoint, std::string model);
    std::string complete(const CompletionRequest& request) override;

private:
    HttpEndpoint endpoint_;
    std::string model_;
};

class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(HttpEndpoint endpoint, std::string model);
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
    std::string id() const override { return "http:" + model_; }

private:
    HttpEndpoint endpoint_;
    std::string model_;
};

class HttpTtsProvider : public TtsProvider {
public:
    explicit HttpTtsProvider(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::vector<std::uint8_t> synthesize(const TtsRequest& request) override;

private:
    HttpEndpoint endpoint_;
};

class HttpTtaProvider : public TtaProvider {
public:
    explicit HttpTtaProvider(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::vector<std::uint8_t> generate(const TtaRequest& request) override;

private:
    HttpEndpoint endpoint_;
};

/// Runs `/bin/sh -c command`, feeds `input` on stdin and returns stdout.
/// Nonzero exit is a ProviderError.
std::vector<std::uint8_t> run_command(const std::string& command, std::string_view input);

/// Same payload as the HTTP variant, on stdin; WAV on stdout.
class SubprocessTtsProvider : public TtsProvider {
public:
    explicit SubprocessTtsProvider(std::string command) : command_(std::move(command)) {}
    std::vector<std::uint8_t> synthesize(const TtsRequest& request) override;

private:
    std::string command_;
};

class SubprocessTtaProvider : public TtaProvider {
public:
    explicit SubprocessTtaProvider(std::string command) : command_(std::move(command)) {}
    std::vector<std::uint8_t> generate(const TtaRequest& request) override;

private:
    std::string command_;
};

}  // namespace podforge
