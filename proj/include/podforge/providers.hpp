#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace podforge {

struct ChatMessage {
    std::string role;  // "system", "user" or "assistant"
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

// One completion call. `task` and `hints` describe the call for logging and
// for offline providers; they are never sent over the wire.
struct CompletionRequest {
    std::string task;
    std::vector<ChatMessage> messages;
    double temperature = 0.7;
    std::optional<std::int64_t> seed;
    nlohmann::json hints = nlohmann::json::object();
};

// Implementations must tolerate concurrent calls.
class CompletionProvider {
public:
    virtual ~CompletionProvider() = default;

    /// Returns the raw completion text. Throws TransportError for retryable
    /// failures and ProviderError for everything else.
    virtual std::string complete(const CompletionRequest& request) = 0;
};

using Embedding = std::vector<double>;

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;

    /// Stable identifier recorded in metric config snapshots.
    virtual std::string id() const = 0;
};

struct TtsRequest {
    std::string text;
    std::vector<std::uint8_t> reference_audio;  // WAV bytes
    std::optional<std::string> instruction;     // omitted for the no-instruction path
};

class TtsProvider {
public:
    virtual ~TtsProvider() = default;

    /// Returns WAV (RIFF) bytes.
    virtual std::vector<std::uint8_t> synthesize(const TtsRequest& request) = 0;
};

enum class BackgroundKind { SoundEffect, Music };

struct TtaRequest {
    std::string description;
    double duration_s = 0.0;
    BackgroundKind kind = BackgroundKind::SoundEffect;
};

class TtaProvider {
public:
    virtual ~TtaProvider() = default;

    virtual std::vector<std::uint8_t> generate(const TtaRequest& request) = 0;
};

// Exponential backoff on TransportError only.
struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
    std::function<void(std::chrono::milliseconds)> sleeper;  // null: std::this_thread::sleep_for

    static RetryPolicy no_wait(int attempts = 3);
};

template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn) -> decltype(fn());

/// Calls `provider.complete` under `policy`.
std::string complete_with_retry(CompletionProvider& provider, const CompletionRequest& request,
                                const RetryPolicy& policy);

/// Completion whose answer must be a JSON payload accepted by `parse`.
/// On a parse failure (`parse` throws SchemaError, or the text holds no JSON)
/// the model is re-prompted once with the error; a second failure throws
/// SchemaError. Transport errors are retried per `policy` on every call.
template <typename T>
T complete_structured(CompletionProvider& provider, CompletionRequest request,
                      const RetryPolicy& policy,
                      const std::function<T(const nlohmann::ordered_json&)>& parse);

/// Pulls the JSON payload out of model text: a fenced ```json block if
/// present, otherwise the outermost {...} or [...] span. Throws SchemaError.
nlohmann::ordered_json extract_json(const std::string& text);

/// Message appended for the single repair round-trip.
std::string repair_message(const std::string& error);

}  // namespace podforge

#include "podforge/providers_impl.hpp"
