#pragma once

#include <thread>

#include "podforge/errors.hpp"

namespace podforge {

template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
    const int attempts = policy.max_attempts < 1 ? 1 : policy.max_attempts;
    auto backoff = policy.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const TransportError&) {
            if (attempt >= attempts) throw;
        }
        if (policy.sleeper) {
            policy.sleeper(backoff);
        } else {
            std::this_thread::sleep_for(backoff);
        }
        backoff *= 2;
    }
}

template <typename T>
T complete_structured(CompletionProvider& provider, CompletionRequest request,
                      const RetryPolicy& policy,
                      const std::function<T(const nlohmann::ordered_json&)>& parse) {
    auto parse_text = [&parse](const std::string& raw) -> T {
        try {
            return parse(extract_json(raw));
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(e.what());
        }
    };
    std::string text = complete_with_retry(provider, request, policy);
    try {
        return parse_text(text);
    } catch (const SchemaError& first) {
        request.messages.push_back({"assistant", text});
        request.messages.push_back({"user", repair_message(first.what())});
        request.hints["repair"] = true;
        text = complete_with_retry(provider, request, policy);
        try {
            return parse_text(text);
        } catch (const SchemaError& second) {
            throw SchemaError(request.task + ": output rejected after repair: " + second.what());
        }
    }
}

}  // namespace podforge
