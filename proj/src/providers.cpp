#include "podforge/providers.hpp"

#include "podforge/errors.hpp"
#include "podforge/prompts.hpp"

namespace podforge {

RetryPolicy RetryPolicy::no_wait(int attempts) {
    RetryPolicy p;
    p.max_attempts = attempts;
    p.sleeper = [](std::chrono::milliseconds) {};
    return p;
}

std::string complete_with_retry(CompletionProvider& provider, const CompletionRequest& request,
                                const RetryPolicy& policy) {
    return with_retry(policy, [&] { return provider.complete(request); });
}

namespace {

// Index of the bracket closing the one at `open`, honoring JSON strings.
std::size_t matching_close(const std::string& text, std::size_t open) {
    const char opener = text[open];
    const char closer = opener == '{' ? '}' : ']';
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == opener) {
            ++depth;
        } else if (c == closer) {
            if (--depth == 0) return i;
        }
    }
    return std::string::npos;
}

}  // namespace

nlohmann::ordered_json extract_json(const std::string& text) {
    std::string body = text;
    if (const auto fence = text.find("```"); fence != std::string::npos) {
        auto start = text.find('\n', fence);
        const auto end = start == std::string::npos ? std::string::npos : text.find("```", start);
        if (end != std::string::npos) body = text.substr(start + 1, end - start - 1);
    }
    const auto open = body.find_first_of("{[");
    if (open == std::string::npos) throw SchemaError("reply contains no JSON value");
    const auto close = matching_close(body, open);
    if (close == std::string::npos) throw SchemaError("reply contains truncated JSON");
    try {
        return nlohmann::ordered_json::parse(body.substr(open, close - open + 1));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("invalid JSON: ") + e.what());
    }
}

std::string repair_message(const std::string& error) {
    return PromptLibrary::builtin().get("repair").render({{"error", error}});
}

}  // namespace podforge
