#pragma once

#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "podforge/errors.hpp"
#include "podforge/providers.hpp"

namespace podforge::testing {

// Replays queued replies (or TransportErrors) and records every request.
class ScriptedProvider : public CompletionProvider {
public:
    struct Timeout {};
    using Reply = std::variant<std::string, Timeout>;

    void push(std::string text) { replies_.emplace_back(std::move(text)); }
    void push_timeout() { replies_.emplace_back(Timeout{}); }

    std::string complete(const CompletionRequest& request) override {
        std::lock_guard lock(mu_);
        requests.push_back(request);
        if (replies_.empty()) throw ProviderError("scripted provider exhausted");
        Reply r = std::move(replies_.front());
        replies_.pop_front();
        if (std::holds_alternative<Timeout>(r)) throw TransportError("timeout");
        return std::get<std::string>(r);
    }

    std::vector<CompletionRequest> requests;

private:
    std::mutex mu_;
    std::deque<Reply> replies_;
};

// Answers every request with a function of the request; records requests.
class FunctionProvider : public CompletionProvider {
public:
    explicit FunctionProvider(std::function<std::string(const CompletionRequest&)> fn)
        : fn_(std::move(fn)) {}

    std::string complete(const CompletionRequest& request) override {
        {
            std::lock_guard lock(mu_);
            requests.push_back(request);
        }
        return fn_(request);
    }

    std::vector<CompletionRequest> requests;

private:
    std::mutex mu_;
    std::function<std::string(const CompletionRequest&)> fn_;
};

inline std::string prompt_text(const CompletionRequest& r) {
    std::string out;
    for (const auto& m : r.messages) out += m.content + "\n";
    return out;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("podforge_test_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace podforge::testing
