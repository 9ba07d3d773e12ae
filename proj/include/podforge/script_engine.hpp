#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "podforge/prompts.hpp"
#include "podforge/providers.hpp"
#include "podforge/script_types.hpp"

namespace podforge {

struct EngineOptions {
    int question_count = 5;
    int max_guests = 5;
    double temperature = 0.7;
    std::optional<std::int64_t> seed;
    RetryPolicy retry;
};

// Host-Guest-Writer workflow plus the two single-call baselines. The engine
// keeps no per-episode state, so one instance may serve concurrent episodes.
class ScriptEngine {
public:
    ScriptEngine(CompletionProvider& llm, PromptLibrary prompts = PromptLibrary::builtin(),
                 EngineOptions options = {});

    const EngineOptions& options() const noexcept { return options_; }

    std::vector<GuestProfile> generate_guest_profiles(const Topic& topic, int n_guests) const;

    InterviewOutline generate_outline(const Topic& topic,
                                      const std::vector<GuestProfile>& profiles) const;

    /// A null outline selects the topic-only prompt; the response then holds
    /// free-form answers.
    GuestResponse generate_guest_response(const GuestProfile& profile,
                                          const InterviewOutline* outline,
                                          const Topic& topic) const;

    /// One call per guest, run concurrently, merged in guest order.
    std::vector<GuestResponse> generate_guest_responses(const std::vector<GuestProfile>& profiles,
                                                        const InterviewOutline* outline,
                                                        const Topic& topic) const;

    ConversationScript compose_script(const Topic& topic, const std::vector<GuestProfile>& profiles,
                                      const InterviewOutline& outline,
                                      const std::vector<GuestResponse>& responses) const;

    ConversationScript direct_baseline_script(const Topic& topic, int n_guests) const;

    ConversationScript single_agent_script(const Topic& topic, int n_guests) const;

    /// profiles -> outline (optional) -> parallel guests -> writer. Failures
    /// are rethrown as StageError labelled with the failing stage.
    ConversationScript run_episode(const Topic& topic, int n_guests, bool use_outline) const;

private:
    CompletionRequest make_request(std::string task, std::string prompt,
                                   nlohmann::json hints) const;

    CompletionProvider& llm_;
    PromptLibrary prompts_;
    EngineOptions options_;
};

/// "one", "two", ... "ten"; digits beyond that.
std::string count_word(int n);

/// Rendering helpers shared with other prompt builders.
std::string format_profiles(const std::vector<GuestProfile>& profiles);
std::string format_profile(const GuestProfile& profile);
std::string format_outline(const InterviewOutline& outline);

}  // namespace podforge
