#include "podforge/script_engine.hpp"

#include <exception>
#include <future>
#include <set>

#include "json_payload.hpp"
#include "podforge/errors.hpp"

namespace podforge {

namespace {

using payload::Json;

std::vector<GuestProfile> parse_profiles(const Json& arr, const std::string& where) {
    std::vector<GuestProfile> out;
    std::set<std::string> names;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string at = where + "[" + std::to_string(i) + "]";
        GuestProfile p;
        p.name = payload::text(arr[i], "name", at);
        p.expertise = payload::text(arr[i], "expertise", at);
        p.background = payload::optional_text(arr[i], "background");
        p.perspective = payload::optional_text(arr[i], "perspective");
        if (const auto g = payload::optional_text(arr[i], "gender"); !g.empty()) {
            if (const Gender parsed = parse_gender(g); parsed != Gender::Unspecified) {
                p.stated_gender = parsed;
            }
        }
        if (!names.insert(p.name).second) throw SchemaError(at + ": duplicate guest name " + p.name);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<DialogueLine> parse_lines(const Json& obj) {
    const Json& arr = payload::array(obj, "lines", "script");
    if (arr.empty()) throw SchemaError("script: \"lines\" is empty");
    std::vector<DialogueLine> lines;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string at = "lines[" + std::to_string(i) + "]";
        lines.push_back({payload::text(arr[i], "speaker", at), payload::text(arr[i], "text", at),
                         payload::text(arr[i], "style_instruction", at)});
    }
    return lines;
}

std::string format_responses(const std::vector<GuestResponse>& responses,
                             const InterviewOutline& outline) {
    std::string out;
    for (const auto& r : responses) {
        out += "### " + r.guest_name + "\n";
        for (std::size_t i = 0; i < r.answers.size(); ++i) {
            if (i < outline.questions.size()) out += "Q" + std::to_string(i + 1) + ": " +
                                                     outline.questions[i] + "\n";
            out += "A" + std::to_string(i + 1) + ": " + r.answers[i] + "\n";
        }
        out += "\n";
    }
    return out;
}

nlohmann::json guest_names(const std::vector<GuestProfile>& profiles) {
    auto names = nlohmann::json::array();
    for (const auto& p : profiles) names.push_back(p.name);
    return names;
}

template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        std::throw_with_nested(StageError(stage, e.what()));
    }
}

}  // namespace

std::string count_word(int n) {
    static const char* words[] = {"zero", "one", "two",   "three", "four", "five",
                                  "six",  "seven", "eight", "nine",  "ten"};
    if (n >= 0 && n <= 10) return words[n];
    return std::to_string(n);
}

std::string format_profile(const GuestProfile& p) {
    std::string out = "Name: " + p.name + "\nExpertise: " + p.expertise;
    if (!p.background.empty()) out += "\nBackground: " + p.background;
    if (!p.perspective.empty()) out += "\nPerspective: " + p.perspective;
    if (p.stated_gender) out += "\nGender: " + to_string(*p.stated_gender);
    return out;
}

std::string format_profiles(const std::vector<GuestProfile>& profiles) {
    std::string out;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        out += "Guest " + std::to_string(i + 1) + "\n" + format_profile(profiles[i]) + "\n\n";
    }
    return out;
}

std::string format_outline(const InterviewOutline& outline) {
    std::string out;
    for (std::size_t i = 0; i < outline.questions.size(); ++i) {
        out += std::to_string(i + 1) + ". " + outline.questions[i] + "\n";
    }
    return out;
}

ScriptEngine::ScriptEngine(CompletionProvider& llm, PromptLibrary prompts, EngineOptions options)
    : llm_(llm), prompts_(std::move(prompts)), options_(std::move(options)) {
    if (options_.question_count < 1) throw PreconditionError("question_count must be >= 1");
}

CompletionRequest ScriptEngine::make_request(std::string task, std::string prompt,
                                             nlohmann::json hints) const {
    CompletionRequest req;
    req.task = std::move(task);
    req.messages.push_back({"user", std::move(prompt)});
    req.temperature = options_.temperature;
    req.seed = options_.seed;
    req.hints = std::move(hints);
    return req;
}

std::vector<GuestProfile> ScriptEngine::generate_guest_profiles(const Topic& topic,
                                                                int n_guests) const {
    if (n_guests < 1) throw PreconditionError("n_guests must be >= 1");
    const std::string prompt = prompts_.get("host_profiles")
                                   .render({{"topic", topic.text},
                                            {"n_guests", std::to_string(n_guests)}});
    auto req = make_request("host_profiles", prompt,
                            {{"topic", topic.text}, {"n_guests", n_guests}});
    return complete_structured<std::vector<GuestProfile>>(
        llm_, std::move(req), options_.retry, [n_guests](const Json& j) {
            auto profiles = parse_profiles(payload::array(j, "guests", "guests"), "guests");
            if (static_cast<int>(profiles.size()) != n_guests) {
                throw SchemaError("count mismatch: expected " + std::to_string(n_guests) +
                                  " guests, got " + std::to_string(profiles.size()));
            }
            return profiles;
        });
}

InterviewOutline ScriptEngine::generate_outline(const Topic& topic,
                                                const std::vector<GuestProfile>& profiles) const {
    if (profiles.empty()) throw PreconditionError("generate_outline needs at least one profile");
    const int n = options_.question_count;
    const std::string prompt = prompts_.get("host_outline")
                                   .render({{"topic", topic.text},
                                            {"profiles", format_profiles(profiles)},
                                            {"n_questions", std::to_string(n)}});
    auto req = make_request("host_outline", prompt,
                            {{"topic", topic.text},
                             {"guests", guest_names(profiles)},
                             {"n_questions", n}});
    return complete_structured<InterviewOutline>(
        llm_, std::move(req), options_.retry, [n](const Json& j) {
            InterviewOutline outline{payload::text_array(j, "questions", "outline")};
            if (outline.questions.empty()) throw SchemaError("outline has no questions");
            if (static_cast<int>(outline.questions.size()) != n) {
                throw SchemaError("count mismatch: expected " + std::to_string(n) +
                                  " questions, got " + std::to_string(outline.questions.size()));
            }
            return outline;
        });
}

GuestResponse ScriptEngine::generate_guest_response(const GuestProfile& profile,
                                                    const InterviewOutline* outline,
                                                    const Topic& topic) const {
    if (outline && outline->questions.empty()) {
        throw PreconditionError("guest response needs a non-empty outline");
    }
    std::string prompt;
    nlohmann::json hints = {{"topic", topic.text}, {"guest", profile.name}};
    if (outline) {
        prompt = prompts_.get("guest_response")
                     .render({{"topic", topic.text},
                              {"profile", format_profile(profile)},
                              {"outline", format_outline(*outline)}});
        hints["outline"] = outline->questions;
    } else {
        prompt = prompts_.get("guest_response_no_outline")
                     .render({{"topic", topic.text}, {"profile", format_profile(profile)}});
    }
    auto req = make_request("guest_response", prompt, std::move(hints));
    const std::size_t expected = outline ? outline->questions.size() : 0;
    return complete_structured<GuestResponse>(
        llm_, std::move(req), options_.retry, [&profile, expected](const Json& j) {
            GuestResponse r{profile.name, payload::text_array(j, "answers", "guest")};
            if (r.answers.empty()) throw SchemaError("guest returned no answers");
            if (expected != 0 && r.answers.size() != expected) {
                throw SchemaError("answer count mismatch: expected " + std::to_string(expected) +
                                  ", got " + std::to_string(r.answers.size()));
            }
            return r;
        });
}

std::vector<GuestResponse> ScriptEngine::generate_guest_responses(
    const std::vector<GuestProfile>& profiles, const InterviewOutline* outline,
    const Topic& topic) const {
    std::vector<std::future<GuestResponse>> pending;
    pending.reserve(profiles.size());
    for (const auto& p : profiles) {
        pending.push_back(std::async(std::launch::async, [this, &p, outline, &topic] {
            return generate_guest_response(p, outline, topic);
        }));
    }
    std::vector<GuestResponse> out;
    std::exception_ptr first_error;
    for (auto& f : pending) {
        try {
            out.push_back(f.get());
        } catch (...) {
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

ConversationScript ScriptEngine::compose_script(const Topic& topic,
                                                const std::vector<GuestProfile>& profiles,
                                                const InterviewOutline& outline,
                                                const std::vector<GuestResponse>& responses) const {
    if (profiles.empty() || responses.size() != profiles.size()) {
        throw PreconditionError("compose_script needs one response per profile");
    }
    nlohmann::json hint_responses = nlohmann::json::array();
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        if (responses[i].guest_name != profiles[i].name) {
            throw PreconditionError("response " + std::to_string(i) + " belongs to " +
                                    responses[i].guest_name + ", expected " + profiles[i].name);
        }
        hint_responses.push_back({{"guest", responses[i].guest_name},
                                  {"answers", responses[i].answers}});
    }
    const std::string outline_text =
        outline.questions.empty() ? std::string("(no outline; each guest spoke freely on the topic)\n")
                                  : format_outline(outline);
    const std::string prompt = prompts_.get("writer_script")
                                   .render({{"topic", topic.text},
                                            {"n_guests", std::to_string(profiles.size())},
                                            {"profiles", format_profiles(profiles)},
                                            {"outline", outline_text},
                                            {"responses", format_responses(responses, outline)}});
    auto req = make_request("writer_script", prompt,
                            {{"topic", topic.text},
                             {"guests", guest_names(profiles)},
                             {"outline", outline.questions},
                             {"responses", hint_responses}});
    ConversationScript script = complete_structured<ConversationScript>(
        llm_, std::move(req), options_.retry, [&](const Json& j) {
            ConversationScript s;
            s.host_name = payload::optional_text(j, "host_name");
            if (s.host_name.empty()) s.host_name = "Host";
            s.lines = parse_lines(j);
            return s;
        });
    script.topic = topic;
    script.guests = profiles;
    script.outline = outline;
    script.provenance = Provenance::MultiAgent;
    validate_script(script);
    return script;
}

ConversationScript ScriptEngine::direct_baseline_script(const Topic& topic, int n_guests) const {
    if (n_guests < 1) throw PreconditionError("n_guests must be >= 1");
    const std::string prompt = prompts_.get("direct_baseline")
                                   .render({{"topic", topic.text},
                                            {"n_guests", std::to_string(n_guests)}});
    auto req = make_request("direct_baseline", prompt,
                            {{"topic", topic.text}, {"n_guests", n_guests}});
    ConversationScript script = complete_structured<ConversationScript>(
        llm_, std::move(req), options_.retry, [](const Json& j) {
            ConversationScript s;
            s.host_name = payload::optional_text(j, "host_name");
            if (s.host_name.empty()) s.host_name = "Host";
            s.guests = parse_profiles(payload::array(j, "guests", "guests"), "guests");
            s.lines = parse_lines(j);
            return s;
        });
    script.topic = topic;
    script.provenance = Provenance::DirectBaseline;
    validate_script(script);
    return script;
}

ConversationScript ScriptEngine::single_agent_script(const Topic& topic, int n_guests) const {
    if (n_guests < 1) throw PreconditionError("n_guests must be >= 1");
    const std::string prompt =
        prompts_.get("single_agent")
            .render({{"topic", topic.text},
                     {"n_guests", std::to_string(n_guests)},
                     {"n_questions_word", count_word(options_.question_count)}});
    auto req = make_request("single_agent", prompt,
                            {{"topic", topic.text},
                             {"n_guests", n_guests},
                             {"n_questions", options_.question_count}});
    ConversationScript script = complete_structured<ConversationScript>(
        llm_, std::move(req), options_.retry, [](const Json& j) {
            ConversationScript s;
            s.host_name = payload::optional_text(j, "host_name");
            if (s.host_name.empty()) s.host_name = "Host";
            s.guests = parse_profiles(payload::array(j, "guests", "guests"), "guests");
            if (j.contains("outline")) s.outline.questions = payload::text_array(j, "outline", "outline");
            s.lines = parse_lines(j);
            return s;
        });
    script.topic = topic;
    script.provenance = Provenance::SingleAgent;
    validate_script(script);
    return script;
}

ConversationScript ScriptEngine::run_episode(const Topic& topic, int n_guests,
                                             bool use_outline) const {
    if (n_guests < 1 || n_guests > options_.max_guests) {
        throw PreconditionError("n_guests must be in [1, " + std::to_string(options_.max_guests) +
                                "], got " + std::to_string(n_guests));
    }
    const auto profiles =
        in_stage("host_profiles", [&] { return generate_guest_profiles(topic, n_guests); });
    InterviewOutline outline;
    if (use_outline) {
        outline = in_stage("host_outline", [&] { return generate_outline(topic, profiles); });
    }
    const auto responses = in_stage("guest_responses", [&] {
        return generate_guest_responses(profiles, use_outline ? &outline : nullptr, topic);
    });
    return in_stage("writer", [&] { return compose_script(topic, profiles, outline, responses); });
}

}  // namespace podforge
