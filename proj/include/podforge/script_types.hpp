#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace podforge {

enum class TopicCategory { Generic, Knowledge, CommonSense, Counterfactual, Other };

std::string to_string(TopicCategory c);
/// Accepts "Generic", "generic", "common-sense", "CommonSense", ...
std::optional<TopicCategory> parse_topic_category(const std::string& s);

struct Topic {
    std::string id;
    TopicCategory category = TopicCategory::Other;
    std::string text;

    /// Throws ValidationError when text is blank.
    static Topic make(std::string id, std::string text,
                      TopicCategory category = TopicCategory::Other);

    bool operator==(const Topic&) const = default;
};

enum class Gender { Male, Female, Unspecified };

std::string to_string(Gender g);
Gender parse_gender(const std::string& s);

struct GuestProfile {
    std::string name;
    std::string expertise;
    std::string background;
    std::string perspective;
    std::optional<Gender> stated_gender;

    bool operator==(const GuestProfile&) const = default;
};

struct InterviewOutline {
    std::vector<std::string> questions;

    bool operator==(const InterviewOutline&) const = default;
};

struct GuestResponse {
    std::string guest_name;
    std::vector<std::string> answers;

    bool operator==(const GuestResponse&) const = default;
};

struct DialogueLine {
    std::string speaker;
    std::string text;
    std::string style_instruction;

    bool operator==(const DialogueLine&) const = default;
};

enum class Provenance { MultiAgent, SingleAgent, DirectBaseline };

std::string to_string(Provenance p);
Provenance parse_provenance(const std::string& s);

struct ConversationScript {
    Topic topic;
    std::string host_name;
    std::vector<GuestProfile> guests;
    InterviewOutline outline;
    std::vector<DialogueLine> lines;
    Provenance provenance = Provenance::MultiAgent;
    std::vector<std::string> warnings;

    bool operator==(const ConversationScript&) const = default;

    /// Host followed by guests in declaration order.
    std::vector<std::string> speakers() const;

    /// Line texts joined by newlines, speaker names excluded.
    std::string dialogue_text() const;
};

/// Checks every ConversationScript invariant; throws ValidationError on the
/// first breach. A host that does not speak last only adds a warning.
void validate_script(ConversationScript& script);

void to_json(nlohmann::json& j, const Topic& t);
void from_json(const nlohmann::json& j, Topic& t);
void to_json(nlohmann::json& j, const GuestProfile& p);
void from_json(const nlohmann::json& j, GuestProfile& p);
void to_json(nlohmann::json& j, const DialogueLine& l);
void from_json(const nlohmann::json& j, DialogueLine& l);
void to_json(nlohmann::json& j, const ConversationScript& s);
void from_json(const nlohmann::json& j, ConversationScript& s);

}  // namespace podforge
