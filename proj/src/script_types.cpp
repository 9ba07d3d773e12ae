#include "podforge/script_types.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "podforge/errors.hpp"

namespace podforge {

namespace {

std::string fold(const std::string& s) {
    std::string out;
    for (const unsigned char c : s) {
        if (std::isalnum(c)) out += static_cast<char>(std::tolower(c));
    }
    return out;
}

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::string to_string(TopicCategory c) {
    switch (c) {
        case TopicCategory::Generic: return "Generic";
        case TopicCategory::Knowledge: return "Knowledge";
        case TopicCategory::CommonSense: return "CommonSense";
        case TopicCategory::Counterfactual: return "Counterfactual";
        case TopicCategory::Other: return "Other";
    }
    return "Other";
}

std::optional<TopicCategory> parse_topic_category(const std::string& s) {
    const std::string f = fold(s);
    if (f == "generic") return TopicCategory::Generic;
    if (f == "knowledge") return TopicCategory::Knowledge;
    if (f == "commonsense") return TopicCategory::CommonSense;
    if (f == "counterfactual") return TopicCategory::Counterfactual;
    if (f == "other") return TopicCategory::Other;
    return std::nullopt;
}

Topic Topic::make(std::string id, std::string text, TopicCategory category) {
    if (blank(text)) throw ValidationError("topic " + id + " has empty text");
    return Topic{std::move(id), category, std::move(text)};
}

std::string to_string(Gender g) {
    switch (g) {
        case Gender::Male: return "male";
        case Gender::Female: return "female";
        case Gender::Unspecified: return "unspecified";
    }
    return "unspecified";
}

Gender parse_gender(const std::string& s) {
    const std::string f = fold(s);
    if (f == "male" || f == "m" || f == "man") return Gender::Male;
    if (f == "female" || f == "f" || f == "woman") return Gender::Female;
    return Gender::Unspecified;
}

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::MultiAgent: return "MultiAgent";
        case Provenance::SingleAgent: return "SingleAgent";
        case Provenance::DirectBaseline: return "DirectBaseline";
    }
    return "MultiAgent";
}

Provenance parse_provenance(const std::string& s) {
    if (s == "MultiAgent") return Provenance::MultiAgent;
    if (s == "SingleAgent") return Provenance::SingleAgent;
    if (s == "DirectBaseline") return Provenance::DirectBaseline;
    throw FormatError("unknown provenance: " + s);
}

std::vector<std::string> ConversationScript::speakers() const {
    std::vector<std::string> out{host_name};
    for (const auto& g : guests) out.push_back(g.name);
    return out;
}

std::string ConversationScript::dialogue_text() const {
    std::string out;
    for (const auto& line : lines) {
        if (!out.empty()) out += '\n';
        out += line.text;
    }
    return out;
}

void validate_script(ConversationScript& script) {
    if (blank(script.host_name)) throw ValidationError("script has no host name");
    if (script.guests.empty()) throw ValidationError("script has no guests");
    std::set<std::string> cast{script.host_name};
    for (const auto& g : script.guests) {
        if (blank(g.name)) throw ValidationError("guest with empty name");
        if (blank(g.expertise)) throw ValidationError("guest " + g.name + " has no expertise");
        if (!cast.insert(g.name).second) {
            throw ValidationError("speaker name declared twice: " + g.name);
        }
    }
    if (script.lines.empty()) throw ValidationError("script has no lines");
    std::set<std::string> spoke;
    for (std::size_t i = 0; i < script.lines.size(); ++i) {
        const auto& line = script.lines[i];
        if (!cast.contains(line.speaker)) {
            throw ValidationError("line " + std::to_string(i) + ": unknown speaker \"" +
                                  line.speaker + "\"");
        }
        if (blank(line.text)) throw ValidationError("line " + std::to_string(i) + ": empty text");
        if (blank(line.style_instruction)) {
            throw ValidationError("line " + std::to_string(i) + ": empty style instruction");
        }
        spoke.insert(line.speaker);
    }
    if (script.lines.front().speaker != script.host_name) {
        throw ValidationError("first line is spoken by " + script.lines.front().speaker +
                              ", not the host");
    }
    for (const auto& g : script.guests) {
        if (!spoke.contains(g.name)) throw ValidationError("guest " + g.name + " never speaks");
    }
    if (script.lines.back().speaker != script.host_name) {
        const std::string w = "host does not speak the last line";
        if (std::find(script.warnings.begin(), script.warnings.end(), w) == script.warnings.end()) {
            script.warnings.push_back(w);
        }
    }
}

void to_json(nlohmann::json& j, const Topic& t) {
    j = {{"id", t.id}, {"category", to_string(t.category)}, {"text", t.text}};
}

void from_json(const nlohmann::json& j, Topic& t) {
    t.id = j.at("id").get<std::string>();
    t.text = j.at("text").get<std::string>();
    t.category = TopicCategory::Other;
    if (j.contains("category")) {
        const auto c = parse_topic_category(j.at("category").get<std::string>());
        if (!c) throw FormatError("unknown topic category: " + j.at("category").dump());
        t.category = *c;
    }
}

void to_json(nlohmann::json& j, const GuestProfile& p) {
    j = {{"name", p.name},
         {"expertise", p.expertise},
         {"background", p.background},
         {"perspective", p.perspective}};
    if (p.stated_gender) j["gender"] = to_string(*p.stated_gender);
}

void from_json(const nlohmann::json& j, GuestProfile& p) {
    p.name = j.at("name").get<std::string>();
    p.expertise = j.at("expertise").get<std::string>();
    p.background = j.value("background", "");
    p.perspective = j.value("perspective", "");
    p.stated_gender.reset();
    if (j.contains("gender") && j.at("gender").is_string()) {
        const Gender g = parse_gender(j.at("gender").get<std::string>());
        if (g != Gender::Unspecified) p.stated_gender = g;
    }
}

void to_json(nlohmann::json& j, const DialogueLine& l) {
    j = {{"speaker", l.speaker}, {"text", l.text}, {"style_instruction", l.style_instruction}};
}

void from_json(const nlohmann::json& j, DialogueLine& l) {
    l.speaker = j.at("speaker").get<std::string>();
    l.text = j.at("text").get<std::string>();
    l.style_instruction = j.at("style_instruction").get<std::string>();
}

void to_json(nlohmann::json& j, const ConversationScript& s) {
    j = {{"topic", s.topic},
         {"host_name", s.host_name},
         {"guests", s.guests},
         {"outline", s.outline.questions},
         {"lines", s.lines},
         {"provenance", to_string(s.provenance)},
         {"warnings", s.warnings}};
}

void from_json(const nlohmann::json& j, ConversationScript& s) {
    s.topic = j.at("topic").get<Topic>();
    s.host_name = j.at("host_name").get<std::string>();
    s.guests = j.at("guests").get<std::vector<GuestProfile>>();
    s.outline.questions = j.at("outline").get<std::vector<std::string>>();
    s.lines = j.at("lines").get<std::vector<DialogueLine>>();
    s.provenance = parse_provenance(j.at("provenance").get<std::string>());
    s.warnings = j.value("warnings", std::vector<std::string>{});
}

}  // namespace podforge
