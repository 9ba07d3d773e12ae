#include "podforge/audio_plan.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "json_payload.hpp"
#include "podforge/errors.hpp"

namespace podforge {

std::string to_string(ItemKind k) {
    switch (k) {
        case ItemKind::Speech: return "Speech";
        case ItemKind::SoundEffect: return "SoundEffect";
        case ItemKind::Music: return "Music";
    }
    return "Speech";
}

ItemKind parse_item_kind(std::string_view s) {
    std::string f;
    for (const char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) f += static_cast<char>(std::tolower(c));
    }
    if (f == "speech") return ItemKind::Speech;
    if (f == "soundeffect" || f == "sfx" || f == "effect") return ItemKind::SoundEffect;
    if (f == "music") return ItemKind::Music;
    throw SchemaError("unknown audio item kind \"" + std::string(s) + "\"");
}

std::string to_string(Layer l) { return l == Layer::Foreground ? "Foreground" : "Background"; }

std::vector<AudioItem> speech_items(const ConversationScript& script) {
    std::vector<AudioItem> items;
    for (const auto& line : script.lines) {
        items.push_back({ItemKind::Speech, line.text, line.speaker, line.style_instruction,
                         Layer::Foreground, std::nullopt, 0.0});
    }
    return items;
}

namespace {

struct Proposal {
    ItemKind kind;
    std::string description;
    int start_line;
    int end_line;
    std::optional<double> gain_db;
};

std::vector<Proposal> parse_proposals(const payload::Json& j) {
    std::vector<Proposal> out;
    const auto& arr = payload::array(j, "background", "audio_script");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string where = "audio_script.background[" + std::to_string(i) + "]";
        const auto& b = arr[i];
        Proposal p{parse_item_kind(payload::text(b, "kind", where)), payload::text(b, "description", where),
                   0, 0, std::nullopt};
        if (p.kind == ItemKind::Speech) throw SchemaError(where + ": background items cannot be Speech");
        for (auto [key, dst] : {std::pair{"start_line", &p.start_line}, std::pair{"end_line", &p.end_line}}) {
            const auto& v = payload::field(b, key, where);
            if (!v.is_number_integer()) throw SchemaError(where + ": \"" + key + "\" must be an integer");
            *dst = v.get<int>();
        }
        if (b.contains("gain_db")) {
            if (!b.at("gain_db").is_number()) throw SchemaError(where + ": \"gain_db\" must be a number");
            p.gain_db = b.at("gain_db").get<double>();
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::string numbered_script(const ConversationScript& script) {
    std::string out;
    for (std::size_t i = 0; i < script.lines.size(); ++i) {
        const auto& l = script.lines[i];
        out += "[" + std::to_string(i) + "] " + l.speaker + " (" + l.style_instruction + "): " + l.text + "\n";
    }
    return out;
}

}  // namespace

AudioScript enrich_to_audio_script(const ConversationScript& script,
                                   const RoleVoiceAssignment& assignment, CompletionProvider& llm,
                                   const PromptLibrary& prompts, const PlanOptions& options) {
    for (const auto& speaker : script.speakers()) {
        if (!assignment.voice_of.contains(speaker)) {
            throw PreconditionError("speaker \"" + speaker + "\" has no assigned voice");
        }
    }
    const int n = static_cast<int>(script.lines.size());
    CompletionRequest req;
    req.task = "audio_script";
    req.temperature = options.temperature;
    req.messages.push_back({"user", prompts.get("audio_script").render({{"script", numbered_script(script)},
                                                                         {"line_count", std::to_string(n)}})});
    req.hints = {{"line_count", n}};
    const auto proposals = complete_structured<std::vector<Proposal>>(llm, req, options.retry, parse_proposals);

    AudioScript out{script, speech_items(script), assignment, {}};
    for (std::size_t i = 0; i < proposals.size(); ++i) {
        const auto& p = proposals[i];
        const std::string where = "background item " + std::to_string(i);
        if (p.start_line < 0 || p.start_line >= n) {
            throw ValidationError(where + ": start line " + std::to_string(p.start_line) +
                                  " is outside the script (0.." + std::to_string(n - 1) + ")");
        }
        if (p.start_line > p.end_line) {
            throw ValidationError(where + ": inverted span (" + std::to_string(p.start_line) + ", " +
                                  std::to_string(p.end_line) + ")");
        }
        LineSpan span{p.start_line, p.end_line};
        if (span.end_line >= n) {
            span.end_line = n - 1;
            out.warnings.push_back(where + ": end line " + std::to_string(p.end_line) + " clamped to " +
                                   std::to_string(n - 1));
        }
        double gain = p.gain_db.value_or(options.default_gain_db);
        if (!std::isfinite(gain)) gain = options.default_gain_db;
        const double clamped = std::clamp(gain, options.min_gain_db, options.max_gain_db);
        if (clamped != gain) {
            std::ostringstream msg;
            msg << where << ": gain " << gain << " dB clamped to " << clamped << " dB";
            out.warnings.push_back(msg.str());
        }
        out.items.push_back({p.kind, p.description, std::nullopt, std::nullopt, Layer::Background, span, clamped});
    }
    return out;
}

std::vector<AudioScriptViolation> validate_audio_script(const AudioScript& s, const PlanOptions& options) {
    std::vector<AudioScriptViolation> out;
    const auto& lines = s.script.lines;
    const int n = static_cast<int>(lines.size());
    std::size_t speech_seen = 0;
    for (std::size_t i = 0; i < s.items.size(); ++i) {
        const auto& item = s.items[i];
        const int idx = static_cast<int>(i);
        if (item.gain_db > options.max_gain_db || item.gain_db < options.min_gain_db) {
            out.push_back({idx, "gain_out_of_range", "gain " + std::to_string(item.gain_db) + " dB"});
        }
        if (item.kind == ItemKind::Speech) {
            if (item.layer != Layer::Foreground) out.push_back({idx, "speech_not_foreground", ""});
            if (!item.speaker || !item.style_instruction) {
                out.push_back({idx, "speech_missing_fields", "speaker and style_instruction are required"});
                ++speech_seen;
                continue;
            }
            if (speech_seen >= lines.size()) {
                out.push_back({idx, "extra_speech", "more speech items than script lines"});
                continue;
            }
            const auto& line = lines[speech_seen++];
            if (item.text != line.text || *item.speaker != line.speaker ||
                *item.style_instruction != line.style_instruction) {
                out.push_back({idx, "speech_line_mismatch",
                               "differs from script line " + std::to_string(speech_seen - 1)});
            }
            if (!s.assignment.voice_of.contains(*item.speaker)) {
                out.push_back({idx, "speaker_unassigned", "no voice for \"" + *item.speaker + "\""});
            }
            continue;
        }
        if (item.layer != Layer::Background) out.push_back({idx, "background_not_background", ""});
        if (!item.span) {
            out.push_back({idx, "background_missing_span", ""});
            continue;
        }
        if (item.span->start_line > item.span->end_line) {
            out.push_back({idx, "background_span_inverted", ""});
        } else if (item.span->start_line < 0 || item.span->end_line >= n) {
            out.push_back({idx, "background_span_out_of_range",
                           "span (" + std::to_string(item.span->start_line) + ", " +
                               std::to_string(item.span->end_line) + ") with " + std::to_string(n) + " lines"});
        }
    }
    if (speech_seen < lines.size()) {
        out.push_back({-1, "missing_speech", std::to_string(lines.size() - speech_seen) + " lines have no speech item"});
    }
    return out;
}

void to_json(nlohmann::json& j, const AudioItem& item) {
    j = {{"kind", to_string(item.kind)}, {"text", item.text}, {"layer", to_string(item.layer)},
         {"gain_db", item.gain_db}};
    if (item.speaker) j["speaker"] = *item.speaker;
    if (item.style_instruction) j["style_instruction"] = *item.style_instruction;
    if (item.span) j["span"] = {item.span->start_line, item.span->end_line};
}

void from_json(const nlohmann::json& j, AudioItem& item) {
    item.kind = parse_item_kind(j.at("kind").get<std::string>());
    item.text = j.at("text").get<std::string>();
    const auto layer = j.at("layer").get<std::string>();
    if (layer != "Foreground" && layer != "Background") throw FormatError("unknown layer \"" + layer + "\"");
    item.layer = layer == "Foreground" ? Layer::Foreground : Layer::Background;
    item.gain_db = j.at("gain_db").get<double>();
    item.speaker.reset();
    item.style_instruction.reset();
    item.span.reset();
    if (j.contains("speaker")) item.speaker = j.at("speaker").get<std::string>();
    if (j.contains("style_instruction")) item.style_instruction = j.at("style_instruction").get<std::string>();
    if (j.contains("span")) item.span = LineSpan{j.at("span").at(0).get<int>(), j.at("span").at(1).get<int>()};
}

void to_json(nlohmann::json& j, const AudioScript& s) {
    j = {{"script", s.script}, {"items", s.items}, {"assignment", s.assignment}, {"warnings", s.warnings}};
}

void from_json(const nlohmann::json& j, AudioScript& s) {
    s.script = j.at("script").get<ConversationScript>();
    s.items = j.at("items").get<std::vector<AudioItem>>();
    s.assignment = j.at("assignment").get<RoleVoiceAssignment>();
    s.warnings = j.value("warnings", std::vector<std::string>{});
}

void to_json(nlohmann::json& j, const AudioScriptViolation& v) {
    j = {{"index", v.index}, {"rule", v.rule}, {"detail", v.detail}};
}

}  // namespace podforge
