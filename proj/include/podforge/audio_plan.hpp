#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "podforge/prompts.hpp"
#include "podforge/providers.hpp"
#include "podforge/script_types.hpp"
#include "podforge/voice_pool.hpp"

namespace podforge {

enum class ItemKind { Speech, SoundEffect, Music };
enum class Layer { Foreground, Background };

std::string to_string(ItemKind k);
ItemKind parse_item_kind(std::string_view s);
std::string to_string(Layer l);

struct LineSpan {
    int start_line = 0;
    int end_line = 0;  // inclusive

    bool operator==(const LineSpan&) const = default;
};

struct AudioItem {
    ItemKind kind = ItemKind::Speech;
    std::string text;  // spoken text or sound description
    std::optional<std::string> speaker;
    std::optional<std::string> style_instruction;
    Layer layer = Layer::Foreground;
    std::optional<LineSpan> span;  // background only
    double gain_db = 0.0;

    bool operator==(const AudioItem&) const = default;
};

// Speech items come first, one per script line in order; background items
// follow.
struct AudioScript {
    ConversationScript script;
    std::vector<AudioItem> items;
    RoleVoiceAssignment assignment;
    std::vector<std::string> warnings;

    bool operator==(const AudioScript&) const = default;
};

struct AudioScriptViolation {
    int index = -1;  // item index; -1 for whole-script problems
    std::string rule;
    std::string detail;
};

struct PlanOptions {
    double default_gain_db = -18.0;
    double min_gain_db = -40.0;
    double max_gain_db = 0.0;
    double temperature = 0.7;
    RetryPolicy retry;
};

/// One Speech item per line, in order.
std::vector<AudioItem> speech_items(const ConversationScript& script);

/// Speech items from the script plus LLM-proposed background items. Spans
/// past the last line and gains outside the allowed range are clamped with a
/// warning; spans that start outside the script or end before they start are
/// ValidationErrors.
AudioScript enrich_to_audio_script(const ConversationScript& script,
                                   const RoleVoiceAssignment& assignment, CompletionProvider& llm,
                                   const PromptLibrary& prompts = PromptLibrary::builtin(),
                                   const PlanOptions& options = {});

std::vector<AudioScriptViolation> validate_audio_script(const AudioScript& audio_script,
                                                        const PlanOptions& options = {});

void to_json(nlohmann::json& j, const AudioItem& item);
void from_json(const nlohmann::json& j, AudioItem& item);
void to_json(nlohmann::json& j, const AudioScript& s);
void from_json(const nlohmann::json& j, AudioScript& s);
void to_json(nlohmann::json& j, const AudioScriptViolation& v);

}  // namespace podforge
