#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "podforge/prompts.hpp"
#include "podforge/providers.hpp"
#include "podforge/script_types.hpp"

namespace podforge {

enum class VoiceGender { Male, Female, Unknown };
enum class Language { En, Zh };

std::string to_string(VoiceGender g);
VoiceGender parse_voice_gender(std::string_view s);
std::string to_string(Language l);
Language parse_language(std::string_view s);

struct VoiceEntry {
    std::string voice_id;
    std::string speaker_id;
    VoiceGender gender = VoiceGender::Unknown;
    std::string caption;
    std::filesystem::path audio_path;
    Language language = Language::En;

    bool operator==(const VoiceEntry&) const = default;
};

struct VoiceLibrary {
    std::vector<VoiceEntry> entries;
    double dedup_threshold = 0.95;

    const VoiceEntry* find(std::string_view voice_id) const;

    bool operator==(const VoiceLibrary&) const = default;
};

/// Role name -> voice_id for one episode.
struct RoleVoiceAssignment {
    std::map<std::string, std::string> voice_of;

    bool operator==(const RoleVoiceAssignment&) const = default;
};

/// Keyword rules over the caption; Unknown when absent or contradictory.
VoiceGender gender_from_caption(std::string_view caption);

/// Cosine similarity; identical vectors score exactly 1.
double cosine_similarity(const Embedding& a, const Embedding& b);

/// Greedy keep-first scan: an entry survives iff its caption is less similar
/// than `threshold` to every entry kept before it.
VoiceLibrary build_voice_library(const std::vector<VoiceEntry>& raw, EmbeddingProvider& embedder,
                                 double threshold = 0.95);

/// Roles are the host plus every guest; gender is the stated one, if any.
struct CastRole {
    std::string name;
    std::optional<Gender> gender;
};

std::vector<CastRole> cast_roles(const std::string& host_name,
                                 const std::vector<GuestProfile>& profiles);

/// Every reason the assignment is unusable: missing or extra roles, unknown
/// voices, reused voices, gender conflicts. Empty when valid.
std::vector<std::string> assignment_violations(const VoiceLibrary& library,
                                               const std::vector<CastRole>& roles,
                                               const RoleVoiceAssignment& assignment);

struct MatchOptions {
    double temperature = 0.2;
    RetryPolicy retry;
};

/// LLM proposes the pairing; invalid proposals get one corrective re-prompt
/// before MatchValidationError.
RoleVoiceAssignment match_voices(const VoiceLibrary& library,
                                 const std::vector<GuestProfile>& profiles,
                                 const std::string& host_name, const std::string& host_descriptor,
                                 const InterviewOutline& outline, CompletionProvider& llm,
                                 const PromptLibrary& prompts = PromptLibrary::builtin(),
                                 const MatchOptions& options = {});

/// JSON array of entries with audio paths relative to the file's directory.
void save_library(const VoiceLibrary& library, const std::filesystem::path& path);

/// Resolves audio paths and checks id uniqueness, captions and audio files.
/// The threshold is not stored in the file.
VoiceLibrary load_library(const std::filesystem::path& path, double dedup_threshold = 0.95);

/// Raw entries from a JSON array or JSON-lines manifest. Fields: caption,
/// audio_path (relative to the manifest), optional voice_id, speaker_id,
/// gender and language. Gender falls back to the caption keywords.
std::vector<VoiceEntry> load_manifest(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const VoiceEntry& e);
void from_json(const nlohmann::json& j, VoiceEntry& e);
void to_json(nlohmann::json& j, const RoleVoiceAssignment& a);
void from_json(const nlohmann::json& j, RoleVoiceAssignment& a);

}  // namespace podforge
