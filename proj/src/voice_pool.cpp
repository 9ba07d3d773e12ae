#include "podforge/voice_pool.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json_payload.hpp"
#include "podforge/errors.hpp"
#include "podforge/eval.hpp"
#include "podforge/script_engine.hpp"

namespace podforge {

namespace fs = std::filesystem;

std::string to_string(VoiceGender g) {
    switch (g) {
        case VoiceGender::Male: return "male";
        case VoiceGender::Female: return "female";
        case VoiceGender::Unknown: return "unknown";
    }
    return "unknown";
}

VoiceGender parse_voice_gender(std::string_view s) {
    if (s == "male") return VoiceGender::Male;
    if (s == "female") return VoiceGender::Female;
    if (s == "unknown" || s.empty()) return VoiceGender::Unknown;
    throw FormatError("unknown voice gender \"" + std::string(s) + "\"");
}

std::string to_string(Language l) { return l == Language::En ? "en" : "zh"; }

Language parse_language(std::string_view s) {
    if (s == "en") return Language::En;
    if (s == "zh") return Language::Zh;
    throw FormatError("unsupported language \"" + std::string(s) + "\"");
}

const VoiceEntry* VoiceLibrary::find(std::string_view voice_id) const {
    for (const auto& e : entries) {
        if (e.voice_id == voice_id) return &e;
    }
    return nullptr;
}

VoiceGender gender_from_caption(std::string_view caption) {
    static const std::set<std::string> female{"female", "woman", "women", "girl", "lady",
                                              "feminine", "she", "her"};
    static const std::set<std::string> male{"male", "man", "men", "boy", "gentleman",
                                            "masculine", "he", "his"};
    bool f = false;
    bool m = false;
    for (const auto& w : tokenize(caption).tokens) {
        f = f || female.contains(w);
        m = m || male.contains(w);
    }
    if (f == m) return VoiceGender::Unknown;
    return f ? VoiceGender::Female : VoiceGender::Male;
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
    if (a.size() != b.size() || a.empty()) throw EmbeddingProviderError("embedding dimensions differ");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (!(na > 0.0 && nb > 0.0) || !std::isfinite(dot * 0.0 + na + nb)) {
        throw EmbeddingProviderError("zero-norm or non-finite embedding");
    }
    // Identical vectors must clear any threshold in (0, 1] despite rounding.
    if (a == b) return 1.0;
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

VoiceLibrary build_voice_library(const std::vector<VoiceEntry>& raw, EmbeddingProvider& embedder,
                                 double threshold) {
    if (raw.empty()) throw PreconditionError("no voice entries to build from");
    if (!(threshold > 0.0 && threshold <= 1.0)) throw PreconditionError("threshold must be in (0, 1]");
    std::set<std::string> ids;
    std::vector<std::string> captions;
    for (const auto& e : raw) {
        if (!ids.insert(e.voice_id).second) throw InvariantError("duplicate voice_id " + e.voice_id);
        if (e.caption.empty()) throw InvariantError("voice " + e.voice_id + " has an empty caption");
        captions.push_back(e.caption);
    }
    const auto emb = embedder.embed(captions);
    if (emb.size() != raw.size()) throw EmbeddingProviderError("embedder returned the wrong number of vectors");
    for (const auto& v : emb) {
        for (const double c : v) {
            if (!std::isfinite(c)) throw EmbeddingProviderError("non-finite embedding component");
        }
    }

    VoiceLibrary lib;
    lib.dedup_threshold = threshold;
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const bool unique = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return cosine_similarity(emb[i], emb[k]) < threshold;
        });
        if (!unique) continue;
        kept.push_back(i);
        lib.entries.push_back(raw[i]);
    }
    if (lib.entries.empty()) throw EmptyLibraryError("every voice entry was rejected");
    return lib;
}

std::vector<CastRole> cast_roles(const std::string& host_name,
                                 const std::vector<GuestProfile>& profiles) {
    std::vector<CastRole> roles{{host_name, std::nullopt}};
    for (const auto& p : profiles) roles.push_back({p.name, p.stated_gender});
    return roles;
}

std::vector<std::string> assignment_violations(const VoiceLibrary& library,
                                               const std::vector<CastRole>& roles,
                                               const RoleVoiceAssignment& assignment) {
    std::vector<std::string> out;
    std::set<std::string> role_names;
    for (const auto& r : roles) role_names.insert(r.name);
    for (const auto& r : roles) {
        if (!assignment.voice_of.contains(r.name)) out.push_back("role \"" + r.name + "\" has no voice");
    }
    std::map<std::string, std::string> owner;
    for (const auto& [role, voice] : assignment.voice_of) {
        if (!role_names.contains(role)) {
            out.push_back("\"" + role + "\" is not a role in this episode");
            continue;
        }
        const VoiceEntry* entry = library.find(voice);
        if (!entry) {
            out.push_back("voice_id \"" + voice + "\" for \"" + role + "\" is not in the library");
            continue;
        }
        if (auto [it, fresh] = owner.emplace(voice, role); !fresh) {
            out.push_back("voice_id \"" + voice + "\" is used by both \"" + it->second + "\" and \"" +
                          role + "\"");
        }
        const auto& stated = std::find_if(roles.begin(), roles.end(),
                                          [&](const CastRole& r) { return r.name == role; })
                                 ->gender;
        if (stated && *stated != Gender::Unspecified && entry->gender != VoiceGender::Unknown) {
            const bool match = (*stated == Gender::Male) == (entry->gender == VoiceGender::Male);
            if (!match) {
                out.push_back("\"" + role + "\" is " + to_string(*stated) + " but voice \"" + voice +
                              "\" is " + to_string(entry->gender));
            }
        }
    }
    return out;
}

namespace {

std::string format_voices(const VoiceLibrary& library) {
    std::string out;
    for (const auto& e : library.entries) {
        out += e.voice_id + " | " + to_string(e.gender) + " | " + to_string(e.language) + " | " +
               e.caption + "\n";
    }
    return out;
}

RoleVoiceAssignment parse_assignment(const payload::Json& j) {
    const auto& obj = payload::field(j, "assignment", "voice_match");
    if (!obj.is_object()) throw SchemaError("voice_match: \"assignment\" must be an object");
    RoleVoiceAssignment a;
    for (const auto& item : obj.items()) {
        if (!item.value().is_string()) {
            throw SchemaError("voice_match: voice for \"" + item.key() + "\" must be a string");
        }
        a.voice_of[item.key()] = item.value().get<std::string>();
    }
    return a;
}

std::string join_lines(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += "- " + s + "\n";
    return out;
}

}  // namespace

RoleVoiceAssignment match_voices(const VoiceLibrary& library,
                                 const std::vector<GuestProfile>& profiles,
                                 const std::string& host_name, const std::string& host_descriptor,
                                 const InterviewOutline& outline, CompletionProvider& llm,
                                 const PromptLibrary& prompts, const MatchOptions& options) {
    const std::size_t cast = 1 + profiles.size();
    if (library.entries.size() < cast) {
        throw PreconditionError("voice_pool: library has " + std::to_string(library.entries.size()) +
                                " voices but the cast needs " + std::to_string(cast));
    }
    const auto roles = cast_roles(host_name, profiles);

    CompletionRequest req;
    req.task = "voice_match";
    req.temperature = options.temperature;
    req.messages.push_back({"user", prompts.get("voice_match").render({
                                        {"voices", format_voices(library)},
                                        {"profiles", format_profiles(profiles)},
                                        {"host_name", host_name},
                                        {"host_descriptor", host_descriptor},
                                        {"outline", outline.questions.empty()
                                                        ? std::string("(no outline)")
                                                        : format_outline(outline)},
                                    })});
    nlohmann::json voices = nlohmann::json::array();
    for (const auto& e : library.entries) {
        voices.push_back({{"voice_id", e.voice_id}, {"gender", to_string(e.gender)}});
    }
    nlohmann::json role_hints = nlohmann::json::array();
    for (const auto& r : roles) {
        role_hints.push_back({{"name", r.name}, {"gender", to_string(r.gender.value_or(Gender::Unspecified))}});
    }
    req.hints = {{"voices", voices}, {"roles", role_hints}};

    auto assignment = complete_structured<RoleVoiceAssignment>(llm, req, options.retry, parse_assignment);
    auto violations = assignment_violations(library, roles, assignment);
    if (violations.empty()) return assignment;

    req.messages.push_back({"assistant", nlohmann::json({{"assignment", assignment}}).dump()});
    req.messages.push_back({"user", "That assignment is invalid:\n" + join_lines(violations) +
                                        "Reply again with a corrected assignment in the same JSON shape."});
    req.hints["revalidate"] = true;
    assignment = complete_structured<RoleVoiceAssignment>(llm, req, options.retry, parse_assignment);
    violations = assignment_violations(library, roles, assignment);
    if (!violations.empty()) {
        throw MatchValidationError("voice assignment still invalid after re-prompt:\n" + join_lines(violations));
    }
    return assignment;
}

void to_json(nlohmann::json& j, const VoiceEntry& e) {
    j = {{"voice_id", e.voice_id},   {"speaker_id", e.speaker_id},
         {"gender", to_string(e.gender)}, {"caption", e.caption},
         {"audio_path", e.audio_path.generic_string()}, {"language", to_string(e.language)}};
}

void from_json(const nlohmann::json& j, VoiceEntry& e) {
    e.voice_id = j.at("voice_id").get<std::string>();
    e.speaker_id = j.value("speaker_id", e.voice_id);
    e.gender = parse_voice_gender(j.value("gender", "unknown"));
    e.caption = j.at("caption").get<std::string>();
    e.audio_path = j.at("audio_path").get<std::string>();
    e.language = parse_language(j.value("language", "en"));
}

void to_json(nlohmann::json& j, const RoleVoiceAssignment& a) { j = a.voice_of; }

void from_json(const nlohmann::json& j, RoleVoiceAssignment& a) {
    a.voice_of = j.get<std::map<std::string, std::string>>();
}

namespace {

nlohmann::json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

fs::path base_dir(const fs::path& file) {
    const auto parent = fs::absolute(file).parent_path();
    return parent.empty() ? fs::current_path() : parent;
}

}  // namespace

void save_library(const VoiceLibrary& library, const fs::path& path) {
    const auto dir = base_dir(path);
    nlohmann::json arr = nlohmann::json::array();
    for (auto e : library.entries) {
        e.audio_path = fs::absolute(e.audio_path).lexically_normal().lexically_relative(dir);
        arr.push_back(e);
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IOError("cannot write " + path.string());
    out << arr.dump(2) << "\n";
    if (!out) throw IOError("write failed: " + path.string());
}

VoiceLibrary load_library(const fs::path& path, double dedup_threshold) {
    const auto doc = read_json_file(path);
    if (!doc.is_array()) throw FormatError(path.string() + ": expected a JSON array of voices");
    const auto dir = base_dir(path);
    VoiceLibrary lib;
    lib.dedup_threshold = dedup_threshold;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        VoiceEntry e;
        try {
            e = doc[i].get<VoiceEntry>();
        } catch (const nlohmann::json::exception& ex) {
            throw FormatError(path.string() + ": entry " + std::to_string(i) + ": " + ex.what());
        }
        if (!ids.insert(e.voice_id).second) throw InvariantError("duplicate voice_id " + e.voice_id);
        if (e.caption.empty()) throw InvariantError("voice " + e.voice_id + " has an empty caption");
        if (e.audio_path.is_relative()) e.audio_path = (dir / e.audio_path).lexically_normal();
        if (!fs::exists(e.audio_path)) {
            throw InvariantError("voice " + e.voice_id + ": audio file not found: " + e.audio_path.string());
        }
        lib.entries.push_back(std::move(e));
    }
    return lib;
}

std::vector<VoiceEntry> load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    std::vector<std::pair<nlohmann::json, std::size_t>> records;  // record, source line
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        nlohmann::json arr;
        try {
            arr = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(path.string() + ": " + e.what());
        }
        for (std::size_t i = 0; i < arr.size(); ++i) records.emplace_back(arr[i], 0);
    } else {
        std::istringstream lines(text);
        std::string line;
        for (std::size_t n = 1; std::getline(lines, line); ++n) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                records.emplace_back(nlohmann::json::parse(line), n);
            } catch (const nlohmann::json::parse_error& e) {
                throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
            }
        }
    }
    const auto dir = base_dir(path);
    std::vector<VoiceEntry> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& [r, line] = records[i];
        const std::string where =
            path.string() + (line ? ":" + std::to_string(line) : " entry " + std::to_string(i));
        if (!r.is_object() || !r.contains("caption") || !r.contains("audio_path")) {
            throw FormatError(where + ": needs \"caption\" and \"audio_path\"");
        }
        try {
            VoiceEntry e;
            e.caption = r.at("caption").get<std::string>();
            e.audio_path = r.at("audio_path").get<std::string>();
            if (e.audio_path.is_relative()) e.audio_path = (dir / e.audio_path).lexically_normal();
            e.voice_id = r.value("voice_id", e.audio_path.stem().string());
            e.speaker_id = r.value("speaker_id", e.voice_id);
            e.gender = r.contains("gender") ? parse_voice_gender(r.at("gender").get<std::string>())
                                            : gender_from_caption(e.caption);
            e.language = parse_language(r.value("language", "en"));
            out.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw FormatError(where + ": " + ex.what());
        } catch (const FormatError& ex) {
            throw FormatError(where + ": " + ex.what());
        }
    }
    return out;
}

}  // namespace podforge
