#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>

#include "podforge/audio.hpp"
#include "podforge/errors.hpp"
#include "podforge/mock_providers.hpp"
#include "podforge/voice_pool.hpp"
#include "test_support.hpp"

namespace podforge {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::FunctionProvider;
using testing::TempDir;

VoiceEntry entry(std::string id, std::string caption, VoiceGender g = VoiceGender::Unknown,
                 fs::path audio = "/nonexistent.wav") {
    return {id, "spk_" + id, g, std::move(caption), std::move(audio), Language::En};
}

// Two-slot embedder: caption "x..." -> (1,0), anything else -> (0,1).
FunctionEmbedder axis_embedder() {
    return FunctionEmbedder([](const std::string& c) { return Embedding{c[0] == 'x' ? 1.0 : 0.0, c[0] == 'x' ? 0.0 : 1.0}; },
                            "axis");
}

TEST(BuildLibrary, IdenticalCaptionsCollapse) {
    HashEmbedder emb;
    for (const double t : {0.3, 0.95, 1.0}) {
        const auto lib = build_voice_library({entry("a", "deep calm male voice"), entry("b", "deep calm male voice")},
                                             emb, t);
        ASSERT_EQ(lib.entries.size(), 1u) << t;
        EXPECT_EQ(lib.entries[0].voice_id, "a");
        EXPECT_EQ(lib.dedup_threshold, t);
    }
}

TEST(BuildLibrary, OrthogonalCaptionsAreBothKept) {
    auto emb = axis_embedder();
    EXPECT_EQ(build_voice_library({entry("a", "x voice"), entry("b", "y voice")}, emb, 0.95).entries.size(), 2u);
}

TEST(BuildLibrary, PreconditionsAndEmbedderErrors) {
    HashEmbedder emb;
    EXPECT_THROW(build_voice_library({}, emb, 0.9), PreconditionError);
    EXPECT_THROW(build_voice_library({entry("a", "c")}, emb, 0.0), PreconditionError);
    EXPECT_THROW(build_voice_library({entry("a", "c")}, emb, 1.5), PreconditionError);
    EXPECT_THROW(build_voice_library({entry("a", "c"), entry("a", "d")}, emb, 0.9), InvariantError);
    FunctionEmbedder zero([](const std::string&) { return Embedding{0.0, 0.0}; }, "zero");
    EXPECT_THROW(build_voice_library({entry("a", "c"), entry("b", "d")}, zero, 0.9), EmbeddingProviderError);
}

std::vector<VoiceEntry> random_entries(std::mt19937_64& rng, int n) {
    static const std::vector<std::string> vocab{"deep", "bright", "calm", "fast", "husky", "warm"};
    std::vector<VoiceEntry> out;
    for (int i = 0; i < n; ++i) {
        std::string caption;
        const int words = 1 + static_cast<int>(rng() % 3);
        for (int w = 0; w < words; ++w) caption += (w ? " " : "") + vocab[rng() % vocab.size()];
        out.push_back(entry("v" + std::to_string(i), caption));
    }
    return out;
}

// Similarity matrix first, then a keep-first sweep over indices.
std::vector<std::string> dedup_oracle(const std::vector<VoiceEntry>& raw, EmbeddingProvider& emb, double t) {
    std::vector<std::string> captions;
    for (const auto& e : raw) captions.push_back(e.caption);
    const auto v = emb.embed(captions);
    const std::size_t n = v.size();
    std::vector<std::vector<double>> sim(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0, a = 0, b = 0;
            for (std::size_t k = 0; k < v[i].size(); ++k) {
                dot += v[i][k] * v[j][k];
                a += v[i][k] * v[i][k];
                b += v[j][k] * v[j][k];
            }
            sim[i][j] = v[i] == v[j] ? 1.0 : dot / std::sqrt(a * b);
        }
    }
    std::vector<bool> keep(n, false);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        bool ok = true;
        for (std::size_t j = 0; j < i; ++j) {
            if (keep[j] && sim[i][j] >= t) ok = false;
        }
        keep[i] = ok;
        if (ok) out.push_back(raw[i].voice_id);
    }
    return out;
}

std::vector<std::string> ids_of(const VoiceLibrary& lib) {
    std::vector<std::string> ids;
    for (const auto& e : lib.entries) ids.push_back(e.voice_id);
    return ids;
}

// Count monotonicity in the threshold holds on these caption sets but is not a
// theorem for greedy keep-first; see the counterexample below.
TEST(BuildLibrary, MatchesPairwiseOracleAndIsMonotoneOnRandomSets) {
    std::mt19937_64 rng(99);
    HashEmbedder emb(16);
    for (int trial = 0; trial < 10; ++trial) {
        const auto raw = random_entries(rng, 10);
        const auto lib = build_voice_library(raw, emb, 0.9);
        EXPECT_EQ(ids_of(lib), dedup_oracle(raw, emb, 0.9));
        EXPECT_EQ(lib.entries.front(), raw.front());
        std::size_t prev = 0;
        for (const double t : {0.5, 0.7, 0.9, 0.99}) {
            const auto n = build_voice_library(raw, emb, t).entries.size();
            EXPECT_GE(n, prev);
            prev = n;
        }
    }
}

// b sits 0.72 from a; c and d sit 25 degrees either side of b, out of the
// (a, b) plane. At 0.9 a keeps b and b rejects c and d: 2 kept. At 0.7 a
// rejects b and nothing rejects c or d: 3 kept. Raising the threshold lowered
// the count.
TEST(BuildLibrary, GreedyCountCanFallWhenTheThresholdRises) {
    const double k = std::cos(25.0 * std::numbers::pi / 180.0);
    const double s = std::sin(25.0 * std::numbers::pi / 180.0);
    const Embedding b{0.72, std::sqrt(1 - 0.72 * 0.72), 0.0};
    const std::map<std::string, Embedding> vec{{"a", {1.0, 0.0, 0.0}},
                                               {"b", b},
                                               {"c", {k * b[0], k * b[1], s}},
                                               {"d", {k * b[0], k * b[1], -s}}};
    FunctionEmbedder emb([&](const std::string& c) { return vec.at(c); }, "plane");
    const std::vector<VoiceEntry> raw{entry("a", "a"), entry("b", "b"), entry("c", "c"), entry("d", "d")};
    EXPECT_EQ(build_voice_library(raw, emb, 0.7).entries.size(), 3u);
    EXPECT_EQ(build_voice_library(raw, emb, 0.9).entries.size(), 2u);
}

TEST(GenderFromCaption, KeywordRules) {
    EXPECT_EQ(gender_from_caption("A young female speaker, bright tone"), VoiceGender::Female);
    EXPECT_EQ(gender_from_caption("Middle-aged man with a low pitch"), VoiceGender::Male);
    EXPECT_EQ(gender_from_caption("Calm narration"), VoiceGender::Unknown);
    EXPECT_EQ(gender_from_caption("a man and a woman"), VoiceGender::Unknown);
}

VoiceLibrary four_voices() {
    VoiceLibrary lib;
    lib.entries = {entry("m1", "low male", VoiceGender::Male), entry("f1", "bright female", VoiceGender::Female),
                   entry("m2", "warm male", VoiceGender::Male), entry("u1", "neutral", VoiceGender::Unknown)};
    return lib;
}

std::vector<GuestProfile> two_guests() {
    return {{"Dr. Ana Ruiz", "biology", "", "", Gender::Female}, {"Ben Cole", "history", "", "", Gender::Male}};
}

FunctionProvider replying(std::vector<json> replies) {
    auto shared = std::make_shared<std::vector<json>>(std::move(replies));
    auto count = std::make_shared<std::size_t>(0);
    return FunctionProvider([shared, count](const CompletionRequest&) {
        const auto& r = (*shared)[std::min(*count, shared->size() - 1)];
        ++*count;
        return json{{"assignment", r}}.dump();
    });
}

RoleVoiceAssignment match(FunctionProvider& llm, const VoiceLibrary& lib = four_voices()) {
    MatchOptions opts;
    opts.retry = RetryPolicy::no_wait();
    return match_voices(lib, two_guests(), "Alex", "a friendly host", {{"q1?"}}, llm, PromptLibrary::builtin(), opts);
}

TEST(MatchVoices, ValidAssignmentIsReturned) {
    const json valid = {{"Alex", "u1"}, {"Dr. Ana Ruiz", "f1"}, {"Ben Cole", "m2"}};
    auto llm = replying({valid});
    const auto a = match(llm);
    EXPECT_EQ(a.voice_of.at("Dr. Ana Ruiz"), "f1");
    EXPECT_EQ(llm.requests.size(), 1u);
    const std::string prompt = llm.requests[0].messages[0].content;
    EXPECT_NE(prompt.find("f1 | female | en | bright female"), std::string::npos);
    EXPECT_NE(prompt.find("Host: Alex. a friendly host"), std::string::npos);
}

TEST(MatchVoices, MockProviderAssignmentIsValid) {
    MockCompletionProvider mock;
    FunctionProvider llm([&](const CompletionRequest& r) { return mock.complete(r); });
    const auto a = match(llm);
    EXPECT_TRUE(assignment_violations(four_voices(), cast_roles("Alex", two_guests()), a).empty());
}

TEST(MatchVoices, ReusedVoiceFailsAfterOneReprompt) {
    const json dup = {{"Alex", "m1"}, {"Dr. Ana Ruiz", "f1"}, {"Ben Cole", "m1"}};
    auto llm = replying({dup});
    EXPECT_THROW(match(llm), MatchValidationError);
    ASSERT_EQ(llm.requests.size(), 2u);
    EXPECT_NE(llm.requests[1].messages.back().content.find("used by both"), std::string::npos);
}

TEST(MatchVoices, UnknownVoiceIsRejected) {
    auto llm = replying({{{"Alex", "zz"}, {"Dr. Ana Ruiz", "f1"}, {"Ben Cole", "m2"}}});
    EXPECT_THROW(match(llm), MatchValidationError);
}

TEST(MatchVoices, RepromptCanRepair) {
    const json wrong_gender = {{"Alex", "u1"}, {"Dr. Ana Ruiz", "m1"}, {"Ben Cole", "m2"}};
    const json fixed = {{"Alex", "u1"}, {"Dr. Ana Ruiz", "f1"}, {"Ben Cole", "m2"}};
    auto llm = replying({wrong_gender, fixed});
    EXPECT_EQ(match(llm).voice_of.at("Dr. Ana Ruiz"), "f1");
    EXPECT_EQ(llm.requests.size(), 2u);
}

TEST(MatchVoices, LibraryTooSmallNamesThePool) {
    VoiceLibrary small;
    small.entries = {entry("m1", "x"), entry("f1", "y")};
    auto llm = replying({json::object()});
    try {
        match(llm, small);
        FAIL() << "expected PreconditionError";
    } catch (const PreconditionError& e) {
        EXPECT_NE(std::string(e.what()).find("voice_pool"), std::string::npos);
    }
    EXPECT_TRUE(llm.requests.empty());
}

TEST(AssignmentViolations, RejectsEveryNonInjectiveOrDanglingMapping) {
    const auto lib = four_voices();
    const auto roles = cast_roles("Alex", {{"G1", "x", "", "", std::nullopt}, {"G2", "y", "", "", std::nullopt}});
    const std::vector<std::string> pool{"m1", "f1", "m2", "u1", "ghost"};
    std::mt19937_64 rng(1);
    int invalid = 0;
    for (int trial = 0; trial < 500; ++trial) {
        RoleVoiceAssignment a;
        for (const auto& r : roles) {
            if (rng() % 10 == 0) continue;  // occasionally leave a role out
            a.voice_of[r.name] = pool[rng() % pool.size()];
        }
        std::set<std::string> used;
        bool dangling = false;
        for (const auto& [role, v] : a.voice_of) {
            used.insert(v);
            dangling = dangling || !lib.find(v);
        }
        const bool broken = dangling || used.size() != a.voice_of.size() || a.voice_of.size() != roles.size();
        EXPECT_EQ(!assignment_violations(lib, roles, a).empty(), broken);
        invalid += broken;
    }
    EXPECT_GT(invalid, 100);
}

void touch_wav(const fs::path& p) {
    const std::vector<float> s(240, 0.1f);
    write_wav_file(p, {s, 24000});
}

TEST(LibraryFile, SaveLoadRoundTrip) {
    TempDir dir;
    fs::create_directories(dir.path() / "audio");
    VoiceLibrary lib;
    for (const char* id : {"a", "b"}) {
        const auto p = dir.path() / "audio" / (std::string(id) + ".wav");
        touch_wav(p);
        lib.entries.push_back(entry(id, std::string("caption ") + id, VoiceGender::Female, p));
    }
    lib.entries[1].language = Language::Zh;
    save_library(lib, dir.path() / "lib.json");
    const auto raw = json::parse(std::ifstream(dir.path() / "lib.json"));
    ASSERT_TRUE(raw.is_array());
    EXPECT_EQ(raw[0]["audio_path"], "audio/a.wav");
    EXPECT_EQ(load_library(dir.path() / "lib.json"), lib);
}

TEST(LibraryFile, DuplicateIdsAndMissingAudioAreInvariantErrors) {
    TempDir dir;
    touch_wav(dir.path() / "a.wav");
    const json dup = json::array({{{"voice_id", "a"}, {"caption", "c"}, {"audio_path", "a.wav"}},
                                  {{"voice_id", "a"}, {"caption", "d"}, {"audio_path", "a.wav"}}});
    std::ofstream(dir.path() / "dup.json") << dup.dump();
    EXPECT_THROW(load_library(dir.path() / "dup.json"), InvariantError);

    const json missing = json::array({{{"voice_id", "a"}, {"caption", "c"}, {"audio_path", "gone.wav"}}});
    std::ofstream(dir.path() / "missing.json") << missing.dump();
    try {
        load_library(dir.path() / "missing.json");
        FAIL() << "expected InvariantError";
    } catch (const InvariantError& e) {
        EXPECT_NE(std::string(e.what()).find("gone.wav"), std::string::npos);
    }
    std::ofstream(dir.path() / "bad.json") << "{not json";
    EXPECT_THROW(load_library(dir.path() / "bad.json"), FormatError);
    EXPECT_THROW(load_library(dir.path() / "absent.json"), IOError);
}

TEST(Manifest, JsonLinesWithCaptionGender) {
    TempDir dir;
    {
        std::ofstream out(dir.path() / "m.jsonl");
        out << R"({"caption": "An elderly man, slow and raspy", "audio_path": "clips/p1.wav"})" << "\n\n";
        out << R"({"voice_id": "x2", "caption": "Neutral", "audio_path": "p2.wav", "gender": "female", "language": "zh"})"
            << "\n";
    }
    const auto raw = load_manifest(dir.path() / "m.jsonl");
    ASSERT_EQ(raw.size(), 2u);
    EXPECT_EQ(raw[0].voice_id, "p1");
    EXPECT_EQ(raw[0].gender, VoiceGender::Male);
    EXPECT_EQ(raw[0].audio_path, (dir.path() / "clips/p1.wav").lexically_normal());
    EXPECT_EQ(raw[1].gender, VoiceGender::Female);
    EXPECT_EQ(raw[1].language, Language::Zh);

    std::ofstream(dir.path() / "bad.jsonl") << R"({"caption": "c", "audio_path": "a.wav"})" << "\n{oops\n";
    try {
        load_manifest(dir.path() / "bad.jsonl");
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
    }
}

TEST(Manifest, JsonArray) {
    TempDir dir;
    std::ofstream(dir.path() / "m.json") << R"([{"caption": "She speaks softly", "audio_path": "a.wav"}])";
    const auto raw = load_manifest(dir.path() / "m.json");
    ASSERT_EQ(raw.size(), 1u);
    EXPECT_EQ(raw[0].gender, VoiceGender::Female);
}

}  // namespace
}  // namespace podforge
