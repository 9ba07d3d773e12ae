#include "podforge/mock_providers.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "podforge/audio.hpp"
#include "podforge/errors.hpp"

namespace podforge {

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (const unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

using nlohmann::json;

constexpr std::array kRoster = {
    "Dr. Jane Martin", "Prof. Tom Adams", "Dr. Priya Raman", "Marcus Lee", "Dr. Elena Sorokina",
    "Samuel Okafor",   "Dr. Hana Ito",    "Prof. Luis Ortega"};
constexpr std::array kRosterGender = {"female", "male", "female", "male",
                                      "female", "male", "female", "male"};
constexpr std::array kFields = {
    "cognitive psychology", "philosophy",        "education research", "entrepreneurship",
    "public health",        "behavioral economics", "neuroscience",    "history of science"};

constexpr std::array kWords = {
    "evidence",   "curiosity",  "practice",   "habit",      "argument",  "bias",
    "question",   "research",   "experience", "students",   "decisions", "reasoning",
    "memory",     "attention",  "community",  "trust",      "data",      "method",
    "context",    "example",    "mistakes",   "feedback",   "patience",  "values",
    "culture",    "history",    "future",     "risk",       "balance",   "strategy",
    "perspective", "judgment",  "skills",     "learning",   "teachers",  "science",
    "stories",    "emotions",   "incentives", "markets",    "health",    "sleep",
    "exercise",   "writing",    "reading",    "debate",     "listening", "reflection",
    "journal",    "puzzle",     "logic",      "clarity",    "honesty",   "humility",
    "confidence", "doubt",      "models",     "systems",    "tradeoffs", "priorities",
    "goals",      "routine",    "environment", "technology", "society",  "policy",
    "families",   "friends",    "workplace",  "leaders",    "creativity", "design",
    "failure",    "resilience", "motivation", "discipline", "openness",  "dialogue",
    "sources",    "claims",     "assumptions", "patterns",  "signals",   "noise",
    "statistics", "probability", "experiment", "observation", "theory",  "insight"};
constexpr std::array kLinkers = {"the",   "and",  "of",   "to",   "in",    "that",  "we",
                                 "it",    "is",   "for",  "with", "often", "really", "can",
                                 "about", "when", "this", "more", "our",   "because"};
constexpr std::array kStyles = {"warm and welcoming, steady pace",
                                "curious, slightly faster, rising intonation",
                                "thoughtful and calm, measured pace",
                                "enthusiastic, energetic, bright tone",
                                "reflective, soft and slower",
                                "confident and clear, moderate pace"};

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

private:
    std::mt19937_64 engine_;
};

std::string sentence(Rng& rng, std::size_t words) {
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (!out.empty()) out += ' ';
        if (rng.below(3) == 0) {
            out += kLinkers[rng.below(kLinkers.size())];
        } else {
            out += kWords[rng.below(kWords.size())];
        }
    }
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out + ".";
}

std::string paragraph(std::uint64_t seed, std::size_t sentences) {
    Rng rng(seed);
    std::string out;
    for (std::size_t i = 0; i < sentences; ++i) {
        if (!out.empty()) out += ' ';
        out += sentence(rng, 8 + rng.below(8));
    }
    return out;
}

std::string style_for(std::uint64_t seed) { return kStyles[seed % kStyles.size()]; }

json line(const std::string& speaker, const std::string& text, std::uint64_t seed) {
    return {{"speaker", speaker}, {"text", text}, {"style_instruction", style_for(seed)}};
}

std::vector<std::string> strings(const json& j) {
    std::vector<std::string> out;
    if (j.is_array()) {
        for (const auto& v : j) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
    return out;
}

json profiles(const std::string& topic, int n) {
    json guests = json::array();
    const std::size_t offset = fnv1a(topic) % kRoster.size();
    for (int i = 0; i < n; ++i) {
        const std::size_t k = (offset + i) % kRoster.size();
        guests.push_back({{"name", kRoster[k]},
                          {"expertise", kFields[k]},
                          {"background", paragraph(fnv1a(topic, k + 11), 1)},
                          {"perspective", paragraph(fnv1a(topic, k + 29), 1)},
                          {"gender", kRosterGender[k]}});
    }
    return guests;
}

json questions(const std::string& topic, int n) {
    json out = json::array();
    Rng rng(fnv1a(topic, 7));
    for (int i = 0; i < n; ++i) {
        out.push_back("Question " + std::to_string(i + 1) + ": how do " +
                      std::string(kWords[rng.below(kWords.size())]) + " and " +
                      kWords[rng.below(kWords.size())] + " shape " + topic);
    }
    return out;
}

// Host opens, walks the outline asking each guest in turn, host closes.
json writer_script(const json& hints) {
    const std::string topic = hints.value("topic", "");
    const auto guests = strings(hints.value("guests", json::array()));
    const auto outline = strings(hints.value("outline", json::array()));
    const json responses = hints.value("responses", json::array());
    const std::string host = "Alex";
    json lines = json::array();
    std::uint64_t seed = fnv1a(topic, 3);
    std::string welcome = "Welcome to the show. Today we discuss " + topic + ". Our guests are ";
    for (std::size_t i = 0; i < guests.size(); ++i) {
        welcome += (i ? (i + 1 == guests.size() ? " and " : ", ") : "") + guests[i];
    }
    lines.push_back(line(host, welcome + ".", seed++));
    std::size_t rounds = 0;
    for (const auto& r : responses) rounds = std::max(rounds, r.value("answers", json::array()).size());
    for (std::size_t q = 0; q < rounds; ++q) {
        const std::string prompt = q < outline.size() ? outline[q] : "What else should listeners know?";
        for (const auto& r : responses) {
            const auto answers = strings(r.value("answers", json::array()));
            if (q >= answers.size()) continue;
            const std::string guest = r.value("guest", "");
            lines.push_back(line(host, guest + ", " + prompt, seed++));
            lines.push_back(line(guest, answers[q], seed++));
        }
    }
    lines.push_back(line(host, "Thank you both for these insights. " + paragraph(seed, 1) +
                                   " Until next time, keep questioning.",
                         seed + 1));
    return {{"host_name", host}, {"lines", lines}};
}

// One call writes cast, outline and script. A single call has less room per
// guest, so answers run to `sentences` paragraphs.
json one_shot_script(const json& hints, bool with_outline, int sentences) {
    const std::string topic = hints.value("topic", "");
    const int n = hints.value("n_guests", 2);
    const json guests = profiles(topic, n);
    const int n_questions = with_outline ? hints.value("n_questions", 5) : 2;
    const json outline = questions(topic, n_questions);
    json responses = json::array();
    for (const auto& g : guests) {
        json answers = json::array();
        for (int q = 0; q < n_questions; ++q) {
            answers.push_back(paragraph(fnv1a(topic + g.at("name").get<std::string>(), q + 201), sentences));
        }
        responses.push_back({{"guest", g.at("name")}, {"answers", answers}});
    }
    json names = json::array();
    for (const auto& g : guests) names.push_back(g.at("name"));
    json script = writer_script({{"topic", topic},
                                 {"guests", names},
                                 {"outline", outline},
                                 {"responses", responses}});
    script["guests"] = guests;
    if (with_outline) script["outline"] = outline;
    return script;
}

json voice_match(const json& hints) {
    json assignment = json::object();
    std::set<std::string> used;
    const json voices = hints.value("voices", json::array());
    for (const auto& role : hints.value("roles", json::array())) {
        const std::string name = role.value("name", "");
        const std::string gender = role.value("gender", "unspecified");
        std::string pick;
        for (int pass = 0; pass < 2 && pick.empty(); ++pass) {
            for (const auto& v : voices) {
                const std::string id = v.value("voice_id", "");
                const std::string vg = v.value("gender", "unknown");
                if (used.contains(id)) continue;
                if (pass == 0 && gender != "unspecified" && vg != gender) continue;
                pick = id;
                break;
            }
        }
        if (pick.empty()) continue;
        used.insert(pick);
        assignment[name] = pick;
    }
    return {{"assignment", assignment}};
}

json audio_plan(const json& hints) {
    const int count = hints.value("line_count", 1);
    json background = json::array();
    background.push_back({{"kind", "Music"},
                          {"description", "gentle upbeat intro theme, acoustic guitar and light drums"},
                          {"start_line", 0},
                          {"end_line", 0},
                          {"gain_db", -18}});
    if (count > 2) {
        const int mid = count / 2;
        background.push_back({{"kind", "SoundEffect"},
                              {"description", "soft page turn transition"},
                              {"start_line", mid},
                              {"end_line", mid},
                              {"gain_db", -24}});
    }
    return {{"background", background}};
}

// Positive when dialogue A has the richer vocabulary.
json judge(const json& hints) {
    const double a = hints.value("a_unique_words", 0.0);
    const double b = hints.value("b_unique_words", 0.0);
    const double denom = std::max({a, b, 1.0});
    const int base = static_cast<int>(std::lround(3.0 * (a - b) / denom));
    const int score = std::clamp(base, -3, 3);
    json out = json::object();
    out["evidence"] = "Dialogue A uses " + std::to_string(static_cast<long>(a)) +
                      " distinct words and Dialogue B uses " + std::to_string(static_cast<long>(b)) +
                      "; the richer dialogue covers more ground.";
    out["scores"] = {{"coherence", std::clamp(score / 2, -3, 3)},
                     {"engagingness", score},
                     {"diversity", score},
                     {"informativeness", score},
                     {"speaker_diversity", std::clamp(score / 2, -3, 3)},
                     {"overall", score}};
    return out;
}

std::string fenced(const nlohmann::json& j) { return "```json\n" + j.dump(2) + "\n```"; }

}  // namespace

std::string MockCompletionProvider::complete(const CompletionRequest& request) {
    const json& h = request.hints;
    const std::string topic = h.value("topic", "");
    if (request.task == "host_profiles") {
        return fenced({{"guests", profiles(topic, h.value("n_guests", 2))}});
    }
    if (request.task == "host_outline") {
        return fenced({{"questions", questions(topic, h.value("n_questions", 5))}});
    }
    if (request.task == "guest_response") {
        const std::string guest = h.value("guest", "");
        const auto outline = strings(h.value("outline", json::array()));
        const std::size_t n = outline.empty() ? 2 : outline.size();
        json answers = json::array();
        for (std::size_t q = 0; q < n; ++q) {
            answers.push_back(paragraph(fnv1a(topic + guest, q + 101), outline.empty() ? 1 : 2));
        }
        return fenced({{"answers", answers}});
    }
    if (request.task == "writer_script") return fenced(writer_script(h));
    if (request.task == "direct_baseline") {
        json s = one_shot_script(h, false, 1);
        s.erase("outline");
        return fenced(s);
    }
    if (request.task == "single_agent") return fenced(one_shot_script(h, true, 1));
    if (request.task == "voice_match") return fenced(voice_match(h));
    if (request.task == "audio_script") return fenced(audio_plan(h));
    if (request.task == "judge") return fenced(judge(h));
    throw ProviderError("mock provider has no behavior for task \"" + request.task + "\"");
}

std::vector<Embedding> HashEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        Embedding e(dimension_, 0.0);
        std::istringstream words(text);
        std::string w;
        while (words >> w) {
            std::mt19937_64 rng(fnv1a(w));
            for (auto& c : e) c += static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
        }
        double norm = 0.0;
        for (const double c : e) norm += c * c;
        if (norm > 0.0) {
            norm = std::sqrt(norm);
            for (auto& c : e) c /= norm;
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::string HashEmbedder::id() const { return "hash-projection-" + std::to_string(dimension_); }

std::vector<Embedding> FunctionEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(fn_(t));
    return out;
}

double MockTtsProvider::duration_for(const std::string& text) {
    std::istringstream in(text);
    std::size_t words = 0;
    std::string w;
    while (in >> w) ++words;
    return 0.3 + 0.06 * static_cast<double>(words);
}

std::vector<std::uint8_t> MockTtsProvider::synthesize(const TtsRequest& request) {
    if (request.text.empty()) throw ProviderError("mock tts: empty text");
    const std::string voice(request.reference_audio.begin(),
                            request.reference_audio.begin() +
                                std::min<std::size_t>(request.reference_audio.size(), 4096));
    const double pitch = 110.0 + static_cast<double>(fnv1a(voice) % 150);
    const double level = request.instruction ? 0.35 : 0.25;
    const auto n = static_cast<std::size_t>(std::llround(duration_for(request.text) * rate_));
    std::vector<float> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate_;
        const double syllable = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * 4.0 * t);
        samples[i] = static_cast<float>(level * syllable * std::sin(2.0 * std::numbers::pi * pitch * t));
    }
    return encode_wav_pcm16(samples, rate_);
}

std::vector<std::uint8_t> MockTtaProvider::generate(const TtaRequest& request) {
    if (!(request.duration_s > 0.0)) throw ProviderError("mock tta: duration must be positive");
    const auto n = static_cast<std::size_t>(std::llround(request.duration_s * rate_));
    std::vector<float> samples(n);
    if (request.kind == BackgroundKind::Music) {
        constexpr std::array chord = {220.0, 277.18, 329.63};
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / rate_;
            double v = 0.0;
            for (const double f : chord) v += std::sin(2.0 * std::numbers::pi * f * t);
            samples[i] = static_cast<float>(0.2 * v / chord.size());
        }
    } else {
        std::mt19937_64 rng(fnv1a(request.description));
        for (auto& s : samples) {
            s = static_cast<float>(0.2 * (static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0));
        }
    }
    return encode_wav_pcm16(samples, rate_);
}

}  // namespace podforge
