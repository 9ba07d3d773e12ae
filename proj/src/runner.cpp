#include "podforge/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "podforge/audio.hpp"
#include "podforge/audio_plan.hpp"
#include "podforge/errors.hpp"
#include "podforge/mixer.hpp"
#include "podforge/mock_providers.hpp"
#include "podforge/remote_providers.hpp"
#include "podforge/script_engine.hpp"
#include "podforge/synthesis.hpp"
#include "podforge/voice_pool.hpp"

namespace podforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trim(std::string_view s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

// --- YAML -------------------------------------------------------------------

template <typename T>
T scalar(const YAML::Node& node, const std::string& key) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type (line " +
                          std::to_string(node.Mark().line + 1) + ")");
    }
}

void read_endpoint(const YAML::Node& node, const std::string& name, EndpointConfig& e,
                   const fs::path& base) {
    if (!node.IsMap()) throw ConfigError("config key 'providers." + name + "' must be a map");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        const std::string full = "providers." + name + "." + key;
        if (key == "url") e.url = scalar<std::string>(kv.second, full);
        else if (key == "api_key") e.api_key = scalar<std::string>(kv.second, full);
        else if (key == "model") e.model = scalar<std::string>(kv.second, full);
        else if (key == "command") e.command = scalar<std::string>(kv.second, full);
        else if (key == "fixtures_dir" && name == "llm") e.fixtures_dir = resolve(base, scalar<std::string>(kv.second, full));
        else throw ConfigError("unknown config key '" + full + "'");
    }
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return out.str();
}

json endpoint_snapshot(const EndpointConfig& e) {
    json j = {{"url", e.url}, {"model", e.model}, {"command", e.command}};
    if (!e.fixtures_dir.empty()) j["fixtures_dir"] = e.fixtures_dir.string();
    return j;
}

bool valid_topic_id(const std::string& id) {
    return !id.empty() && std::all_of(id.begin(), id.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '-' || c == '_' || c == '.';
    }) && id != "." && id != "..";
}

Topic checked_topic(const std::string& id, const std::string& category, const std::string& text,
                    const std::string& where, std::set<std::string>& seen) {
    if (!valid_topic_id(id)) {
        throw FormatError(where + ": topic id '" + id + "' must use letters, digits, '-', '_' or '.'");
    }
    const auto c = parse_topic_category(category);
    if (!c || *c == TopicCategory::Other) {
        throw FormatError(where + ": unknown category '" + category +
                          "' (expected Generic, Knowledge, Common-sense or Counterfactual)");
    }
    if (trim(text).empty()) throw FormatError(where + ": topic text is empty");
    if (!seen.insert(id).second) throw FormatError(where + ": duplicate topic id '" + id + "'");
    return Topic{id, *c, trim(text)};
}

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

// --- run directory ----------------------------------------------------------

class RunLog {
public:
    explicit RunLog(const fs::path& path) : out_(path, std::ios::app) {}
    void line(const std::string& s) {
        std::lock_guard lock(mu_);
        out_ << s << '\n';
        out_.flush();
    }

private:
    std::mutex mu_;
    std::ofstream out_;
};

struct StageContext {
    fs::path dir;
    RunOutcome& outcome;
    RunLog& log;
};

template <typename T, typename Compute>
T json_stage(StageContext& ctx, Stage stage, const char* file, Compute&& compute) {
    const fs::path path = ctx.dir / file;
    const std::string name = to_string(stage);
    if (fs::exists(path)) {
        try {
            T value = json::parse(read_text(path)).get<T>();
            ctx.outcome.reused.push_back(name);
            ctx.log.line("stage " + name + ": reused " + file);
            return value;
        } catch (const json::exception& e) {
            throw StageError(name, "stored " + std::string(file) + " is unreadable: " + e.what());
        }
    }
    T value;
    try {
        value = compute();
    } catch (const StageError& e) {
        ctx.log.line("stage " + name + ": failed: " + e.what());
        throw;
    } catch (const std::exception& e) {
        ctx.log.line("stage " + name + ": failed: " + e.what());
        throw StageError(name, e.what());
    }
    write_atomic(path, json(value).dump(2) + "\n");
    ctx.outcome.computed.push_back(name);
    ctx.log.line("stage " + name + ": wrote " + file);
    return value;
}

template <typename Fn>
auto labelled(Stage stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(to_string(stage), e.what());
    }
}

BackgroundKind background_kind(ItemKind k) {
    return k == ItemKind::Music ? BackgroundKind::Music : BackgroundKind::SoundEffect;
}

std::string clip_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%03zu.wav", index);
    return buf;
}

// Offline reference voice: a short harmonic tone at the voice's pitch.
std::vector<float> reference_tone(double hz, int rate) {
    std::vector<float> s(static_cast<std::size_t>(rate / 5));
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double t = static_cast<double>(i) / rate;
        s[i] = static_cast<float>(0.3 * std::sin(2 * std::numbers::pi * hz * t) +
                                  0.1 * std::sin(4 * std::numbers::pi * hz * t));
    }
    return s;
}

}  // namespace

// --- config -----------------------------------------------------------------

Provenance parse_mode(const std::string& s) {
    if (s == "multi_agent" || s == "MultiAgent") return Provenance::MultiAgent;
    if (s == "single_agent" || s == "SingleAgent") return Provenance::SingleAgent;
    if (s == "direct_baseline" || s == "DirectBaseline") return Provenance::DirectBaseline;
    throw ConfigError("unknown mode '" + s + "' (expected multi_agent, single_agent or direct_baseline)");
}

void RunConfig::validate() const {
    if (n_guests < 1) throw ConfigError("n_guests must be >= 1");
    if (question_count < 1) throw ConfigError("question_count must be >= 1");
    if (window_size < 1 || stride < 1) throw ConfigError("window_size and stride must be >= 1");
    if (gap_ms < 0) throw ConfigError("gap_ms must be >= 0");
    if (sample_rate_hz < 8000) throw ConfigError("sample_rate_hz must be >= 8000");
    if (!(voice_threshold > 0.0 && voice_threshold <= 1.0)) throw ConfigError("voice_threshold must be in (0, 1]");
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (!voice_library.empty() && !fs::is_regular_file(voice_library)) {
        throw ConfigError("voice library not found: " + voice_library.string());
    }
    if (!prompts_dir.empty() && !fs::is_directory(prompts_dir)) {
        throw ConfigError("prompts directory not found: " + prompts_dir.string());
    }
    if (!llm.fixtures_dir.empty() && !fs::is_directory(llm.fixtures_dir)) {
        throw ConfigError("fixtures directory not found: " + llm.fixtures_dir.string());
    }
}

json RunConfig::snapshot() const {
    json j = {{"n_guests", n_guests},
              {"use_outline", use_outline},
              {"mode", to_string(mode)},
              {"question_count", question_count},
              {"temperature", temperature},
              {"window_size", window_size},
              {"stride", stride},
              {"gap_ms", gap_ms},
              {"sample_rate_hz", sample_rate_hz},
              {"with_instruction", with_instruction},
              {"voice_threshold", voice_threshold},
              {"voice_library", voice_library.string()},
              {"prompts_dir", prompts_dir.string()},
              {"providers",
               {{"llm", endpoint_snapshot(llm)},
                {"embedding", endpoint_snapshot(embedding)},
                {"tts", endpoint_snapshot(tts)},
                {"tta", endpoint_snapshot(tta)}}}};
    j["seed"] = seed ? json(*seed) : json(nullptr);
    return j;
}

std::string RunConfig::hash() const { return sha256_hex(snapshot().dump()); }

RunConfig config_from_yaml(const std::string& text, const fs::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("config line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    RunConfig c;
    if (root.IsNull()) return c;
    if (!root.IsMap()) throw ConfigError("config must be a key-value map");
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        const YAML::Node& v = kv.second;
        if (key == "n_guests") c.n_guests = scalar<int>(v, key);
        else if (key == "use_outline") c.use_outline = scalar<bool>(v, key);
        else if (key == "mode") {
            c.mode = parse_mode(scalar<std::string>(v, key));
        } else if (key == "question_count") c.question_count = scalar<int>(v, key);
        else if (key == "temperature") c.temperature = scalar<double>(v, key);
        else if (key == "seed") c.seed = v.IsNull() ? std::nullopt : std::optional(scalar<std::int64_t>(v, key));
        else if (key == "window_size") c.window_size = scalar<std::size_t>(v, key);
        else if (key == "stride") c.stride = scalar<std::size_t>(v, key);
        else if (key == "gap_ms") c.gap_ms = scalar<int>(v, key);
        else if (key == "sample_rate_hz") c.sample_rate_hz = scalar<int>(v, key);
        else if (key == "with_instruction") c.with_instruction = scalar<bool>(v, key);
        else if (key == "voice_threshold") c.voice_threshold = scalar<double>(v, key);
        else if (key == "voice_library") c.voice_library = resolve(base_dir, scalar<std::string>(v, key));
        else if (key == "prompts_dir") c.prompts_dir = resolve(base_dir, scalar<std::string>(v, key));
        else if (key == "runs_dir") c.runs_dir = resolve(base_dir, scalar<std::string>(v, key));
        else if (key == "parallelism") c.parallelism = scalar<int>(v, key);
        else if (key == "providers") {
            if (!v.IsMap()) throw ConfigError("config key 'providers' must be a map");
            for (const auto& p : v) {
                const auto name = p.first.as<std::string>();
                if (name == "llm") read_endpoint(p.second, name, c.llm, base_dir);
                else if (name == "embedding") read_endpoint(p.second, name, c.embedding, base_dir);
                else if (name == "tts") read_endpoint(p.second, name, c.tts, base_dir);
                else if (name == "tta") read_endpoint(p.second, name, c.tta, base_dir);
                else throw ConfigError("unknown config key 'providers." + name + "'");
            }
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    return c;
}

RunConfig load_config(const fs::path& path) {
    std::string text;
    try {
        text = read_text(path);
    } catch (const IOError& e) {
        throw ConfigError(e.what());
    }
    return config_from_yaml(text, path.parent_path());
}

void apply_env(RunConfig& c, const EnvLookup& env) {
    const auto set = [&](const char* name, std::string& field) {
        if (auto v = env(name)) field = *v;
    };
    set("POD_LLM_URL", c.llm.url);
    set("POD_LLM_KEY", c.llm.api_key);
    set("POD_LLM_MODEL", c.llm.model);
    set("POD_EMBED_URL", c.embedding.url);
    set("POD_EMBED_KEY", c.embedding.api_key);
    set("POD_EMBED_MODEL", c.embedding.model);
    set("POD_TTS_URL", c.tts.url);
    set("POD_TTS_KEY", c.tts.api_key);
    set("POD_TTS_CMD", c.tts.command);
    set("POD_TTA_URL", c.tta.url);
    set("POD_TTA_KEY", c.tta.api_key);
    set("POD_TTA_CMD", c.tta.command);
    if (auto v = env("POD_RUNS_DIR")) c.runs_dir = *v;
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

// --- topics -----------------------------------------------------------------

std::vector<Topic> parse_topics(const std::string& text) {
    std::vector<Topic> topics;
    std::set<std::string> seen;
    const std::string head = trim(text);
    if (!head.empty() && (head.front() == '[' || head.front() == '{')) {
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            throw FormatError("line " + std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
        }
        if (doc.is_object() && doc.contains("topics")) doc = doc["topics"];
        if (!doc.is_array()) throw FormatError("line 1: expected an array of topics");
        for (std::size_t i = 0; i < doc.size(); ++i) {
            const std::string where = "topic #" + std::to_string(i + 1);
            const auto& t = doc[i];
            if (!t.is_object() || !t.contains("id") || !t.contains("category") || !t.contains("text") ||
                !t["id"].is_string() || !t["category"].is_string() || !t["text"].is_string()) {
                throw FormatError(where + ": needs string fields id, category and text");
            }
            topics.push_back(checked_topic(t["id"], t["category"], t["text"], where, seen));
        }
        return topics;
    }
    std::istringstream in(text);
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const std::string where = "line " + std::to_string(n);
        const auto a = t.find('|');
        const auto b = a == std::string::npos ? a : t.find('|', a + 1);
        if (b == std::string::npos) throw FormatError(where + ": expected 'id | category | text'");
        topics.push_back(checked_topic(trim(t.substr(0, a)), trim(t.substr(a + 1, b - a - 1)),
                                       t.substr(b + 1), where, seen));
    }
    return topics;
}

std::vector<Topic> load_topics(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw ConfigError("topics file not found: " + path.string());
    auto topics = parse_topics(read_text(path));
    if (topics.empty()) throw ConfigError("topics file has no topics: " + path.string());
    return topics;
}

// --- providers --------------------------------------------------------------

CannedCompletionProvider::CannedCompletionProvider(fs::path dir, std::unique_ptr<CompletionProvider> fallback)
    : dir_(std::move(dir)), fallback_(std::move(fallback)) {}

std::string CannedCompletionProvider::complete(const CompletionRequest& request) {
    const fs::path file = dir_ / (request.task + ".json");
    if (!request.task.empty() && fs::is_regular_file(file)) return read_text(file);
    return fallback_->complete(request);
}

Providers make_providers(const RunConfig& c) {
    Providers p;
    if (!c.llm.url.empty()) {
        p.llm = std::make_unique<HttpCompletionProvider>(HttpEndpoint{c.llm.url, c.llm.api_key},
                                                         c.llm.model.empty() ? "gpt-4" : c.llm.model);
    } else {
        p.llm = std::make_unique<MockCompletionProvider>();
    }
    if (!c.llm.fixtures_dir.empty()) {
        p.llm = std::make_unique<CannedCompletionProvider>(c.llm.fixtures_dir, std::move(p.llm));
    }
    if (!c.embedding.url.empty()) {
        p.embedder = std::make_unique<HttpEmbeddingProvider>(HttpEndpoint{c.embedding.url, c.embedding.api_key},
                                                             c.embedding.model);
    } else {
        p.embedder = std::make_unique<HashEmbedder>();
    }
    if (!c.tts.command.empty()) p.tts = std::make_unique<SubprocessTtsProvider>(c.tts.command);
    else if (!c.tts.url.empty()) p.tts = std::make_unique<HttpTtsProvider>(HttpEndpoint{c.tts.url, c.tts.api_key});
    else p.tts = std::make_unique<MockTtsProvider>(c.sample_rate_hz);
    if (!c.tta.command.empty()) p.tta = std::make_unique<SubprocessTtaProvider>(c.tta.command);
    else if (!c.tta.url.empty()) p.tta = std::make_unique<HttpTtaProvider>(HttpEndpoint{c.tta.url, c.tta.api_key});
    else p.tta = std::make_unique<MockTtaProvider>(c.sample_rate_hz);
    return p;
}

fs::path ensure_offline_voice_library(const fs::path& dir) {
    // Topics of one batch share the library; the first worker writes it.
    static std::mutex mu;
    std::lock_guard lock(mu);
    const fs::path lib_path = dir / "library.json";
    if (fs::exists(lib_path)) return lib_path;
    struct Spec {
        const char* id;
        VoiceGender gender;
        double hz;
        const char* caption;
    };
    static const Spec specs[] = {
        {"m-deep", VoiceGender::Male, 110, "A deep, calm male voice with a slow, even pace"},
        {"m-bright", VoiceGender::Male, 140, "A bright, energetic male voice that speaks quickly"},
        {"m-husky", VoiceGender::Male, 125, "A husky, warm male narrator with a relaxed tone"},
        {"f-clear", VoiceGender::Female, 210, "A clear, friendly female voice with crisp diction"},
        {"f-soft", VoiceGender::Female, 190, "A soft, thoughtful female speaker with a low register"},
        {"f-lively", VoiceGender::Female, 240, "A lively, expressive female host with rising intonation"},
    };
    fs::create_directories(dir);
    VoiceLibrary lib;
    for (const auto& s : specs) {
        const fs::path wav = dir / (std::string(s.id) + ".wav");
        write_wav_file(wav, {reference_tone(s.hz, 24000), 24000});
        lib.entries.push_back({s.id, s.id, s.gender, s.caption, wav, Language::En});
    }
    const fs::path tmp = dir / "library.json.tmp";
    save_library(lib, tmp);
    fs::rename(tmp, lib_path);
    return lib_path;
}

// --- pipeline ---------------------------------------------------------------

std::string to_string(Stage s) {
    switch (s) {
        case Stage::Script: return "script";
        case Stage::Match: return "voice_match";
        case Stage::Enrich: return "audio_script";
        case Stage::Synthesize: return "synthesize";
        case Stage::Mix: return "mix";
        case Stage::Metrics: return "metrics";
    }
    return "unknown";
}

void write_atomic(const fs::path& path, const std::string& bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IOError("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IOError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

fs::path run_dir_for(const RunConfig& config, const Topic& topic) {
    return config.runs_dir / (topic.id + "_" + config.hash().substr(0, 8));
}

MetricConfig metric_config(const RunConfig& config) {
    MetricConfig m;
    m.window_size = config.window_size;
    m.stride = config.stride;
    return m;
}

ConversationScript make_script(const Topic& topic, int n_guests, bool use_outline, Provenance mode,
                               CompletionProvider& llm, const PromptLibrary& prompts,
                               const RunConfig& config) {
    EngineOptions opts;
    opts.question_count = config.question_count;
    opts.temperature = config.temperature;
    opts.seed = config.seed;
    ScriptEngine engine(llm, prompts, opts);
    switch (mode) {
        case Provenance::MultiAgent: return engine.run_episode(topic, n_guests, use_outline);
        case Provenance::SingleAgent: return engine.single_agent_script(topic, n_guests);
        case Provenance::DirectBaseline: return engine.direct_baseline_script(topic, n_guests);
    }
    throw PreconditionError("unknown script mode");
}

Pipeline::Pipeline(RunConfig config, Providers& providers)
    : config_(std::move(config)),
      providers_(providers),
      prompts_(config_.prompts_dir.empty() ? PromptLibrary::builtin()
                                           : PromptLibrary::with_overrides(config_.prompts_dir)) {
    config_.validate();
}

RunOutcome Pipeline::run_script(const Topic& topic) const { return run(topic, Stage::Script); }

RunOutcome Pipeline::run_generate(const Topic& topic) const { return run(topic, Stage::Mix); }

RunOutcome Pipeline::run(const Topic& topic, Stage last) const {
    RunOutcome outcome;
    outcome.dir = run_dir_for(config_, topic);
    fs::create_directories(outcome.dir);

    const fs::path config_path = outcome.dir / kConfigFile;
    const json snap = {{"config", config_.snapshot()}, {"config_hash", config_.hash()}};
    if (fs::exists(config_path)) {
        if (json::parse(read_text(config_path)) != snap) {
            throw InvariantError("run directory " + outcome.dir.string() + " holds a different config");
        }
    } else {
        write_atomic(config_path, snap.dump(2) + "\n");
    }
    RunLog log(outcome.dir / kLogFile);
    log.line("run " + topic.id + " config " + config_.hash());
    StageContext ctx{outcome.dir, outcome, log};

    const auto script = json_stage<ConversationScript>(ctx, Stage::Script, kScriptFile, [&] {
        auto s = make_script(topic, config_.n_guests, config_.use_outline, config_.mode, *providers_.llm,
                             prompts_, config_);
        validate_script(s);
        return s;
    });

    if (last != Stage::Script) {
        const fs::path lib_path =
            config_.voice_library.empty()
                ? ensure_offline_voice_library(config_.runs_dir / "offline_voices")
                : config_.voice_library;
        const VoiceLibrary library =
            labelled(Stage::Match, [&] { return load_library(lib_path, config_.voice_threshold); });

        const auto assignment = json_stage<RoleVoiceAssignment>(ctx, Stage::Match, kAssignmentFile, [&] {
            return match_voices(library, script.guests, script.host_name, "the podcast host", script.outline,
                                *providers_.llm, prompts_);
        });

        const auto audio_script = json_stage<AudioScript>(ctx, Stage::Enrich, kAudioScriptFile, [&] {
            PlanOptions plan;
            plan.temperature = config_.temperature;
            auto a = enrich_to_audio_script(script, assignment, *providers_.llm, prompts_, plan);
            if (const auto v = validate_audio_script(a, plan); !v.empty()) {
                throw ValidationError("audio script item " + std::to_string(v.front().index) + ": " +
                                      v.front().rule + " (" + v.front().detail + ")");
            }
            return a;
        });

        // Clips are persisted one file per item and always mixed from disk,
        // so a resumed run and a fresh run hear the same samples.
        const fs::path clips_dir = outcome.dir / kClipsDir;
        fs::create_directories(clips_dir);
        SynthesisOptions synth;
        synth.pipeline_rate_hz = config_.sample_rate_hz;
        ClipMap clips;
        bool synthesized = false;
        std::vector<std::int64_t> line_start;
        std::vector<std::int64_t> line_end;
        const std::int64_t gap =
            std::llround(static_cast<double>(config_.gap_ms) * config_.sample_rate_hz / 1000.0);
        labelled(Stage::Synthesize, [&] {
            std::int64_t cursor = 0;
            for (std::size_t i = 0; i < audio_script.items.size(); ++i) {
                const auto& item = audio_script.items[i];
                const fs::path file = clips_dir / clip_name(i);
                if (!fs::exists(file)) {
                    AudioClip clip;
                    if (item.kind == ItemKind::Speech) {
                        const auto voice_id = assignment.voice_of.at(*item.speaker);
                        const VoiceEntry* voice = library.find(voice_id);
                        if (!voice) throw MissingClipError("voice " + voice_id + " is not in the library");
                        const std::optional<std::string> instruction =
                            config_.with_instruction ? item.style_instruction : std::nullopt;
                        clip = synthesize_speech(item.text, *voice, instruction, *providers_.tts, synth);
                    } else {
                        const auto& span = *item.span;
                        const double seconds =
                            static_cast<double>(line_end.at(static_cast<std::size_t>(span.end_line)) -
                                                line_start.at(static_cast<std::size_t>(span.start_line))) /
                            config_.sample_rate_hz;
                        clip = synthesize_audio(item.text, seconds, background_kind(item.kind), *providers_.tta,
                                                synth);
                    }
                    const auto bytes = encode_wav_pcm16(clip.samples, clip.sample_rate_hz);
                    write_atomic(file, std::string(bytes.begin(), bytes.end()));
                    synthesized = true;
                    log.line("stage synthesize: wrote " + std::string(kClipsDir) + "/" + clip_name(i));
                }
                AudioClip clip = read_wav_file(file);
                clip.source_item_index = static_cast<int>(i);
                if (item.kind == ItemKind::Speech) {
                    if (!line_start.empty()) cursor += gap;
                    line_start.push_back(cursor);
                    cursor += static_cast<std::int64_t>(clip.samples.size());
                    line_end.push_back(cursor);
                }
                clips.emplace(static_cast<int>(i), std::move(clip));
            }
        });
        (synthesized ? outcome.computed : outcome.reused).push_back(to_string(Stage::Synthesize));

        const auto timeline = json_stage<Timeline>(ctx, Stage::Mix, kTimelineFile, [&] {
            auto t = layout(audio_script, clips, config_.gap_ms, config_.sample_rate_hz);
            validate_timeline(t);
            return t;
        });
        const fs::path wav_path = outcome.dir / kFinalWav;
        if (fs::exists(wav_path)) {
            outcome.reused.push_back("render");
            log.line("stage mix: reused " + std::string(kFinalWav));
        } else {
            labelled(Stage::Mix, [&] {
                const auto result = render(timeline, clips);
                const auto bytes = encode_wav_pcm16(result.audio.samples, result.audio.sample_rate_hz);
                write_atomic(wav_path, std::string(bytes.begin(), bytes.end()));
                log.line("stage mix: wrote " + std::string(kFinalWav) +
                         (result.limited ? " (soft limiter engaged)" : ""));
            });
            outcome.computed.push_back("render");
        }
    }

    json_stage<json>(ctx, Stage::Metrics, kMetricsFile, [&] {
        const auto report = compute_metrics(script.dialogue_text(), *providers_.embedder, metric_config(config_),
                                            english_stopwords());
        return json{{"config_hash", config_.hash()}, {"metrics", report}};
    });
    return outcome;
}

// --- ablation ---------------------------------------------------------------

std::vector<AblationSetting> ablation_settings() {
    std::vector<AblationSetting> s;
    for (int n = 1; n <= 5; ++n) s.push_back({"#Guest = " + std::to_string(n), n, true, Provenance::MultiAgent});
    s.push_back({"#Guest = 2 (w/o Outline)", 2, false, Provenance::MultiAgent});
    s.push_back({"#Guest = 2 (Single Agent)", 2, true, Provenance::SingleAgent});
    return s;
}

std::optional<double> metric_column(const MetricReport& r, std::string_view column) {
    if (column == "Distinct-1") return r.distinct_1;
    if (column == "Distinct-2") return r.distinct_2;
    if (column == "Info-Dens") return r.info_dens;
    if (column == "Semantic-Div") return r.semantic_div_degenerate ? std::nullopt : std::optional(r.semantic_div);
    if (column == "MATTR") return r.mattr;
    return std::nullopt;
}

void parallel_for(std::size_t n, int parallelism, const std::function<void(std::size_t)>& fn) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex mu;
    const auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!first) first = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, parallelism)));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (first) std::rethrow_exception(first);
}

AblationReport run_ablation(const std::vector<Topic>& topics, const RunConfig& config, Providers& providers) {
    config.validate();
    const PromptLibrary prompts =
        config.prompts_dir.empty() ? PromptLibrary::builtin() : PromptLibrary::with_overrides(config.prompts_dir);
    AblationReport report;
    report.config_hash = config.hash();
    for (const auto& setting : ablation_settings()) {
        AblationRow row{setting, std::vector<AblationCell>(topics.size()), {}};
        parallel_for(topics.size(), config.parallelism, [&](std::size_t i) {
            auto& cell = row.cells[i];
            cell.topic_id = topics[i].id;
            try {
                const auto script = make_script(topics[i], setting.n_guests, setting.use_outline, setting.mode,
                                                *providers.llm, prompts, config);
                cell.report = compute_metrics(script.dialogue_text(), *providers.embedder, metric_config(config),
                                              english_stopwords());
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
        });
        for (const auto column : kMetricColumns) {
            double sum = 0.0;
            int n = 0;
            for (const auto& cell : row.cells) {
                if (!cell.report) continue;
                if (const auto v = metric_column(*cell.report, column)) {
                    sum += *v;
                    ++n;
                }
            }
            row.means[std::string(column)] = n ? std::optional(sum / n) : std::nullopt;
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

void write_table(std::ostream& out,
                 const std::vector<std::pair<std::string, std::vector<std::optional<double>>>>& rows) {
    std::size_t label_width = 8;
    for (const auto& r : rows) label_width = std::max(label_width, r.first.size());
    out << std::left << std::setw(static_cast<int>(label_width)) << "Setting";
    for (const auto column : kMetricColumns) out << "  " << std::right << std::setw(12) << column;
    out << '\n';
    for (const auto& [label, values] : rows) {
        out << std::left << std::setw(static_cast<int>(label_width)) << label;
        for (const auto& v : values) {
            out << "  " << std::right << std::setw(12);
            if (v) out << std::fixed << std::setprecision(4) << *v;
            else out << "n/a";
        }
        out << '\n';
    }
}

void write_ablation_table(std::ostream& out, const AblationReport& report) {
    std::vector<std::pair<std::string, std::vector<std::optional<double>>>> rows;
    for (const auto& row : report.rows) {
        std::vector<std::optional<double>> values;
        for (const auto column : kMetricColumns) values.push_back(row.means.at(std::string(column)));
        rows.emplace_back(row.setting.label, std::move(values));
    }
    write_table(out, rows);
}

void to_json(json& j, const AblationReport& r) {
    j = {{"config_hash", r.config_hash}, {"columns", kMetricColumns}, {"rows", json::array()}};
    for (const auto& row : r.rows) {
        json means = json::object();
        for (const auto& [k, v] : row.means) means[k] = v ? json(*v) : json(nullptr);
        json cells = json::array();
        for (const auto& c : row.cells) {
            json cell = {{"topic_id", c.topic_id}};
            if (c.report) cell["metrics"] = *c.report;
            else cell["error"] = c.error;
            cells.push_back(std::move(cell));
        }
        j["rows"].push_back({{"label", row.setting.label},
                             {"n_guests", row.setting.n_guests},
                             {"use_outline", row.setting.use_outline},
                             {"mode", to_string(row.setting.mode)},
                             {"means", std::move(means)},
                             {"cells", std::move(cells)}});
    }
}

}  // namespace podforge
