#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "podforge/eval.hpp"
#include "podforge/prompts.hpp"
#include "podforge/providers.hpp"
#include "podforge/script_types.hpp"

namespace podforge {

// Config and topic-file problems; the CLI maps them to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// multi_agent, single_agent or direct_baseline (provenance names also
/// accepted). Throws ConfigError.
Provenance parse_mode(const std::string& s);

struct EndpointConfig {
    std::string url;
    std::string api_key;  // never written to snapshots
    std::string model;
    std::string command;  // subprocess provider; wins over url
    std::filesystem::path fixtures_dir;  // completion only: canned replies per task

    bool operator==(const EndpointConfig&) const = default;
};

struct RunConfig {
    int n_guests = 2;
    bool use_outline = true;
    Provenance mode = Provenance::MultiAgent;
    int question_count = 5;
    double temperature = 0.7;
    std::optional<std::int64_t> seed;
    std::size_t window_size = 100;
    std::size_t stride = 1;
    int gap_ms = 300;
    int sample_rate_hz = 24000;
    bool with_instruction = true;
    double voice_threshold = 0.95;
    std::filesystem::path voice_library;  // empty: a generated offline library
    std::filesystem::path prompts_dir;    // empty: built-in templates
    std::filesystem::path runs_dir = "runs";
    int parallelism = 1;
    EndpointConfig llm;
    EndpointConfig embedding;
    EndpointConfig tts;
    EndpointConfig tta;

    bool operator==(const RunConfig&) const = default;

    /// Throws ConfigError on the first bad field or missing file.
    void validate() const;

    /// Everything that can change an artifact; excludes keys, runs_dir and
    /// parallelism.
    nlohmann::json snapshot() const;

    /// SHA-256 hex of the compact snapshot dump.
    std::string hash() const;
};

/// YAML key-value tree; relative paths resolve against the file's directory.
/// Unknown keys are ConfigErrors so typos do not pass silently.
RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_yaml(const std::string& text, const std::filesystem::path& base_dir = {});

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// POD_LLM_URL, POD_LLM_KEY, POD_LLM_MODEL, POD_EMBED_URL, POD_EMBED_KEY,
/// POD_EMBED_MODEL, POD_TTS_URL, POD_TTS_KEY, POD_TTS_CMD, POD_TTA_URL,
/// POD_TTA_KEY, POD_TTA_CMD, POD_RUNS_DIR.
void apply_env(RunConfig& config, const EnvLookup& env);
EnvLookup process_env();

/// One topic per line as `id | category | text`, or a JSON array of
/// {id, category, text}. Blank lines and `#` comments are skipped.
/// Throws ConfigError (missing or empty file) or FormatError (line number).
std::vector<Topic> load_topics(const std::filesystem::path& path);
std::vector<Topic> parse_topics(const std::string& text);

struct Providers {
    std::unique_ptr<CompletionProvider> llm;
    std::unique_ptr<EmbeddingProvider> embedder;
    std::unique_ptr<TtsProvider> tts;
    std::unique_ptr<TtaProvider> tta;
};

/// Offline mocks for every endpoint left empty.
Providers make_providers(const RunConfig& config);

// Replies with `<dir>/<task>.json` when that file exists, else defers.
class CannedCompletionProvider : public CompletionProvider {
public:
    CannedCompletionProvider(std::filesystem::path dir, std::unique_ptr<CompletionProvider> fallback);
    std::string complete(const CompletionRequest& request) override;

private:
    std::filesystem::path dir_;
    std::unique_ptr<CompletionProvider> fallback_;
};

/// Writes six captioned reference voices (three male, three female) plus
/// library.json under `dir` unless library.json already exists.
std::filesystem::path ensure_offline_voice_library(const std::filesystem::path& dir);

inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kScriptFile = "conversation_script.json";
inline constexpr const char* kAssignmentFile = "assignment.json";
inline constexpr const char* kAudioScriptFile = "audio_script.json";
inline constexpr const char* kClipsDir = "clips";
inline constexpr const char* kTimelineFile = "timeline.json";
inline constexpr const char* kFinalWav = "final.wav";
inline constexpr const char* kMetricsFile = "metrics.json";
inline constexpr const char* kLogFile = "run.log";

/// runs_dir / "<topic_id>_<first 8 hash chars>".
std::filesystem::path run_dir_for(const RunConfig& config, const Topic& topic);

enum class Stage { Script, Match, Enrich, Synthesize, Mix, Metrics };
std::string to_string(Stage s);

struct RunOutcome {
    std::filesystem::path dir;
    std::vector<std::string> computed;  // stage names run this time
    std::vector<std::string> reused;    // stage names loaded from disk
};

// Owns one run directory. A completed stage's file is never rewritten: a
// rerun loads it verbatim and only recomputes the missing stages.
class Pipeline {
public:
    Pipeline(RunConfig config, Providers& providers);

    /// Script stage plus metrics.
    RunOutcome run_script(const Topic& topic) const;

    /// Every stage through final.wav and metrics.json.
    RunOutcome run_generate(const Topic& topic) const;

    const RunConfig& config() const noexcept { return config_; }

private:
    RunOutcome run(const Topic& topic, Stage last) const;

    RunConfig config_;
    Providers& providers_;
    PromptLibrary prompts_;
};

/// Script for `mode`, outside any run directory.
ConversationScript make_script(const Topic& topic, int n_guests, bool use_outline, Provenance mode,
                               CompletionProvider& llm, const PromptLibrary& prompts,
                               const RunConfig& config);

MetricConfig metric_config(const RunConfig& config);

struct AblationSetting {
    std::string label;
    int n_guests = 2;
    bool use_outline = true;
    Provenance mode = Provenance::MultiAgent;
};

/// Guest counts 1 to 5, then n = 2 without the outline, then n = 2 single agent.
std::vector<AblationSetting> ablation_settings();

struct AblationCell {
    std::string topic_id;
    std::optional<MetricReport> report;
    std::string error;  // set when the cell failed
};

struct AblationRow {
    AblationSetting setting;
    std::vector<AblationCell> cells;
    /// Per-metric mean over successful cells; absent when every cell failed.
    std::map<std::string, std::optional<double>> means;
};

struct AblationReport {
    std::vector<AblationRow> rows;
    std::string config_hash;
};

inline constexpr std::array<std::string_view, 5> kMetricColumns = {
    "Distinct-1", "Distinct-2", "Info-Dens", "Semantic-Div", "MATTR"};

/// Per-cell failures are recorded, never rethrown.
AblationReport run_ablation(const std::vector<Topic>& topics, const RunConfig& config,
                            Providers& providers);

std::optional<double> metric_column(const MetricReport& r, std::string_view column);

void write_table(std::ostream& out, const std::vector<std::pair<std::string, std::vector<std::optional<double>>>>& rows);
void write_ablation_table(std::ostream& out, const AblationReport& report);

void to_json(nlohmann::json& j, const AblationReport& r);

/// Runs fn(0..n-1) on up to `parallelism` threads. The first exception is
/// rethrown after every worker has stopped.
void parallel_for(std::size_t n, int parallelism, const std::function<void(std::size_t)>& fn);

/// Writes `bytes` through a temporary file and rename, so a crash never
/// leaves a half-written artifact behind.
void write_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace podforge
