#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "podforge/prompts.hpp"
#include "podforge/providers.hpp"

namespace podforge {

struct TokenSequence {
    std::vector<std::string> tokens;
    std::string source_text;
};

inline constexpr std::string_view kTokenizerId = "icu-nfc-lower-nopunct-ws-v1";

/// NFC, lowercase, drop Unicode punctuation, split on whitespace.
TokenSequence tokenize(std::string_view text);

struct Window {
    std::size_t offset = 0;
    std::size_t length = 0;
};

struct WindowSeries {
    std::size_t window_size = 100;
    std::size_t stride = 1;
    std::vector<Window> windows;

    std::size_t count() const noexcept { return windows.size(); }
};

/// One whole-sequence window when tokens fit, otherwise every full window at
/// offsets 0, stride, 2*stride, ...
WindowSeries make_windows(std::size_t token_count, std::size_t window_size = 100,
                          std::size_t stride = 1);

struct StopwordList {
    std::string id;
    std::set<std::string, std::less<>> words;

    bool contains(std::string_view w) const { return words.contains(w); }
};

/// Versioned English list, already in tokenizer form (no apostrophes).
const StopwordList& english_stopwords();

/// p_i over the non-stopword tokens; empty when nothing survives filtering.
struct TokenDistribution {
    std::map<std::string, double> probabilities;
    std::size_t unique_count() const noexcept { return probabilities.size(); }
};

TokenDistribution token_distribution(const std::vector<std::string>& tokens,
                                     const StopwordList& stopwords);

double shannon_entropy_bits(const TokenDistribution& dist);

double distinct_n(const std::vector<std::string>& tokens, int n, const WindowSeries& windows);

/// Rolling-count TTR; bit-equal to distinct_n(tokens, 1, windows).
double mattr(const std::vector<std::string>& tokens, const WindowSeries& windows);

/// Mean per-window entropy. Windows that are all stopwords are skipped and
/// counted in *skipped_windows when given.
double info_density(const std::vector<std::string>& tokens, const StopwordList& stopwords,
                    const WindowSeries& windows, std::size_t* skipped_windows = nullptr);

/// Entropy over the whole filtered sequence.
double info_density_full_text(const std::vector<std::string>& tokens,
                              const StopwordList& stopwords);

struct SemanticDivResult {
    double value = 0.0;
    bool degenerate = false;  // fewer than two windows
    std::size_t window_count = 0;
};

/// Consecutive non-overlapping windows; a trailing partial window counts if
/// it holds at least half a window.
std::vector<Window> semantic_windows(std::size_t token_count, std::size_t window_size);

SemanticDivResult semantic_div(const std::vector<std::string>& tokens, EmbeddingProvider& embedder,
                               std::size_t window_size = 100);
SemanticDivResult semantic_div(std::string_view text, EmbeddingProvider& embedder,
                               std::size_t window_size = 100);

enum class InfoDensMode { Windowed, FullText };

struct MetricConfig {
    std::size_t window_size = 100;
    std::size_t stride = 1;
    std::string tokenizer_id{kTokenizerId};
    std::string stopword_list_id = "en-v1";
    std::string embedder_id;
    InfoDensMode info_dens_mode = InfoDensMode::Windowed;
    std::string text_source = "line texts in order, speaker names excluded";

    bool operator==(const MetricConfig&) const = default;
};

struct MetricReport {
    double distinct_1 = 0.0;
    double distinct_2 = 0.0;
    double info_dens = 0.0;
    double semantic_div = 0.0;
    double mattr = 0.0;
    MetricConfig config;
    bool semantic_div_degenerate = false;
    std::size_t info_dens_skipped_windows = 0;
};

/// All five metrics for one dialogue text. config.embedder_id is taken from
/// the embedder.
MetricReport compute_metrics(std::string_view text, EmbeddingProvider& embedder,
                             MetricConfig config = {},
                             const StopwordList& stopwords = english_stopwords());

struct MetricDeltas {
    double distinct_1 = 0.0;
    double distinct_2 = 0.0;
    double info_dens = 0.0;
    double semantic_div = 0.0;
    double mattr = 0.0;
};

MetricDeltas diff_score(const MetricReport& ours, const MetricReport& baseline);

inline constexpr std::array<std::string_view, 6> kJudgeDimensions = {
    "coherence", "engagingness", "diversity", "informativeness", "speaker_diversity", "overall"};

using DimensionScores = std::map<std::string, double>;

struct JudgeVerdict {
    DimensionScores final_scores;
    DimensionScores forward;
    DimensionScores backward;
    std::string forward_evidence;
    std::string backward_evidence;
};

struct JudgeOptions {
    double temperature = 0.0;
    RetryPolicy retry;
};

/// Parses one judge reply: "evidence" must precede "scores" and every
/// dimension must be present and within [-3, 3].
std::pair<std::string, DimensionScores> parse_judge_reply(const nlohmann::ordered_json& reply);

/// Forward (A vs B) then backward (B vs A); final = (forward - backward) / 2.
JudgeVerdict judge_pair(std::string_view dialog_a, std::string_view dialog_b,
                        CompletionProvider& judge,
                        const PromptLibrary& prompts = PromptLibrary::builtin(),
                        const JudgeOptions& options = {});

std::string to_string(InfoDensMode mode);
InfoDensMode parse_info_dens_mode(std::string_view s);

void to_json(nlohmann::json& j, const MetricConfig& c);
void from_json(const nlohmann::json& j, MetricConfig& c);
void to_json(nlohmann::json& j, const MetricReport& r);
void from_json(const nlohmann::json& j, MetricReport& r);
void to_json(nlohmann::json& j, const MetricDeltas& d);
void to_json(nlohmann::json& j, const JudgeVerdict& v);

}  // namespace podforge
