#include "podforge/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "podforge/errors.hpp"

namespace podforge {

TokenSequence tokenize(std::string_view text) {
    TokenSequence out;
    out.source_text = std::string(text);
    icu::UnicodeString u =
        icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    u.toLower(icu::Locale::getRoot());
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
    const icu::UnicodeString normalized = nfc->normalize(u, status);
    if (U_FAILURE(status)) throw Error("ICU normalization failed");

    icu::UnicodeString current;
    auto flush = [&] {
        if (current.isEmpty()) return;
        std::string s;
        current.toUTF8String(s);
        out.tokens.push_back(std::move(s));
        current.remove();
    };
    for (int32_t i = 0; i < normalized.length(); i = normalized.moveIndex32(i, 1)) {
        const UChar32 c = normalized.char32At(i);
        if (u_isUWhiteSpace(c)) {
            flush();
        } else if (!u_ispunct(c)) {
            current.append(c);
        }
    }
    flush();
    return out;
}

WindowSeries make_windows(std::size_t token_count, std::size_t window_size, std::size_t stride) {
    if (window_size < 1 || stride < 1) throw PreconditionError("window size and stride must be >= 1");
    WindowSeries ws;
    ws.window_size = window_size;
    ws.stride = stride;
    if (token_count <= window_size) {
        ws.windows.push_back({0, token_count});
        return ws;
    }
    for (std::size_t off = 0; off + window_size <= token_count; off += stride) {
        ws.windows.push_back({off, window_size});
    }
    return ws;
}

const StopwordList& english_stopwords() {
    static const StopwordList list{
        "en-v1",
        {"a",        "about",    "above",   "after",   "again",    "against", "ain",     "all",
         "am",       "an",       "and",     "any",     "are",      "aren",    "arent",   "as",
         "at",       "be",       "because", "been",    "before",   "being",   "below",   "between",
         "both",     "but",      "by",      "can",     "couldn",   "couldnt", "d",       "did",
         "didn",     "didnt",    "do",      "does",    "doesn",    "doesnt",  "doing",   "don",
         "dont",     "down",     "during",  "each",    "few",      "for",     "from",    "further",
         "had",      "hadn",     "hadnt",   "has",     "hasn",     "hasnt",   "have",    "haven",
         "havent",   "having",   "he",      "her",     "here",     "hers",    "herself", "him",
         "himself",  "his",      "how",     "i",       "if",       "in",      "into",    "is",
         "isn",      "isnt",     "it",      "its",     "itself",   "just",    "ll",      "m",
         "ma",       "me",       "mightn",  "mightnt", "more",     "most",    "mustn",   "mustnt",
         "my",       "myself",   "needn",   "neednt",  "no",       "nor",     "not",     "now",
         "o",        "of",       "off",     "on",      "once",     "only",    "or",      "other",
         "our",      "ours",     "ourselves", "out",   "over",     "own",     "re",      "s",
         "same",     "shan",     "shant",   "she",     "shes",     "should",  "shouldve", "shouldn",
         "shouldnt", "so",       "some",    "such",    "t",        "than",    "that",    "thatll",
         "the",      "their",    "theirs",  "them",    "themselves", "then",  "there",   "these",
         "they",     "this",     "those",   "through", "to",       "too",     "under",   "until",
         "up",       "ve",       "very",    "was",     "wasn",     "wasnt",   "we",      "were",
         "weren",    "werent",   "what",    "when",    "where",    "which",   "while",   "who",
         "whom",     "why",      "will",    "with",    "won",      "wont",    "wouldn",  "wouldnt",
         "y",        "you",      "youd",    "youll",   "youre",    "youve",   "your",    "yours",
         "yourself", "yourselves"}};
    return list;
}

namespace {

// Tokens interned to dense ids so window statistics run on integers.
struct Interned {
    std::vector<std::uint32_t> ids;
    std::vector<std::string_view> vocab;
};

Interned intern(const std::vector<std::string>& tokens) {
    Interned out;
    std::unordered_map<std::string_view, std::uint32_t> index;
    out.ids.reserve(tokens.size());
    for (const auto& t : tokens) {
        auto [it, inserted] = index.try_emplace(t, static_cast<std::uint32_t>(out.vocab.size()));
        if (inserted) out.vocab.push_back(t);
        out.ids.push_back(it->second);
    }
    return out;
}

void check_windows(const WindowSeries& windows, std::size_t token_count) {
    if (windows.windows.empty()) throw PreconditionError("window series is empty");
    for (const auto& w : windows.windows) {
        if (w.offset + w.length > token_count) throw PreconditionError("window exceeds token sequence");
    }
}

double entropy_from_counts(const std::vector<std::size_t>& counts, std::size_t total) {
    double h = 0.0;
    for (const std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h > 0.0 ? h : 0.0;
}

}  // namespace

TokenDistribution token_distribution(const std::vector<std::string>& tokens,
                                     const StopwordList& stopwords) {
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    for (const auto& t : tokens) {
        if (stopwords.contains(t)) continue;
        ++counts[t];
        ++total;
    }
    TokenDistribution dist;
    for (const auto& [t, c] : counts) {
        dist.probabilities[t] = static_cast<double>(c) / static_cast<double>(total);
    }
    return dist;
}

double shannon_entropy_bits(const TokenDistribution& dist) {
    double h = 0.0;
    for (const auto& [t, p] : dist.probabilities) h -= p * std::log2(p);
    return h > 0.0 ? h : 0.0;
}

double distinct_n(const std::vector<std::string>& tokens, int n, const WindowSeries& windows) {
    if (n != 1 && n != 2) throw PreconditionError("distinct_n supports n = 1 or n = 2");
    check_windows(windows, tokens.size());
    const auto interned = intern(tokens);
    const auto un = static_cast<std::size_t>(n);
    double acc = 0.0;
    std::unordered_set<std::uint64_t> seen;
    for (const auto& w : windows.windows) {
        if (w.length < un) {
            throw DegenerateWindowError("window of " + std::to_string(w.length) +
                                        " tokens is shorter than n = " + std::to_string(n));
        }
        seen.clear();
        const std::size_t total = w.length - un + 1;
        for (std::size_t i = w.offset; i < w.offset + total; ++i) {
            std::uint64_t key = interned.ids[i];
            if (n == 2) key = (key << 32) | interned.ids[i + 1];
            seen.insert(key);
        }
        acc += static_cast<double>(seen.size()) / static_cast<double>(total);
    }
    return acc / static_cast<double>(windows.count());
}

double mattr(const std::vector<std::string>& tokens, const WindowSeries& windows) {
    check_windows(windows, tokens.size());
    const auto interned = intern(tokens);
    std::vector<std::size_t> counts(interned.vocab.size(), 0);
    std::size_t unique = 0;
    std::size_t lo = 0;
    std::size_t hi = 0;
    auto add = [&](std::size_t i) {
        if (counts[interned.ids[i]]++ == 0) ++unique;
    };
    auto remove = [&](std::size_t i) {
        if (--counts[interned.ids[i]] == 0) --unique;
    };
    double acc = 0.0;
    for (const auto& w : windows.windows) {
        if (w.length == 0) throw DegenerateWindowError("empty window");
        const std::size_t end = w.offset + w.length;
        if (w.offset < lo || end < hi) {  // not sliding forward: start over
            std::fill(counts.begin(), counts.end(), 0);
            unique = 0;
            lo = hi = w.offset;
        }
        while (hi < end) add(hi++);
        while (lo < w.offset) remove(lo++);
        acc += static_cast<double>(unique) / static_cast<double>(w.length);
    }
    return acc / static_cast<double>(windows.count());
}

double info_density(const std::vector<std::string>& tokens, const StopwordList& stopwords,
                    const WindowSeries& windows, std::size_t* skipped_windows) {
    check_windows(windows, tokens.size());
    const auto interned = intern(tokens);
    std::vector<bool> is_stop(interned.vocab.size());
    for (std::size_t i = 0; i < interned.vocab.size(); ++i) is_stop[i] = stopwords.contains(interned.vocab[i]);
    std::vector<std::size_t> counts(interned.vocab.size());
    double acc = 0.0;
    std::size_t used = 0;
    std::size_t skipped = 0;
    for (const auto& w : windows.windows) {
        std::fill(counts.begin(), counts.end(), 0);
        std::size_t total = 0;
        for (std::size_t i = w.offset; i < w.offset + w.length; ++i) {
            if (is_stop[interned.ids[i]]) continue;
            ++counts[interned.ids[i]];
            ++total;
        }
        if (total == 0) {
            ++skipped;
            continue;
        }
        acc += entropy_from_counts(counts, total);
        ++used;
    }
    if (skipped_windows) *skipped_windows = skipped;
    if (used == 0) throw AllStopwordsError("every window consists of stopwords only");
    return acc / static_cast<double>(used);
}

double info_density_full_text(const std::vector<std::string>& tokens,
                              const StopwordList& stopwords) {
    const auto dist = token_distribution(tokens, stopwords);
    if (dist.probabilities.empty()) throw AllStopwordsError("text consists of stopwords only");
    return shannon_entropy_bits(dist);
}

std::vector<Window> semantic_windows(std::size_t token_count, std::size_t window_size) {
    if (window_size < 1) throw PreconditionError("window size must be >= 1");
    std::vector<Window> out;
    std::size_t off = 0;
    for (; off + window_size <= token_count; off += window_size) out.push_back({off, window_size});
    const std::size_t rest = token_count - off;
    if (rest > 0 && 2 * rest >= window_size) out.push_back({off, rest});
    return out;
}

SemanticDivResult semantic_div(const std::vector<std::string>& tokens, EmbeddingProvider& embedder,
                               std::size_t window_size) {
    const auto windows = semantic_windows(tokens.size(), window_size);
    SemanticDivResult result;
    result.window_count = windows.size();
    if (windows.size() < 2) {
        result.degenerate = true;
        return result;
    }
    std::vector<std::string> texts;
    texts.reserve(windows.size());
    for (const auto& w : windows) {
        std::string t;
        for (std::size_t i = w.offset; i < w.offset + w.length; ++i) {
            if (i > w.offset) t += ' ';
            t += tokens[i];
        }
        texts.push_back(std::move(t));
    }
    const auto embeddings = embedder.embed(texts);
    if (embeddings.size() != texts.size()) {
        throw EmbeddingProviderError("embedder returned " + std::to_string(embeddings.size()) +
                                     " vectors for " + std::to_string(texts.size()) + " texts");
    }
    const std::size_t dim = embeddings.front().size();
    std::vector<double> norms;
    for (const auto& e : embeddings) {
        if (e.empty() || e.size() != dim) throw EmbeddingProviderError("inconsistent embedding dimension");
        double sq = 0.0;
        for (const double c : e) {
            if (!std::isfinite(c)) throw EmbeddingProviderError("non-finite embedding component");
            sq += c * c;
        }
        if (sq == 0.0) throw EmbeddingProviderError("zero-norm embedding");
        norms.push_back(std::sqrt(sq));
    }
    double acc = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < dim; ++k) dot += embeddings[i][k] * embeddings[j][k];
            const double cos = std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
            acc += 1.0 - cos;
            ++pairs;
        }
    }
    result.value = acc / static_cast<double>(pairs);
    return result;
}

SemanticDivResult semantic_div(std::string_view text, EmbeddingProvider& embedder,
                               std::size_t window_size) {
    return semantic_div(tokenize(text).tokens, embedder, window_size);
}

MetricReport compute_metrics(std::string_view text, EmbeddingProvider& embedder, MetricConfig config,
                             const StopwordList& stopwords) {
    config.embedder_id = embedder.id();
    config.stopword_list_id = stopwords.id;
    const auto tokens = tokenize(text).tokens;
    const auto windows = make_windows(tokens.size(), config.window_size, config.stride);
    MetricReport r;
    r.distinct_1 = distinct_n(tokens, 1, windows);
    r.distinct_2 = distinct_n(tokens, 2, windows);
    r.mattr = mattr(tokens, windows);
    if (config.info_dens_mode == InfoDensMode::Windowed) {
        r.info_dens = info_density(tokens, stopwords, windows, &r.info_dens_skipped_windows);
    } else {
        r.info_dens = info_density_full_text(tokens, stopwords);
    }
    const auto sd = semantic_div(tokens, embedder, config.window_size);
    r.semantic_div = sd.value;
    r.semantic_div_degenerate = sd.degenerate;
    r.config = std::move(config);
    return r;
}

MetricDeltas diff_score(const MetricReport& ours, const MetricReport& baseline) {
    if (!(ours.config == baseline.config)) {
        throw ConfigMismatchError("metric reports were computed under different configurations: " +
                                  nlohmann::json(ours.config).dump() + " vs " +
                                  nlohmann::json(baseline.config).dump());
    }
    return {ours.distinct_1 - baseline.distinct_1, ours.distinct_2 - baseline.distinct_2,
            ours.info_dens - baseline.info_dens, ours.semantic_div - baseline.semantic_div,
            ours.mattr - baseline.mattr};
}

std::pair<std::string, DimensionScores> parse_judge_reply(const nlohmann::ordered_json& reply) {
    if (!reply.is_object()) throw SchemaError("judge reply must be a JSON object");
    int evidence_at = -1;
    int scores_at = -1;
    int index = 0;
    for (const auto& item : reply.items()) {
        if (item.key() == "evidence") evidence_at = index;
        if (item.key() == "scores") scores_at = index;
        ++index;
    }
    if (evidence_at < 0) throw SchemaError("judge reply lacks \"evidence\"");
    if (scores_at < 0) throw SchemaError("judge reply lacks \"scores\"");
    if (evidence_at > scores_at) throw SchemaError("\"evidence\" must come before \"scores\"");
    const auto& evidence = reply.at("evidence");
    if (!evidence.is_string() || evidence.get<std::string>().empty()) {
        throw SchemaError("\"evidence\" must be a non-empty string");
    }
    const auto& scores = reply.at("scores");
    if (!scores.is_object()) throw SchemaError("\"scores\" must be an object");
    for (const auto& item : scores.items()) {
        if (std::find(kJudgeDimensions.begin(), kJudgeDimensions.end(), item.key()) ==
            kJudgeDimensions.end()) {
            throw SchemaError("unknown judge dimension \"" + item.key() + "\"");
        }
    }
    DimensionScores out;
    for (const auto dim : kJudgeDimensions) {
        const std::string key(dim);
        if (!scores.contains(key)) throw SchemaError("judge scores lack \"" + key + "\"");
        const auto& v = scores.at(key);
        if (!v.is_number()) throw SchemaError("judge score \"" + key + "\" is not a number");
        const double s = v.get<double>();
        if (s < -3.0 || s > 3.0) {
            throw RangeError("judge score \"" + key + "\" = " + v.dump() + " is outside [-3, 3]");
        }
        out[key] = s;
    }
    return {evidence.get<std::string>(), out};
}

namespace {

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::size_t unique_words(std::string_view text) {
    const auto tokens = tokenize(text).tokens;
    return std::set<std::string>(tokens.begin(), tokens.end()).size();
}

std::pair<std::string, DimensionScores> judge_once(std::string_view first, std::string_view second,
                                                   CompletionProvider& judge,
                                                   const PromptLibrary& prompts,
                                                   const JudgeOptions& options) {
    CompletionRequest req;
    req.task = "judge";
    req.temperature = options.temperature;
    req.messages.push_back(
        {"user", prompts.get("judge").render({{"dialogue_a", std::string(first)},
                                              {"dialogue_b", std::string(second)}})});
    req.hints = {{"a_unique_words", unique_words(first)}, {"b_unique_words", unique_words(second)}};
    return complete_structured<std::pair<std::string, DimensionScores>>(judge, req, options.retry,
                                                                        parse_judge_reply);
}

}  // namespace

JudgeVerdict judge_pair(std::string_view dialog_a, std::string_view dialog_b,
                        CompletionProvider& judge, const PromptLibrary& prompts,
                        const JudgeOptions& options) {
    if (blank(dialog_a) || blank(dialog_b)) throw PreconditionError("both dialogues must be non-empty");
    JudgeVerdict v;
    std::tie(v.forward_evidence, v.forward) = judge_once(dialog_a, dialog_b, judge, prompts, options);
    std::tie(v.backward_evidence, v.backward) = judge_once(dialog_b, dialog_a, judge, prompts, options);
    for (const auto dim : kJudgeDimensions) {
        const std::string key(dim);
        v.final_scores[key] = (v.forward.at(key) - v.backward.at(key)) / 2.0;
    }
    return v;
}

std::string to_string(InfoDensMode mode) {
    return mode == InfoDensMode::Windowed ? "windowed" : "full_text";
}

InfoDensMode parse_info_dens_mode(std::string_view s) {
    if (s == "windowed") return InfoDensMode::Windowed;
    if (s == "full_text") return InfoDensMode::FullText;
    throw FormatError("unknown info density mode \"" + std::string(s) + "\"");
}

void to_json(nlohmann::json& j, const MetricConfig& c) {
    j = {{"window_size", c.window_size},       {"stride", c.stride},
         {"tokenizer_id", c.tokenizer_id},     {"stopword_list_id", c.stopword_list_id},
         {"embedder_id", c.embedder_id},       {"info_dens_mode", to_string(c.info_dens_mode)},
         {"text_source", c.text_source}};
}

void from_json(const nlohmann::json& j, MetricConfig& c) {
    c.window_size = j.at("window_size").get<std::size_t>();
    c.stride = j.at("stride").get<std::size_t>();
    c.tokenizer_id = j.at("tokenizer_id").get<std::string>();
    c.stopword_list_id = j.at("stopword_list_id").get<std::string>();
    c.embedder_id = j.at("embedder_id").get<std::string>();
    c.info_dens_mode = parse_info_dens_mode(j.at("info_dens_mode").get<std::string>());
    c.text_source = j.value("text_source", c.text_source);
}

void to_json(nlohmann::json& j, const MetricReport& r) {
    j = {{"distinct_1", r.distinct_1},
         {"distinct_2", r.distinct_2},
         {"info_dens", r.info_dens},
         {"semantic_div", r.semantic_div},
         {"mattr", r.mattr},
         {"config", r.config},
         {"semantic_div_degenerate", r.semantic_div_degenerate},
         {"info_dens_skipped_windows", r.info_dens_skipped_windows}};
}

void from_json(const nlohmann::json& j, MetricReport& r) {
    r.distinct_1 = j.at("distinct_1").get<double>();
    r.distinct_2 = j.at("distinct_2").get<double>();
    r.info_dens = j.at("info_dens").get<double>();
    r.semantic_div = j.at("semantic_div").get<double>();
    r.mattr = j.at("mattr").get<double>();
    r.config = j.at("config").get<MetricConfig>();
    r.semantic_div_degenerate = j.value("semantic_div_degenerate", false);
    r.info_dens_skipped_windows = j.value("info_dens_skipped_windows", std::size_t{0});
}

void to_json(nlohmann::json& j, const MetricDeltas& d) {
    j = {{"distinct_1", d.distinct_1},
         {"distinct_2", d.distinct_2},
         {"info_dens", d.info_dens},
         {"semantic_div", d.semantic_div},
         {"mattr", d.mattr}};
}

void to_json(nlohmann::json& j, const JudgeVerdict& v) {
    j = {{"final", v.final_scores},
         {"forward", {{"evidence", v.forward_evidence}, {"scores", v.forward}}},
         {"backward", {{"evidence", v.backward_evidence}, {"scores", v.backward}}}};
}

}  // namespace podforge
