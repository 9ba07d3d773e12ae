#include "podforge/cli.hpp"

#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "podforge/errors.hpp"
#include "podforge/voice_pool.hpp"

namespace podforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Flags that override config values; unset flags leave the config alone.
struct Overrides {
    fs::path config_file;
    std::optional<int> n_guests;
    bool no_outline = false;
    std::optional<std::string> mode;
    std::optional<std::int64_t> seed;
    std::optional<fs::path> runs_dir;
    std::optional<int> parallelism;
    std::optional<int> gap_ms;
    std::optional<fs::path> voice_library;
    bool no_instruction = false;
    std::optional<std::size_t> window_size;
    std::optional<std::size_t> stride;
};

void add_run_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--guests", o.n_guests, "Number of guests")->check(CLI::PositiveNumber);
    cmd->add_flag("--no-outline", o.no_outline, "Skip the interview outline");
    cmd->add_option("--mode", o.mode, "multi_agent, single_agent or direct_baseline");
    cmd->add_option("--seed", o.seed, "Seed passed to the LLM");
    cmd->add_option("--runs-dir", o.runs_dir, "Directory that holds run directories");
    cmd->add_option("--parallel", o.parallelism, "Topics processed concurrently")->check(CLI::PositiveNumber);
}

void add_metric_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--window", o.window_size, "Metric window size in tokens")->check(CLI::PositiveNumber);
    cmd->add_option("--stride", o.stride, "Metric window stride")->check(CLI::PositiveNumber);
}

RunConfig resolve_config(const Overrides& o, const EnvLookup& env) {
    RunConfig c = o.config_file.empty() ? RunConfig{} : load_config(o.config_file);
    apply_env(c, env);
    if (o.n_guests) c.n_guests = *o.n_guests;
    if (o.no_outline) c.use_outline = false;
    if (o.mode) c.mode = parse_mode(*o.mode);
    if (o.seed) c.seed = *o.seed;
    if (o.runs_dir) c.runs_dir = *o.runs_dir;
    if (o.parallelism) c.parallelism = *o.parallelism;
    if (o.gap_ms) c.gap_ms = *o.gap_ms;
    if (o.voice_library) c.voice_library = *o.voice_library;
    if (o.no_instruction) c.with_instruction = false;
    if (o.window_size) c.window_size = *o.window_size;
    if (o.stride) c.stride = *o.stride;
    c.validate();
    return c;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
    return s.empty() ? "-" : s;
}

int run_topics(const fs::path& topics_file, const RunConfig& config, bool full, std::ostream& out,
               std::ostream& err) {
    const auto topics = load_topics(topics_file);
    Providers providers = make_providers(config);
    const Pipeline pipeline(config, providers);
    std::vector<std::string> lines(topics.size());
    std::vector<bool> failed(topics.size(), false);
    parallel_for(topics.size(), config.parallelism, [&](std::size_t i) {
        try {
            const auto r = full ? pipeline.run_generate(topics[i]) : pipeline.run_script(topics[i]);
            lines[i] = topics[i].id + ": " + r.dir.string() + " (computed " + join(r.computed) + "; reused " +
                       join(r.reused) + ")";
        } catch (const std::exception& e) {
            failed[i] = true;
            lines[i] = topics[i].id + ": FAILED " + e.what();
        }
    });
    int status = kExitOk;
    for (std::size_t i = 0; i < topics.size(); ++i) {
        (failed[i] ? err : out) << lines[i] << '\n';
        if (failed[i]) status = kExitStageFailure;
    }
    return status;
}

struct EvalInput {
    std::optional<MetricReport> stored;
    std::string dialogue;  // plain line texts, for metrics
    std::string transcript;  // "Speaker: text" lines, for the judge
};

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void load_script_into(const json& j, EvalInput& in) {
    const auto script = j.get<ConversationScript>();
    in.dialogue = script.dialogue_text();
    for (const auto& l : script.lines) in.transcript += l.speaker + ": " + l.text + "\n";
}

// A run directory, a metrics.json, a conversation_script.json or plain text.
EvalInput load_eval_input(const fs::path& p) {
    EvalInput in;
    if (fs::is_directory(p)) {
        if (fs::exists(p / kMetricsFile)) {
            const auto j = json::parse(read_all(p / kMetricsFile));
            in.stored = j.at("metrics").get<MetricReport>();
        }
        if (fs::exists(p / kScriptFile)) load_script_into(json::parse(read_all(p / kScriptFile)), in);
        if (!in.stored && in.dialogue.empty()) {
            throw ConfigError(p.string() + " holds neither " + kMetricsFile + " nor " + kScriptFile);
        }
        return in;
    }
    const std::string text = read_all(p);
    if (p.extension() == ".json") {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError(p.string() + ": " + e.what());
        }
        if (j.contains("metrics")) {
            in.stored = j.at("metrics").get<MetricReport>();
        } else {
            load_script_into(j, in);
        }
        return in;
    }
    in.dialogue = text;
    in.transcript = text;
    return in;
}

int cmd_eval(const fs::path& ours_path, const fs::path& base_path, const std::optional<fs::path>& out_path,
             bool judge, const RunConfig& config, std::ostream& out) {
    auto ours = load_eval_input(ours_path);
    auto base = load_eval_input(base_path);
    Providers providers = make_providers(config);
    MetricConfig wanted = metric_config(config);
    wanted.embedder_id = providers.embedder->id();
    wanted.stopword_list_id = english_stopwords().id;
    // A stored report computed under other settings is recomputed when the
    // dialogue is at hand; otherwise diff_score reports the mismatch.
    const auto metrics_of = [&](EvalInput& in) {
        if (in.stored && (in.stored->config == wanted || in.dialogue.empty())) return *in.stored;
        return compute_metrics(in.dialogue, *providers.embedder, metric_config(config), english_stopwords());
    };
    const MetricReport a = metrics_of(ours);
    const MetricReport b = metrics_of(base);
    const MetricDeltas d = diff_score(a, b);

    json result = {{"ours", a}, {"baseline", b}, {"deltas", d}};
    if (judge) {
        if (ours.transcript.empty() || base.transcript.empty()) {
            throw ConfigError("--judge needs dialogue text on both sides, not only metrics.json");
        }
        result["judge"] = judge_pair(ours.transcript, base.transcript, *providers.llm);
    }

    const auto row = [](const MetricReport& r) {
        std::vector<std::optional<double>> v;
        for (const auto c : kMetricColumns) v.push_back(metric_column(r, c));
        return v;
    };
    write_table(out, {{"Ours", row(a)},
                      {"Baseline", row(b)},
                      {"Delta", {d.distinct_1, d.distinct_2, d.info_dens, d.semantic_div, d.mattr}}});
    if (judge) {
        out << "\nJudge (ours vs baseline, -3..3):\n";
        for (const auto dim : kJudgeDimensions) {
            out << "  " << dim << ": " << result["judge"]["final"][std::string(dim)] << '\n';
        }
    }
    if (out_path) {
        std::ofstream f(*out_path);
        if (!f) throw ConfigError("cannot write " + out_path->string());
        f << result.dump(2) << '\n';
    }
    return kExitOk;
}

int cmd_ablate(const fs::path& topics_file, const std::optional<fs::path>& out_path, const RunConfig& config,
               std::ostream& out, std::ostream& err) {
    const auto topics = load_topics(topics_file);
    Providers providers = make_providers(config);
    const auto report = run_ablation(topics, config, providers);
    write_ablation_table(out, report);
    for (const auto& row : report.rows) {
        for (const auto& cell : row.cells) {
            if (!cell.error.empty()) err << row.setting.label << " / " << cell.topic_id << ": " << cell.error << '\n';
        }
    }
    if (out_path) {
        std::ofstream f(*out_path);
        if (!f) throw ConfigError("cannot write " + out_path->string());
        f << json(report).dump(2) << '\n';
    }
    return kExitOk;
}

int cmd_voicepool_build(const fs::path& in, const fs::path& out_file, double threshold, const RunConfig& config,
                        std::ostream& out) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("--threshold must be in (0, 1]");
    if (!fs::is_regular_file(in)) throw ConfigError("manifest not found: " + in.string());
    const auto raw = load_manifest(in);
    Providers providers = make_providers(config);
    const auto lib = build_voice_library(raw, *providers.embedder, threshold);
    save_library(lib, out_file);
    out << "kept " << lib.entries.size() << " of " << raw.size() << " voices at threshold " << threshold << " -> "
        << out_file.string() << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
    CLI::App app{"Multi-speaker podcast generation and evaluation", "podforge"};
    app.require_subcommand(1);
    app.fallthrough();
    Overrides o;
    app.add_option("--config", o.config_file, "YAML config file")->check(CLI::ExistingFile);

    fs::path topics_file;
    auto* script = app.add_subcommand("script", "Write conversation scripts for each topic");
    script->add_option("--topics", topics_file, "Topics file")->required();
    add_run_flags(script, o);
    add_metric_flags(script, o);

    auto* generate = app.add_subcommand("generate", "Run the full pipeline through final.wav");
    generate->add_option("--topics", topics_file, "Topics file")->required();
    add_run_flags(generate, o);
    add_metric_flags(generate, o);
    generate->add_option("--gap-ms", o.gap_ms, "Silence between lines")->check(CLI::NonNegativeNumber);
    generate->add_option("--voice-library", o.voice_library, "Voice library JSON");
    generate->add_flag("--no-instruction", o.no_instruction, "Synthesize without style instructions");

    fs::path ours_path;
    fs::path base_path;
    std::optional<fs::path> out_path;
    bool judge = false;
    auto* eval = app.add_subcommand("eval", "Compare two dialogues on the quantitative metrics");
    eval->add_option("--ours", ours_path, "Run dir, metrics.json, script JSON or text")->required();
    eval->add_option("--baseline", base_path, "Run dir, metrics.json, script JSON or text")->required();
    eval->add_option("--out", out_path, "Write the comparison as JSON");
    eval->add_flag("--judge", judge, "Add the swapped pairwise LLM judge");
    add_metric_flags(eval, o);

    auto* ablate = app.add_subcommand("ablate", "Guest-count, outline and single-agent ablation");
    ablate->add_option("--topics", topics_file, "Topics file")->required();
    ablate->add_option("--out", out_path, "Write the report as JSON");
    add_run_flags(ablate, o);
    add_metric_flags(ablate, o);

    fs::path manifest;
    fs::path library_out;
    double threshold = 0.95;
    auto* voicepool = app.add_subcommand("voicepool", "Voice library tools");
    voicepool->require_subcommand(1);
    auto* build = voicepool->add_subcommand("build", "Deduplicate a caption manifest into a library");
    build->add_option("--in", manifest, "Manifest (JSON array or JSON lines)")->required();
    build->add_option("--out", library_out, "Library JSON to write")->required();
    build->add_option("--threshold", threshold, "Cosine similarity above which captions are duplicates");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        const RunConfig config = resolve_config(o, env);
        if (script->parsed()) return run_topics(topics_file, config, false, out, err);
        if (generate->parsed()) return run_topics(topics_file, config, true, out, err);
        if (eval->parsed()) return cmd_eval(ours_path, base_path, out_path, judge, config, out);
        if (ablate->parsed()) return cmd_ablate(topics_file, out_path, config, out, err);
        if (build->parsed()) return cmd_voicepool_build(manifest, library_out, threshold, config, out);
    } catch (const ConfigError& e) {
        err << "podforge: " << e.what() << '\n';
        return kExitUsage;
    } catch (const FormatError& e) {
        err << "podforge: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigMismatchError& e) {
        err << "podforge: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "podforge: " << e.what() << '\n';
        return kExitStageFailure;
    }
    return kExitUsage;
}

}  // namespace podforge
