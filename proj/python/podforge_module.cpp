// Python bindings for the metric, dedup, mixer, judge and script-engine cores.
// Callables passed from Python may run on worker threads; every call back
// into Python takes the GIL, and every call into C++ releases it.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "podforge/audio_plan.hpp"
#include "podforge/errors.hpp"
#include "podforge/eval.hpp"
#include "podforge/mixer.hpp"
#include "podforge/mock_providers.hpp"
#include "podforge/script_engine.hpp"
#include "podforge/voice_pool.hpp"

namespace py = pybind11;
using namespace podforge;

namespace {

using EmbedFn = std::function<std::vector<double>(const std::string&)>;
using CompleteFn = std::function<std::string(const std::string&)>;

class PyEmbedder : public EmbeddingProvider {
public:
    explicit PyEmbedder(EmbedFn fn) : fn_(std::move(fn)) {}

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
        py::gil_scoped_acquire gil;
        std::vector<Embedding> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(fn_(t));
        return out;
    }
    std::string id() const override { return "python"; }

private:
    EmbedFn fn_;
};

// Sends the concatenated message contents as one prompt string.
class PyCompletion : public CompletionProvider {
public:
    explicit PyCompletion(CompleteFn fn) : fn_(std::move(fn)) {}

    std::string complete(const CompletionRequest& request) override {
        std::string prompt;
        for (const auto& m : request.messages) prompt += (prompt.empty() ? "" : "\n\n") + m.content;
        py::gil_scoped_acquire gil;
        return fn_(prompt);
    }

private:
    CompleteFn fn_;
};

std::unique_ptr<EmbeddingProvider> make_embedder(const std::optional<EmbedFn>& fn, std::size_t dim) {
    if (fn) return std::make_unique<PyEmbedder>(*fn);
    return std::make_unique<HashEmbedder>(dim);
}

// nlohmann::json -> Python via the json module keeps the binding free of a
// second converter.
py::object to_python(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::object& o) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

TopicCategory category_of(const std::string& s) {
    const auto c = parse_topic_category(s);
    if (!c) throw ValidationError("unknown topic category: " + s);
    return *c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multi-agent podcast generation core";

    auto error = py::register_exception<Error>(m, "PodforgeError", PyExc_RuntimeError);
    py::register_exception<AllStopwordsError>(m, "AllStopwordsError", error.ptr());
    py::register_exception<RangeError>(m, "RangeError", error.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
    py::register_exception<ProviderError>(m, "ProviderError", error.ptr());
    py::register_exception<InvariantError>(m, "InvariantError", error.ptr());

    m.def("tokenize", [](const std::string& text) { return tokenize(text).tokens; }, py::arg("text"));

    m.def(
        "distinct_n",
        [](const std::vector<std::string>& tokens, int n, std::size_t window, std::size_t stride) {
            return distinct_n(tokens, n, make_windows(tokens.size(), window, stride));
        },
        py::arg("tokens"), py::arg("n"), py::arg("window") = 100, py::arg("stride") = 1);

    m.def(
        "mattr",
        [](const std::vector<std::string>& tokens, std::size_t window, std::size_t stride) {
            return mattr(tokens, make_windows(tokens.size(), window, stride));
        },
        py::arg("tokens"), py::arg("window") = 100, py::arg("stride") = 1);

    m.def(
        "info_density",
        [](const std::vector<std::string>& tokens, std::size_t window, std::size_t stride) {
            return info_density(tokens, english_stopwords(), make_windows(tokens.size(), window, stride));
        },
        py::arg("tokens"), py::arg("window") = 100, py::arg("stride") = 1);

    m.def(
        "semantic_div",
        [](const std::vector<std::string>& tokens, std::size_t window, std::optional<EmbedFn> embed) {
            auto embedder = make_embedder(embed, 64);
            SemanticDivResult r;
            {
                py::gil_scoped_release nogil;
                r = semantic_div(tokens, *embedder, window);
            }
            py::dict d;
            d["value"] = r.value;
            d["degenerate"] = r.degenerate;
            d["window_count"] = r.window_count;
            return d;
        },
        py::arg("tokens"), py::arg("window") = 100, py::arg("embed") = py::none(),
        "Mean pairwise cosine distance between non-overlapping windows. `embed` maps a text to a "
        "vector; the default is a deterministic hash embedder.");

    m.def(
        "compute_metrics",
        [](const std::string& text, std::size_t window, std::size_t stride, std::optional<EmbedFn> embed) {
            auto embedder = make_embedder(embed, 64);
            MetricConfig config;
            config.window_size = window;
            config.stride = stride;
            nlohmann::json j;
            {
                py::gil_scoped_release nogil;
                j = compute_metrics(text, *embedder, config);
            }
            return to_python(j);
        },
        py::arg("text"), py::arg("window") = 100, py::arg("stride") = 1, py::arg("embed") = py::none());

    m.def(
        "judge_pair",
        [](const std::string& a, const std::string& b, std::optional<CompleteFn> judge) {
            std::unique_ptr<CompletionProvider> provider;
            if (judge) {
                provider = std::make_unique<PyCompletion>(*judge);
            } else {
                provider = std::make_unique<MockCompletionProvider>();
            }
            nlohmann::json j;
            {
                py::gil_scoped_release nogil;
                j = judge_pair(a, b, *provider);
            }
            return to_python(j);
        },
        py::arg("dialog_a"), py::arg("dialog_b"), py::arg("judge") = py::none(),
        "Position-debiased comparison; `judge` maps a prompt to a JSON reply. Defaults to the "
        "offline mock judge.");

    m.def(
        "dedup_captions",
        [](const std::vector<std::string>& captions, double threshold, std::optional<EmbedFn> embed) {
            std::vector<VoiceEntry> raw;
            for (std::size_t i = 0; i < captions.size(); ++i) {
                raw.push_back({std::to_string(i), std::to_string(i), VoiceGender::Unknown, captions[i],
                               "unused.wav", Language::En});
            }
            auto embedder = make_embedder(embed, 64);
            VoiceLibrary lib;
            {
                py::gil_scoped_release nogil;
                lib = build_voice_library(raw, *embedder, threshold);
            }
            std::vector<std::size_t> kept;
            for (const auto& e : lib.entries) kept.push_back(std::stoul(e.voice_id));
            return kept;
        },
        py::arg("captions"), py::arg("threshold") = 0.95, py::arg("embed") = py::none(),
        "Indices kept by the greedy keep-first scan.");

    m.def(
        "mix",
        [](const py::object& audio_script, const std::map<int, std::vector<float>>& clips, int gap_ms,
           int sample_rate_hz) {
            const AudioScript a = from_python(audio_script).get<AudioScript>();
            ClipMap clip_map;
            for (const auto& [ref, samples] : clips) clip_map[ref] = AudioClip{samples, sample_rate_hz, ref};
            RenderResult r;
            {
                py::gil_scoped_release nogil;
                r = render(layout(a, clip_map, gap_ms, sample_rate_hz), clip_map);
            }
            py::dict d;
            d["samples"] = r.audio.samples;
            d["sample_rate_hz"] = r.audio.sample_rate_hz;
            d["limited"] = r.limited;
            d["peak"] = r.peak;
            return d;
        },
        py::arg("audio_script"), py::arg("clips"), py::arg("gap_ms") = kDefaultGapMs,
        py::arg("sample_rate_hz") = 24000,
        "Lays out and renders an audio script dict; `clips` maps item index to mono samples.");

    m.def(
        "mock_script",
        [](const std::string& topic, const std::string& category, int n_guests, bool use_outline) {
            const Topic t = Topic::make("topic", topic, category_of(category));
            MockCompletionProvider llm;
            ScriptEngine engine(llm);
            nlohmann::json j;
            {
                py::gil_scoped_release nogil;
                j = engine.run_episode(t, n_guests, use_outline);
            }
            return to_python(j);
        },
        py::arg("topic"), py::arg("category") = "Knowledge", py::arg("n_guests") = 2,
        py::arg("use_outline") = true, "Runs the full script pipeline against the offline mock LLM.");
}
