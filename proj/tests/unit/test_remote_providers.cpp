#include <gtest/gtest.h>

#include <thread>

#include "httplib.h"
#include "podforge/audio.hpp"
#include "podforge/errors.hpp"
#include "podforge/remote_providers.hpp"
#include "podforge/synthesis.hpp"
#include "test_support.hpp"

namespace podforge {
namespace {

using nlohmann::json;

class LocalServer {
public:
    LocalServer() {
        port_ = server.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LocalServer() {
        server.stop();
        thread_.join();
    }
    std::string url(const std::string& path) const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

    httplib::Server server;
    json last_body;
    std::string last_auth;

private:
    int port_ = 0;
    std::thread thread_;
};

TEST(HttpCompletion, SendsChatRequestAndReadsChoices) {
    LocalServer srv;
    srv.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        srv.last_body = json::parse(req.body);
        srv.last_auth = req.get_header_value("Authorization");
        res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", "hi there"}}}}}}}.dump(),
                        "application/json");
    });
    HttpCompletionProvider llm({srv.url("/v1/chat/completions"), "sk-test", std::chrono::seconds(5)}, "gpt-x");
    CompletionRequest req;
    req.task = "demo";
    req.messages = {{"user", "hello"}};
    req.temperature = 0.3;
    req.seed = 42;
    req.hints = {{"secret", "not on the wire"}};
    EXPECT_EQ(llm.complete(req), "hi there");
    EXPECT_EQ(srv.last_auth, "Bearer sk-test");
    EXPECT_EQ(srv.last_body.at("model"), "gpt-x");
    EXPECT_EQ(srv.last_body.at("messages")[0].at("content"), "hello");
    EXPECT_EQ(srv.last_body.at("temperature"), 0.3);
    EXPECT_EQ(srv.last_body.at("seed"), 42);
    EXPECT_FALSE(srv.last_body.contains("hints"));
    EXPECT_FALSE(srv.last_body.contains("task"));
}

TEST(HttpCompletion, StatusCodesMapToErrorKinds) {
    LocalServer srv;
    srv.server.Post("/busy", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    srv.server.Post("/limited", [](const httplib::Request&, httplib::Response& res) { res.status = 429; });
    srv.server.Post("/bad", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
    srv.server.Post("/text", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"text": "plain"})", "application/json");
    });
    CompletionRequest req;
    EXPECT_THROW(HttpCompletionProvider({srv.url("/busy")}, "m").complete(req), TransportError);
    EXPECT_THROW(HttpCompletionProvider({srv.url("/limited")}, "m").complete(req), TransportError);
    try {
        HttpCompletionProvider({srv.url("/bad")}, "m").complete(req);
        FAIL() << "expected ProviderError";
    } catch (const TransportError&) {
        FAIL() << "4xx must not be retried";
    } catch (const ProviderError&) {
    }
    EXPECT_EQ(HttpCompletionProvider({srv.url("/text")}, "m").complete(req), "plain");
}

TEST(HttpCompletion, UnreachableHostIsTransportError) {
    int port = 0;
    {
        LocalServer srv;
        port = std::stoi(srv.url("").substr(std::string("http://127.0.0.1:").size()));
    }
    HttpCompletionProvider llm({"http://127.0.0.1:" + std::to_string(port) + "/x", "", std::chrono::seconds(2)}, "m");
    EXPECT_THROW(llm.complete({}), TransportError);
    EXPECT_THROW(HttpCompletionProvider({"no-scheme/path"}, "m"), PreconditionError);
}

TEST(HttpCompletion, RetriedThroughPolicy) {
    LocalServer srv;
    int calls = 0;
    srv.server.Post("/flaky", [&](const httplib::Request&, httplib::Response& res) {
        if (++calls < 3) {
            res.status = 502;
            return;
        }
        res.set_content(R"({"text": "ok"})", "application/json");
    });
    HttpCompletionProvider llm({srv.url("/flaky")}, "m");
    EXPECT_EQ(complete_with_retry(llm, {}, RetryPolicy::no_wait()), "ok");
    EXPECT_EQ(calls, 3);
}

TEST(HttpEmbedding, BothReplyShapes) {
    LocalServer srv;
    srv.server.Post("/emb", [&](const httplib::Request& req, httplib::Response& res) {
        srv.last_body = json::parse(req.body);
        json data = json::array();
        for (std::size_t i = 0; i < srv.last_body["input"].size(); ++i) data.push_back({{"embedding", {1.0 * i, 1.0}}});
        res.set_content(json{{"data", data}}.dump(), "application/json");
    });
    srv.server.Post("/emb2", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"embeddings": [[0.5, 0.5]]})", "application/json");
    });
    srv.server.Post("/short", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"embeddings": []})", "application/json");
    });
    HttpEmbeddingProvider emb({srv.url("/emb")}, "bert");
    const auto v = emb.embed({"a", "b"});
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[1], (Embedding{1.0, 1.0}));
    EXPECT_EQ(srv.last_body.at("model"), "bert");
    EXPECT_EQ(emb.id(), "http:bert");
    EXPECT_EQ(HttpEmbeddingProvider({srv.url("/emb2")}, "m").embed({"x"})[0], (Embedding{0.5, 0.5}));
    EXPECT_THROW(HttpEmbeddingProvider({srv.url("/short")}, "m").embed({"x"}), EmbeddingProviderError);
}

TEST(HttpTts, PostsPayloadAndReturnsWav) {
    LocalServer srv;
    const auto wav = encode_wav_pcm16(std::vector<float>(480, 0.25f), 24000);
    srv.server.Post("/tts", [&](const httplib::Request& req, httplib::Response& res) {
        srv.last_body = json::parse(req.body);
        res.set_content(std::string(wav.begin(), wav.end()), "audio/wav");
    });
    HttpTtsProvider tts({srv.url("/tts")});
    const std::vector<std::uint8_t> ref{1, 2, 3, 4, 5};
    EXPECT_EQ(tts.synthesize({"hello", ref, std::nullopt}), wav);
    EXPECT_EQ(srv.last_body.at("text"), "hello");
    EXPECT_EQ(base64_decode(srv.last_body.at("reference_audio").get<std::string>()), ref);
    EXPECT_FALSE(srv.last_body.contains("instruction"));
    tts.synthesize({"hello", ref, std::string("whisper")});
    EXPECT_EQ(srv.last_body.at("instruction"), "whisper");
}

TEST(HttpTta, PostsDescriptionAndDuration) {
    LocalServer srv;
    srv.server.Post("/tta", [&](const httplib::Request& req, httplib::Response& res) {
        srv.last_body = json::parse(req.body);
        res.set_content("RIFF", "audio/wav");
    });
    HttpTtaProvider tta({srv.url("/tta")});
    tta.generate({"rain on a roof", 2.5, BackgroundKind::SoundEffect});
    EXPECT_EQ(srv.last_body.at("description"), "rain on a roof");
    EXPECT_EQ(srv.last_body.at("duration_s"), 2.5);
    EXPECT_EQ(srv.last_body.at("kind"), "sound_effect");
}

TEST(Subprocess, StdinToStdout) {
    const auto out = run_command("cat", "payload");
    EXPECT_EQ(std::string(out.begin(), out.end()), "payload");
    EXPECT_THROW(run_command("exit 3", ""), ProviderError);
    // A child that ignores stdin must not wedge or kill the caller.
    const std::string big(1 << 20, 'x');
    const auto echoed = run_command("printf done", big);
    EXPECT_EQ(std::string(echoed.begin(), echoed.end()), "done");
}

TEST(Subprocess, TtsProviderGetsJsonOnStdin) {
    testing::TempDir dir;
    const auto payload = dir.path() / "payload.json";
    const auto wav_path = dir.path() / "out.wav";
    write_wav_file(wav_path, {std::vector<float>(240, 0.0f), 24000});
    SubprocessTtsProvider tts("cat > '" + payload.string() + "'; cat '" + wav_path.string() + "'");
    const auto wav = tts.synthesize({"hi", {9}, std::string("calm")});
    EXPECT_EQ(wav, read_file_bytes(wav_path));
    const auto sent = json::parse(std::ifstream(payload));
    EXPECT_EQ(sent.at("text"), "hi");
    EXPECT_EQ(sent.at("instruction"), "calm");
}

}  // namespace
}  // namespace podforge
