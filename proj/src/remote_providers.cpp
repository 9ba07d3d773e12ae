#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "podforge/remote_providers.hpp"

#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>

#include "podforge/errors.hpp"
#include "podforge/synthesis.hpp"

namespace podforge {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw PreconditionError("endpoint URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string post(const HttpEndpoint& ep, const std::string& body, const std::string& what) {
    const auto [origin, path] = split_url(ep.url);
    httplib::Client cli(origin);
    cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(ep.timeout).count(), 0);
    cli.set_read_timeout(ep.timeout.count(), 0);
    cli.set_write_timeout(ep.timeout.count(), 0);
    httplib::Headers headers;
    if (!ep.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep.api_key);
    auto res = cli.Post(path, headers, body, "application/json");
    if (!res) {
        throw TransportError(what + ": " + ep.url + ": " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransportError(what + ": HTTP " + std::to_string(res->status) + " from " + ep.url);
    }
    if (res->status < 200 || res->status >= 300) {
        throw ProviderError(what + ": HTTP " + std::to_string(res->status) + " from " + ep.url + ": " +
                            res->body.substr(0, 500));
    }
    return res->body;
}

nlohmann::json parse_reply(const std::string& body, const std::string& what) {
    try {
        return nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error&) {
        throw ProviderError(what + ": reply is not JSON");
    }
}

std::vector<std::uint8_t> to_bytes(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

HttpCompletionProvider::HttpCompletionProvider(HttpEndpoint endpoint, std::string model)
    : endpoint_(std::move(endpoint)), model_(std::move(model)) {
    split_url(endpoint_.url);
}

std::string HttpCompletionProvider::complete(const CompletionRequest& request) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
    nlohmann::json body = {{"model", model_}, {"messages", messages}, {"temperature", request.temperature}};
    if (request.seed) body["seed"] = *request.seed;
    const auto reply = parse_reply(post(endpoint_, body.dump(), "completion"), "completion");
    if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()) {
        const auto& msg = reply["choices"][0].value("message", nlohmann::json::object());
        if (msg.contains("content") && msg["content"].is_string()) return msg["content"].get<std::string>();
    }
    if (reply.contains("text") && reply["text"].is_string()) return reply["text"].get<std::string>();
    throw ProviderError("completion: reply has no message content");
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEndpoint endpoint, std::string model)
    : endpoint_(std::move(endpoint)), model_(std::move(model)) {
    split_url(endpoint_.url);
}

std::vector<Embedding> HttpEmbeddingProvider::embed(const std::vector<std::string>& texts) {
    const nlohmann::json body = {{"model", model_}, {"input", texts}};
    nlohmann::json reply;
    try {
        reply = parse_reply(post(endpoint_, body.dump(), "embedding"), "embedding");
    } catch (const TransportError&) {
        throw;
    } catch (const ProviderError& e) {
        throw EmbeddingProviderError(e.what());
    }
    std::vector<Embedding> out;
    try {
        if (reply.contains("data")) {
            for (const auto& d : reply.at("data")) out.push_back(d.at("embedding").get<Embedding>());
        } else {
            out = reply.at("embeddings").get<std::vector<Embedding>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw EmbeddingProviderError(std::string("embedding: malformed reply: ") + e.what());
    }
    if (out.size() != texts.size()) throw EmbeddingProviderError("embedding: vector count mismatch");
    return out;
}

std::vector<std::uint8_t> HttpTtsProvider::synthesize(const TtsRequest& request) {
    return to_bytes(post(endpoint_, tts_payload(request).dump(), "tts"));
}

std::vector<std::uint8_t> HttpTtaProvider::generate(const TtaRequest& request) {
    return to_bytes(post(endpoint_, tta_payload(request).dump(), "tta"));
}

std::vector<std::uint8_t> run_command(const std::string& command, std::string_view input) {
    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0) throw ProviderError("pipe failed");
    if (pipe(out_pipe) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        throw ProviderError("pipe failed");
    }
    const pid_t pid = fork();
    if (pid < 0) throw ProviderError("fork failed");
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);

    // A child that exits early must not kill us with SIGPIPE.
    struct sigaction ignore{};
    struct sigaction previous{};
    ignore.sa_handler = SIG_IGN;
    sigaction(SIGPIPE, &ignore, &previous);

    std::vector<std::uint8_t> out;
    std::size_t written = 0;
    int to_child = in_pipe[1];
    if (input.empty()) {
        close(to_child);
        to_child = -1;
    }
    char buf[65536];
    for (;;) {
        pollfd fds[2];
        nfds_t n = 0;
        fds[n++] = {out_pipe[0], POLLIN, 0};
        if (to_child >= 0) fds[n++] = {to_child, POLLOUT, 0};
        if (poll(fds, n, -1) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (to_child >= 0 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
            const ssize_t w = write(to_child, input.data() + written, input.size() - written);
            if (w > 0) written += static_cast<std::size_t>(w);
            if (w < 0 || written == input.size()) {
                close(to_child);
                to_child = -1;
            }
        }
        if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
            const ssize_t r = read(out_pipe[0], buf, sizeof buf);
            if (r > 0) {
                out.insert(out.end(), buf, buf + r);
            } else if (r == 0 || errno != EINTR) {
                break;
            }
        }
    }
    if (to_child >= 0) close(to_child);
    close(out_pipe[0]);
    sigaction(SIGPIPE, &previous, nullptr);

    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        throw ProviderError("command failed (status " + std::to_string(WEXITSTATUS(status)) + "): " + command);
    }
    return out;
}

std::vector<std::uint8_t> SubprocessTtsProvider::synthesize(const TtsRequest& request) {
    return run_command(command_, tts_payload(request).dump());
}

std::vector<std::uint8_t> SubprocessTtaProvider::generate(const TtaRequest& request) {
    return run_command(command_, tta_payload(request).dump());
}

}  // namespace podforge
