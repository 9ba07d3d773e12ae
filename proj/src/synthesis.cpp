#include "podforge/synthesis.hpp"

#include <algorithm>
#include <cmath>

#include <openssl/evp.h>

#include "podforge/errors.hpp"

namespace podforge {

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw FormatError("base64 length is not a multiple of 4");
    std::vector<std::uint8_t> out(3 * text.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw FormatError("invalid base64");
    // EVP_DecodeBlock keeps the bytes produced by '=' padding.
    std::size_t len = static_cast<std::size_t>(n);
    if (!text.empty() && text.back() == '=') --len;
    if (text.size() > 1 && text[text.size() - 2] == '=') --len;
    out.resize(len);
    return out;
}

std::string to_string(BackgroundKind k) { return k == BackgroundKind::Music ? "music" : "sound_effect"; }

nlohmann::json tts_payload(const TtsRequest& request) {
    nlohmann::json j = {{"text", request.text}, {"reference_audio", base64_encode(request.reference_audio)}};
    if (request.instruction) j["instruction"] = *request.instruction;
    return j;
}

nlohmann::json tta_payload(const TtaRequest& request) {
    return {{"description", request.description},
            {"duration_s", request.duration_s},
            {"kind", to_string(request.kind)}};
}

AudioClip clip_from_wav(std::span<const std::uint8_t> wav, int pipeline_rate_hz) {
    const auto decoded = decode_wav(wav);
    if (decoded.samples.empty()) throw AudioDecodeError("provider returned an empty clip");
    AudioClip clip;
    clip.sample_rate_hz = pipeline_rate_hz;
    clip.samples = resample(decoded.samples, decoded.sample_rate_hz, pipeline_rate_hz);
    for (auto& s : clip.samples) {
        s = std::isfinite(s) ? std::clamp(s, -1.0f, 1.0f) : 0.0f;
    }
    clip.validate();
    return clip;
}

AudioClip synthesize_speech(const std::string& text, const VoiceEntry& reference,
                            const std::optional<std::string>& instruction, TtsProvider& tts,
                            const SynthesisOptions& options) {
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw PreconditionError("cannot synthesize empty text");
    }
    TtsRequest req{text, read_file_bytes(reference.audio_path), instruction};
    const auto wav = with_retry(options.retry, [&] { return tts.synthesize(req); });
    return clip_from_wav(wav, options.pipeline_rate_hz);
}

AudioClip synthesize_audio(const std::string& description, double duration_s, BackgroundKind kind,
                           TtaProvider& tta, const SynthesisOptions& options) {
    if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
        throw PreconditionError("background duration must be positive");
    }
    TtaRequest req{description, duration_s, kind};
    const auto wav = with_retry(options.retry, [&] { return tta.generate(req); });
    auto clip = clip_from_wav(wav, options.pipeline_rate_hz);
    const double err = std::abs(clip.duration_s() - duration_s) / duration_s;
    if (err > options.duration_tolerance) {
        throw ProviderError("text-to-audio returned " + std::to_string(clip.duration_s()) + " s for a " +
                            std::to_string(duration_s) + " s request");
    }
    return clip;
}

}  // namespace podforge
