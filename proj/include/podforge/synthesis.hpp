#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "podforge/audio.hpp"
#include "podforge/providers.hpp"
#include "podforge/voice_pool.hpp"

namespace podforge {

struct SynthesisOptions {
    int pipeline_rate_hz = 24000;
    double duration_tolerance = 0.05;  // accepted relative error of TTA output
    RetryPolicy retry;
};

/// Text spoken in the reference voice. A null instruction sends no
/// instruction field at all.
AudioClip synthesize_speech(const std::string& text, const VoiceEntry& reference,
                            const std::optional<std::string>& instruction, TtsProvider& tts,
                            const SynthesisOptions& options = {});

AudioClip synthesize_audio(const std::string& description, double duration_s, BackgroundKind kind,
                           TtaProvider& tta, const SynthesisOptions& options = {});

/// Decoded, downmixed, resampled to the pipeline rate and clamped to [-1, 1].
AudioClip clip_from_wav(std::span<const std::uint8_t> wav, int pipeline_rate_hz);

std::string to_string(BackgroundKind k);

/// Wire payloads shared by the HTTP and subprocess providers.
nlohmann::json tts_payload(const TtsRequest& request);
nlohmann::json tta_payload(const TtaRequest& request);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace podforge
