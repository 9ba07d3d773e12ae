#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace podforge {

// Mono PCM clip.
struct AudioClip {
    std::vector<float> samples;
    int sample_rate_hz = 24000;
    int source_item_index = -1;

    double duration_s() const {
        return static_cast<double>(samples.size()) / static_cast<double>(sample_rate_hz);
    }

    /// Throws InvariantError when empty, out of [-1, 1] or the rate is not positive.
    void validate() const;

    bool operator==(const AudioClip&) const = default;
};

struct DecodedWav {
    std::vector<float> samples;  // downmixed to mono
    int sample_rate_hz = 0;
    int channels = 0;
    int bits_per_sample = 0;
};

/// Parses RIFF/WAVE with integer PCM (8/16/24/32 bit) or IEEE float (32/64
/// bit), including WAVE_FORMAT_EXTENSIBLE. Throws AudioDecodeError.
DecodedWav decode_wav(std::span<const std::uint8_t> bytes);

/// 16-bit PCM mono. Samples are clamped to [-1, 1] and rounded to nearest.
std::vector<std::uint8_t> encode_wav_pcm16(std::span<const float> samples, int sample_rate_hz);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

AudioClip read_wav_file(const std::filesystem::path& path);
void write_wav_file(const std::filesystem::path& path, const AudioClip& clip);

/// Kaiser-windowed sinc resampler with a fixed kernel: 32 zero crossings per
/// side, beta 8.6, cutoff at 0.95 of the lower Nyquist. Output length is
/// round(n * to / from). Deterministic for a given input.
std::vector<float> resample(std::span<const float> input, int from_hz, int to_hz);

/// Gain in dB to a linear factor.
double db_to_linear(double db);

}  // namespace podforge
