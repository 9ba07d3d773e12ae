#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "podforge/audio.hpp"
#include "podforge/errors.hpp"
#include "podforge/mock_providers.hpp"
#include "podforge/synthesis.hpp"
#include "test_support.hpp"

namespace podforge {
namespace {

using testing::TempDir;

class CapturingTts : public TtsProvider {
public:
    explicit CapturingTts(std::vector<std::uint8_t> reply) : reply_(std::move(reply)) {}
    std::vector<std::uint8_t> synthesize(const TtsRequest& request) override {
        requests.push_back(request);
        if (timeouts_left > 0) {
            --timeouts_left;
            throw TransportError("timeout");
        }
        return reply_;
    }
    std::vector<TtsRequest> requests;
    int timeouts_left = 0;

private:
    std::vector<std::uint8_t> reply_;
};

class FixedTta : public TtaProvider {
public:
    explicit FixedTta(std::vector<std::uint8_t> reply) : reply_(std::move(reply)) {}
    std::vector<std::uint8_t> generate(const TtaRequest&) override { return reply_; }

private:
    std::vector<std::uint8_t> reply_;
};

std::vector<float> sine(double hz, int rate, double seconds, double amp = 0.5) {
    std::vector<float> s(static_cast<std::size_t>(std::llround(rate * seconds)));
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = static_cast<float>(amp * std::sin(2 * std::numbers::pi * hz * static_cast<double>(i) / rate));
    }
    return s;
}

// Frequency with the largest single-bin DFT magnitude on a 1 Hz grid.
double peak_frequency(const std::vector<float>& s, int rate, double lo, double hi) {
    double best_hz = lo;
    double best = -1;
    for (double hz = lo; hz <= hi; hz += 1.0) {
        std::complex<double> acc = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            acc += static_cast<double>(s[i]) * std::polar(1.0, -2 * std::numbers::pi * hz * static_cast<double>(i) / rate);
        }
        if (std::abs(acc) > best) {
            best = std::abs(acc);
            best_hz = hz;
        }
    }
    return best_hz;
}

struct Fixture {
    TempDir dir;
    VoiceEntry voice;
    Fixture() {
        voice = {"v1", "s1", VoiceGender::Female, "bright", dir.path() / "ref.wav", Language::En};
        write_wav_file(voice.audio_path, {sine(220, 24000, 0.1), 24000});
    }
};

SynthesisOptions fast() {
    SynthesisOptions o;
    o.retry = RetryPolicy::no_wait();
    return o;
}

TEST(SynthesizeSpeech, SilencePassesThrough) {
    Fixture f;
    CapturingTts tts(encode_wav_pcm16(std::vector<float>(24000, 0.0f), 24000));
    const auto clip = synthesize_speech("hello", f.voice, std::string("cheerful"), tts, fast());
    EXPECT_EQ(clip.sample_rate_hz, 24000);
    ASSERT_EQ(clip.samples.size(), 24000u);
    for (const float s : clip.samples) ASSERT_EQ(s, 0.0f);
    ASSERT_EQ(tts.requests.size(), 1u);
    EXPECT_EQ(tts.requests[0].instruction, "cheerful");
    EXPECT_EQ(tts.requests[0].reference_audio, read_file_bytes(f.voice.audio_path));
}

TEST(SynthesizeSpeech, EmptyTextIsAPrecondition) {
    Fixture f;
    CapturingTts tts({});
    EXPECT_THROW(synthesize_speech("  ", f.voice, std::nullopt, tts, fast()), PreconditionError);
    EXPECT_TRUE(tts.requests.empty());
}

TEST(SynthesizeSpeech, NoInstructionModeSendsNoInstructionField) {
    Fixture f;
    CapturingTts tts(encode_wav_pcm16(std::vector<float>(100, 0.0f), 24000));
    synthesize_speech("hello", f.voice, std::nullopt, tts, fast());
    ASSERT_EQ(tts.requests.size(), 1u);
    EXPECT_FALSE(tts.requests[0].instruction.has_value());
    const auto wire = tts_payload(tts.requests[0]);
    EXPECT_FALSE(wire.contains("instruction"));
    EXPECT_EQ(wire.at("text"), "hello");
    EXPECT_EQ(base64_decode(wire.at("reference_audio").get<std::string>()), tts.requests[0].reference_audio);
    EXPECT_EQ(tts_payload({"hi", {}, std::string("calm")}).at("instruction"), "calm");
}

TEST(SynthesizeSpeech, RetriesTransportErrorsAndRejectsGarbage) {
    Fixture f;
    CapturingTts tts(encode_wav_pcm16(std::vector<float>(100, 0.0f), 24000));
    tts.timeouts_left = 2;
    EXPECT_NO_THROW(synthesize_speech("hello", f.voice, std::nullopt, tts, fast()));
    EXPECT_EQ(tts.requests.size(), 3u);
    CapturingTts junk({'n', 'o', 'p', 'e'});
    EXPECT_THROW(synthesize_speech("hello", f.voice, std::nullopt, junk, fast()), AudioDecodeError);
}

TEST(SynthesizeSpeech, MockTtsIsDeterministic) {
    Fixture f;
    MockTtsProvider tts;
    const auto a = synthesize_speech("four words right here", f.voice, std::string("calm"), tts, fast());
    const auto b = synthesize_speech("four words right here", f.voice, std::string("calm"), tts, fast());
    EXPECT_EQ(a, b);
    EXPECT_NEAR(a.duration_s(), 0.3 + 0.06 * 4, 1.0 / 24000);
}

TEST(SynthesizeAudio, ExactDurationFromMock) {
    MockTtaProvider tta;
    const auto clip = synthesize_audio("rain", 1.5, BackgroundKind::SoundEffect, tta, fast());
    EXPECT_EQ(clip.samples.size(), 36000u);
    EXPECT_NO_THROW(clip.validate());
}

TEST(SynthesizeAudio, NonPositiveDurationIsAPrecondition) {
    MockTtaProvider tta;
    EXPECT_THROW(synthesize_audio("rain", 0.0, BackgroundKind::Music, tta, fast()), PreconditionError);
    EXPECT_THROW(synthesize_audio("rain", -1.0, BackgroundKind::Music, tta, fast()), PreconditionError);
}

TEST(SynthesizeAudio, FortyEightKilohertzIsResampled) {
    FixedTta tta(encode_wav_pcm16(sine(1000, 48000, 1.0), 48000));
    const auto clip = synthesize_audio("tone", 1.0, BackgroundKind::Music, tta, fast());
    EXPECT_EQ(clip.sample_rate_hz, 24000);
    EXPECT_NEAR(clip.duration_s(), 1.0, 0.001);
    // Skip the filter's edge transient.
    const std::vector<float> mid(clip.samples.begin() + 2400, clip.samples.end() - 2400);
    EXPECT_EQ(peak_frequency(mid, 24000, 950, 1050), 1000.0);
    double peak = 0;
    for (const float s : mid) peak = std::max(peak, std::abs(static_cast<double>(s)));
    EXPECT_NEAR(peak, 0.5, 0.01);
}

TEST(SynthesizeAudio, DurationOutsideToleranceIsProviderError) {
    FixedTta tta(encode_wav_pcm16(std::vector<float>(24000, 0.0f), 24000));
    EXPECT_THROW(synthesize_audio("x", 2.0, BackgroundKind::Music, tta, fast()), ProviderError);
    EXPECT_NO_THROW(synthesize_audio("x", 1.04, BackgroundKind::Music, tta, fast()));
}

TEST(Wav, DecodesOtherFormatsAndDownmixes) {
    // 8-bit stereo at 16 kHz: L = +0.5, R = -0.5 -> mono 0.
    std::vector<std::uint8_t> wav{'R', 'I', 'F', 'F', 0, 0, 0, 0, 'W', 'A', 'V', 'E', 'f', 'm', 't', ' ', 16, 0, 0, 0,
                                  1, 0, 2, 0, 0x80, 0x3E, 0, 0, 0, 0x7D, 0, 0, 2, 0, 8, 0, 'd', 'a', 't', 'a', 4, 0, 0, 0,
                                  192, 64, 192, 64};
    const auto d = decode_wav(wav);
    EXPECT_EQ(d.sample_rate_hz, 16000);
    EXPECT_EQ(d.channels, 2);
    ASSERT_EQ(d.samples.size(), 2u);
    EXPECT_EQ(d.samples[0], 0.0f);
    EXPECT_THROW(decode_wav(std::vector<std::uint8_t>{'R', 'I', 'F', 'F'}), AudioDecodeError);
}

// Encode scales by 32767 and decode by 32768, so the bound is one and a half steps.
TEST(Wav, Pcm16RoundTripWithinOneAndAHalfSteps) {
    const auto s = sine(440, 24000, 0.05, 0.9);
    const auto d = decode_wav(encode_wav_pcm16(s, 24000));
    ASSERT_EQ(d.samples.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(d.samples[i], s[i], 1.5 / 32768);
}

TEST(Resample, LengthAndIdentity) {
    const auto s = sine(300, 22050, 0.5);
    EXPECT_EQ(resample(s, 22050, 22050), s);
    EXPECT_EQ(resample(s, 22050, 24000).size(), static_cast<std::size_t>(std::llround(s.size() * 24000.0 / 22050)));
    EXPECT_THROW(resample(s, 0, 24000), PreconditionError);
}

TEST(Base64, RoundTrip) {
    for (std::size_t n = 0; n < 8; ++n) {
        std::vector<std::uint8_t> b;
        for (std::size_t i = 0; i < n; ++i) b.push_back(static_cast<std::uint8_t>(i * 37 + 5));
        EXPECT_EQ(base64_decode(base64_encode(b)), b);
    }
    EXPECT_EQ(base64_encode(std::vector<std::uint8_t>{'M', 'a'}), "TWE=");
}

}  // namespace
}  // namespace podforge
