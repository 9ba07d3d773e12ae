#include "podforge/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

#include "podforge/errors.hpp"

namespace podforge {

void AudioClip::validate() const {
    if (sample_rate_hz <= 0) throw InvariantError("clip sample rate must be positive");
    if (samples.empty()) throw InvariantError("clip is empty");
    for (const float s : samples) {
        if (!(std::abs(s) <= 1.0f)) throw InvariantError("clip sample outside [-1, 1]");
    }
}

namespace {

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
           (static_cast<std::uint32_t>(b[at + 2]) << 16) |
           (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

double read_sample(std::span<const std::uint8_t> b, std::size_t at, std::uint16_t format,
                   int bits) {
    if (format == kFormatFloat) {
        if (bits == 32) {
            const std::uint32_t raw = le32(b, at);
            float f;
            std::memcpy(&f, &raw, sizeof f);
            return f;
        }
        std::uint64_t raw = static_cast<std::uint64_t>(le32(b, at)) |
                            (static_cast<std::uint64_t>(le32(b, at + 4)) << 32);
        double d;
        std::memcpy(&d, &raw, sizeof d);
        return d;
    }
    switch (bits) {
        case 8: return (static_cast<int>(b[at]) - 128) / 128.0;
        case 16: return static_cast<std::int16_t>(le16(b, at)) / 32768.0;
        case 24: {
            std::int32_t v = b[at] | (b[at + 1] << 8) | (b[at + 2] << 16);
            if (v & 0x800000) v -= 0x1000000;
            return v / 8388608.0;
        }
        default: return static_cast<std::int32_t>(le32(b, at)) / 2147483648.0;
    }
}

double bessel_i0(double x) {
    double sum = 1.0;
    double term = 1.0;
    const double half_sq = x * x / 4.0;
    for (int k = 1; k < 64; ++k) {
        term *= half_sq / (static_cast<double>(k) * k);
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

}  // namespace

DecodedWav decode_wav(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw AudioDecodeError("not a RIFF/WAVE stream");
    }
    std::uint16_t format = 0;
    int channels = 0;
    int rate = 0;
    int bits = 0;
    bool have_fmt = false;
    std::size_t data_at = 0;
    std::size_t data_len = 0;
    bool have_data = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t len = le32(bytes, pos + 4);
        const std::size_t body = pos + 8;
        if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
            if (len < 16 || body + 16 > bytes.size()) throw AudioDecodeError("short fmt chunk");
            format = le16(bytes, body);
            channels = le16(bytes, body + 2);
            rate = static_cast<int>(le32(bytes, body + 4));
            bits = le16(bytes, body + 14);
            if (format == kFormatExtensible) {
                if (len < 40 || body + 26 > bytes.size()) {
                    throw AudioDecodeError("short extensible fmt chunk");
                }
                format = le16(bytes, body + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
            data_at = body;
            // Streams written without a final size carry 0 or 0xFFFFFFFF here.
            data_len = std::min<std::size_t>(len, bytes.size() - body);
            have_data = true;
            break;
        }
        pos = body + len + (len & 1u);
    }
    if (!have_fmt) throw AudioDecodeError("missing fmt chunk");
    if (!have_data) throw AudioDecodeError("missing data chunk");
    if (channels < 1 || rate <= 0) throw AudioDecodeError("bad channel count or sample rate");
    const bool pcm_ok = format == kFormatPcm && (bits == 8 || bits == 16 || bits == 24 || bits == 32);
    const bool float_ok = format == kFormatFloat && (bits == 32 || bits == 64);
    if (!pcm_ok && !float_ok) {
        throw AudioDecodeError("unsupported sample format " + std::to_string(format) + "/" +
                               std::to_string(bits) + " bit");
    }
    const std::size_t frame = static_cast<std::size_t>(channels) * (bits / 8);
    const std::size_t frames = data_len / frame;
    DecodedWav out;
    out.sample_rate_hz = rate;
    out.channels = channels;
    out.bits_per_sample = bits;
    out.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
            acc += read_sample(bytes, data_at + i * frame + c * (bits / 8), format, bits);
        }
        out.samples[i] = static_cast<float>(acc / channels);
    }
    return out;
}

std::vector<std::uint8_t> encode_wav_pcm16(std::span<const float> samples, int sample_rate_hz) {
    const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put32(out, 36 + data_bytes);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put32(out, 16);
    put16(out, kFormatPcm);
    put16(out, 1);
    put32(out, static_cast<std::uint32_t>(sample_rate_hz));
    put32(out, static_cast<std::uint32_t>(sample_rate_hz) * 2);
    put16(out, 2);
    put16(out, 16);
    put_tag(out, "data");
    put32(out, data_bytes);
    for (const float s : samples) {
        const double clamped = std::clamp(static_cast<double>(s), -1.0, 1.0);
        const long v = std::lround(clamped * 32767.0);
        put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
    }
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IOError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IOError("write failed: " + path.string());
}

AudioClip read_wav_file(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    auto decoded = decode_wav(bytes);
    AudioClip clip;
    clip.samples = std::move(decoded.samples);
    clip.sample_rate_hz = decoded.sample_rate_hz;
    return clip;
}

void write_wav_file(const std::filesystem::path& path, const AudioClip& clip) {
    write_file_bytes(path, encode_wav_pcm16(clip.samples, clip.sample_rate_hz));
}

std::vector<float> resample(std::span<const float> input, int from_hz, int to_hz) {
    if (from_hz <= 0 || to_hz <= 0) throw PreconditionError("sample rates must be positive");
    if (from_hz == to_hz) return {input.begin(), input.end()};
    constexpr double kZeroCrossings = 32.0;
    constexpr double kBeta = 8.6;
    constexpr double kRolloff = 0.95;
    const double ratio = static_cast<double>(to_hz) / from_hz;
    const double cutoff = kRolloff * std::min(1.0, ratio);  // cycles per input sample * 2
    const double half_width = kZeroCrossings / cutoff;       // in input samples
    const double i0_beta = bessel_i0(kBeta);

    // Kernel tabulated over |d| in [0, half_width], linearly interpolated.
    constexpr int kTableSteps = 512;  // per input sample
    const auto table_len = static_cast<std::size_t>(std::ceil(half_width * kTableSteps)) + 2;
    std::vector<double> kernel(table_len);
    for (std::size_t i = 0; i < table_len; ++i) {
        const double d = static_cast<double>(i) / kTableSteps;
        const double u = d / half_width;
        if (u >= 1.0) {
            kernel[i] = 0.0;
            continue;
        }
        const double x = std::numbers::pi * cutoff * d;
        const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
        kernel[i] = cutoff * sinc * bessel_i0(kBeta * std::sqrt(1.0 - u * u)) / i0_beta;
    }

    const auto n_in = static_cast<std::int64_t>(input.size());
    const std::int64_t n_out = (n_in * to_hz + from_hz / 2) / from_hz;
    std::vector<float> out(static_cast<std::size_t>(n_out));
    for (std::int64_t n = 0; n < n_out; ++n) {
        const double center = static_cast<double>(n * from_hz) / to_hz;
        const auto first = static_cast<std::int64_t>(std::ceil(center - half_width));
        const auto last = static_cast<std::int64_t>(std::floor(center + half_width));
        double acc = 0.0;
        for (std::int64_t k = std::max<std::int64_t>(first, 0); k <= std::min(last, n_in - 1); ++k) {
            const double pos = std::abs(center - static_cast<double>(k)) * kTableSteps;
            const auto i = static_cast<std::size_t>(pos);
            if (i + 1 >= table_len) continue;
            const double frac = pos - static_cast<double>(i);
            const double h = kernel[i] + (kernel[i + 1] - kernel[i]) * frac;
            acc += input[static_cast<std::size_t>(k)] * h;
        }
        out[static_cast<std::size_t>(n)] = static_cast<float>(std::clamp(acc, -1.0, 1.0));
    }
    return out;
}

double db_to_linear(double db) { return std::pow(10.0, db / 20.0); }

}  // namespace podforge
