#include "podforge/mixer.hpp"

#include <algorithm>
#include <cmath>

#include "podforge/errors.hpp"

namespace podforge {

namespace {

const AudioClip& clip_for(const ClipMap& clips, int ref, int rate) {
    const auto it = clips.find(ref);
    if (it == clips.end()) throw MissingClipError("no clip for item " + std::to_string(ref));
    if (it->second.sample_rate_hz != rate) {
        throw RateMismatchError("clip for item " + std::to_string(ref) + " is at " +
                                std::to_string(it->second.sample_rate_hz) + " Hz, pipeline is " +
                                std::to_string(rate) + " Hz");
    }
    if (it->second.samples.empty()) throw MissingClipError("clip for item " + std::to_string(ref) + " is empty");
    return it->second;
}

constexpr double kKnee = 0.5;

}  // namespace

Timeline layout(const AudioScript& audio_script, const ClipMap& clips, int gap_ms, int sample_rate_hz) {
    if (gap_ms < 0) throw PreconditionError("gap_ms must be >= 0");
    const std::int64_t gap = std::llround(static_cast<double>(gap_ms) * sample_rate_hz / 1000.0);
    Timeline t;
    t.sample_rate_hz = sample_rate_hz;
    std::vector<std::int64_t> line_start;
    std::vector<std::int64_t> line_end;
    std::int64_t cursor = 0;
    for (std::size_t i = 0; i < audio_script.items.size(); ++i) {
        const auto& item = audio_script.items[i];
        if (item.layer != Layer::Foreground) continue;
        const int ref = static_cast<int>(i);
        const auto& clip = clip_for(clips, ref, sample_rate_hz);
        if (!line_start.empty()) cursor += gap;
        const auto len = static_cast<std::int64_t>(clip.samples.size());
        t.placements.push_back({ref, cursor, len, item.gain_db, Layer::Foreground});
        line_start.push_back(cursor);
        line_end.push_back(cursor + len);
        cursor += len;
    }
    t.total_samples = cursor;
    for (std::size_t i = 0; i < audio_script.items.size(); ++i) {
        const auto& item = audio_script.items[i];
        if (item.layer != Layer::Background) continue;
        const int ref = static_cast<int>(i);
        clip_for(clips, ref, sample_rate_hz);
        if (!item.span || item.span->start_line < 0 || item.span->start_line > item.span->end_line ||
            item.span->end_line >= static_cast<int>(line_start.size())) {
            throw ValidationError("background item " + std::to_string(i) + " has an invalid line span");
        }
        const std::int64_t start = line_start[static_cast<std::size_t>(item.span->start_line)];
        const std::int64_t end = line_end[static_cast<std::size_t>(item.span->end_line)];
        t.placements.push_back({ref, start, end - start, item.gain_db, Layer::Background});
    }
    return t;
}

void validate_timeline(const Timeline& timeline) {
    std::int64_t furthest = 0;
    std::int64_t fg_end = 0;
    for (const auto& p : timeline.placements) {
        if (p.start_sample < 0) throw InvariantError("placement starts before 0");
        if (p.length < 0) throw InvariantError("placement has negative length");
        if (p.layer == Layer::Foreground) {
            if (p.start_sample < fg_end) throw InvariantError("foreground placements overlap or are out of order");
            fg_end = p.start_sample + p.length;
        }
        furthest = std::max(furthest, p.start_sample + p.length);
    }
    if (timeline.total_samples != furthest) throw InvariantError("total_samples is not the furthest placement end");
}

double placed_sample(const AudioClip& clip, std::int64_t i, std::int64_t length, int sample_rate_hz) {
    const auto n = static_cast<std::int64_t>(clip.samples.size());
    if (n >= length) return clip.samples[static_cast<std::size_t>(i)];
    const std::int64_t xf = std::min<std::int64_t>(
        std::llround(kLoopCrossfadeMs * sample_rate_hz / 1000.0), n / 2);
    const std::int64_t period = n - xf;
    const std::int64_t k = i / period;
    const std::int64_t local = i % period;
    const double cur = clip.samples[static_cast<std::size_t>(local)];
    if (k == 0 || local >= xf) return cur;
    // Tail of the previous repetition fades out while this one fades in.
    const double a = static_cast<double>(local) / static_cast<double>(xf);
    const double prev = clip.samples[static_cast<std::size_t>(period + local)];
    return a * cur + (1.0 - a) * prev;
}

std::vector<double> mix_samples(const Timeline& timeline, const ClipMap& clips) {
    validate_timeline(timeline);
    std::vector<double> mix(static_cast<std::size_t>(timeline.total_samples), 0.0);
    for (const auto& p : timeline.placements) {
        const auto& clip = clip_for(clips, p.clip_ref, timeline.sample_rate_hz);
        const double g = db_to_linear(p.gain_db);
        const auto n = static_cast<std::int64_t>(clip.samples.size());
        for (std::int64_t i = 0; i < p.length; ++i) {
            const double s = p.layer == Layer::Foreground
                                 ? (i < n ? clip.samples[static_cast<std::size_t>(i)] : 0.0)
                                 : placed_sample(clip, i, p.length, timeline.sample_rate_hz);
            mix[static_cast<std::size_t>(p.start_sample + i)] += g * s;
        }
    }
    return mix;
}

double soft_limit(double x) {
    const double m = std::abs(x);
    if (m <= kKnee) return x;
    const double y = kKnee + (1.0 - kKnee) * std::tanh((m - kKnee) / (1.0 - kKnee));
    return std::copysign(y, x);
}

RenderResult render(const Timeline& timeline, const ClipMap& clips) {
    const auto mix = mix_samples(timeline, clips);
    RenderResult r;
    for (const double s : mix) r.peak = std::max(r.peak, std::abs(s));
    r.limited = r.peak > 1.0;
    r.audio.sample_rate_hz = timeline.sample_rate_hz;
    r.audio.samples.resize(mix.size());
    for (std::size_t i = 0; i < mix.size(); ++i) {
        r.audio.samples[i] = static_cast<float>(r.limited ? soft_limit(mix[i]) : mix[i]);
    }
    return r;
}

void to_json(nlohmann::json& j, const Placement& p) {
    j = {{"clip_ref", p.clip_ref},
         {"start_sample", p.start_sample},
         {"length", p.length},
         {"gain_db", p.gain_db},
         {"layer", to_string(p.layer)}};
}

void from_json(const nlohmann::json& j, Placement& p) {
    p.clip_ref = j.at("clip_ref").get<int>();
    p.start_sample = j.at("start_sample").get<std::int64_t>();
    p.length = j.at("length").get<std::int64_t>();
    p.gain_db = j.at("gain_db").get<double>();
    p.layer = j.at("layer").get<std::string>() == "Background" ? Layer::Background : Layer::Foreground;
}

void to_json(nlohmann::json& j, const Timeline& t) {
    j = {{"sample_rate_hz", t.sample_rate_hz}, {"total_samples", t.total_samples}, {"placements", t.placements}};
}

void from_json(const nlohmann::json& j, Timeline& t) {
    t.sample_rate_hz = j.at("sample_rate_hz").get<int>();
    t.total_samples = j.at("total_samples").get<std::int64_t>();
    t.placements = j.at("placements").get<std::vector<Placement>>();
}

}  // namespace podforge
