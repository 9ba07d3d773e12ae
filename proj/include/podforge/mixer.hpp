#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "podforge/audio.hpp"
#include "podforge/audio_plan.hpp"

namespace podforge {

struct Placement {
    int clip_ref = -1;  // audio script item index
    std::int64_t start_sample = 0;
    std::int64_t length = 0;  // samples; background clips are trimmed or looped to this
    double gain_db = 0.0;
    Layer layer = Layer::Foreground;

    bool operator==(const Placement&) const = default;
};

struct Timeline {
    std::vector<Placement> placements;
    std::int64_t total_samples = 0;
    int sample_rate_hz = 24000;

    bool operator==(const Timeline&) const = default;
};

using ClipMap = std::map<int, AudioClip>;

inline constexpr int kDefaultGapMs = 300;
inline constexpr double kLoopCrossfadeMs = 10.0;

/// Speech back to back with gap_ms of silence between lines; each background
/// item runs from the start of its first line to the end of its last line.
Timeline layout(const AudioScript& audio_script, const ClipMap& clips, int gap_ms = kDefaultGapMs,
                int sample_rate_hz = 24000);

/// Throws InvariantError on negative starts, overlapping or unordered
/// foreground, or a total that is not the furthest placement end.
void validate_timeline(const Timeline& timeline);

/// Source sample for position i of a placement `length` long: plain copy when
/// the clip is long enough, otherwise a loop with a linear crossfade.
double placed_sample(const AudioClip& clip, std::int64_t i, std::int64_t length, int sample_rate_hz);

/// Gain-scaled sum of all placements before limiting. Linear in the
/// placement set.
std::vector<double> mix_samples(const Timeline& timeline, const ClipMap& clips);

struct RenderResult {
    AudioClip audio;
    bool limited = false;  // the soft limiter ran
    double peak = 0.0;     // before limiting
};

/// Soft knee used on overflow: identity up to 0.5, tanh above, never
/// reaching 1.
double soft_limit(double x);

RenderResult render(const Timeline& timeline, const ClipMap& clips);

void to_json(nlohmann::json& j, const Placement& p);
void from_json(const nlohmann::json& j, Placement& p);
void to_json(nlohmann::json& j, const Timeline& t);
void from_json(const nlohmann::json& j, Timeline& t);

}  // namespace podforge
