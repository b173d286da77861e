#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tracecast/types.hpp"

namespace tracecast {

enum class AppKind : std::uint8_t { Surfing, VideoCall, VoiceCall, Streaming, Background };

inline constexpr std::size_t kAppCount = 5;

std::string_view to_string(AppKind a);
bool app_from_string(std::string_view s, AppKind& out);

// A two-state (on/off) modulated Poisson source. While on, UL and DL packets
// arrive as independent Poisson streams; while off the source is silent.
// Sojourn times in each state are Erlang-3 with the configured means, which
// keeps duty cycles predictable without the memorylessness of pure
// exponential holding times.
struct AppProfile {
    AppKind app = AppKind::Background;
    double ul_rate = 1.0;     // UL packets/s while on, > 0
    double dl_rate = 1.0;     // DL packets/s while on, > 0
    double mean_on_s = 10.0;  // mean on-state duration
    double mean_off_s = 10.0; // mean off-state duration
    double mean_packet_bytes = 500.0;
    double size_dispersion = 0.5;  // sigma of the underlying log-size normal
    std::vector<double> protocol_mix =
        std::vector<double>(kProtocolCount, 1.0 / kProtocolCount);
};

// The five shipped profiles (also mirrored in data/profiles.json).
// VideoCall and VoiceCall intentionally share their UL statistics and differ
// only downlink, so single-feature UL models cannot separate them.
const std::vector<AppProfile>& default_profiles();
const AppProfile& profile_for(AppKind app);

// Deterministic for a fixed (profile, seed). Timestamps lie strictly inside
// [0, duration) and the result is sorted.
std::vector<PacketRecord> generate(const AppProfile& profile, double duration_s,
                                   std::uint64_t seed);

struct ScheduleSegment {
    AppProfile profile;
    double start_s = 0.0;
    double end_s = 0.0;
};

struct LabeledInterval {
    std::size_t index = 0;
    AppKind app = AppKind::Background;
};

struct MixtureTrace {
    std::vector<PacketRecord> records;
    std::vector<LabeledInterval> labels;  // one per interval overlapping a segment
};

// Generates each (non-overlapping) segment independently and merges the
// result. Interval labels at granularity tau follow the segment covering the
// majority of the interval; intervals touching no segment carry no label.
MixtureTrace generate_mixture(const std::vector<ScheduleSegment>& schedule,
                              double tau, std::uint64_t seed);

// labels-CSV: `interval_index,app`
void write_labels(const std::vector<LabeledInterval>& labels, std::ostream& out);
std::vector<LabeledInterval> parse_labels(std::istream& in);

std::string profiles_to_json(const std::vector<AppProfile>& profiles);
std::vector<AppProfile> profiles_from_json(const std::string& text);

}  // namespace tracecast
