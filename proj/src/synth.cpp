#include "tracecast/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "tracecast/error.hpp"
#include "tracecast/rng.hpp"

namespace tracecast {

namespace {

constexpr int kSojournShape = 3;  // Erlang shape for on/off holding times

void validate_profile(const AppProfile& p) {
    if (!(p.ul_rate > 0.0) || !(p.dl_rate > 0.0)) {
        throw Error(ErrorKind::ArgumentError, "profile rates must be > 0");
    }
    if (!(p.mean_on_s > 0.0) || !(p.mean_off_s > 0.0)) {
        throw Error(ErrorKind::ArgumentError, "profile sojourn means must be > 0");
    }
    if (p.protocol_mix.size() != kProtocolCount) {
        throw Error(ErrorKind::ArgumentError, "protocol_mix must have 4 entries");
    }
    double total = 0.0;
    for (double v : p.protocol_mix) total += v;
    if (std::fabs(total - 1.0) > 1e-9) {
        throw Error(ErrorKind::ArgumentError, "protocol_mix must sum to 1");
    }
}

std::uint32_t sample_length(Rng& rng, const AppProfile& p) {
    // log-size normal centred so the median sits at mean_packet_bytes,
    // clamped to plausible IP packet sizes.
    const double raw = rng.lognormal(std::log(p.mean_packet_bytes), p.size_dispersion);
    const double clamped = std::min(1500.0, std::max(40.0, std::round(raw)));
    return static_cast<std::uint32_t>(clamped);
}

}  // namespace

std::string_view to_string(AppKind a) {
    switch (a) {
        case AppKind::Surfing: return "Surfing";
        case AppKind::VideoCall: return "VideoCall";
        case AppKind::VoiceCall: return "VoiceCall";
        case AppKind::Streaming: return "Streaming";
        case AppKind::Background: return "Background";
    }
    return "Background";
}

bool app_from_string(std::string_view s, AppKind& out) {
    if (s == "Surfing") { out = AppKind::Surfing; return true; }
    if (s == "VideoCall") { out = AppKind::VideoCall; return true; }
    if (s == "VoiceCall") { out = AppKind::VoiceCall; return true; }
    if (s == "Streaming") { out = AppKind::Streaming; return true; }
    if (s == "Background") { out = AppKind::Background; return true; }
    return false;
}

const std::vector<AppProfile>& default_profiles() {
    static const std::vector<AppProfile> profiles = {
        {AppKind::Surfing, 6.0, 30.0, 30.0, 60.0, 600.0, 0.8,
         {0.85, 0.05, 0.08, 0.02}},
        {AppKind::VideoCall, 25.0, 55.0, 300.0, 120.0, 900.0, 0.3,
         {0.10, 0.80, 0.05, 0.05}},
        {AppKind::VoiceCall, 25.0, 25.0, 300.0, 120.0, 180.0, 0.2,
         {0.05, 0.90, 0.02, 0.03}},
        {AppKind::Streaming, 2.0, 60.0, 240.0, 30.0, 1100.0, 0.4,
         {0.35, 0.10, 0.50, 0.05}},
        {AppKind::Background, 1.0, 1.5, 5.0, 120.0, 300.0, 0.5,
         {0.60, 0.20, 0.10, 0.10}},
    };
    return profiles;
}

const AppProfile& profile_for(AppKind app) {
    for (const AppProfile& p : default_profiles()) {
        if (p.app == app) return p;
    }
    throw Error(ErrorKind::ArgumentError, "no built-in profile for app");
}

std::vector<PacketRecord> generate(const AppProfile& profile, double duration_s,
                                   std::uint64_t seed) {
    if (!(duration_s > 0.0)) {
        throw Error(ErrorKind::ArgumentError, "generate: duration must be > 0");
    }
    validate_profile(profile);

    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(profile.app)));

    std::vector<PacketRecord> records;
    records.reserve(static_cast<std::size_t>(
        duration_s * (profile.ul_rate + profile.dl_rate) *
            profile.mean_on_s / (profile.mean_on_s + profile.mean_off_s) +
        64));

    const double duty_on =
        profile.mean_on_s / (profile.mean_on_s + profile.mean_off_s);
    bool on = rng.uniform01() < duty_on;

    double t = 0.0;
    while (t < duration_s) {
        const double sojourn =
            rng.erlang(kSojournShape, on ? profile.mean_on_s : profile.mean_off_s);
        const double stop = std::min(t + sojourn, duration_s);
        if (on) {
            // Two independent Poisson streams over [t, stop).
            for (int dir = 0; dir < 2; ++dir) {
                const double rate = dir == 0 ? profile.ul_rate : profile.dl_rate;
                double at = t + rng.exponential(1.0 / rate);
                while (at < stop) {
                    PacketRecord rec;
                    rec.timestamp = at;
                    rec.direction = dir == 0 ? Direction::UL : Direction::DL;
                    rec.length = sample_length(rng, profile);
                    rec.protocol =
                        static_cast<Protocol>(rng.pick(profile.protocol_mix));
                    records.push_back(rec);
                    at += rng.exponential(1.0 / rate);
                }
            }
        }
        t += sojourn;
        on = !on;
    }

    std::stable_sort(records.begin(), records.end(),
                     [](const PacketRecord& a, const PacketRecord& b) {
                         return a.timestamp < b.timestamp;
                     });
    return records;
}

MixtureTrace generate_mixture(const std::vector<ScheduleSegment>& schedule,
                              double tau, std::uint64_t seed) {
    if (!(tau > 0.0)) {
        throw Error(ErrorKind::ArgumentError, "generate_mixture: tau must be > 0");
    }
    std::vector<ScheduleSegment> ordered = schedule;
    std::sort(ordered.begin(), ordered.end(),
              [](const ScheduleSegment& a, const ScheduleSegment& b) {
                  return a.start_s < b.start_s;
              });
    double horizon = 0.0;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        const ScheduleSegment& seg = ordered[i];
        if (!(seg.end_s > seg.start_s) || seg.start_s < 0.0) {
            throw Error(ErrorKind::ArgumentError,
                        "generate_mixture: segment must satisfy 0 <= start < end");
        }
        if (i > 0 && seg.start_s < ordered[i - 1].end_s) {
            throw Error(ErrorKind::ArgumentError,
                        "generate_mixture: segments overlap");
        }
        horizon = std::max(horizon, seg.end_s);
    }

    MixtureTrace out;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        const ScheduleSegment& seg = ordered[i];
        std::vector<PacketRecord> part =
            generate(seg.profile, seg.end_s - seg.start_s, mix_seed(seed, i + 1));
        for (PacketRecord& rec : part) {
            rec.timestamp += seg.start_s;
            out.records.push_back(rec);
        }
    }
    std::stable_sort(out.records.begin(), out.records.end(),
                     [](const PacketRecord& a, const PacketRecord& b) {
                         return a.timestamp < b.timestamp;
                     });

    const auto n_intervals = static_cast<std::size_t>(std::ceil(horizon / tau));
    for (std::size_t k = 0; k < n_intervals; ++k) {
        const double lo = static_cast<double>(k) * tau;
        const double hi = lo + tau;
        double best_overlap = 0.0;
        AppKind best = AppKind::Background;
        for (const ScheduleSegment& seg : ordered) {
            const double overlap =
                std::min(hi, seg.end_s) - std::max(lo, seg.start_s);
            if (overlap > best_overlap) {
                best_overlap = overlap;
                best = seg.profile.app;
            }
        }
        if (best_overlap > 0.0) out.labels.push_back({k, best});
    }
    return out;
}

void write_labels(const std::vector<LabeledInterval>& labels, std::ostream& out) {
    for (const LabeledInterval& l : labels) {
        out << l.index << ',' << to_string(l.app) << '\n';
    }
}

std::vector<LabeledInterval> parse_labels(std::istream& in) {
    std::vector<LabeledInterval> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw ParseError(lineno, "expected `interval_index,app`");
        }
        LabeledInterval l;
        const auto [ptr, ec] =
            std::from_chars(line.data(), line.data() + comma, l.index);
        if (ec != std::errc() || ptr != line.data() + comma) {
            throw ParseError(lineno, "bad interval index");
        }
        if (!app_from_string(std::string_view(line).substr(comma + 1), l.app)) {
            throw ParseError(lineno, "unknown app label");
        }
        labels.push_back(l);
    }
    return labels;
}

namespace {

nlohmann::json profile_to_json(const AppProfile& p) {
    return nlohmann::json{
        {"app", to_string(p.app)},
        {"ul_rate_pps", p.ul_rate},
        {"dl_rate_pps", p.dl_rate},
        {"mean_on_s", p.mean_on_s},
        {"mean_off_s", p.mean_off_s},
        {"mean_packet_bytes", p.mean_packet_bytes},
        {"size_dispersion", p.size_dispersion},
        {"protocol_mix",
         {{"TCP", p.protocol_mix[0]},
          {"UDP", p.protocol_mix[1]},
          {"QUIC", p.protocol_mix[2]},
          {"OTHER", p.protocol_mix[3]}}},
    };
}

AppProfile profile_from_json(const nlohmann::json& j) {
    AppProfile p;
    if (!app_from_string(j.at("app").get<std::string>(), p.app)) {
        throw Error(ErrorKind::ParseError, "unknown app in profile json");
    }
    p.ul_rate = j.at("ul_rate_pps").get<double>();
    p.dl_rate = j.at("dl_rate_pps").get<double>();
    p.mean_on_s = j.at("mean_on_s").get<double>();
    p.mean_off_s = j.at("mean_off_s").get<double>();
    p.mean_packet_bytes = j.at("mean_packet_bytes").get<double>();
    p.size_dispersion = j.at("size_dispersion").get<double>();
    const auto& mix = j.at("protocol_mix");
    p.protocol_mix = {mix.at("TCP").get<double>(), mix.at("UDP").get<double>(),
                      mix.at("QUIC").get<double>(), mix.at("OTHER").get<double>()};
    validate_profile(p);
    return p;
}

}  // namespace

std::string profiles_to_json(const std::vector<AppProfile>& profiles) {
    nlohmann::json arr = nlohmann::json::array();
    for (const AppProfile& p : profiles) arr.push_back(profile_to_json(p));
    return nlohmann::json{{"profiles", arr}}.dump(2) + "\n";
}

std::vector<AppProfile> profiles_from_json(const std::string& text) {
    const nlohmann::json doc = nlohmann::json::parse(text);
    std::vector<AppProfile> out;
    for (const auto& j : doc.at("profiles")) out.push_back(profile_from_json(j));
    return out;
}

}  // namespace tracecast
