#include "tracecast/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "tracecast/error.hpp"

namespace tracecast {

std::string_view to_string(Direction d) {
    return d == Direction::UL ? "UL" : "DL";
}

std::string_view to_string(Protocol p) {
    switch (p) {
        case Protocol::TCP: return "TCP";
        case Protocol::UDP: return "UDP";
        case Protocol::QUIC: return "QUIC";
        case Protocol::OTHER: return "OTHER";
    }
    return "OTHER";
}

bool direction_from_string(std::string_view s, Direction& out) {
    if (s == "UL") { out = Direction::UL; return true; }
    if (s == "DL") { out = Direction::DL; return true; }
    return false;
}

bool protocol_from_string(std::string_view s, Protocol& out) {
    if (s == "TCP") { out = Protocol::TCP; return true; }
    if (s == "UDP") { out = Protocol::UDP; return true; }
    if (s == "QUIC") { out = Protocol::QUIC; return true; }
    if (s == "OTHER") { out = Protocol::OTHER; return true; }
    return false;
}

namespace {

std::array<std::string_view, 4> split_row(std::string_view line, std::size_t lineno) {
    std::array<std::string_view, 4> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            throw ParseError(lineno, "expected 4 comma-separated fields");
        }
        fields[i] = line.substr(start, comma - start);
        start = comma + 1;
    }
    if (line.find(',', start) != std::string_view::npos) {
        throw ParseError(lineno, "expected 4 comma-separated fields");
    }
    fields[3] = line.substr(start);
    return fields;
}

double parse_timestamp(std::string_view s, std::size_t lineno) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
        throw ParseError(lineno, "bad timestamp '" + std::string(s) + "'");
    }
    if (value < 0.0) {
        throw ParseError(lineno, "negative timestamp");
    }
    return value;
}

std::uint32_t parse_length(std::string_view s, std::size_t lineno) {
    std::uint32_t value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError(lineno, "bad length '" + std::string(s) + "'");
    }
    if (value == 0) {
        throw ParseError(lineno, "length must be >= 1");
    }
    return value;
}

}  // namespace

std::vector<PacketRecord> parse_trace(std::istream& source) {
    std::vector<PacketRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(source, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const auto fields = split_row(line, lineno);
        PacketRecord rec;
        rec.timestamp = parse_timestamp(fields[0], lineno);
        if (!direction_from_string(fields[1], rec.direction)) {
            throw ParseError(lineno, "unknown direction '" + std::string(fields[1]) + "'");
        }
        rec.length = parse_length(fields[2], lineno);
        if (!protocol_from_string(fields[3], rec.protocol)) {
            throw ParseError(lineno, "unknown protocol '" + std::string(fields[3]) + "'");
        }
        records.push_back(rec);
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const PacketRecord& a, const PacketRecord& b) {
                         return a.timestamp < b.timestamp;
                     });
    return records;
}

void write_trace(const std::vector<PacketRecord>& records, std::ostream& out) {
    char buf[64];
    for (const PacketRecord& rec : records) {
        const auto r = std::to_chars(buf, buf + sizeof(buf), rec.timestamp);
        out.write(buf, r.ptr - buf);
        out << ',' << to_string(rec.direction) << ',' << rec.length << ','
            << to_string(rec.protocol) << '\n';
    }
}

std::vector<IntervalFeatures> bin_intervals(
    const std::vector<PacketRecord>& records, double tau, double horizon) {
    if (!(tau > 0.0)) {
        throw Error(ErrorKind::ArgumentError, "bin_intervals: tau must be > 0");
    }
    if (!(horizon > 0.0)) {
        throw Error(ErrorKind::ArgumentError, "bin_intervals: horizon must be > 0");
    }

    const std::size_t count = static_cast<std::size_t>(std::ceil(horizon / tau));
    std::vector<IntervalFeatures> intervals(count);
    for (std::size_t i = 0; i < count; ++i) intervals[i].index = i;

    for (const PacketRecord& rec : records) {
        if (rec.timestamp >= horizon) continue;
        auto k = static_cast<std::ptrdiff_t>(std::floor(rec.timestamp / tau));
        // floor(ts/tau) can land one off under floating division; nudge until
        // ts sits in [k*tau, (k+1)*tau).
        while (rec.timestamp >= static_cast<double>(k + 1) * tau) ++k;
        while (k > 0 && rec.timestamp < static_cast<double>(k) * tau) --k;
        if (k < 0 || static_cast<std::size_t>(k) >= count) continue;

        IntervalFeatures& iv = intervals[static_cast<std::size_t>(k)];
        if (rec.direction == Direction::UL) {
            iv.ul_count += 1;
            iv.ul_bytes += rec.length;
        } else {
            iv.dl_count += 1;
            iv.dl_bytes += rec.length;
        }
        iv.protocol_counts[static_cast<std::size_t>(rec.protocol)] += 1;
    }

    for (IntervalFeatures& iv : intervals) {
        iv.ul_dl_ratio = static_cast<double>(iv.ul_count) /
                         static_cast<double>(std::max<std::uint64_t>(iv.dl_count, 1));
    }
    return intervals;
}

std::vector<IntervalFeatures> aggregate_intervals(
    const std::vector<IntervalFeatures>& intervals, std::size_t k) {
    if (k == 0) {
        throw Error(ErrorKind::ArgumentError, "aggregate_intervals: k must be >= 1");
    }
    std::vector<IntervalFeatures> out((intervals.size() + k - 1) / k);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].index = i;

    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const IntervalFeatures& src = intervals[i];
        IntervalFeatures& dst = out[i / k];
        dst.ul_count += src.ul_count;
        dst.dl_count += src.dl_count;
        dst.ul_bytes += src.ul_bytes;
        dst.dl_bytes += src.dl_bytes;
        for (std::size_t p = 0; p < kProtocolCount; ++p)
            dst.protocol_counts[p] += src.protocol_counts[p];
    }
    for (IntervalFeatures& iv : out) {
        iv.ul_dl_ratio = static_cast<double>(iv.ul_count) /
                         static_cast<double>(std::max<std::uint64_t>(iv.dl_count, 1));
    }
    return out;
}

}  // namespace tracecast
