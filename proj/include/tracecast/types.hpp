#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace tracecast {

enum class Direction : std::uint8_t { UL, DL };

// Closed protocol vocabulary; keeps feature vectors fixed-width.
enum class Protocol : std::uint8_t { TCP, UDP, QUIC, OTHER };

inline constexpr std::size_t kProtocolCount = 4;

std::string_view to_string(Direction d);
std::string_view to_string(Protocol p);
bool direction_from_string(std::string_view s, Direction& out);
bool protocol_from_string(std::string_view s, Protocol& out);

// One captured packet. Traces hold these sorted non-decreasing by timestamp.
struct PacketRecord {
    double timestamp = 0.0;  // seconds since trace start, >= 0
    Direction direction = Direction::UL;
    std::uint32_t length = 0;  // bytes, >= 1
    Protocol protocol = Protocol::OTHER;

    bool operator==(const PacketRecord&) const = default;
};

// Aggregated features for one tau-length interval [index*tau, (index+1)*tau).
struct IntervalFeatures {
    std::size_t index = 0;
    std::uint64_t ul_count = 0;
    std::uint64_t dl_count = 0;
    std::uint64_t ul_bytes = 0;
    std::uint64_t dl_bytes = 0;
    double ul_dl_ratio = 0.0;  // ul_count / max(dl_count, 1)
    std::array<std::uint64_t, kProtocolCount> protocol_counts{};

    std::uint64_t total_count() const { return ul_count + dl_count; }

    bool operator==(const IntervalFeatures&) const = default;
};

}  // namespace tracecast
