#pragma once

#include <iosfwd>
#include <vector>

#include "tracecast/types.hpp"

namespace tracecast {

// Reads the header-less trace-CSV format:
//   timestamp_s,direction,length_bytes,protocol
// with direction in {UL,DL} and protocol in {TCP,UDP,QUIC,OTHER}.
// Rows may arrive in any time order; the result is stably sorted by
// timestamp. Malformed rows raise ParseError carrying the line number.
// An empty stream yields an empty list.
std::vector<PacketRecord> parse_trace(std::istream& source);

// Writes records in trace-CSV form. Timestamps are printed in shortest
// round-trip form, so parse_trace(write_trace(x)) == x bit-exactly.
void write_trace(const std::vector<PacketRecord>& records, std::ostream& out);

// Bins sorted records into ceil(horizon/tau) intervals of length tau.
// A packet exactly on a boundary belongs to the later interval. Packets at or
// past the horizon are dropped. Empty intervals are present with all-zero
// features.
std::vector<IntervalFeatures> bin_intervals(
    const std::vector<PacketRecord>& records, double tau, double horizon);

// Merges each group of k consecutive intervals (last group may be partial),
// re-deriving the ratio. Equals re-binning the same records at k*tau.
std::vector<IntervalFeatures> aggregate_intervals(
    const std::vector<IntervalFeatures>& intervals, std::size_t k);

}  // namespace tracecast
