#pragma once

#include <cstdint>
#include <vector>

#include "tracecast/features.hpp"
#include "tracecast/rnn.hpp"

namespace tracecast::burst {

struct BurstConfig {
    double burst_threshold = 0.0;
    double decision_threshold = 0.5;
};

struct BurstReport {
    double theta = 0.0;
    double recall_burst = 0.0;     // NaN when no burst intervals exist
    double recall_nonburst = 0.0;  // NaN when no non-burst intervals exist
    double accuracy = 0.0;
    double prevalence = 0.0;
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// Label 1 iff count strictly exceeds the threshold.
std::vector<std::uint8_t> label_bursts(const std::vector<double>& series,
                                       double burst_threshold);

// Prediction at t repeats the label at t-1; the first interval is non-burst.
std::vector<std::uint8_t> persistence_burst_baseline(
    const std::vector<std::uint8_t>& labels);

BurstReport score_decisions(const std::vector<std::uint8_t>& predicted,
                            const std::vector<std::uint8_t>& labels,
                            double theta);

struct BurstPrediction {
    double probability = 0.0;
    bool is_burst = false;
};

// Normalizes the trailing window internally; decision is probability >= theta.
BurstPrediction predict_burst(const rnn::GruNetwork& net,
                              const FeatureMatrix& recent, double theta);

struct SweepResult {
    std::vector<BurstReport> curve;
    double crossover = 0.0;  // theta minimizing |recall_burst - recall_nonburst|
};

SweepResult sweep_thresholds(const std::vector<double>& probabilities,
                             const std::vector<std::uint8_t>& labels,
                             const std::vector<double>& grid);

void write_sweep_csv(const SweepResult& sweep, std::ostream& out);

}  // namespace tracecast::burst
