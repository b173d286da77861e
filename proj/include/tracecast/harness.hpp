#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "tracecast/arima.hpp"
#include "tracecast/burst.hpp"
#include "tracecast/classify.hpp"
#include "tracecast/features.hpp"
#include "tracecast/ingest.hpp"
#include "tracecast/rnn.hpp"
#include "tracecast/synth.hpp"

namespace tracecast::harness {

double rmse(const std::vector<double>& predicted,
            const std::vector<double>& actual);

enum class Method { Persistence, ArimaOptimized, ArimaFixed, Rnn };
enum class Target { UlCount, DlCount, TotalCount };

std::string_view to_string(Method m);
bool method_from_string(std::string_view s, Method& out);
std::string_view to_string(Target t);
bool target_from_string(std::string_view s, Target& out);

struct ExperimentConfig {
    // Trace source: a packet CSV path, or when empty a generated single-app
    // trace from (synth_app, synth_seed, synth_duration_s). Duration 0 derives
    // the shortest span the run lengths below require.
    std::string trace_file;
    AppKind synth_app = AppKind::Surfing;
    std::uint64_t synth_seed = 1;
    double synth_duration_s = 0.0;

    double tau = 10.0;
    FeatureSetId feature_set = FeatureSetId::FS5;
    Target target = Target::UlCount;
    Method method = Method::Persistence;
    arima::ArimaOrder arima_order{1, 0, 0};

    std::size_t train_length = 4000;
    std::size_t test_length = 2000;
    std::size_t n_runs = 37;
    std::size_t horizon = 1;
    // Forecast origins are drawn from [origin_floor, N - test - horizon + 1);
    // 0 means train_length. Sweeps over train_length pin it to the largest
    // value so every setting is scored on identical test windows.
    std::size_t origin_floor = 0;
    std::uint64_t seed = 1;

    rnn::TrainConfig rnn_train;
    std::size_t rnn_hidden = 100;
    // Cap on windows fed to each RNN training run (0 = no cap); windows are
    // thinned at an even stride to keep desk-scale runtimes bounded.
    std::size_t max_train_windows = 0;
};

struct PreparedTrace {
    std::vector<IntervalFeatures> intervals;
    FeatureMatrix matrix;
    std::vector<double> target;
};

PreparedTrace prepare_trace(const ExperimentConfig& config);

struct RunResult {
    std::size_t origin = 0;
    double method_rmse = 0.0;
    double persistence_rmse = 0.0;
};

RunResult run_single(const ExperimentConfig& config, const PreparedTrace& trace,
                     std::size_t run_index);

struct EvalReport {
    ExperimentConfig config;
    std::vector<RunResult> runs;
    double mean_rmse = 0.0;
    double mean_persistence_rmse = 0.0;
    double relative_ratio = 0.0;
    double wall_time_s = 0.0;  // measured; kept out of the canonical JSON
};

EvalReport run_monte_carlo(const ExperimentConfig& config);
EvalReport run_monte_carlo(const ExperimentConfig& config,
                           const PreparedTrace& trace);

enum class SweepAxis { Tau, TrainLength, HorizonN, FeatureSet, Method };

std::string_view to_string(SweepAxis axis);
bool axis_from_string(std::string_view s, SweepAxis& out);

struct SweepRow {
    std::string value;
    EvalReport report;
};

std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepAxis axis,
                            const std::vector<std::string>& values);

void write_sweep_table_csv(SweepAxis axis, const std::vector<SweepRow>& rows,
                           std::ostream& out);

nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json report_to_json(const EvalReport& report);

// Burst experiment: one deterministic train/test split, an RNN probability
// forecaster over the test span, a theta sweep, and the label-persistence
// baseline on the same span.
struct BurstExperimentConfig {
    ExperimentConfig base;
    double burst_sd_multiple = 1.0;
    std::vector<double> theta_grid;  // empty = 0.01..0.99 step 0.01
};

struct BurstExperimentResult {
    double burst_threshold = 0.0;
    double prevalence = 0.0;
    burst::SweepResult sweep;
    burst::BurstReport crossover_report;
    burst::BurstReport persistence_report;
};

BurstExperimentResult run_burst_experiment(const BurstExperimentConfig& config);

// Classification experiment: a cyclic multi-app schedule, uniform-label
// windows, and k-fold evaluation over contiguous window blocks.
struct MixtureSpec {
    std::vector<AppKind> apps{AppKind::Surfing, AppKind::VideoCall,
                              AppKind::VoiceCall, AppKind::Streaming};
    double segment_s = 600.0;
    std::size_t cycles = 8;
    double tau = 10.0;
    std::uint64_t seed = 1;
};

std::vector<classify::LabeledWindow> mixture_windows(const MixtureSpec& spec,
                                                     const FeatureSet& fs,
                                                     std::size_t window_length);

struct ClassificationConfig {
    MixtureSpec mixture;
    FeatureSetId feature_set = FeatureSetId::FS5;
    rnn::TrainConfig rnn_train;
    std::size_t rnn_hidden = 100;
    std::size_t k_folds = 4;
    double decision_interval_s = 0.0;  // 0 = tau (per-window decisions)
    bool shuffle_labels = false;       // chance-level control
};

struct ClassificationResult {
    classify::ClassReport overall;  // fold confusions summed
    std::vector<classify::ClassReport> folds;
};

ClassificationResult run_classification(const ClassificationConfig& config);

}  // namespace tracecast::harness
