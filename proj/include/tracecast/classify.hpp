#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "tracecast/features.hpp"
#include "tracecast/rnn.hpp"
#include "tracecast/synth.hpp"

namespace tracecast::classify {

struct LabeledWindow {
    FeatureMatrix window;
    AppKind app;
    std::size_t start = 0;  // interval index of the window's first column
};

struct ClassReport {
    FeatureSetId feature_set = FeatureSetId::FS1;
    double decision_interval_s = 0.0;
    double accuracy = 0.0;
    std::vector<std::string> labels;
    std::vector<double> per_class_recall;
    std::vector<std::vector<std::uint64_t>> confusion;  // [true][predicted]
};

rnn::GruNetwork train_classifier(const std::vector<LabeledWindow>& data,
                                 const FeatureSet& fs,
                                 const rnn::TrainConfig& config,
                                 std::size_t hidden_size = 100);

struct Classification {
    std::size_t index = 0;
    std::string label;
    Vec probabilities;
};

// Argmax of softmax probabilities; ties resolve to the lowest class index.
Classification classify_window(const rnn::GruNetwork& net,
                               const FeatureMatrix& window);

// Windows covering decision_interval/tau intervals of one true label are
// merged into a single decision by summed log-probabilities; a trailing
// shorter run still yields a decision.
ClassReport evaluate_classifier(const rnn::GruNetwork& net,
                                const std::vector<LabeledWindow>& test,
                                double decision_interval_s, FeatureSetId fs_id);

nlohmann::json report_to_json(const ClassReport& report);

}  // namespace tracecast::classify
