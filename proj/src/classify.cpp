#include "tracecast/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "tracecast/error.hpp"

namespace tracecast::classify {

namespace {

std::vector<AppKind> distinct_apps(const std::vector<LabeledWindow>& data) {
    std::set<AppKind> seen;
    for (const LabeledWindow& lw : data) seen.insert(lw.app);
    return {seen.begin(), seen.end()};
}

std::size_t class_index(const rnn::GruNetwork& net, AppKind app) {
    const std::string name(tracecast::to_string(app));
    for (std::size_t i = 0; i < net.output_labels.size(); ++i) {
        if (net.output_labels[i] == name) return i;
    }
    throw Error(ErrorKind::ArgumentError,
                "classify: label '" + name + "' unknown to the network");
}

}  // namespace

rnn::GruNetwork train_classifier(const std::vector<LabeledWindow>& data,
                                 const FeatureSet& fs,
                                 const rnn::TrainConfig& config,
                                 std::size_t hidden_size) {
    if (data.empty()) {
        throw Error(ErrorKind::ArgumentError, "train_classifier: no windows");
    }
    const std::size_t rows = fs.row_count();
    for (const LabeledWindow& lw : data) {
        if (lw.window.rows != rows) {
            throw Error(ErrorKind::ArgumentError,
                        "train_classifier: window rows do not match feature set");
        }
    }
    const std::vector<AppKind> apps = distinct_apps(data);
    if (apps.size() < 2) {
        throw Error(ErrorKind::ArgumentError,
                    "train_classifier: need at least 2 classes");
    }

    // Population statistics over every training window column.
    FeatureMatrix stacked;
    stacked.rows = rows;
    stacked.cols = 0;
    stacked.tau = data.front().window.tau;
    for (const LabeledWindow& lw : data) {
        stacked.data.insert(stacked.data.end(), lw.window.data.begin(),
                            lw.window.data.end());
        stacked.cols += lw.window.cols;
    }
    const Normalizer norm = Normalizer::fit(stacked, 0, stacked.cols);

    rnn::GruNetwork net =
        rnn::make_network(rows, hidden_size, apps.size(), rnn::HeadKind::Softmax,
                          config.window_length, config.seed);
    net.normalizer = norm;
    net.input_feature_names = fs.row_names();
    for (AppKind app : apps) {
        net.output_labels.emplace_back(tracecast::to_string(app));
    }

    std::vector<rnn::Sample> samples;
    samples.reserve(data.size());
    for (const LabeledWindow& lw : data) {
        rnn::Sample s;
        s.window = norm.transform(lw.window);
        s.target.assign(apps.size(), 0.0);
        s.target[class_index(net, lw.app)] = 1.0;
        samples.push_back(std::move(s));
    }
    rnn::train(net, samples, config);
    return net;
}

Classification classify_window(const rnn::GruNetwork& net,
                               const FeatureMatrix& window) {
    if (net.head != rnn::HeadKind::Softmax) {
        throw Error(ErrorKind::ContractViolation,
                    "classify_window: needs a softmax head");
    }
    if (window.rows != net.input_size) {
        throw Error(ErrorKind::ArgumentError,
                    "classify_window: feature row mismatch");
    }
    Classification result;
    result.probabilities =
        rnn::forward_sequence(net, net.normalizer.transform(window));
    result.index = static_cast<std::size_t>(
        std::max_element(result.probabilities.begin(),
                         result.probabilities.end()) -
        result.probabilities.begin());
    result.label = net.output_labels[result.index];
    return result;
}

ClassReport evaluate_classifier(const rnn::GruNetwork& net,
                                const std::vector<LabeledWindow>& test,
                                double decision_interval_s, FeatureSetId fs_id) {
    if (test.empty()) {
        throw Error(ErrorKind::ArgumentError, "evaluate_classifier: no test data");
    }
    const double tau = test.front().window.tau;
    if (tau <= 0.0 || decision_interval_s <= 0.0) {
        throw Error(ErrorKind::ArgumentError,
                    "evaluate_classifier: non-positive interval");
    }
    const double ratio = decision_interval_s / tau;
    const auto j = static_cast<std::size_t>(std::llround(ratio));
    if (j == 0 || std::fabs(ratio - static_cast<double>(j)) > 1e-9) {
        throw Error(ErrorKind::ArgumentError,
                    "evaluate_classifier: decision interval must be a multiple of tau");
    }

    const std::size_t k = net.output_labels.size();
    ClassReport report;
    report.feature_set = fs_id;
    report.decision_interval_s = decision_interval_s;
    report.labels = net.output_labels;
    report.confusion.assign(k, std::vector<std::uint64_t>(k, 0));

    std::size_t pos = 0;
    while (pos < test.size()) {
        const AppKind app = test[pos].app;
        std::size_t stop = pos;
        while (stop < test.size() && stop - pos < j && test[stop].app == app) {
            ++stop;
        }
        Vec evidence(k, 0.0);
        for (std::size_t i = pos; i < stop; ++i) {
            const Classification c = classify_window(net, test[i].window);
            for (std::size_t cls = 0; cls < k; ++cls) {
                evidence[cls] += std::log(std::max(c.probabilities[cls], 1e-300));
            }
        }
        const auto pred = static_cast<std::size_t>(
            std::max_element(evidence.begin(), evidence.end()) - evidence.begin());
        ++report.confusion[class_index(net, app)][pred];
        pos = stop;
    }

    std::uint64_t total = 0;
    std::uint64_t correct = 0;
    report.per_class_recall.assign(k, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t row = 0; row < k; ++row) {
        std::uint64_t support = 0;
        for (std::size_t col = 0; col < k; ++col) support += report.confusion[row][col];
        total += support;
        correct += report.confusion[row][row];
        if (support > 0) {
            report.per_class_recall[row] =
                static_cast<double>(report.confusion[row][row]) /
                static_cast<double>(support);
        }
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    return report;
}

nlohmann::json report_to_json(const ClassReport& report) {
    nlohmann::json per_class = nlohmann::json::object();
    for (std::size_t i = 0; i < report.labels.size(); ++i) {
        per_class[report.labels[i]] = report.per_class_recall[i];
    }
    return nlohmann::json{
        {"feature_set", std::string(to_string(report.feature_set))},
        {"decision_interval_s", report.decision_interval_s},
        {"accuracy", report.accuracy},
        {"per_class", per_class},
        {"confusion", report.confusion},
    };
}

}  // namespace tracecast::classify
