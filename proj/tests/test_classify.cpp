#include <cmath>
#include <vector>

#include "doctest.h"

#include "tracecast/classify.hpp"
#include "tracecast/error.hpp"
#include "tracecast/rng.hpp"

using namespace tracecast;
using namespace tracecast::classify;

namespace {

FeatureMatrix constant_window(std::size_t rows, std::size_t cols, double base,
                              Rng& rng) {
    FeatureMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.tau = 10.0;
    m.data.resize(rows * cols);
    for (auto& v : m.data) v = base + 0.1 * rng.normal();
    return m;
}

// Two cleanly separated classes on a two-feature window.
std::vector<LabeledWindow> separable_dataset(std::size_t per_class,
                                             std::size_t window,
                                             std::uint64_t seed) {
    Rng rng(seed);
    std::vector<LabeledWindow> out;
    for (std::size_t i = 0; i < per_class; ++i) {
        out.push_back({constant_window(2, window, 1.0, rng), AppKind::Surfing,
                       i * window});
        out.push_back({constant_window(2, window, 8.0, rng), AppKind::Streaming,
                       (per_class + i) * window});
    }
    return out;
}

rnn::TrainConfig quick_train(std::size_t window) {
    rnn::TrainConfig config;
    config.window_length = window;
    config.learning_rate = 5e-3;
    config.epochs = 40;
    config.batch_size = 8;
    config.seed = 5;
    return config;
}

}  // namespace

TEST_SUITE("classify") {

TEST_CASE("classifier separates well-separated classes") {
    const auto data = separable_dataset(40, 4, 9);
    const FeatureSet fs = feature_set(FeatureSetId::FS5);
    const rnn::GruNetwork net = train_classifier(data, fs, quick_train(4), 8);

    // Labels follow the app enum order, not lexicographic order.
    CHECK(net.output_labels == std::vector<std::string>{"Surfing", "Streaming"});
    CHECK(net.head == rnn::HeadKind::Softmax);
    CHECK(net.output_size == 2);

    std::size_t hits = 0;
    for (const auto& lw : data) {
        const Classification c = classify_window(net, lw.window);
        REQUIRE(c.probabilities.size() == 2);
        if (c.label == to_string(lw.app)) ++hits;
    }
    CHECK(hits == data.size());
}

TEST_CASE("label order follows the app enum regardless of input order") {
    Rng rng(15);
    std::vector<LabeledWindow> data;
    for (std::size_t i = 0; i < 12; ++i) {
        data.push_back({constant_window(1, 3, 5.0, rng), AppKind::VoiceCall, i});
        data.push_back({constant_window(1, 3, 1.0, rng), AppKind::Surfing, 100 + i});
        data.push_back({constant_window(1, 3, 9.0, rng), AppKind::VideoCall, 200 + i});
    }
    const rnn::GruNetwork net =
        train_classifier(data, feature_set(FeatureSetId::FS3), quick_train(3), 6);
    CHECK(net.output_labels ==
          std::vector<std::string>{"Surfing", "VideoCall", "VoiceCall"});
}

TEST_CASE("argmax ties resolve to the lowest class index") {
    rnn::GruNetwork net =
        rnn::make_network(1, 2, 3, rnn::HeadKind::Softmax, 2, 3);
    // Zero the output layer: every class gets probability 1/3.
    std::fill(net.fc_w.data.begin(), net.fc_w.data.end(), 0.0);
    std::fill(net.fc_b.begin(), net.fc_b.end(), 0.0);
    net.normalizer = Normalizer::from_parts({0.0}, {1.0});
    net.output_labels = {"a", "b", "c"};

    FeatureMatrix w;
    w.rows = 1;
    w.cols = 2;
    w.data = {0.5, -0.5};
    const Classification c = classify_window(net, w);
    CHECK(c.index == 0);
    CHECK(c.label == "a");
    CHECK(c.probabilities[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("decisions aggregate same-label runs in chunks") {
    const auto data = separable_dataset(30, 2, 33);
    const FeatureSet fs = feature_set(FeatureSetId::FS5);
    const rnn::GruNetwork net = train_classifier(data, fs, quick_train(2), 8);

    // tau = 10, decision interval 30 s -> chunks of 3 windows.
    // 7 windows of one class: 3 + 3 + 1 partial = 3 decisions.
    Rng rng(44);
    std::vector<LabeledWindow> test;
    for (std::size_t i = 0; i < 7; ++i) {
        test.push_back({constant_window(2, 2, 1.0, rng), AppKind::Surfing, 2 * i});
    }
    const ClassReport report =
        evaluate_classifier(net, test, 30.0, FeatureSetId::FS5);
    std::uint64_t total = 0;
    for (const auto& row : report.confusion) {
        for (std::uint64_t v : row) total += v;
    }
    CHECK(total == 3);
    CHECK(report.decision_interval_s == 30.0);
    CHECK(report.accuracy == doctest::Approx(1.0));

    // A label change forces a decision boundary even mid-chunk.
    std::vector<LabeledWindow> mixed;
    mixed.push_back({constant_window(2, 2, 1.0, rng), AppKind::Surfing, 0});
    mixed.push_back({constant_window(2, 2, 8.0, rng), AppKind::Streaming, 2});
    mixed.push_back({constant_window(2, 2, 8.0, rng), AppKind::Streaming, 4});
    const ClassReport two =
        evaluate_classifier(net, mixed, 30.0, FeatureSetId::FS5);
    std::uint64_t decisions = 0;
    for (const auto& row : two.confusion) {
        for (std::uint64_t v : row) decisions += v;
    }
    CHECK(decisions == 2);
}

TEST_CASE("per-window decisions when the interval equals tau") {
    const auto data = separable_dataset(20, 2, 55);
    const FeatureSet fs = feature_set(FeatureSetId::FS5);
    const rnn::GruNetwork net = train_classifier(data, fs, quick_train(2), 8);
    const ClassReport report = evaluate_classifier(net, data, 10.0, FeatureSetId::FS5);
    std::uint64_t total = 0;
    for (const auto& row : report.confusion) {
        for (std::uint64_t v : row) total += v;
    }
    CHECK(total == data.size());
    CHECK(report.accuracy == doctest::Approx(1.0));
    REQUIRE(report.per_class_recall.size() == 2);
    CHECK(report.per_class_recall[0] == doctest::Approx(1.0));
}

TEST_CASE("decision interval must be a whole number of intervals") {
    const auto data = separable_dataset(10, 2, 66);
    const FeatureSet fs = feature_set(FeatureSetId::FS5);
    const rnn::GruNetwork net = train_classifier(data, fs, quick_train(2), 6);
    CHECK_THROWS_AS(evaluate_classifier(net, data, 15.0, FeatureSetId::FS5),
                    Error);
}

TEST_CASE("report json carries per-class recalls") {
    ClassReport report;
    report.feature_set = FeatureSetId::FS5;
    report.decision_interval_s = 60.0;
    report.accuracy = 0.75;
    report.labels = {"Surfing", "Streaming"};
    report.per_class_recall = {0.5, 1.0};
    report.confusion = {{1, 1}, {0, 2}};
    const nlohmann::json j = report_to_json(report);
    CHECK(j["accuracy"] == 0.75);
    CHECK(j["per_class"]["Surfing"] == 0.5);
    CHECK(j["confusion"][1][1] == 2);
}

}  // TEST_SUITE
