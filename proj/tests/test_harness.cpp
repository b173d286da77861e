#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "tracecast/error.hpp"
#include "tracecast/harness.hpp"

using namespace tracecast;
using namespace tracecast::harness;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig config;
    config.synth_app = AppKind::Surfing;
    config.synth_seed = 3;
    config.tau = 10.0;
    config.train_length = 400;
    config.test_length = 150;
    config.n_runs = 4;
    config.seed = 9;
    config.rnn_hidden = 8;
    config.rnn_train.epochs = 2;
    config.max_train_windows = 200;
    return config;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("persistence scores itself at exactly ratio one") {
    const EvalReport report = run_monte_carlo(small_config());
    CHECK(report.relative_ratio == 1.0);
    CHECK(report.mean_rmse == report.mean_persistence_rmse);
    REQUIRE(report.runs.size() == 4);
    for (const auto& run : report.runs) {
        CHECK(run.method_rmse == run.persistence_rmse);
    }
}

TEST_CASE("reports are bit-identical across repeated evaluation") {
    ExperimentConfig config = small_config();
    config.method = Method::Rnn;
    const std::string a = report_to_json(run_monte_carlo(config)).dump();
    const std::string b = report_to_json(run_monte_carlo(config)).dump();
    CHECK(a == b);
}

TEST_CASE("run origins stay inside the admissible range and vary") {
    ExperimentConfig config = small_config();
    config.n_runs = 12;
    const PreparedTrace trace = prepare_trace(config);
    const std::size_t n = trace.target.size();
    std::set<std::size_t> origins;
    for (std::size_t i = 0; i < config.n_runs; ++i) {
        const RunResult run = run_single(config, trace, i);
        CHECK(run.origin >= config.train_length);
        CHECK(run.origin + config.test_length + config.horizon - 1 <= n);
        origins.insert(run.origin);
    }
    CHECK(origins.size() > 1);
}

TEST_CASE("horizon shifts the scored actuals") {
    // With horizon n, persistence scores target[o + j - 1] against
    // target[o + j + n - 1]; larger n means staler forecasts and larger error
    // on autocorrelated traffic.
    ExperimentConfig one = small_config();
    one.n_runs = 6;
    ExperimentConfig five = one;
    five.horizon = 5;
    const double rmse1 = run_monte_carlo(one).mean_persistence_rmse;
    const double rmse5 = run_monte_carlo(five).mean_persistence_rmse;
    CHECK(rmse5 > rmse1);
}

TEST_CASE("too-short traces are rejected up front") {
    ExperimentConfig config = small_config();
    config.synth_duration_s = 1000.0;  // 100 intervals << train + test
    CHECK_THROWS_AS(run_monte_carlo(config), Error);
}

TEST_CASE("config json round trips field by field") {
    ExperimentConfig config = small_config();
    config.method = Method::ArimaFixed;
    config.arima_order = {2, 1, 1};
    config.feature_set = FeatureSetId::FS2;
    config.target = Target::DlCount;
    config.horizon = 3;
    config.origin_floor = 777;
    config.rnn_train.learning_rate = 5e-4;

    const ExperimentConfig back = config_from_json(config_to_json(config));
    CHECK(back.trace_file == config.trace_file);
    CHECK(back.synth_app == config.synth_app);
    CHECK(back.synth_seed == config.synth_seed);
    CHECK(back.tau == config.tau);
    CHECK(back.feature_set == config.feature_set);
    CHECK(back.target == config.target);
    CHECK(back.method == config.method);
    CHECK(back.arima_order == config.arima_order);
    CHECK(back.train_length == config.train_length);
    CHECK(back.test_length == config.test_length);
    CHECK(back.n_runs == config.n_runs);
    CHECK(back.horizon == config.horizon);
    CHECK(back.origin_floor == config.origin_floor);
    CHECK(back.seed == config.seed);
    CHECK(back.rnn_train.learning_rate == config.rnn_train.learning_rate);
    CHECK(back.rnn_hidden == config.rnn_hidden);
    CHECK(back.max_train_windows == config.max_train_windows);
}

TEST_CASE("partial config json keeps defaults for absent fields") {
    const ExperimentConfig config =
        config_from_json(nlohmann::json{{"train_length", 123}});
    CHECK(config.train_length == 123);
    CHECK(config.test_length == ExperimentConfig{}.test_length);
    CHECK(config.tau == ExperimentConfig{}.tau);
}

TEST_CASE("report json leaves out wall time") {
    const EvalReport report = run_monte_carlo(small_config());
    const nlohmann::json j = report_to_json(report);
    CHECK(!j.contains("wall_time_s"));
    CHECK(j.contains("config"));
    CHECK(j["runs"].size() == report.runs.size());
}

TEST_CASE("train-length sweep pins the evaluation windows") {
    ExperimentConfig config = small_config();
    config.n_runs = 3;
    const auto rows = sweep(config, SweepAxis::TrainLength, {"200", "400"});
    REQUIRE(rows.size() == 2);
    // Same origins, same test data: the naive baseline must agree exactly.
    CHECK(rows[0].report.mean_persistence_rmse ==
          rows[1].report.mean_persistence_rmse);
    CHECK(rows[0].report.config.origin_floor == 400);
    CHECK(rows[1].report.config.origin_floor == 400);
}

TEST_CASE("method sweep reuses one prepared trace") {
    ExperimentConfig config = small_config();
    config.n_runs = 2;
    const auto rows = sweep(config, SweepAxis::Method, {"persistence", "arima_fixed"});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].report.mean_persistence_rmse ==
          rows[1].report.mean_persistence_rmse);

    std::ostringstream csv;
    write_sweep_table_csv(SweepAxis::Method, rows, csv);
    std::istringstream in(csv.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "method,mean_rmse,mean_persistence_rmse,relative_ratio");
}

TEST_CASE("sweep rejects unknown axis values") {
    CHECK_THROWS_AS(sweep(small_config(), SweepAxis::Method, {"oracle"}), Error);
    CHECK_THROWS_AS(sweep(small_config(), SweepAxis::TrainLength, {"abc"}), Error);
}

TEST_CASE("burst experiment is deterministic and keeps the baseline marker") {
    BurstExperimentConfig config;
    config.base = small_config();
    config.base.rnn_train.epochs = 2;
    config.burst_sd_multiple = 1.0;
    const BurstExperimentResult a = run_burst_experiment(config);
    const BurstExperimentResult b = run_burst_experiment(config);

    CHECK(a.burst_threshold == b.burst_threshold);
    CHECK(a.sweep.crossover == b.sweep.crossover);
    CHECK(a.crossover_report.tp == b.crossover_report.tp);
    CHECK(a.persistence_report.theta == -1.0);
    CHECK(a.burst_threshold > 0.0);
    CHECK(a.prevalence > 0.0);
    CHECK(a.prevalence < 1.0);
    REQUIRE(!a.sweep.curve.empty());
    CHECK(a.sweep.curve.size() == 99);
}

TEST_CASE("mixture windows carry uniform labels and usable geometry") {
    MixtureSpec spec;
    spec.segment_s = 200.0;
    spec.cycles = 2;
    spec.seed = 5;
    const auto windows =
        mixture_windows(spec, feature_set(FeatureSetId::FS5), 10);
    REQUIRE(!windows.empty());
    std::set<AppKind> seen;
    for (const auto& w : windows) {
        CHECK(w.window.cols == 10);
        CHECK(w.window.rows == 2);
        CHECK(w.window.tau == spec.tau);
        seen.insert(w.app);
    }
    CHECK(seen.size() == 4);
    for (std::size_t i = 1; i < windows.size(); ++i) {
        CHECK(windows[i].start > windows[i - 1].start);
    }
}

TEST_CASE("classification experiment runs folds deterministically") {
    ClassificationConfig config;
    config.mixture.segment_s = 150.0;
    config.mixture.cycles = 3;
    config.mixture.seed = 21;
    config.rnn_train.epochs = 3;
    config.rnn_train.window_length = 6;
    config.rnn_hidden = 8;
    config.k_folds = 3;

    const ClassificationResult a = run_classification(config);
    const ClassificationResult b = run_classification(config);
    CHECK(a.overall.accuracy == b.overall.accuracy);
    CHECK(a.overall.confusion == b.overall.confusion);
    REQUIRE(a.folds.size() == 3);

    std::uint64_t overall_total = 0, fold_total = 0;
    for (const auto& row : a.overall.confusion) {
        for (std::uint64_t v : row) overall_total += v;
    }
    for (const auto& fold : a.folds) {
        for (const auto& row : fold.confusion) {
            for (std::uint64_t v : row) fold_total += v;
        }
    }
    CHECK(overall_total == fold_total);

    // Shuffling labels severs the feature-label link; accuracy collapses
    // toward chance (1/4) instead of tracking the trained figure.
    ClassificationConfig shuffled = config;
    shuffled.shuffle_labels = true;
    const ClassificationResult chance = run_classification(shuffled);
    CHECK(chance.overall.accuracy < 0.6);
}

}  // TEST_SUITE
