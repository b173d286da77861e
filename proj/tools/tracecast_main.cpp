#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tracecast/arima.hpp"
#include "tracecast/burst.hpp"
#include "tracecast/classify.hpp"
#include "tracecast/error.hpp"
#include "tracecast/features.hpp"
#include "tracecast/harness.hpp"
#include "tracecast/ingest.hpp"
#include "tracecast/rng.hpp"
#include "tracecast/rnn.hpp"
#include "tracecast/synth.hpp"

namespace tc = tracecast;
namespace fs = std::filesystem;

namespace {

struct GlobalFlags {
    double tau = 10.0;
    std::string feature_set = "fs5";
    std::uint64_t seed = 1;
    std::string config_file;
    std::string out_dir = ".";
};

tc::FeatureSetId parse_fs(const std::string& name) {
    tc::FeatureSetId id;
    if (!tc::feature_set_from_string(name, id)) {
        throw tc::Error(tc::ErrorKind::ArgumentError,
                        "unknown feature set '" + name + "' (use fs1..fs6)");
    }
    return id;
}

tc::AppKind parse_app(const std::string& name) {
    tc::AppKind app;
    if (tc::app_from_string(name, app)) return app;
    std::string folded;
    for (char c : name) folded += static_cast<char>(std::tolower(c));
    for (tc::AppKind k :
         {tc::AppKind::Surfing, tc::AppKind::VideoCall, tc::AppKind::VoiceCall,
          tc::AppKind::Streaming, tc::AppKind::Background}) {
        std::string canon;
        for (char c : tc::to_string(k)) canon += static_cast<char>(std::tolower(c));
        if (folded == canon) return k;
    }
    throw tc::Error(tc::ErrorKind::ArgumentError, "unknown app '" + name + "'");
}

fs::path out_path(const GlobalFlags& flags, const std::string& name) {
    fs::create_directories(flags.out_dir);
    return fs::path(flags.out_dir) / name;
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) {
        throw tc::Error(tc::ErrorKind::IoError,
                        "cannot write " + path.string());
    }
    out << body;
    std::cout << path.string() << "\n";
}

std::vector<tc::PacketRecord> load_trace(const std::string& file) {
    std::ifstream in(file);
    if (!in) {
        throw tc::Error(tc::ErrorKind::IoError, "cannot open " + file);
    }
    return tc::parse_trace(in);
}

std::vector<double> target_series(const std::vector<tc::IntervalFeatures>& ivs,
                                  const std::string& target) {
    tc::harness::Target t;
    if (!tc::harness::target_from_string(target, t)) {
        throw tc::Error(tc::ErrorKind::ArgumentError,
                        "unknown target '" + target + "'");
    }
    std::vector<double> out;
    out.reserve(ivs.size());
    for (const auto& iv : ivs) {
        switch (t) {
            case tc::harness::Target::UlCount:
                out.push_back(static_cast<double>(iv.ul_count));
                break;
            case tc::harness::Target::DlCount:
                out.push_back(static_cast<double>(iv.dl_count));
                break;
            case tc::harness::Target::TotalCount:
                out.push_back(static_cast<double>(iv.total_count()));
                break;
        }
    }
    return out;
}

double bin_horizon(const std::vector<tc::PacketRecord>& records, double tau) {
    if (records.empty()) {
        throw tc::Error(tc::ErrorKind::ArgumentError, "trace has no packets");
    }
    return (std::floor(records.back().timestamp / tau) + 1.0) * tau;
}

tc::harness::ExperimentConfig base_config(const GlobalFlags& flags,
                                          const CLI::App& app) {
    tc::harness::ExperimentConfig config;
    if (!flags.config_file.empty()) {
        std::ifstream in(flags.config_file);
        if (!in) {
            throw tc::Error(tc::ErrorKind::IoError,
                            "cannot open config " + flags.config_file);
        }
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw tc::Error(tc::ErrorKind::ParseError,
                            std::string("config json: ") + e.what());
        }
        config = tc::harness::config_from_json(j);
    }
    if (app.count("--tau") > 0) config.tau = flags.tau;
    if (app.count("--feature-set") > 0) {
        config.feature_set = parse_fs(flags.feature_set);
    }
    if (app.count("--seed") > 0) {
        config.seed = flags.seed;
        config.synth_seed = flags.seed;
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"interval traffic forecasting and classification bench"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags flags;
    app.add_option("--tau", flags.tau, "interval length in seconds");
    app.add_option("--feature-set", flags.feature_set, "fs1..fs6");
    app.add_option("--seed", flags.seed, "base RNG seed");
    app.add_option("--config", flags.config_file, "experiment config JSON");
    app.add_option("--out", flags.out_dir, "output directory");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "emit a packet trace + labels");
    std::string synth_app = "surfing";
    std::vector<std::string> synth_apps;
    double synth_duration = 3600.0;
    double segment_s = 600.0;
    std::size_t cycles = 4;
    synth_cmd->add_option("--app", synth_app, "single-app profile");
    synth_cmd->add_option("--apps", synth_apps,
                          "cyclic mixture apps (overrides --app)");
    synth_cmd->add_option("--duration", synth_duration,
                          "single-app duration in seconds");
    synth_cmd->add_option("--segment", segment_s, "mixture segment seconds");
    synth_cmd->add_option("--cycles", cycles, "mixture cycles");

    // bin
    auto* bin_cmd = app.add_subcommand("bin", "bin a trace into features CSV");
    std::string in_file;
    bin_cmd->add_option("--in", in_file, "packet trace CSV")->required();

    // fit-arima
    auto* fit_cmd = app.add_subcommand("fit-arima", "fit one ARIMA order");
    std::string fit_in, fit_target = "ul_count";
    int op = 1, od = 0, oq = 0;
    fit_cmd->add_option("--in", fit_in, "packet trace CSV")->required();
    fit_cmd->add_option("--target", fit_target, "ul_count|dl_count|total_count");
    fit_cmd->add_option("-p", op, "AR order");
    fit_cmd->add_option("-d", od, "differencing order");
    fit_cmd->add_option("-q", oq, "MA order");

    // grid-search
    auto* grid_cmd = app.add_subcommand("grid-search", "ARIMA order search");
    std::string grid_in, grid_target = "ul_count";
    std::size_t grid_validate = 0;
    grid_cmd->add_option("--in", grid_in, "packet trace CSV")->required();
    grid_cmd->add_option("--target", grid_target, "target series");
    grid_cmd->add_option("--validate", grid_validate,
                         "validation intervals (default train/5 clamped)");

    // train-rnn
    auto* train_cmd = app.add_subcommand("train-rnn", "train a forecasting GRU");
    std::string train_in, train_target = "ul_count";
    std::size_t window = 20, hidden = 100, epochs = 10, batch = 32;
    double lr = 1e-3;
    train_cmd->add_option("--in", train_in, "packet trace CSV")->required();
    train_cmd->add_option("--target", train_target, "target series");
    train_cmd->add_option("--window", window, "window length");
    train_cmd->add_option("--hidden", hidden, "hidden units");
    train_cmd->add_option("--epochs", epochs, "training epochs");
    train_cmd->add_option("--batch", batch, "batch size");
    train_cmd->add_option("--lr", lr, "learning rate");

    // forecast
    auto* forecast_cmd = app.add_subcommand("forecast", "n-step forecast");
    std::string model_file, forecast_in, forecast_target = "ul_count";
    std::size_t steps = 10;
    forecast_cmd->add_option("--model", model_file, "model JSON")->required();
    forecast_cmd->add_option("--in", forecast_in, "packet trace CSV")->required();
    forecast_cmd->add_option("--target", forecast_target, "target series");
    forecast_cmd->add_option("--steps", steps, "forecast steps");

    // burst-sweep
    auto* burst_cmd = app.add_subcommand("burst-sweep", "burst threshold sweep");
    double burst_sd = 1.0;
    burst_cmd->add_option("--burst-sd", burst_sd,
                          "burst threshold as a multiple of train SD");

    // classify
    auto* classify_cmd = app.add_subcommand("classify", "k-fold app classification");
    std::vector<std::string> classify_apps;
    double cls_segment = 600.0, decision_interval = 0.0;
    std::size_t cls_cycles = 8, folds = 4;
    std::size_t cls_window = 20, cls_hidden = 100, cls_epochs = 10;
    bool shuffle_labels = false;
    classify_cmd->add_option("--apps", classify_apps, "mixture apps");
    classify_cmd->add_option("--segment", cls_segment, "segment seconds");
    classify_cmd->add_option("--cycles", cls_cycles, "schedule cycles");
    classify_cmd->add_option("--folds", folds, "k folds");
    classify_cmd->add_option("--decision-interval", decision_interval,
                             "decision interval seconds (default tau)");
    classify_cmd->add_option("--window", cls_window, "window length");
    classify_cmd->add_option("--hidden", cls_hidden, "hidden units");
    classify_cmd->add_option("--epochs", cls_epochs, "training epochs");
    classify_cmd->add_flag("--shuffle-labels", shuffle_labels,
                           "chance-level control");

    // benchmark
    auto* bench_cmd = app.add_subcommand("benchmark", "Monte Carlo benchmark");
    std::string bench_method;
    bench_cmd->add_option("--method", bench_method,
                          "persistence|arima_optimized|arima_fixed|rnn");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "axis sweep of the benchmark");
    std::string axis_name;
    std::vector<std::string> axis_values;
    sweep_cmd->add_option("--axis", axis_name,
                          "tau|train_length|horizon_n|feature_set|method")
        ->required();
    sweep_cmd->add_option("--values", axis_values, "axis values")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) {
            if (!synth_apps.empty()) {
                std::vector<tc::ScheduleSegment> schedule;
                double t = 0.0;
                for (std::size_t cycle = 0; cycle < cycles; ++cycle) {
                    for (const std::string& name : synth_apps) {
                        schedule.push_back(
                            {tc::profile_for(parse_app(name)), t, t + segment_s});
                        t += segment_s;
                    }
                }
                const tc::MixtureTrace mix =
                    tc::generate_mixture(schedule, flags.tau, flags.seed);
                std::ostringstream trace_csv, labels_csv;
                tc::write_trace(mix.records, trace_csv);
                tc::write_labels(mix.labels, labels_csv);
                write_file(out_path(flags, "trace.csv"), trace_csv.str());
                write_file(out_path(flags, "labels.csv"), labels_csv.str());
            } else {
                const tc::AppKind kind = parse_app(synth_app);
                const auto records = tc::generate(tc::profile_for(kind),
                                                  synth_duration, flags.seed);
                const auto n = static_cast<std::size_t>(
                    std::ceil(synth_duration / flags.tau));
                std::vector<tc::LabeledInterval> labels(n);
                for (std::size_t i = 0; i < n; ++i) labels[i] = {i, kind};
                std::ostringstream trace_csv, labels_csv;
                tc::write_trace(records, trace_csv);
                tc::write_labels(labels, labels_csv);
                write_file(out_path(flags, "trace.csv"), trace_csv.str());
                write_file(out_path(flags, "labels.csv"), labels_csv.str());
            }
        } else if (bin_cmd->parsed()) {
            const auto records = load_trace(in_file);
            const auto intervals = tc::bin_intervals(
                records, flags.tau, bin_horizon(records, flags.tau));
            const auto matrix = tc::build_matrix(
                intervals, tc::feature_set(parse_fs(flags.feature_set)),
                flags.tau);
            std::ostringstream csv;
            tc::write_features_csv(matrix, csv);
            write_file(out_path(flags, "features.csv"), csv.str());
        } else if (fit_cmd->parsed()) {
            const auto records = load_trace(fit_in);
            const auto intervals = tc::bin_intervals(
                records, flags.tau, bin_horizon(records, flags.tau));
            const auto series = target_series(intervals, fit_target);
            const auto model = tc::arima::fit_arima(series, {op, od, oq});
            write_file(out_path(flags, "model.json"),
                       tc::arima::model_to_json(model).dump(2) + "\n");
        } else if (grid_cmd->parsed()) {
            const auto records = load_trace(grid_in);
            const auto intervals = tc::bin_intervals(
                records, flags.tau, bin_horizon(records, flags.tau));
            const auto series = target_series(intervals, grid_target);
            std::size_t v = grid_validate > 0
                                ? grid_validate
                                : std::clamp<std::size_t>(series.size() / 5, 20, 500);
            if (series.size() <= v * 2) {
                throw tc::Error(tc::ErrorKind::ArgumentError,
                                "series too short for a validation split");
            }
            const std::vector<double> fit_part(series.begin(), series.end() - v);
            const std::vector<double> val_part(series.end() - v, series.end());
            const auto result =
                tc::arima::grid_search(fit_part, val_part, tc::arima::default_grid());
            std::ostringstream csv;
            tc::arima::write_grid_csv(result, csv);
            write_file(out_path(flags, "grid.csv"), csv.str());
            const nlohmann::json best{{"p", result.best.p},
                                      {"d", result.best.d},
                                      {"q", result.best.q}};
            write_file(out_path(flags, "best_order.json"), best.dump(2) + "\n");
        } else if (train_cmd->parsed()) {
            const auto records = load_trace(train_in);
            const auto intervals = tc::bin_intervals(
                records, flags.tau, bin_horizon(records, flags.tau));
            const auto fs_id = parse_fs(flags.feature_set);
            const tc::FeatureSet feature_set = tc::feature_set(fs_id);
            const auto matrix =
                tc::build_matrix(intervals, feature_set, flags.tau);
            const auto names = feature_set.row_names();
            const auto row_it =
                std::find(names.begin(), names.end(), train_target);
            if (row_it == names.end()) {
                throw tc::Error(tc::ErrorKind::ArgumentError,
                                "target '" + train_target +
                                    "' is not a row of this feature set");
            }
            const auto target_row =
                static_cast<std::size_t>(row_it - names.begin());
            if (matrix.cols <= window) {
                throw tc::Error(tc::ErrorKind::ArgumentError,
                                "trace shorter than the window length");
            }
            const tc::Normalizer norm =
                tc::Normalizer::fit(matrix, 0, matrix.cols);
            tc::rnn::GruNetwork net = tc::rnn::make_network(
                matrix.rows, hidden, 1, tc::rnn::HeadKind::Regression, window,
                tc::mix_seed(flags.seed, 1));
            net.target_row = target_row;
            net.normalizer = norm;
            net.input_feature_names = names;
            std::vector<tc::rnn::Sample> samples;
            for (std::size_t pos = window; pos < matrix.cols; ++pos) {
                tc::rnn::Sample s;
                s.window = norm.transform(matrix.slice_cols(pos - window, pos));
                s.target = {norm.transform_value(target_row,
                                                 matrix.at(target_row, pos))};
                samples.push_back(std::move(s));
            }
            tc::rnn::TrainConfig tcfg;
            tcfg.window_length = window;
            tcfg.learning_rate = lr;
            tcfg.epochs = epochs;
            tcfg.batch_size = batch;
            tcfg.seed = tc::mix_seed(flags.seed, 2);
            const auto trace = tc::rnn::train(net, samples, tcfg);
            write_file(out_path(flags, "network.json"),
                       tc::rnn::network_to_json(net).dump() + "\n");
            nlohmann::json losses = trace;
            write_file(out_path(flags, "train_loss.json"), losses.dump() + "\n");
        } else if (forecast_cmd->parsed()) {
            std::ifstream min(model_file);
            if (!min) {
                throw tc::Error(tc::ErrorKind::IoError,
                                "cannot open " + model_file);
            }
            nlohmann::json mj;
            try {
                min >> mj;
            } catch (const nlohmann::json::exception& e) {
                throw tc::Error(tc::ErrorKind::ParseError,
                                std::string("model json: ") + e.what());
            }
            const auto records = load_trace(forecast_in);
            const auto intervals = tc::bin_intervals(
                records, flags.tau, bin_horizon(records, flags.tau));
            std::vector<double> values;
            if (mj.contains("cell")) {
                const auto net = tc::rnn::network_from_json(mj);
                const auto matrix = tc::build_matrix(
                    intervals, tc::feature_set(parse_fs(flags.feature_set)),
                    flags.tau);
                values = tc::rnn::predict_next(net, matrix, steps);
            } else {
                const auto model = tc::arima::model_from_json(mj);
                const auto series = target_series(intervals, forecast_target);
                values = tc::arima::forecast(model, series, steps);
            }
            std::ostringstream csv;
            csv << "step,prediction\n";
            for (std::size_t i = 0; i < values.size(); ++i) {
                csv << (i + 1) << ',' << values[i] << '\n';
            }
            write_file(out_path(flags, "forecast.csv"), csv.str());
        } else if (burst_cmd->parsed()) {
            tc::harness::BurstExperimentConfig config;
            config.base = base_config(flags, app);
            config.burst_sd_multiple = burst_sd;
            const auto result = tc::harness::run_burst_experiment(config);
            std::ostringstream csv;
            tc::burst::write_sweep_csv(result.sweep, csv);
            write_file(out_path(flags, "burst_sweep.csv"), csv.str());
            const nlohmann::json summary{
                {"burst_threshold", result.burst_threshold},
                {"prevalence", result.prevalence},
                {"crossover_theta", result.sweep.crossover},
                {"crossover_recall_burst", result.crossover_report.recall_burst},
                {"crossover_recall_nonburst",
                 result.crossover_report.recall_nonburst},
                {"persistence_recall_burst",
                 result.persistence_report.recall_burst},
                {"persistence_recall_nonburst",
                 result.persistence_report.recall_nonburst},
            };
            write_file(out_path(flags, "burst_summary.json"),
                       summary.dump(2) + "\n");
        } else if (classify_cmd->parsed()) {
            tc::harness::ClassificationConfig config;
            config.mixture.tau = flags.tau;
            config.mixture.seed = flags.seed;
            config.mixture.segment_s = cls_segment;
            config.mixture.cycles = cls_cycles;
            if (!classify_apps.empty()) {
                config.mixture.apps.clear();
                for (const std::string& name : classify_apps) {
                    config.mixture.apps.push_back(parse_app(name));
                }
            }
            config.feature_set = parse_fs(flags.feature_set);
            config.rnn_train.window_length = cls_window;
            config.rnn_train.epochs = cls_epochs;
            config.rnn_hidden = cls_hidden;
            config.k_folds = folds;
            config.decision_interval_s = decision_interval;
            config.shuffle_labels = shuffle_labels;
            const auto result = tc::harness::run_classification(config);
            write_file(out_path(flags, "classify_report.json"),
                       tc::classify::report_to_json(result.overall).dump(2) + "\n");
        } else if (bench_cmd->parsed()) {
            tc::harness::ExperimentConfig config = base_config(flags, app);
            if (!bench_method.empty() &&
                !tc::harness::method_from_string(bench_method, config.method)) {
                throw tc::Error(tc::ErrorKind::ArgumentError,
                                "unknown method '" + bench_method + "'");
            }
            const auto report = tc::harness::run_monte_carlo(config);
            write_file(out_path(flags, "report.json"),
                       tc::harness::report_to_json(report).dump(2) + "\n");
        } else if (sweep_cmd->parsed()) {
            tc::harness::SweepAxis axis;
            if (!tc::harness::axis_from_string(axis_name, axis)) {
                throw tc::Error(tc::ErrorKind::ArgumentError,
                                "unknown axis '" + axis_name + "'");
            }
            const auto rows =
                tc::harness::sweep(base_config(flags, app), axis, axis_values);
            std::ostringstream csv;
            tc::harness::write_sweep_table_csv(axis, rows, csv);
            write_file(out_path(flags, "sweep.csv"), csv.str());
        }
    } catch (const tc::Error& e) {
        const nlohmann::json err{{"error", tc::error_kind_name(e.kind())},
                                 {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        const nlohmann::json err{{"error", "internal"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
