#include "tracecast/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "tracecast/error.hpp"
#include "tracecast/rng.hpp"

namespace tracecast::harness {

namespace {

constexpr std::size_t kSynthSlackIntervals = 64;

std::size_t effective_origin_floor(const ExperimentConfig& config) {
    const std::size_t floor =
        config.origin_floor > 0 ? config.origin_floor : config.train_length;
    if (floor < config.train_length) {
        throw Error(ErrorKind::ArgumentError,
                    "origin_floor smaller than train_length");
    }
    return floor;
}

// Smallest interval count that leaves at least one admissible origin.
std::size_t required_intervals(const ExperimentConfig& config) {
    return effective_origin_floor(config) + config.test_length + config.horizon;
}

std::size_t target_row_index(const FeatureSet& fs, Target target) {
    const char* name = target == Target::UlCount   ? "ul_count"
                       : target == Target::DlCount ? "dl_count"
                                                   : nullptr;
    if (name == nullptr) return static_cast<std::size_t>(-1);
    const auto names = fs.row_names();
    const auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? static_cast<std::size_t>(-1)
                             : static_cast<std::size_t>(it - names.begin());
}

double target_value(const IntervalFeatures& iv, Target target) {
    switch (target) {
        case Target::UlCount: return static_cast<double>(iv.ul_count);
        case Target::DlCount: return static_cast<double>(iv.dl_count);
        case Target::TotalCount: return static_cast<double>(iv.total_count());
    }
    return 0.0;
}

void validate_config(const ExperimentConfig& config) {
    if (config.tau <= 0.0) {
        throw Error(ErrorKind::ArgumentError, "config: tau must be positive");
    }
    if (config.test_length < 1 || config.n_runs < 1 || config.horizon < 1) {
        throw Error(ErrorKind::ArgumentError,
                    "config: test_length, n_runs, horizon must be >= 1");
    }
    if (config.train_length < 2) {
        throw Error(ErrorKind::ArgumentError, "config: train_length too small");
    }
    if (config.method == Method::Rnn &&
        config.train_length <= config.rnn_train.window_length) {
        throw Error(ErrorKind::ArgumentError,
                    "config: train_length must exceed the RNN window");
    }
}

// Deterministic even-stride thinning to at most cap entries.
std::vector<std::size_t> thinned_indices(std::size_t count, std::size_t cap) {
    std::vector<std::size_t> idx;
    if (cap == 0 || count <= cap) {
        idx.resize(count);
        for (std::size_t i = 0; i < count; ++i) idx[i] = i;
        return idx;
    }
    idx.reserve(cap);
    for (std::size_t i = 0; i < cap; ++i) idx.push_back(i * count / cap);
    return idx;
}

rnn::GruNetwork train_forecaster(const ExperimentConfig& config,
                                 const PreparedTrace& trace, std::size_t origin,
                                 std::uint64_t run_seed) {
    const FeatureSet fs = feature_set(config.feature_set);
    const std::size_t target_row = target_row_index(fs, config.target);
    if (target_row == static_cast<std::size_t>(-1)) {
        throw Error(ErrorKind::ArgumentError,
                    "rnn method: target must be a feature row of the feature set "
                    "(ul_count or dl_count)");
    }
    const std::size_t window = config.rnn_train.window_length;
    const std::size_t train_begin = origin - config.train_length;

    const Normalizer norm =
        Normalizer::fit(trace.matrix, train_begin, origin);
    rnn::GruNetwork net = rnn::make_network(
        trace.matrix.rows, config.rnn_hidden, 1, rnn::HeadKind::Regression,
        window, mix_seed(run_seed, 1));
    net.target_row = target_row;
    net.normalizer = norm;
    net.input_feature_names = fs.row_names();

    const std::size_t position_count = config.train_length - window;
    std::vector<rnn::Sample> samples;
    const auto picks = thinned_indices(position_count, config.max_train_windows);
    samples.reserve(picks.size());
    for (std::size_t pick : picks) {
        const std::size_t pos = train_begin + window + pick;
        rnn::Sample s;
        s.window = norm.transform(trace.matrix.slice_cols(pos - window, pos));
        s.target = {norm.transform_value(target_row, trace.target[pos])};
        samples.push_back(std::move(s));
    }

    rnn::TrainConfig train_config = config.rnn_train;
    train_config.seed = mix_seed(run_seed, 2);
    rnn::train(net, samples, train_config);
    return net;
}

}  // namespace

double rmse(const std::vector<double>& predicted,
            const std::vector<double>& actual) {
    if (predicted.size() != actual.size() || predicted.empty()) {
        throw Error(ErrorKind::ArgumentError,
                    "rmse: need equal non-empty vectors");
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - actual[i];
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(predicted.size()));
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::Persistence: return "persistence";
        case Method::ArimaOptimized: return "arima_optimized";
        case Method::ArimaFixed: return "arima_fixed";
        case Method::Rnn: return "rnn";
    }
    return "persistence";
}

bool method_from_string(std::string_view s, Method& out) {
    if (s == "persistence") { out = Method::Persistence; return true; }
    if (s == "arima_optimized") { out = Method::ArimaOptimized; return true; }
    if (s == "arima_fixed") { out = Method::ArimaFixed; return true; }
    if (s == "rnn") { out = Method::Rnn; return true; }
    return false;
}

std::string_view to_string(Target t) {
    switch (t) {
        case Target::UlCount: return "ul_count";
        case Target::DlCount: return "dl_count";
        case Target::TotalCount: return "total_count";
    }
    return "ul_count";
}

bool target_from_string(std::string_view s, Target& out) {
    if (s == "ul_count") { out = Target::UlCount; return true; }
    if (s == "dl_count") { out = Target::DlCount; return true; }
    if (s == "total_count") { out = Target::TotalCount; return true; }
    return false;
}

PreparedTrace prepare_trace(const ExperimentConfig& config) {
    validate_config(config);
    const std::size_t required = required_intervals(config);

    std::vector<PacketRecord> records;
    double horizon_s = 0.0;
    if (config.trace_file.empty()) {
        horizon_s = config.synth_duration_s > 0.0
                        ? config.synth_duration_s
                        : static_cast<double>(required + kSynthSlackIntervals) *
                              config.tau;
        records = generate(profile_for(config.synth_app), horizon_s,
                           config.synth_seed);
    } else {
        std::ifstream in(config.trace_file);
        if (!in) {
            throw Error(ErrorKind::IoError,
                        "cannot open trace file: " + config.trace_file);
        }
        records = parse_trace(in);
        if (records.empty()) {
            throw Error(ErrorKind::ArgumentError,
                        "trace file has no packets: " + config.trace_file);
        }
        horizon_s = (std::floor(records.back().timestamp / config.tau) + 1.0) *
                    config.tau;
    }

    PreparedTrace trace;
    trace.intervals = bin_intervals(records, config.tau, horizon_s);
    if (trace.intervals.size() < required) {
        throw Error(ErrorKind::ArgumentError,
                    "trace too short: " + std::to_string(trace.intervals.size()) +
                        " intervals, need at least " + std::to_string(required) +
                        " (origin_floor + test_length + horizon)");
    }
    trace.matrix =
        build_matrix(trace.intervals, feature_set(config.feature_set), config.tau);
    trace.target.reserve(trace.intervals.size());
    for (const IntervalFeatures& iv : trace.intervals) {
        trace.target.push_back(target_value(iv, config.target));
    }
    return trace;
}

RunResult run_single(const ExperimentConfig& config, const PreparedTrace& trace,
                     std::size_t run_index) {
    validate_config(config);
    const std::size_t n = trace.target.size();
    const std::size_t floor = effective_origin_floor(config);
    const std::size_t horizon = config.horizon;
    if (n < required_intervals(config)) {
        throw Error(ErrorKind::ArgumentError,
                    "trace too short: " + std::to_string(n) +
                        " intervals, need at least " +
                        std::to_string(required_intervals(config)));
    }
    const std::size_t origin_span = n - config.test_length - horizon + 1 - floor;

    Rng rng(mix_seed(config.seed, run_index));
    const std::size_t origin = floor + rng.bounded(origin_span);
    const std::uint64_t run_seed = mix_seed(config.seed, run_index);

    std::vector<double> actuals(config.test_length);
    std::vector<double> naive(config.test_length);
    for (std::size_t j = 0; j < config.test_length; ++j) {
        actuals[j] = trace.target[origin + j + horizon - 1];
        naive[j] = trace.target[origin + j - 1];
    }

    std::vector<double> preds(config.test_length);
    switch (config.method) {
        case Method::Persistence:
            preds = naive;
            break;
        case Method::ArimaOptimized:
        case Method::ArimaFixed: {
            const std::vector<double> train(
                trace.target.begin() +
                    static_cast<std::ptrdiff_t>(origin - config.train_length),
                trace.target.begin() + static_cast<std::ptrdiff_t>(origin));
            arima::ArimaOrder order = config.arima_order;
            if (config.method == Method::ArimaOptimized) {
                const std::size_t v = std::clamp<std::size_t>(
                    config.train_length / 5, 20, 500);
                if (train.size() <= v * 2) {
                    throw Error(ErrorKind::ArgumentError,
                                "arima_optimized: train span too short to split "
                                "off a validation segment");
                }
                const std::vector<double> fit_part(train.begin(),
                                                   train.end() -
                                                       static_cast<std::ptrdiff_t>(v));
                const std::vector<double> val_part(train.end() -
                                                       static_cast<std::ptrdiff_t>(v),
                                                   train.end());
                order = arima::grid_search(fit_part, val_part,
                                           arima::default_grid())
                            .best;
            }
            const arima::ArimaModel model = arima::fit_arima(train, order);
            arima::ArimaState state =
                arima::ArimaState::from_history(model, train);
            for (std::size_t j = 0; j < config.test_length; ++j) {
                if (horizon == 1) {
                    preds[j] = state.predict_one();
                } else {
                    arima::ArimaState ahead = state;
                    double value = 0.0;
                    for (std::size_t step = 0; step < horizon; ++step) {
                        value = ahead.predict_one();
                        ahead.absorb(value);
                    }
                    preds[j] = value;
                }
                state.absorb(trace.target[origin + j]);
            }
            break;
        }
        case Method::Rnn: {
            const rnn::GruNetwork net =
                train_forecaster(config, trace, origin, run_seed);
            const std::size_t window = net.window_length;
            for (std::size_t j = 0; j < config.test_length; ++j) {
                const std::size_t base = origin + j;
                const Vec path = rnn::predict_next(
                    net, trace.matrix.slice_cols(base - window, base), horizon);
                preds[j] = path.back();
            }
            break;
        }
    }

    RunResult result;
    result.origin = origin;
    result.method_rmse = rmse(preds, actuals);
    result.persistence_rmse = rmse(naive, actuals);
    return result;
}

EvalReport run_monte_carlo(const ExperimentConfig& config) {
    const auto started = std::chrono::steady_clock::now();
    const PreparedTrace trace = prepare_trace(config);
    EvalReport report = run_monte_carlo(config, trace);
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    return report;
}

EvalReport run_monte_carlo(const ExperimentConfig& config,
                           const PreparedTrace& trace) {
    const auto started = std::chrono::steady_clock::now();
    EvalReport report;
    report.config = config;
    report.runs.reserve(config.n_runs);
    double method_total = 0.0;
    double naive_total = 0.0;
    for (std::size_t i = 0; i < config.n_runs; ++i) {
        RunResult run = run_single(config, trace, i);
        method_total += run.method_rmse;
        naive_total += run.persistence_rmse;
        report.runs.push_back(run);
    }
    report.mean_rmse = method_total / static_cast<double>(config.n_runs);
    report.mean_persistence_rmse =
        naive_total / static_cast<double>(config.n_runs);
    report.relative_ratio = report.mean_rmse / report.mean_persistence_rmse;
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    return report;
}

std::string_view to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::Tau: return "tau";
        case SweepAxis::TrainLength: return "train_length";
        case SweepAxis::HorizonN: return "horizon_n";
        case SweepAxis::FeatureSet: return "feature_set";
        case SweepAxis::Method: return "method";
    }
    return "tau";
}

bool axis_from_string(std::string_view s, SweepAxis& out) {
    if (s == "tau") { out = SweepAxis::Tau; return true; }
    if (s == "train_length") { out = SweepAxis::TrainLength; return true; }
    if (s == "horizon_n") { out = SweepAxis::HorizonN; return true; }
    if (s == "feature_set") { out = SweepAxis::FeatureSet; return true; }
    if (s == "method") { out = SweepAxis::Method; return true; }
    return false;
}

namespace {

std::size_t parse_count(const std::string& value, const char* what) {
    std::size_t out = 0;
    const auto res =
        std::from_chars(value.data(), value.data() + value.size(), out);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size() ||
        out == 0) {
        throw Error(ErrorKind::ArgumentError,
                    std::string("sweep: bad ") + what + " value '" + value + "'");
    }
    return out;
}

void apply_axis_value(ExperimentConfig& config, SweepAxis axis,
                      const std::string& value) {
    switch (axis) {
        case SweepAxis::Tau: {
            double tau = 0.0;
            const auto res =
                std::from_chars(value.data(), value.data() + value.size(), tau);
            if (res.ec != std::errc() ||
                res.ptr != value.data() + value.size() || tau <= 0.0) {
                throw Error(ErrorKind::ArgumentError,
                            "sweep: bad tau value '" + value + "'");
            }
            config.tau = tau;
            break;
        }
        case SweepAxis::TrainLength:
            config.train_length = parse_count(value, "train_length");
            break;
        case SweepAxis::HorizonN:
            config.horizon = parse_count(value, "horizon_n");
            break;
        case SweepAxis::FeatureSet:
            if (!feature_set_from_string(value, config.feature_set)) {
                throw Error(ErrorKind::ArgumentError,
                            "sweep: unknown feature set '" + value + "'");
            }
            break;
        case SweepAxis::Method:
            if (!method_from_string(value, config.method)) {
                throw Error(ErrorKind::ArgumentError,
                            "sweep: unknown method '" + value + "'");
            }
            break;
    }
}

}  // namespace

std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepAxis axis,
                            const std::vector<std::string>& values) {
    if (values.empty()) {
        throw Error(ErrorKind::ArgumentError, "sweep: no axis values");
    }

    std::vector<ExperimentConfig> configs;
    configs.reserve(values.size());
    for (const std::string& value : values) {
        ExperimentConfig c = config;
        apply_axis_value(c, axis, value);
        configs.push_back(std::move(c));
    }

    // Pin shared settings so every row is scored on comparable windows: the
    // origin floor covers the largest train length, and a generated trace
    // spans the largest requirement of any row.
    if (axis == SweepAxis::TrainLength) {
        std::size_t max_train = 0;
        for (const ExperimentConfig& c : configs) {
            max_train = std::max(max_train, c.train_length);
        }
        for (ExperimentConfig& c : configs) {
            c.origin_floor = std::max<std::size_t>(c.origin_floor, max_train);
        }
    }
    if (config.trace_file.empty() && config.synth_duration_s <= 0.0) {
        double max_duration = 0.0;
        for (const ExperimentConfig& c : configs) {
            const double d =
                static_cast<double>(required_intervals(c) + kSynthSlackIntervals) *
                c.tau;
            max_duration = std::max(max_duration, d);
        }
        for (ExperimentConfig& c : configs) c.synth_duration_s = max_duration;
    }

    std::vector<SweepRow> rows;
    rows.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        rows.push_back({values[i], run_monte_carlo(configs[i])});
    }
    return rows;
}

void write_sweep_table_csv(SweepAxis axis, const std::vector<SweepRow>& rows,
                           std::ostream& out) {
    out << to_string(axis) << ",mean_rmse,mean_persistence_rmse,relative_ratio\n";
    char buf[64];
    const auto put = [&](double v) {
        const auto res = std::to_chars(buf, buf + sizeof(buf), v);
        out.write(buf, res.ptr - buf);
    };
    for (const SweepRow& row : rows) {
        out << row.value << ',';
        put(row.report.mean_rmse);
        out << ',';
        put(row.report.mean_persistence_rmse);
        out << ',';
        put(row.report.relative_ratio);
        out << '\n';
    }
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
    return nlohmann::json{
        {"trace_file", config.trace_file},
        {"synth_app", std::string(tracecast::to_string(config.synth_app))},
        {"synth_seed", config.synth_seed},
        {"synth_duration_s", config.synth_duration_s},
        {"tau", config.tau},
        {"feature_set", std::string(tracecast::to_string(config.feature_set))},
        {"target", std::string(to_string(config.target))},
        {"method", std::string(to_string(config.method))},
        {"arima_order",
         {{"p", config.arima_order.p},
          {"d", config.arima_order.d},
          {"q", config.arima_order.q}}},
        {"train_length", config.train_length},
        {"test_length", config.test_length},
        {"n_runs", config.n_runs},
        {"horizon", config.horizon},
        {"origin_floor", config.origin_floor},
        {"seed", config.seed},
        {"rnn_train",
         {{"window_length", config.rnn_train.window_length},
          {"learning_rate", config.rnn_train.learning_rate},
          {"epochs", config.rnn_train.epochs},
          {"batch_size", config.rnn_train.batch_size},
          {"seed", config.rnn_train.seed},
          {"gradient_clip_norm", config.rnn_train.gradient_clip_norm}}},
        {"rnn_hidden", config.rnn_hidden},
        {"max_train_windows", config.max_train_windows},
    };
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig config;
    try {
        const auto set_string = [&](const char* key, auto parse, auto& out,
                                    const char* what) {
            if (!j.contains(key)) return;
            const std::string s = j.at(key).get<std::string>();
            if (!parse(s, out)) {
                throw Error(ErrorKind::ParseError,
                            std::string("config: unknown ") + what + " '" + s +
                                "'");
            }
        };
        if (j.contains("trace_file")) {
            config.trace_file = j.at("trace_file").get<std::string>();
        }
        set_string("synth_app", app_from_string, config.synth_app, "app");
        if (j.contains("synth_seed")) {
            config.synth_seed = j.at("synth_seed").get<std::uint64_t>();
        }
        if (j.contains("synth_duration_s")) {
            config.synth_duration_s = j.at("synth_duration_s").get<double>();
        }
        if (j.contains("tau")) config.tau = j.at("tau").get<double>();
        set_string("feature_set", feature_set_from_string, config.feature_set,
                   "feature set");
        set_string("target", target_from_string, config.target, "target");
        set_string("method", method_from_string, config.method, "method");
        if (j.contains("arima_order")) {
            const auto& o = j.at("arima_order");
            config.arima_order = {o.at("p").get<int>(), o.at("d").get<int>(),
                                  o.at("q").get<int>()};
        }
        if (j.contains("train_length")) {
            config.train_length = j.at("train_length").get<std::size_t>();
        }
        if (j.contains("test_length")) {
            config.test_length = j.at("test_length").get<std::size_t>();
        }
        if (j.contains("n_runs")) config.n_runs = j.at("n_runs").get<std::size_t>();
        if (j.contains("horizon")) config.horizon = j.at("horizon").get<std::size_t>();
        if (j.contains("origin_floor")) {
            config.origin_floor = j.at("origin_floor").get<std::size_t>();
        }
        if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("rnn_train")) {
            const auto& t = j.at("rnn_train");
            auto& r = config.rnn_train;
            if (t.contains("window_length")) {
                r.window_length = t.at("window_length").get<std::size_t>();
            }
            if (t.contains("learning_rate")) {
                r.learning_rate = t.at("learning_rate").get<double>();
            }
            if (t.contains("epochs")) r.epochs = t.at("epochs").get<std::size_t>();
            if (t.contains("batch_size")) {
                r.batch_size = t.at("batch_size").get<std::size_t>();
            }
            if (t.contains("seed")) r.seed = t.at("seed").get<std::uint64_t>();
            if (t.contains("gradient_clip_norm")) {
                r.gradient_clip_norm = t.at("gradient_clip_norm").get<double>();
            }
        }
        if (j.contains("rnn_hidden")) {
            config.rnn_hidden = j.at("rnn_hidden").get<std::size_t>();
        }
        if (j.contains("max_train_windows")) {
            config.max_train_windows = j.at("max_train_windows").get<std::size_t>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError,
                    std::string("config json: ") + e.what());
    }
    return config;
}

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json runs = nlohmann::json::array();
    for (const RunResult& run : report.runs) {
        runs.push_back({{"origin", run.origin},
                        {"rmse", run.method_rmse},
                        {"persistence_rmse", run.persistence_rmse}});
    }
    return nlohmann::json{
        {"config", config_to_json(report.config)},
        {"runs", runs},
        {"mean_rmse", report.mean_rmse},
        {"mean_persistence_rmse", report.mean_persistence_rmse},
        {"relative_ratio", report.relative_ratio},
    };
}

BurstExperimentResult run_burst_experiment(const BurstExperimentConfig& config) {
    ExperimentConfig base = config.base;
    base.origin_floor = 0;
    base.n_runs = 1;
    base.horizon = 1;
    const PreparedTrace trace = prepare_trace(base);

    const std::size_t train_len = base.train_length;
    const std::size_t test_len = base.test_length;
    const std::size_t origin = train_len;

    const std::vector<double> train_span(
        trace.target.begin(),
        trace.target.begin() + static_cast<std::ptrdiff_t>(train_len));
    const double sd = stdev_of(train_span);
    BurstExperimentResult result;
    result.burst_threshold = config.burst_sd_multiple * sd;

    const std::vector<std::uint8_t> labels =
        burst::label_bursts(trace.target, result.burst_threshold);

    // Probability forecaster: same windowing as the regression path, but the
    // training target is the next interval's burst label.
    const FeatureSet fs = feature_set(base.feature_set);
    const std::size_t window = base.rnn_train.window_length;
    if (train_len <= window) {
        throw Error(ErrorKind::ArgumentError,
                    "burst experiment: train_length must exceed the RNN window");
    }
    const Normalizer norm = Normalizer::fit(trace.matrix, 0, train_len);
    rnn::GruNetwork net =
        rnn::make_network(trace.matrix.rows, base.rnn_hidden, 1,
                          rnn::HeadKind::SigmoidBinary, window,
                          mix_seed(base.seed, 7001));
    net.normalizer = norm;
    net.input_feature_names = fs.row_names();

    const auto picks =
        thinned_indices(train_len - window, base.max_train_windows);
    std::vector<rnn::Sample> samples;
    samples.reserve(picks.size());
    for (std::size_t pick : picks) {
        const std::size_t pos = window + pick;
        rnn::Sample s;
        s.window = norm.transform(trace.matrix.slice_cols(pos - window, pos));
        s.target = {static_cast<double>(labels[pos])};
        samples.push_back(std::move(s));
    }
    rnn::TrainConfig train_config = base.rnn_train;
    train_config.seed = mix_seed(base.seed, 7002);
    rnn::train(net, samples, train_config);

    std::vector<double> probabilities(test_len);
    std::vector<std::uint8_t> test_labels(test_len);
    for (std::size_t j = 0; j < test_len; ++j) {
        const std::size_t base_idx = origin + j;
        probabilities[j] =
            burst::predict_burst(
                net, trace.matrix.slice_cols(base_idx - window, base_idx), 0.5)
                .probability;
        test_labels[j] = labels[base_idx];
    }

    std::vector<double> grid = config.theta_grid;
    if (grid.empty()) {
        for (int i = 1; i <= 99; ++i) grid.push_back(i / 100.0);
    }
    result.sweep = burst::sweep_thresholds(probabilities, test_labels, grid);

    result.crossover_report = result.sweep.curve.front();
    for (const burst::BurstReport& row : result.sweep.curve) {
        if (row.theta == result.sweep.crossover) {
            result.crossover_report = row;
            break;
        }
    }
    result.prevalence = result.crossover_report.prevalence;

    const std::vector<std::uint8_t> naive =
        burst::persistence_burst_baseline(test_labels);
    result.persistence_report = burst::score_decisions(naive, test_labels, -1.0);
    return result;
}

std::vector<classify::LabeledWindow> mixture_windows(const MixtureSpec& spec,
                                                     const FeatureSet& fs,
                                                     std::size_t window_length) {
    if (spec.apps.size() < 2 || spec.cycles == 0 || spec.segment_s <= 0.0 ||
        spec.tau <= 0.0 || window_length == 0) {
        throw Error(ErrorKind::ArgumentError, "mixture_windows: bad spec");
    }
    std::vector<ScheduleSegment> schedule;
    schedule.reserve(spec.apps.size() * spec.cycles);
    double t = 0.0;
    for (std::size_t cycle = 0; cycle < spec.cycles; ++cycle) {
        for (AppKind app : spec.apps) {
            schedule.push_back({profile_for(app), t, t + spec.segment_s});
            t += spec.segment_s;
        }
    }
    const MixtureTrace mixture = generate_mixture(schedule, spec.tau, spec.seed);
    const std::vector<IntervalFeatures> intervals =
        bin_intervals(mixture.records, spec.tau, t);
    const FeatureMatrix matrix = build_matrix(intervals, fs, spec.tau);

    std::vector<AppKind> app_by_index(intervals.size(), AppKind::Background);
    std::vector<std::uint8_t> labeled(intervals.size(), 0);
    for (const LabeledInterval& li : mixture.labels) {
        if (li.index < intervals.size()) {
            app_by_index[li.index] = li.app;
            labeled[li.index] = 1;
        }
    }

    std::vector<classify::LabeledWindow> windows;
    for (std::size_t pos = window_length; pos <= intervals.size(); ++pos) {
        const std::size_t start = pos - window_length;
        if (!labeled[start]) continue;
        const AppKind app = app_by_index[start];
        bool uniform = true;
        for (std::size_t i = start + 1; i < pos; ++i) {
            if (!labeled[i] || app_by_index[i] != app) {
                uniform = false;
                break;
            }
        }
        if (!uniform) continue;
        windows.push_back({matrix.slice_cols(start, pos), app, start});
    }
    return windows;
}

ClassificationResult run_classification(const ClassificationConfig& config) {
    if (config.k_folds < 2) {
        throw Error(ErrorKind::ArgumentError,
                    "run_classification: k_folds must be >= 2");
    }
    const FeatureSet fs = feature_set(config.feature_set);
    std::vector<classify::LabeledWindow> windows =
        mixture_windows(config.mixture, fs, config.rnn_train.window_length);
    if (windows.size() < config.k_folds * 2) {
        throw Error(ErrorKind::ArgumentError,
                    "run_classification: too few windows for the fold count");
    }

    if (config.shuffle_labels) {
        std::vector<AppKind> apps;
        apps.reserve(windows.size());
        for (const auto& w : windows) apps.push_back(w.app);
        Rng rng(mix_seed(config.mixture.seed, 0x5F));
        rng.shuffle(apps);
        for (std::size_t i = 0; i < windows.size(); ++i) windows[i].app = apps[i];
    }

    const std::size_t window_length = config.rnn_train.window_length;
    const double decision_s = config.decision_interval_s > 0.0
                                  ? config.decision_interval_s
                                  : config.mixture.tau;

    ClassificationResult result;
    for (std::size_t fold = 0; fold < config.k_folds; ++fold) {
        const std::size_t begin = fold * windows.size() / config.k_folds;
        const std::size_t end = (fold + 1) * windows.size() / config.k_folds;
        const std::size_t guard_lo = windows[begin].start;
        const std::size_t guard_hi = windows[end - 1].start + window_length;

        std::vector<classify::LabeledWindow> test(
            windows.begin() + static_cast<std::ptrdiff_t>(begin),
            windows.begin() + static_cast<std::ptrdiff_t>(end));
        std::vector<classify::LabeledWindow> train;
        train.reserve(windows.size() - test.size());
        for (std::size_t i = 0; i < windows.size(); ++i) {
            if (i >= begin && i < end) continue;
            // Skip training windows sharing intervals with the test block.
            if (windows[i].start + window_length > guard_lo &&
                windows[i].start < guard_hi) {
                continue;
            }
            train.push_back(windows[i]);
        }

        rnn::TrainConfig fold_config = config.rnn_train;
        fold_config.seed = mix_seed(config.mixture.seed, 0x900 + fold);
        const rnn::GruNetwork net =
            classify::train_classifier(train, fs, fold_config, config.rnn_hidden);
        result.folds.push_back(classify::evaluate_classifier(
            net, test, decision_s, config.feature_set));
    }

    // Folds share one label universe; sum their confusions for the overall view.
    classify::ClassReport overall = result.folds.front();
    for (std::size_t f = 1; f < result.folds.size(); ++f) {
        const classify::ClassReport& fold_report = result.folds[f];
        if (fold_report.labels != overall.labels) {
            throw Error(ErrorKind::ContractViolation,
                        "run_classification: folds disagree on class labels");
        }
        for (std::size_t r = 0; r < overall.confusion.size(); ++r) {
            for (std::size_t c = 0; c < overall.confusion.size(); ++c) {
                overall.confusion[r][c] += fold_report.confusion[r][c];
            }
        }
    }
    std::uint64_t total = 0;
    std::uint64_t correct = 0;
    for (std::size_t r = 0; r < overall.confusion.size(); ++r) {
        std::uint64_t support = 0;
        for (std::size_t c = 0; c < overall.confusion.size(); ++c) {
            support += overall.confusion[r][c];
        }
        total += support;
        correct += overall.confusion[r][r];
        overall.per_class_recall[r] =
            support > 0 ? static_cast<double>(overall.confusion[r][r]) /
                              static_cast<double>(support)
                        : std::numeric_limits<double>::quiet_NaN();
    }
    overall.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    result.overall = std::move(overall);
    return result;
}

}  // namespace tracecast::harness
