#include "tracecast/burst.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include "tracecast/error.hpp"

namespace tracecast::burst {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::vector<std::uint8_t> label_bursts(const std::vector<double>& series,
                                       double burst_threshold) {
    std::vector<std::uint8_t> labels(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        labels[i] = series[i] > burst_threshold ? 1 : 0;
    }
    return labels;
}

std::vector<std::uint8_t> persistence_burst_baseline(
    const std::vector<std::uint8_t>& labels) {
    if (labels.size() < 2) {
        throw Error(ErrorKind::ArgumentError,
                    "persistence_burst_baseline: need at least 2 labels");
    }
    std::vector<std::uint8_t> pred(labels.size(), 0);
    for (std::size_t t = 1; t < labels.size(); ++t) pred[t] = labels[t - 1];
    return pred;
}

BurstReport score_decisions(const std::vector<std::uint8_t>& predicted,
                            const std::vector<std::uint8_t>& labels,
                            double theta) {
    if (predicted.size() != labels.size() || labels.empty()) {
        throw Error(ErrorKind::ArgumentError,
                    "score_decisions: prediction/label size mismatch");
    }
    BurstReport report;
    report.theta = theta;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) {
            predicted[i] ? ++report.tp : ++report.fn;
        } else {
            predicted[i] ? ++report.fp : ++report.tn;
        }
    }
    const double total = static_cast<double>(labels.size());
    const double bursts = static_cast<double>(report.tp + report.fn);
    const double quiet = static_cast<double>(report.tn + report.fp);
    report.recall_burst = bursts > 0 ? static_cast<double>(report.tp) / bursts : kNan;
    report.recall_nonburst = quiet > 0 ? static_cast<double>(report.tn) / quiet : kNan;
    report.accuracy = static_cast<double>(report.tp + report.tn) / total;
    report.prevalence = bursts / total;
    return report;
}

BurstPrediction predict_burst(const rnn::GruNetwork& net,
                              const FeatureMatrix& recent, double theta) {
    if (net.head != rnn::HeadKind::SigmoidBinary || net.output_size != 1) {
        throw Error(ErrorKind::ContractViolation,
                    "predict_burst: needs a scalar sigmoid head");
    }
    if (theta < 0.0 || theta > 1.0) {
        throw Error(ErrorKind::ArgumentError, "predict_burst: theta outside [0,1]");
    }
    if (recent.rows != net.input_size) {
        throw Error(ErrorKind::ArgumentError, "predict_burst: feature row mismatch");
    }
    if (recent.cols < net.window_length) {
        throw Error(ErrorKind::ArgumentError,
                    "predict_burst: history shorter than window length");
    }
    if (!net.normalizer.fitted() || net.normalizer.dimensions() != net.input_size) {
        throw Error(ErrorKind::ContractViolation,
                    "predict_burst: network lacks a usable normalizer");
    }
    const FeatureMatrix window = net.normalizer.transform(
        recent.slice_cols(recent.cols - net.window_length, recent.cols));
    const Vec out = rnn::forward_sequence(net, window);
    BurstPrediction pred;
    pred.probability = out[0];
    pred.is_burst = pred.probability >= theta;
    return pred;
}

SweepResult sweep_thresholds(const std::vector<double>& probabilities,
                             const std::vector<std::uint8_t>& labels,
                             const std::vector<double>& grid) {
    if (grid.empty()) {
        throw Error(ErrorKind::ArgumentError, "sweep_thresholds: empty grid");
    }
    if (!std::is_sorted(grid.begin(), grid.end())) {
        throw Error(ErrorKind::ArgumentError,
                    "sweep_thresholds: grid must be sorted ascending");
    }
    if (probabilities.size() != labels.size() || labels.empty()) {
        throw Error(ErrorKind::ArgumentError,
                    "sweep_thresholds: probability/label size mismatch");
    }

    SweepResult result;
    result.curve.reserve(grid.size());
    result.crossover = kNan;
    double best_gap = std::numeric_limits<double>::infinity();
    std::vector<std::uint8_t> decisions(labels.size());
    for (double theta : grid) {
        for (std::size_t i = 0; i < probabilities.size(); ++i) {
            decisions[i] = probabilities[i] >= theta ? 1 : 0;
        }
        BurstReport report = score_decisions(decisions, labels, theta);
        const double gap = std::fabs(report.recall_burst - report.recall_nonburst);
        if (std::isfinite(gap) && gap < best_gap) {
            best_gap = gap;
            result.crossover = theta;
        }
        result.curve.push_back(report);
    }
    return result;
}

void write_sweep_csv(const SweepResult& sweep, std::ostream& out) {
    out << "theta,recall_burst,recall_nonburst,accuracy,tp,fp,tn,fn\n";
    char buf[64];
    const auto put = [&](double v) {
        const auto res = std::to_chars(buf, buf + sizeof(buf), v);
        out.write(buf, res.ptr - buf);
    };
    for (const BurstReport& r : sweep.curve) {
        put(r.theta);
        out << ',';
        put(r.recall_burst);
        out << ',';
        put(r.recall_nonburst);
        out << ',';
        put(r.accuracy);
        out << ',' << r.tp << ',' << r.fp << ',' << r.tn << ',' << r.fn << '\n';
    }
}

}  // namespace tracecast::burst
