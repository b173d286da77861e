#include <cmath>
#include <vector>

#include "doctest.h"

#include "tracecast/error.hpp"
#include "tracecast/rng.hpp"
#include "tracecast/rnn.hpp"

using namespace tracecast;
using namespace tracecast::rnn;

namespace {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar transcription of the cell equations, written without any of the
// library's matrix helpers. hidden = input = 1, so every weight is a number.
double scalar_cell(double x, double h, double wr, double ur, double wz,
                   double uz, double w, double u) {
    const double r = sigm(wr * x + ur * h);
    const double z = sigm(wz * x + uz * h);
    const double cand = std::tanh(w * x + u * (r * h));
    return z * h + (1.0 - z) * cand;
}

FeatureMatrix window_from(const std::vector<std::vector<double>>& cols) {
    FeatureMatrix m;
    m.cols = cols.size();
    m.rows = cols.empty() ? 0 : cols[0].size();
    for (const auto& col : cols) {
        m.data.insert(m.data.end(), col.begin(), col.end());
    }
    return m;
}

GruNetwork tiny_network(std::size_t input, std::size_t hidden,
                        std::size_t output, HeadKind head, std::size_t window,
                        std::uint64_t seed) {
    GruNetwork net = make_network(input, hidden, output, head, window, seed);
    net.normalizer = Normalizer::from_parts(std::vector<double>(input, 0.0),
                                            std::vector<double>(input, 1.0));
    return net;
}

// Central finite differences against the analytic gradient, one coordinate
// at a time.
void check_gradients(GruNetwork& net, const FeatureMatrix& window,
                     const Vec& target, double tol) {
    ForwardCache cache;
    forward_sequence(net, window, &cache);
    const Gradients grads = backward(net, cache, target);

    const double h = 1e-5;
    auto numeric = [&](double* param) {
        const double saved = *param;
        *param = saved + h;
        const double up = loss(forward_sequence(net, window), target, net.head);
        *param = saved - h;
        const double down = loss(forward_sequence(net, window), target, net.head);
        *param = saved;
        return (up - down) / (2.0 * h);
    };

    auto check_block = [&](std::vector<double>& params,
                           const std::vector<double>& analytic) {
        REQUIRE(params.size() == analytic.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double num = numeric(&params[i]);
            const double denom = std::max({std::abs(num), std::abs(analytic[i]), 1e-8});
            CHECK(std::abs(num - analytic[i]) / denom < tol);
        }
    };

    check_block(net.cell.w_r.data, grads.cell.w_r.data);
    check_block(net.cell.w_z.data, grads.cell.w_z.data);
    check_block(net.cell.w.data, grads.cell.w.data);
    check_block(net.cell.u_r.data, grads.cell.u_r.data);
    check_block(net.cell.u_z.data, grads.cell.u_z.data);
    check_block(net.cell.u.data, grads.cell.u.data);
    check_block(net.fc_w.data, grads.fc_w.data);
    check_block(net.fc_b, grads.fc_b);
}

// Windows drawn from two bands of a sine curve; target is the next value.
// Learnable by a small cell within a few epochs.
std::vector<Sample> sine_samples(std::size_t count, std::size_t window) {
    std::vector<Sample> out;
    for (std::size_t s = 0; s < count; ++s) {
        std::vector<std::vector<double>> cols;
        const double phase = 0.37 * static_cast<double>(s);
        for (std::size_t t = 0; t < window; ++t) {
            cols.push_back({std::sin(phase + 0.4 * static_cast<double>(t))});
        }
        Sample sample;
        sample.window = window_from(cols);
        sample.target = {std::sin(phase + 0.4 * static_cast<double>(window))};
        out.push_back(std::move(sample));
    }
    return out;
}

}  // namespace

TEST_SUITE("rnn") {

TEST_CASE("vectorized cell matches the scalar transcription") {
    GruNetwork net = tiny_network(1, 1, 1, HeadKind::Regression, 3, 5);
    net.cell.w_r.at(0, 0) = 0.31;
    net.cell.u_r.at(0, 0) = -0.45;
    net.cell.w_z.at(0, 0) = 0.12;
    net.cell.u_z.at(0, 0) = 0.77;
    net.cell.w.at(0, 0) = -0.6;
    net.cell.u.at(0, 0) = 0.25;
    net.fc_w.at(0, 0) = 1.3;
    net.fc_b[0] = -0.2;

    const std::vector<double> inputs = {0.9, -0.4, 0.05};
    double h = 0.0;
    for (double x : inputs) {
        h = scalar_cell(x, h, 0.31, -0.45, 0.12, 0.77, -0.6, 0.25);
    }
    const double expected_out = 1.3 * h - 0.2;

    const FeatureMatrix window = window_from({{0.9}, {-0.4}, {0.05}});
    const Vec y = forward_sequence(net, window);
    REQUIRE(y.size() == 1);
    CHECK(y[0] == doctest::Approx(expected_out).epsilon(1e-12));

    Vec step = gru_cell_forward({inputs[0]}, {0.0}, net.cell);
    CHECK(step[0] ==
          doctest::Approx(scalar_cell(inputs[0], 0.0, 0.31, -0.45, 0.12, 0.77,
                                      -0.6, 0.25))
              .epsilon(1e-12));
}

TEST_CASE("backpropagation matches finite differences for every head") {
    Rng rng(71);
    auto random_window = [&](std::size_t rows, std::size_t cols) {
        std::vector<std::vector<double>> data(cols);
        for (auto& col : data) {
            for (std::size_t r = 0; r < rows; ++r) col.push_back(rng.normal());
        }
        return window_from(data);
    };

    SUBCASE("regression") {
        GruNetwork net = tiny_network(2, 3, 1, HeadKind::Regression, 4, 7);
        check_gradients(net, random_window(2, 4), {0.3}, 1e-4);
    }
    SUBCASE("softmax") {
        GruNetwork net = tiny_network(2, 3, 3, HeadKind::Softmax, 4, 8);
        check_gradients(net, random_window(2, 4), {0.0, 1.0, 0.0}, 1e-4);
    }
    SUBCASE("sigmoid binary") {
        GruNetwork net = tiny_network(2, 3, 1, HeadKind::SigmoidBinary, 4, 9);
        check_gradients(net, random_window(2, 4), {1.0}, 1e-4);
    }
}

TEST_CASE("head losses match their closed forms") {
    CHECK(loss({2.5}, {1.0}, HeadKind::Regression) ==
          doctest::Approx(2.25).epsilon(1e-12));
    CHECK(loss({0.2, 0.5, 0.3}, {0.0, 1.0, 0.0}, HeadKind::Softmax) ==
          doctest::Approx(-std::log(0.5)).epsilon(1e-12));
    CHECK(loss({0.8}, {1.0}, HeadKind::SigmoidBinary) ==
          doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("softmax probabilities are a distribution") {
    GruNetwork net = tiny_network(2, 4, 3, HeadKind::Softmax, 5, 11);
    Rng rng(12);
    std::vector<std::vector<double>> cols(5);
    for (auto& c : cols) c = {rng.normal(), rng.normal()};
    const Vec y = forward_sequence(net, window_from(cols));
    double sum = 0.0;
    for (double p : y) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("training is deterministic and reduces the loss") {
    const auto samples = sine_samples(64, 6);
    TrainConfig config;
    config.window_length = 6;
    config.epochs = 25;
    config.batch_size = 8;
    config.seed = 3;

    GruNetwork a = tiny_network(1, 6, 1, HeadKind::Regression, 6, 21);
    GruNetwork b = tiny_network(1, 6, 1, HeadKind::Regression, 6, 21);
    const auto trace_a = train(a, samples, config);
    const auto trace_b = train(b, samples, config);

    CHECK(trace_a == trace_b);
    CHECK(a.cell.w.data == b.cell.w.data);
    CHECK(a.fc_w.data == b.fc_w.data);
    REQUIRE(trace_a.size() == 25);
    CHECK(trace_a.back() < 0.5 * trace_a.front());

    GruNetwork c = tiny_network(1, 6, 1, HeadKind::Regression, 6, 22);
    train(c, samples, config);
    CHECK(c.cell.w.data != a.cell.w.data);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
    const auto samples = sine_samples(16, 4);
    GruNetwork net = tiny_network(1, 3, 1, HeadKind::Regression, 4, 31);
    const GruNetwork before = net;
    TrainConfig config;
    config.window_length = 4;
    config.learning_rate = 0.0;
    config.epochs = 2;
    train(net, samples, config);
    CHECK(net.cell.w.data == before.cell.w.data);
    CHECK(net.cell.u_r.data == before.cell.u_r.data);
    CHECK(net.fc_w.data == before.fc_w.data);
    CHECK(net.fc_b == before.fc_b);
}

TEST_CASE("an inactive clip threshold does not perturb updates") {
    const auto samples = sine_samples(32, 4);
    TrainConfig small;
    small.window_length = 4;
    small.epochs = 3;
    small.gradient_clip_norm = 5.0;
    TrainConfig huge = small;
    huge.gradient_clip_norm = 5e6;

    GruNetwork a = tiny_network(1, 4, 1, HeadKind::Regression, 4, 41);
    GruNetwork b = a;
    train(a, samples, small);
    train(b, samples, huge);
    // Early-training gradient norms on this toy stay far below 5, so both
    // configurations take identical steps.
    CHECK(a.cell.w.data == b.cell.w.data);
    CHECK(a.fc_w.data == b.fc_w.data);
}

TEST_CASE("divergence surfaces as a structured error") {
    // Squared error against a target of 1e155 overflows double on the very
    // first forward pass.
    std::vector<Sample> wild;
    for (int i = 0; i < 8; ++i) {
        wild.push_back({window_from({{1.0}, {-1.0}}), {1e155}});
    }
    GruNetwork net = tiny_network(1, 2, 1, HeadKind::Regression, 2, 51);
    TrainConfig config;
    config.window_length = 2;
    config.epochs = 3;
    try {
        train(net, wild, config);
        FAIL_CHECK("training accepted a non-finite loss");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Divergence);
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("predict_next rolls the window forward on its own output") {
    // Two rows; target row 0. Weights chosen so the prediction is a fixed
    // positive constant in normalized units, making the roll-forward visible.
    GruNetwork net = tiny_network(2, 2, 1, HeadKind::Regression, 3, 61);
    net.target_row = 0;
    net.normalizer = Normalizer::from_parts({10.0, 20.0}, {2.0, 4.0});

    FeatureMatrix recent = window_from({{10.0, 20.0}, {12.0, 24.0}, {14.0, 22.0}});
    const Vec path = predict_next(net, recent, 4);
    REQUIRE(path.size() == 4);
    for (double v : path) CHECK(v >= 0.0);

    // Longer history: only the trailing window_length columns matter.
    FeatureMatrix padded =
        window_from({{99.0, 99.0}, {10.0, 20.0}, {12.0, 24.0}, {14.0, 22.0}});
    CHECK(predict_next(net, padded, 4) == path);

    GruNetwork softmax_net = tiny_network(2, 2, 3, HeadKind::Softmax, 3, 62);
    CHECK_THROWS_AS(predict_next(softmax_net, recent, 2), Error);
}

TEST_CASE("network json round trip preserves behaviour bit-exactly") {
    const auto samples = sine_samples(32, 5);
    GruNetwork net = tiny_network(1, 5, 1, HeadKind::Regression, 5, 71);
    TrainConfig config;
    config.window_length = 5;
    config.epochs = 2;
    train(net, samples, config);
    net.input_feature_names = {"ul_count"};

    const GruNetwork back = network_from_json(network_to_json(net));
    CHECK(back.hidden_size == net.hidden_size);
    CHECK(back.input_feature_names == net.input_feature_names);
    for (const auto& sample : sine_samples(5, 5)) {
        CHECK(forward_sequence(back, sample.window) ==
              forward_sequence(net, sample.window));
    }

    nlohmann::json j = network_to_json(net);
    j["fc"]["b"].push_back(0.0);
    CHECK_THROWS_AS(network_from_json(j), Error);
    nlohmann::json j2 = network_to_json(net);
    j2["cell"]["w_r"][0] = "oops";
    CHECK_THROWS_AS(network_from_json(j2), Error);
}

}  // TEST_SUITE
