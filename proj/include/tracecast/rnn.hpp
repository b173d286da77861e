#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

#include "tracecast/features.hpp"
#include "tracecast/linalg.hpp"

namespace tracecast::rnn {

enum class HeadKind { Regression, Softmax, SigmoidBinary };

std::string_view to_string(HeadKind head);
bool head_from_string(std::string_view s, HeadKind& out);

// Gate matrices per the cell equations: r = sigm(W_r x + U_r h), z likewise,
// candidate h_new = tanh(W x + U (r ∘ h)).
struct GruParams {
    Mat w_r, w_z, w;
    Mat u_r, u_z, u;
};

struct GruNetwork {
    std::size_t input_size = 0;
    std::size_t hidden_size = 0;
    std::size_t output_size = 0;
    std::size_t window_length = 0;
    std::size_t target_row = 0;
    HeadKind head = HeadKind::Regression;
    GruParams cell;
    Mat fc_w;
    Vec fc_b;
    std::vector<std::string> input_feature_names;
    std::vector<std::string> output_labels;
    Normalizer normalizer;
};

GruNetwork make_network(std::size_t input_size, std::size_t hidden_size,
                        std::size_t output_size, HeadKind head,
                        std::size_t window_length, std::uint64_t seed);

Vec gru_cell_forward(const Vec& x, const Vec& h_prev, const GruParams& params);

struct ForwardCache {
    std::vector<Vec> xs, rs, zs, cands, hs;
    Vec logits;
    Vec output;
    bool valid = false;
};

Vec forward_sequence(const GruNetwork& net, const FeatureMatrix& window,
                     ForwardCache* cache = nullptr);

double loss(const Vec& output, const Vec& target, HeadKind head);

struct Gradients {
    GruParams cell;
    Mat fc_w;
    Vec fc_b;

    void accumulate(const Gradients& other);
    void scale(double factor);
    double squared_norm() const;
};

Gradients zero_gradients(const GruNetwork& net);

Gradients backward(const GruNetwork& net, const ForwardCache& cache,
                   const Vec& target);

struct Sample {
    FeatureMatrix window;
    Vec target;
};

struct TrainConfig {
    std::size_t window_length = 20;
    double learning_rate = 1e-3;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    double gradient_clip_norm = 5.0;
};

// Mean per-sample loss for each epoch, recorded before that epoch's updates
// are applied to the following batches.
std::vector<double> train(GruNetwork& net, const std::vector<Sample>& dataset,
                          const TrainConfig& config);

Vec predict_next(const GruNetwork& net, const FeatureMatrix& recent,
                 std::size_t n);

nlohmann::json network_to_json(const GruNetwork& net);
GruNetwork network_from_json(const nlohmann::json& j);

}  // namespace tracecast::rnn
