#include "tracecast/rnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tracecast/error.hpp"
#include "tracecast/rng.hpp"

namespace tracecast::rnn {

namespace {

double sigm(double a) { return 1.0 / (1.0 + std::exp(-a)); }

Mat init_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Mat m(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    for (double& v : m.data) v = (2.0 * rng.uniform01() - 1.0) * bound;
    return m;
}

// Fixed tensor order shared by gradient accumulation, clipping, and the
// optimizer so reductions stay deterministic.
template <typename Net>
auto tensor_list(Net& net) {
    return std::array{&net.cell.w_r.data, &net.cell.w_z.data, &net.cell.w.data,
                      &net.cell.u_r.data, &net.cell.u_z.data, &net.cell.u.data,
                      &net.fc_w.data,     &net.fc_b};
}

auto tensor_list(Gradients& g) {
    return std::array{&g.cell.w_r.data, &g.cell.w_z.data, &g.cell.w.data,
                      &g.cell.u_r.data, &g.cell.u_z.data, &g.cell.u.data,
                      &g.fc_w.data,     &g.fc_b};
}

auto tensor_list(const Gradients& g) {
    return std::array{&g.cell.w_r.data, &g.cell.w_z.data, &g.cell.w.data,
                      &g.cell.u_r.data, &g.cell.u_z.data, &g.cell.u.data,
                      &g.fc_w.data,     &g.fc_b};
}

Vec window_column(const FeatureMatrix& window, std::size_t c) {
    const double* col = window.col_ptr(c);
    return Vec(col, col + window.rows);
}

void apply_head(HeadKind head, const Vec& logits, Vec& output) {
    output = logits;
    switch (head) {
        case HeadKind::Regression:
            break;
        case HeadKind::Softmax: {
            const double top = *std::max_element(output.begin(), output.end());
            double total = 0.0;
            for (double& v : output) {
                v = std::exp(v - top);
                total += v;
            }
            for (double& v : output) v /= total;
            break;
        }
        case HeadKind::SigmoidBinary:
            for (double& v : output) v = sigm(v);
            break;
    }
}

}  // namespace

std::string_view to_string(HeadKind head) {
    switch (head) {
        case HeadKind::Regression: return "regression";
        case HeadKind::Softmax: return "softmax";
        case HeadKind::SigmoidBinary: return "sigmoid_binary";
    }
    return "regression";
}

bool head_from_string(std::string_view s, HeadKind& out) {
    if (s == "regression") { out = HeadKind::Regression; return true; }
    if (s == "softmax") { out = HeadKind::Softmax; return true; }
    if (s == "sigmoid_binary") { out = HeadKind::SigmoidBinary; return true; }
    return false;
}

GruNetwork make_network(std::size_t input_size, std::size_t hidden_size,
                        std::size_t output_size, HeadKind head,
                        std::size_t window_length, std::uint64_t seed) {
    if (input_size == 0 || hidden_size == 0 || output_size == 0 ||
        window_length == 0) {
        throw Error(ErrorKind::ArgumentError, "make_network: zero dimension");
    }
    GruNetwork net;
    net.input_size = input_size;
    net.hidden_size = hidden_size;
    net.output_size = output_size;
    net.window_length = window_length;
    net.head = head;

    Rng rng(seed);
    net.cell.w_r = init_matrix(hidden_size, input_size, rng);
    net.cell.w_z = init_matrix(hidden_size, input_size, rng);
    net.cell.w = init_matrix(hidden_size, input_size, rng);
    net.cell.u_r = init_matrix(hidden_size, hidden_size, rng);
    net.cell.u_z = init_matrix(hidden_size, hidden_size, rng);
    net.cell.u = init_matrix(hidden_size, hidden_size, rng);
    net.fc_w = init_matrix(output_size, hidden_size, rng);
    net.fc_b.assign(output_size, 0.0);
    return net;
}

Vec gru_cell_forward(const Vec& x, const Vec& h_prev, const GruParams& params) {
    const std::size_t hidden = params.w_r.rows;
    if (x.size() != params.w_r.cols || h_prev.size() != hidden ||
        params.u_r.rows != hidden || params.u_r.cols != hidden) {
        throw Error(ErrorKind::ArgumentError, "gru_cell_forward: dimension mismatch");
    }
    Vec r = matvec(params.w_r, x);
    Vec z = matvec(params.w_z, x);
    {
        const Vec ur = matvec(params.u_r, h_prev);
        const Vec uz = matvec(params.u_z, h_prev);
        for (std::size_t i = 0; i < hidden; ++i) {
            r[i] = sigm(r[i] + ur[i]);
            z[i] = sigm(z[i] + uz[i]);
        }
    }
    Vec gated(hidden);
    for (std::size_t i = 0; i < hidden; ++i) gated[i] = r[i] * h_prev[i];
    Vec cand = matvec(params.w, x);
    {
        const Vec uc = matvec(params.u, gated);
        for (std::size_t i = 0; i < hidden; ++i) cand[i] = std::tanh(cand[i] + uc[i]);
    }
    Vec h(hidden);
    for (std::size_t i = 0; i < hidden; ++i) {
        h[i] = z[i] * h_prev[i] + (1.0 - z[i]) * cand[i];
    }
    return h;
}

Vec forward_sequence(const GruNetwork& net, const FeatureMatrix& window,
                     ForwardCache* cache) {
    if (window.rows != net.input_size) {
        throw Error(ErrorKind::ArgumentError,
                    "forward_sequence: window has " + std::to_string(window.rows) +
                        " rows, net expects " + std::to_string(net.input_size));
    }
    if (window.cols == 0) {
        throw Error(ErrorKind::ArgumentError, "forward_sequence: empty window");
    }
    if (cache != nullptr) {
        *cache = ForwardCache{};
        cache->xs.reserve(window.cols);
        cache->rs.reserve(window.cols);
        cache->zs.reserve(window.cols);
        cache->cands.reserve(window.cols);
        cache->hs.reserve(window.cols);
    }

    const std::size_t hidden = net.hidden_size;
    Vec h(hidden, 0.0);
    for (std::size_t t = 0; t < window.cols; ++t) {
        Vec x = window_column(window, t);
        Vec r = matvec(net.cell.w_r, x);
        Vec z = matvec(net.cell.w_z, x);
        const Vec ur = matvec(net.cell.u_r, h);
        const Vec uz = matvec(net.cell.u_z, h);
        for (std::size_t i = 0; i < hidden; ++i) {
            r[i] = sigm(r[i] + ur[i]);
            z[i] = sigm(z[i] + uz[i]);
        }
        Vec gated(hidden);
        for (std::size_t i = 0; i < hidden; ++i) gated[i] = r[i] * h[i];
        Vec cand = matvec(net.cell.w, x);
        const Vec uc = matvec(net.cell.u, gated);
        for (std::size_t i = 0; i < hidden; ++i) {
            cand[i] = std::tanh(cand[i] + uc[i]);
        }
        Vec h_next(hidden);
        for (std::size_t i = 0; i < hidden; ++i) {
            h_next[i] = z[i] * h[i] + (1.0 - z[i]) * cand[i];
        }
        if (cache != nullptr) {
            cache->xs.push_back(std::move(x));
            cache->rs.push_back(std::move(r));
            cache->zs.push_back(std::move(z));
            cache->cands.push_back(std::move(cand));
            cache->hs.push_back(h_next);
        }
        h = std::move(h_next);
    }

    Vec logits = matvec(net.fc_w, h);
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += net.fc_b[i];
    Vec output;
    apply_head(net.head, logits, output);
    if (cache != nullptr) {
        cache->logits = logits;
        cache->output = output;
        cache->valid = true;
    }
    return output;
}

double loss(const Vec& output, const Vec& target, HeadKind head) {
    if (output.size() != target.size()) {
        throw Error(ErrorKind::ArgumentError, "loss: dimension mismatch");
    }
    double total = 0.0;
    switch (head) {
        case HeadKind::Regression:
        case HeadKind::SigmoidBinary:
            for (std::size_t i = 0; i < output.size(); ++i) {
                const double d = output[i] - target[i];
                total += d * d;
            }
            break;
        case HeadKind::Softmax:
            for (std::size_t i = 0; i < output.size(); ++i) {
                if (target[i] != 0.0) {
                    total -= target[i] * std::log(std::max(output[i], 1e-300));
                }
            }
            break;
    }
    return total;
}

void Gradients::accumulate(const Gradients& other) {
    auto dst = tensor_list(*this);
    auto src = tensor_list(other);
    for (std::size_t t = 0; t < dst.size(); ++t) {
        auto& a = *dst[t];
        const auto& b = *src[t];
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    }
}

void Gradients::scale(double factor) {
    for (auto* tensor : tensor_list(*this)) {
        for (double& v : *tensor) v *= factor;
    }
}

double Gradients::squared_norm() const {
    double total = 0.0;
    for (const auto* tensor : tensor_list(*this)) {
        for (double v : *tensor) total += v * v;
    }
    return total;
}

Gradients zero_gradients(const GruNetwork& net) {
    Gradients g;
    g.cell.w_r = Mat(net.hidden_size, net.input_size);
    g.cell.w_z = Mat(net.hidden_size, net.input_size);
    g.cell.w = Mat(net.hidden_size, net.input_size);
    g.cell.u_r = Mat(net.hidden_size, net.hidden_size);
    g.cell.u_z = Mat(net.hidden_size, net.hidden_size);
    g.cell.u = Mat(net.hidden_size, net.hidden_size);
    g.fc_w = Mat(net.output_size, net.hidden_size);
    g.fc_b.assign(net.output_size, 0.0);
    return g;
}

Gradients backward(const GruNetwork& net, const ForwardCache& cache,
                   const Vec& target) {
    if (!cache.valid || cache.hs.empty()) {
        throw Error(ErrorKind::ContractViolation,
                    "backward: missing forward cache");
    }
    if (target.size() != net.output_size ||
        cache.output.size() != net.output_size) {
        throw Error(ErrorKind::ArgumentError, "backward: target dimension mismatch");
    }

    const std::size_t hidden = net.hidden_size;
    const std::size_t steps = cache.hs.size();
    Gradients g = zero_gradients(net);

    Vec dlogits(net.output_size);
    switch (net.head) {
        case HeadKind::Regression:
            for (std::size_t i = 0; i < dlogits.size(); ++i) {
                dlogits[i] = 2.0 * (cache.output[i] - target[i]);
            }
            break;
        case HeadKind::SigmoidBinary:
            for (std::size_t i = 0; i < dlogits.size(); ++i) {
                const double y = cache.output[i];
                dlogits[i] = 2.0 * (y - target[i]) * y * (1.0 - y);
            }
            break;
        case HeadKind::Softmax:
            for (std::size_t i = 0; i < dlogits.size(); ++i) {
                dlogits[i] = cache.output[i] - target[i];
            }
            break;
    }

    add_outer(g.fc_w, dlogits, cache.hs[steps - 1]);
    for (std::size_t i = 0; i < dlogits.size(); ++i) g.fc_b[i] += dlogits[i];
    Vec dh = matvec_transpose(net.fc_w, dlogits);

    const Vec h0(hidden, 0.0);
    for (std::size_t t = steps; t-- > 0;) {
        const Vec& h_prev = t > 0 ? cache.hs[t - 1] : h0;
        const Vec& r = cache.rs[t];
        const Vec& z = cache.zs[t];
        const Vec& cand = cache.cands[t];
        const Vec& x = cache.xs[t];

        Vec da_c(hidden), da_r(hidden), da_z(hidden), gated(hidden);
        for (std::size_t i = 0; i < hidden; ++i) {
            const double dcand = dh[i] * (1.0 - z[i]);
            da_c[i] = dcand * (1.0 - cand[i] * cand[i]);
            gated[i] = r[i] * h_prev[i];
        }
        add_outer(g.cell.w, da_c, x);
        add_outer(g.cell.u, da_c, gated);

        const Vec through_u = matvec_transpose(net.cell.u, da_c);
        for (std::size_t i = 0; i < hidden; ++i) {
            const double dr = through_u[i] * h_prev[i];
            const double dz = dh[i] * (h_prev[i] - cand[i]);
            da_r[i] = dr * r[i] * (1.0 - r[i]);
            da_z[i] = dz * z[i] * (1.0 - z[i]);
        }
        add_outer(g.cell.w_r, da_r, x);
        add_outer(g.cell.u_r, da_r, h_prev);
        add_outer(g.cell.w_z, da_z, x);
        add_outer(g.cell.u_z, da_z, h_prev);

        const Vec via_r = matvec_transpose(net.cell.u_r, da_r);
        const Vec via_z = matvec_transpose(net.cell.u_z, da_z);
        for (std::size_t i = 0; i < hidden; ++i) {
            dh[i] = dh[i] * z[i] + through_u[i] * r[i] + via_r[i] + via_z[i];
        }
    }
    return g;
}

std::vector<double> train(GruNetwork& net, const std::vector<Sample>& dataset,
                          const TrainConfig& config) {
    if (dataset.empty()) {
        throw Error(ErrorKind::ArgumentError, "train: empty dataset");
    }
    if (config.epochs == 0 || config.batch_size == 0 ||
        config.gradient_clip_norm <= 0.0 || config.learning_rate < 0.0) {
        throw Error(ErrorKind::ArgumentError, "train: bad config");
    }
    for (const Sample& sample : dataset) {
        if (sample.window.rows != net.input_size ||
            sample.window.cols != dataset.front().window.cols ||
            sample.target.size() != net.output_size) {
            throw Error(ErrorKind::ArgumentError,
                        "train: sample shape mismatch");
        }
    }

    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;

    Gradients moment1 = zero_gradients(net);
    Gradients moment2 = zero_gradients(net);
    std::size_t step = 0;

    Rng rng(config.seed);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> epoch_losses;
    epoch_losses.reserve(config.epochs);
    ForwardCache cache;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;

        for (std::size_t start = 0; start < order.size();
             start += config.batch_size) {
            const std::size_t stop =
                std::min(order.size(), start + config.batch_size);
            Gradients batch_grad = zero_gradients(net);
            for (std::size_t i = start; i < stop; ++i) {
                const Sample& sample = dataset[order[i]];
                forward_sequence(net, sample.window, &cache);
                const double sample_loss =
                    loss(cache.output, sample.target, net.head);
                if (!std::isfinite(sample_loss)) {
                    throw Error(ErrorKind::Divergence,
                                "train: non-finite loss at epoch " +
                                    std::to_string(epoch) + ", learning rate " +
                                    std::to_string(config.learning_rate));
                }
                epoch_loss += sample_loss;
                batch_grad.accumulate(backward(net, cache, sample.target));
            }
            batch_grad.scale(1.0 / static_cast<double>(stop - start));

            const double norm = std::sqrt(batch_grad.squared_norm());
            if (norm > config.gradient_clip_norm) {
                batch_grad.scale(config.gradient_clip_norm / norm);
            }

            ++step;
            const double correction1 =
                1.0 - std::pow(kBeta1, static_cast<double>(step));
            const double correction2 =
                1.0 - std::pow(kBeta2, static_cast<double>(step));
            auto params = tensor_list(net);
            auto grads = tensor_list(static_cast<const Gradients&>(batch_grad));
            auto m1 = tensor_list(moment1);
            auto m2 = tensor_list(moment2);
            for (std::size_t t = 0; t < params.size(); ++t) {
                auto& p = *params[t];
                const auto& gvec = *grads[t];
                auto& mv = *m1[t];
                auto& vv = *m2[t];
                for (std::size_t i = 0; i < p.size(); ++i) {
                    mv[i] = kBeta1 * mv[i] + (1.0 - kBeta1) * gvec[i];
                    vv[i] = kBeta2 * vv[i] + (1.0 - kBeta2) * gvec[i] * gvec[i];
                    const double m_hat = mv[i] / correction1;
                    const double v_hat = vv[i] / correction2;
                    p[i] -= config.learning_rate * m_hat /
                            (std::sqrt(v_hat) + kEps);
                }
            }
        }
        epoch_losses.push_back(epoch_loss / static_cast<double>(dataset.size()));
    }
    return epoch_losses;
}

Vec predict_next(const GruNetwork& net, const FeatureMatrix& recent,
                 std::size_t n) {
    if (net.head != HeadKind::Regression || net.output_size != 1) {
        throw Error(ErrorKind::ArgumentError,
                    "predict_next: needs a scalar regression head");
    }
    if (recent.rows != net.input_size) {
        throw Error(ErrorKind::ArgumentError, "predict_next: feature row mismatch");
    }
    if (recent.cols < net.window_length) {
        throw Error(ErrorKind::ArgumentError,
                    "predict_next: history shorter than window length");
    }
    if (!net.normalizer.fitted() ||
        net.normalizer.dimensions() != net.input_size ||
        net.target_row >= net.input_size) {
        throw Error(ErrorKind::ContractViolation,
                    "predict_next: network lacks a usable normalizer/target row");
    }

    FeatureMatrix window = net.normalizer.transform(
        recent.slice_cols(recent.cols - net.window_length, recent.cols));

    Vec out;
    out.reserve(n);
    const std::size_t m = window.cols;
    for (std::size_t step = 0; step < n; ++step) {
        const Vec y = forward_sequence(net, window);
        const double value =
            std::max(0.0, net.normalizer.inverse_value(net.target_row, y[0]));
        out.push_back(value);

        Vec next_col(window.col_ptr(m - 1), window.col_ptr(m - 1) + window.rows);
        next_col[net.target_row] =
            net.normalizer.transform_value(net.target_row, value);
        for (std::size_t c = 0; c + 1 < m; ++c) {
            const double* src = window.col_ptr(c + 1);
            std::copy(src, src + window.rows, window.col_ptr(c));
        }
        std::copy(next_col.begin(), next_col.end(), window.col_ptr(m - 1));
    }
    return out;
}

namespace {

nlohmann::json mat_to_json(const Mat& m) { return m.data; }

Mat mat_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols,
                  const char* name) {
    Mat m(rows, cols);
    const auto values = j.get<std::vector<double>>();
    if (values.size() != rows * cols) {
        throw Error(ErrorKind::ParseError,
                    std::string("network json: ") + name + " has " +
                        std::to_string(values.size()) + " values, expected " +
                        std::to_string(rows * cols));
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::ParseError,
                        std::string("network json: non-finite weight in ") + name);
        }
    }
    m.data = values;
    return m;
}

}  // namespace

nlohmann::json network_to_json(const GruNetwork& net) {
    return nlohmann::json{
        {"version", 1},
        {"input_size", net.input_size},
        {"hidden_size", net.hidden_size},
        {"output_size", net.output_size},
        {"window_length", net.window_length},
        {"target_row", net.target_row},
        {"head", std::string(to_string(net.head))},
        {"input_feature_names", net.input_feature_names},
        {"output_labels", net.output_labels},
        {"normalizer",
         {{"shift", net.normalizer.shift()}, {"scale", net.normalizer.scale()}}},
        {"cell",
         {{"w_r", mat_to_json(net.cell.w_r)},
          {"w_z", mat_to_json(net.cell.w_z)},
          {"w", mat_to_json(net.cell.w)},
          {"u_r", mat_to_json(net.cell.u_r)},
          {"u_z", mat_to_json(net.cell.u_z)},
          {"u", mat_to_json(net.cell.u)}}},
        {"fc", {{"w", mat_to_json(net.fc_w)}, {"b", net.fc_b}}},
    };
}

GruNetwork network_from_json(const nlohmann::json& j) {
    GruNetwork net;
    try {
        if (j.at("version").get<int>() != 1) {
            throw Error(ErrorKind::ParseError, "network json: unknown version");
        }
        net.input_size = j.at("input_size").get<std::size_t>();
        net.hidden_size = j.at("hidden_size").get<std::size_t>();
        net.output_size = j.at("output_size").get<std::size_t>();
        net.window_length = j.at("window_length").get<std::size_t>();
        net.target_row = j.at("target_row").get<std::size_t>();
        const std::string head_name = j.at("head").get<std::string>();
        if (!head_from_string(head_name, net.head)) {
            throw Error(ErrorKind::ParseError,
                        "network json: unknown head '" + head_name + "'");
        }
        net.input_feature_names =
            j.at("input_feature_names").get<std::vector<std::string>>();
        net.output_labels = j.at("output_labels").get<std::vector<std::string>>();
        auto shift = j.at("normalizer").at("shift").get<std::vector<double>>();
        auto scale = j.at("normalizer").at("scale").get<std::vector<double>>();
        if (!shift.empty()) {
            net.normalizer = Normalizer::from_parts(std::move(shift), std::move(scale));
        }
        const auto& cell = j.at("cell");
        net.cell.w_r = mat_from_json(cell.at("w_r"), net.hidden_size, net.input_size, "w_r");
        net.cell.w_z = mat_from_json(cell.at("w_z"), net.hidden_size, net.input_size, "w_z");
        net.cell.w = mat_from_json(cell.at("w"), net.hidden_size, net.input_size, "w");
        net.cell.u_r = mat_from_json(cell.at("u_r"), net.hidden_size, net.hidden_size, "u_r");
        net.cell.u_z = mat_from_json(cell.at("u_z"), net.hidden_size, net.hidden_size, "u_z");
        net.cell.u = mat_from_json(cell.at("u"), net.hidden_size, net.hidden_size, "u");
        net.fc_w = mat_from_json(j.at("fc").at("w"), net.output_size, net.hidden_size, "fc.w");
        net.fc_b = j.at("fc").at("b").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError,
                    std::string("network json: ") + e.what());
    }
    if (net.input_size == 0 || net.hidden_size == 0 || net.output_size == 0 ||
        net.window_length == 0) {
        throw Error(ErrorKind::ParseError, "network json: zero dimension");
    }
    if (net.fc_b.size() != net.output_size) {
        throw Error(ErrorKind::ParseError, "network json: fc bias length mismatch");
    }
    if (net.normalizer.fitted() &&
        net.normalizer.dimensions() != net.input_size) {
        throw Error(ErrorKind::ParseError, "network json: normalizer size mismatch");
    }
    if (net.head == HeadKind::Softmax &&
        net.output_labels.size() != net.output_size) {
        throw Error(ErrorKind::ParseError,
                    "network json: softmax labels do not match output size");
    }
    return net;
}

}  // namespace tracecast::rnn
