#include "tracecast/arima.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <tuple>

#include "tracecast/error.hpp"

namespace tracecast::arima {

namespace {

void check_order(const ArimaOrder& order) {
    if (order.p < 0 || order.d < 0 || order.q < 0) {
        throw Error(ErrorKind::ArgumentError, "arima: negative order component");
    }
    if (order.d > 2) {
        throw Error(ErrorKind::ArgumentError, "arima: d > 2 not supported");
    }
}

std::string order_tag(const ArimaOrder& o) {
    return "(" + std::to_string(o.p) + "," + std::to_string(o.d) + "," +
           std::to_string(o.q) + ")";
}

}  // namespace

bool order_has_intercept(const ArimaOrder& order) {
    return order.p + order.q >= 1 || order.d == 0;
}

std::vector<double> difference(const std::vector<double>& series, int d) {
    if (d < 0) throw Error(ErrorKind::ArgumentError, "difference: d < 0");
    if (series.size() <= static_cast<std::size_t>(d)) {
        throw Error(ErrorKind::ArgumentError, "difference: series shorter than d+1");
    }
    std::vector<double> out = series;
    for (int round = 0; round < d; ++round) {
        for (std::size_t t = out.size() - 1; t > 0; --t) out[t] -= out[t - 1];
        out.erase(out.begin());
    }
    return out;
}

std::vector<double> integrate(const std::vector<double>& diffs,
                              const std::vector<double>& heads, int d) {
    if (d < 0) throw Error(ErrorKind::ArgumentError, "integrate: d < 0");
    if (heads.size() != static_cast<std::size_t>(d)) {
        throw Error(ErrorKind::ArgumentError, "integrate: need exactly d head values");
    }
    std::vector<double> out = diffs;
    for (int round = d - 1; round >= 0; --round) {
        out.insert(out.begin(), heads[round]);
        for (std::size_t t = 1; t < out.size(); ++t) out[t] += out[t - 1];
    }
    return out;
}

ArFit fit_ar(const std::vector<double>& series, int p) {
    if (p < 0) throw Error(ErrorKind::ArgumentError, "fit_ar: p < 0");
    const auto up = static_cast<std::size_t>(p);
    if (series.size() < 10 * up || series.size() <= up) {
        throw Error(ErrorKind::ArgumentError,
                    "fit_ar: need at least 10*p observations");
    }
    const std::size_t n = series.size() - up;
    Mat design(n, up + 1);
    Vec y(n);
    for (std::size_t t = 0; t < n; ++t) {
        double* row = design.row_ptr(t);
        row[0] = 1.0;
        for (std::size_t i = 0; i < up; ++i) row[1 + i] = series[t + up - 1 - i];
        y[t] = series[t + up];
    }
    OlsFit sol;
    try {
        sol = ols(design, y);
    } catch (const Error& e) {
        throw Error(ErrorKind::DegenerateFit,
                    std::string("fit_ar: ") + e.what());
    }
    ArFit fit;
    fit.intercept = sol.coeffs[0];
    fit.coeffs.assign(sol.coeffs.begin() + 1, sol.coeffs.end());
    fit.sigma2 = sol.sigma2;
    fit.residuals = std::move(sol.residuals);
    return fit;
}

ArimaModel fit_arima(const std::vector<double>& series, const ArimaOrder& order) {
    check_order(order);
    const auto p = static_cast<std::size_t>(order.p);
    const auto q = static_cast<std::size_t>(order.q);
    const auto d = static_cast<std::size_t>(order.d);
    if (series.size() < 10 * (p + q) + d || series.size() <= d) {
        throw Error(ErrorKind::ArgumentError,
                    "fit_arima" + order_tag(order) + ": series too short");
    }

    const std::vector<double> w = difference(series, order.d);
    const bool with_c = order_has_intercept(order);

    ArimaModel model;
    model.order = order;

    if (p + q == 0) {
        double c = 0.0;
        if (with_c) c = mean_of(w);
        double rss = 0.0;
        for (double v : w) rss += (v - c) * (v - c);
        model.intercept = c;
        model.sigma2 = rss / static_cast<double>(w.size());
    } else {
        // Residual proxies from a long AR fit; skipped for pure AR orders.
        std::vector<double> eps;
        std::size_t eps_offset = 0;
        if (q > 0) {
            const std::size_t m1 =
                std::min<std::size_t>(20, w.size() / 10);
            const ArFit long_ar = fit_ar(w, static_cast<int>(m1));
            eps = long_ar.residuals;
            eps_offset = m1;
        }

        const std::size_t t0 = std::max(p, eps_offset + q);
        if (w.size() <= t0) {
            throw Error(ErrorKind::ArgumentError,
                        "fit_arima" + order_tag(order) + ": series too short");
        }
        const std::size_t n = w.size() - t0;
        const std::size_t k = (with_c ? 1 : 0) + p + q;
        Mat design(n, k);
        Vec y(n);
        for (std::size_t row = 0; row < n; ++row) {
            const std::size_t t = t0 + row;
            double* dst = design.row_ptr(row);
            std::size_t col = 0;
            if (with_c) dst[col++] = 1.0;
            for (std::size_t i = 1; i <= p; ++i) dst[col++] = w[t - i];
            for (std::size_t j = 1; j <= q; ++j) dst[col++] = eps[t - j - eps_offset];
            y[row] = w[t];
        }
        OlsFit sol;
        try {
            sol = ols(design, y);
        } catch (const Error& e) {
            throw Error(ErrorKind::DegenerateFit,
                        "fit_arima" + order_tag(order) +
                            ": singular stage-2 design (" + e.what() + ")");
        }
        std::size_t col = 0;
        if (with_c) model.intercept = sol.coeffs[col++];
        model.ar_coeffs.assign(sol.coeffs.begin() + static_cast<std::ptrdiff_t>(col),
                               sol.coeffs.begin() + static_cast<std::ptrdiff_t>(col + p));
        col += p;
        model.ma_coeffs.assign(sol.coeffs.begin() + static_cast<std::ptrdiff_t>(col),
                               sol.coeffs.end());
        model.sigma2 = sol.sigma2;
    }

    model.tail = ArimaState::from_history(model, series).tail();
    return model;
}

ArimaState::ArimaState(const ArimaModel& model) : model_(&model) {
    tail_.levels.assign(static_cast<std::size_t>(model.order.d), 0.0);
    tail_.diffs.assign(model.ar_coeffs.size(), 0.0);
    tail_.resids.assign(model.ma_coeffs.size(), 0.0);
}

ArimaState ArimaState::from_history(const ArimaModel& model,
                                    const std::vector<double>& history) {
    const std::size_t need =
        static_cast<std::size_t>(std::max(model.order.p, model.order.q) +
                                 model.order.d);
    if (history.size() < std::max<std::size_t>(need, 1)) {
        throw Error(ErrorKind::ArgumentError,
                    "arima: history shorter than max(p,q)+d");
    }
    ArimaState state(model);
    for (double v : history) state.absorb(v);
    return state;
}

ArimaState ArimaState::from_tail(const ArimaModel& model) {
    ArimaState state(model);
    state.tail_ = model.tail;
    state.seen_ = static_cast<std::size_t>(model.order.d);
    if (state.tail_.levels.size() != static_cast<std::size_t>(model.order.d) ||
        state.tail_.diffs.size() != model.ar_coeffs.size() ||
        state.tail_.resids.size() != model.ma_coeffs.size()) {
        throw Error(ErrorKind::ContractViolation,
                    "arima: tail state does not match model order");
    }
    return state;
}

double ArimaState::predict_one() const {
    if (seen_ < tail_.levels.size()) {
        throw Error(ErrorKind::ContractViolation,
                    "arima: predicting before differencing levels are filled");
    }
    double w_hat = model_->intercept;
    for (std::size_t i = 0; i < tail_.diffs.size(); ++i) {
        w_hat += model_->ar_coeffs[i] * tail_.diffs[i];
    }
    for (std::size_t j = 0; j < tail_.resids.size(); ++j) {
        w_hat += model_->ma_coeffs[j] * tail_.resids[j];
    }
    double level = w_hat;
    for (std::size_t j = tail_.levels.size(); j-- > 0;) level += tail_.levels[j];
    return level;
}

void ArimaState::absorb(double actual) {
    double pred_w = 0.0;
    bool have_pred = seen_ >= tail_.levels.size();
    if (have_pred) {
        pred_w = model_->intercept;
        for (std::size_t i = 0; i < tail_.diffs.size(); ++i) {
            pred_w += model_->ar_coeffs[i] * tail_.diffs[i];
        }
        for (std::size_t j = 0; j < tail_.resids.size(); ++j) {
            pred_w += model_->ma_coeffs[j] * tail_.resids[j];
        }
    }

    double cur = actual;
    for (std::size_t j = 0; j < tail_.levels.size(); ++j) {
        if (seen_ > j) {
            const double next = cur - tail_.levels[j];
            tail_.levels[j] = cur;
            cur = next;
        } else {
            tail_.levels[j] = cur;
            ++seen_;
            return;
        }
    }
    ++seen_;
    if (!have_pred) return;

    const double resid = cur - pred_w;
    if (!tail_.diffs.empty()) {
        tail_.diffs.insert(tail_.diffs.begin(), cur);
        tail_.diffs.pop_back();
    }
    if (!tail_.resids.empty()) {
        tail_.resids.insert(tail_.resids.begin(), resid);
        tail_.resids.pop_back();
    }
}

std::vector<double> forecast(const ArimaModel& model,
                             const std::vector<double>& history, std::size_t n) {
    ArimaState state = ArimaState::from_history(model, history);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t step = 0; step < n; ++step) {
        const double pred = state.predict_one();
        out.push_back(pred);
        state.absorb(pred);
    }
    return out;
}

std::vector<double> persistence_forecast(const std::vector<double>& history,
                                         std::size_t n) {
    if (history.empty()) {
        throw Error(ErrorKind::ArgumentError, "persistence_forecast: empty history");
    }
    return std::vector<double>(n, history.back());
}

double rolling_one_step_rmse(const ArimaModel& model,
                             const std::vector<double>& history,
                             const std::vector<double>& actuals) {
    if (actuals.empty()) {
        throw Error(ErrorKind::ArgumentError, "rolling_one_step_rmse: no actuals");
    }
    ArimaState state = ArimaState::from_history(model, history);
    double sq = 0.0;
    for (double actual : actuals) {
        const double pred = state.predict_one();
        const double err = pred - actual;
        sq += err * err;
        state.absorb(actual);
    }
    return std::sqrt(sq / static_cast<double>(actuals.size()));
}

std::vector<ArimaOrder> default_grid() {
    std::vector<ArimaOrder> grid;
    for (int p = 0; p <= 8; ++p) {
        for (int d = 0; d <= 2; ++d) {
            for (int q = 0; q <= 2; ++q) grid.push_back({p, d, q});
        }
    }
    return grid;
}

GridResult grid_search(const std::vector<double>& train,
                       const std::vector<double>& validate,
                       const std::vector<ArimaOrder>& grid) {
    if (grid.empty()) {
        throw Error(ErrorKind::ArgumentError, "grid_search: empty grid");
    }
    GridResult result;
    result.table.reserve(grid.size());
    for (const ArimaOrder& order : grid) {
        GridRow row{order, std::numeric_limits<double>::infinity(), ""};
        try {
            const ArimaModel model = fit_arima(train, order);
            row.rmse = rolling_one_step_rmse(model, train, validate);
            if (!std::isfinite(row.rmse)) {
                row.rmse = std::numeric_limits<double>::infinity();
                row.note = "non-finite validation error";
            }
        } catch (const Error& e) {
            row.note = e.what();
        }
        result.table.push_back(std::move(row));
    }

    const GridRow* best = nullptr;
    for (const GridRow& row : result.table) {
        if (!std::isfinite(row.rmse)) continue;
        if (best == nullptr) {
            best = &row;
            continue;
        }
        const auto key = [](const GridRow& r) {
            return std::make_tuple(r.rmse, r.order.p + r.order.d + r.order.q,
                                   r.order.p, r.order.d, r.order.q);
        };
        if (key(row) < key(*best)) best = &row;
    }
    if (best == nullptr) {
        std::string causes;
        for (const GridRow& row : result.table) {
            causes += "\n  " + order_tag(row.order) + ": " + row.note;
        }
        throw Error(ErrorKind::SearchFailed, "grid_search: all fits failed" + causes);
    }
    result.best = best->order;
    return result;
}

void write_grid_csv(const GridResult& result, std::ostream& out) {
    out << "p,d,q,rmse\n";
    char buf[64];
    for (const GridRow& row : result.table) {
        out << row.order.p << ',' << row.order.d << ',' << row.order.q << ',';
        const auto res = std::to_chars(buf, buf + sizeof(buf), row.rmse);
        out.write(buf, res.ptr - buf);
        out << '\n';
    }
}

nlohmann::json model_to_json(const ArimaModel& model) {
    return nlohmann::json{
        {"order", {{"p", model.order.p}, {"d", model.order.d}, {"q", model.order.q}}},
        {"ar_coeffs", model.ar_coeffs},
        {"ma_coeffs", model.ma_coeffs},
        {"intercept", model.intercept},
        {"sigma2", model.sigma2},
        {"tail_state",
         {{"levels", model.tail.levels},
          {"diffs", model.tail.diffs},
          {"resids", model.tail.resids}}},
    };
}

ArimaModel model_from_json(const nlohmann::json& j) {
    ArimaModel model;
    try {
        model.order.p = j.at("order").at("p").get<int>();
        model.order.d = j.at("order").at("d").get<int>();
        model.order.q = j.at("order").at("q").get<int>();
        model.ar_coeffs = j.at("ar_coeffs").get<std::vector<double>>();
        model.ma_coeffs = j.at("ma_coeffs").get<std::vector<double>>();
        model.intercept = j.at("intercept").get<double>();
        model.sigma2 = j.at("sigma2").get<double>();
        model.tail.levels = j.at("tail_state").at("levels").get<std::vector<double>>();
        model.tail.diffs = j.at("tail_state").at("diffs").get<std::vector<double>>();
        model.tail.resids = j.at("tail_state").at("resids").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError,
                    std::string("arima model json: ") + e.what());
    }
    check_order(model.order);
    if (model.ar_coeffs.size() != static_cast<std::size_t>(model.order.p) ||
        model.ma_coeffs.size() != static_cast<std::size_t>(model.order.q) ||
        model.tail.levels.size() != static_cast<std::size_t>(model.order.d) ||
        model.tail.diffs.size() != model.ar_coeffs.size() ||
        model.tail.resids.size() != model.ma_coeffs.size()) {
        throw Error(ErrorKind::ParseError,
                    "arima model json: array lengths do not match order");
    }
    return model;
}

}  // namespace tracecast::arima
