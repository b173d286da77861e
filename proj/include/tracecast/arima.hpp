#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

#include "tracecast/linalg.hpp"

namespace tracecast::arima {

struct ArimaOrder {
    int p = 0;
    int d = 0;
    int q = 0;

    bool operator==(const ArimaOrder&) const = default;
};

// Innovation-filter state: the last value of each difference order, plus the
// most recent p differenced values and q residuals (most recent first).
struct TailState {
    std::vector<double> levels;
    std::vector<double> diffs;
    std::vector<double> resids;
};

struct ArimaModel {
    ArimaOrder order;
    std::vector<double> ar_coeffs;
    std::vector<double> ma_coeffs;
    double intercept = 0.0;
    double sigma2 = 0.0;
    TailState tail;
};

// The intercept absorbs both additive constants of the model equation; it is
// dropped for pure-differencing orders (p+q = 0, d > 0) so that ARIMA(0,1,0)
// reduces exactly to the persistence forecast.
bool order_has_intercept(const ArimaOrder& order);

std::vector<double> difference(const std::vector<double>& series, int d);
std::vector<double> integrate(const std::vector<double>& diffs,
                              const std::vector<double>& heads, int d);

struct ArFit {
    std::vector<double> coeffs;
    double intercept = 0.0;
    double sigma2 = 0.0;
    std::vector<double> residuals;
};

ArFit fit_ar(const std::vector<double>& series, int p);

ArimaModel fit_arima(const std::vector<double>& series, const ArimaOrder& order);

// Runs the model's one-step recursion over observed values. Differencing
// levels fill from the first d observations; lag and residual slots start at
// zero and wash out as real values arrive.
class ArimaState {
  public:
    static ArimaState from_history(const ArimaModel& model,
                                   const std::vector<double>& history);
    static ArimaState from_tail(const ArimaModel& model);

    double predict_one() const;
    void absorb(double actual);

    const TailState& tail() const { return tail_; }

  private:
    explicit ArimaState(const ArimaModel& model);

    const ArimaModel* model_;
    TailState tail_;
    std::size_t seen_ = 0;
};

std::vector<double> forecast(const ArimaModel& model,
                             const std::vector<double>& history, std::size_t n);

std::vector<double> persistence_forecast(const std::vector<double>& history,
                                         std::size_t n);

// Teacher-forced one-step error: each actual is absorbed after being predicted.
double rolling_one_step_rmse(const ArimaModel& model,
                             const std::vector<double>& history,
                             const std::vector<double>& actuals);

struct GridRow {
    ArimaOrder order;
    double rmse = 0.0;
    std::string note;
};

struct GridResult {
    ArimaOrder best;
    std::vector<GridRow> table;
};

std::vector<ArimaOrder> default_grid();

GridResult grid_search(const std::vector<double>& train,
                       const std::vector<double>& validate,
                       const std::vector<ArimaOrder>& grid);

void write_grid_csv(const GridResult& result, std::ostream& out);

nlohmann::json model_to_json(const ArimaModel& model);
ArimaModel model_from_json(const nlohmann::json& j);

}  // namespace tracecast::arima
