#include "tracecast/linalg.hpp"

#include <cmath>
#include <string>

#include "tracecast/error.hpp"

namespace tracecast {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ArgumentError: return "argument_error";
        case ErrorKind::ParseError: return "parse_error";
        case ErrorKind::DegenerateFit: return "degenerate_fit";
        case ErrorKind::SearchFailed: return "search_failed";
        case ErrorKind::Divergence: return "divergence";
        case ErrorKind::ContractViolation: return "contract_violation";
        case ErrorKind::IoError: return "io_error";
    }
    return "unknown";
}

Vec matvec(const Mat& a, const Vec& x) {
    Vec y(a.rows, 0.0);
    for (std::size_t r = 0; r < a.rows; ++r) {
        const double* row = a.row_ptr(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < a.cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

Vec matvec_transpose(const Mat& a, const Vec& x) {
    Vec y(a.cols, 0.0);
    for (std::size_t r = 0; r < a.rows; ++r) {
        const double* row = a.row_ptr(r);
        const double xr = x[r];
        for (std::size_t c = 0; c < a.cols; ++c) y[c] += row[c] * xr;
    }
    return y;
}

void add_outer(Mat& m, const Vec& a, const Vec& b) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        double* row = m.row_ptr(r);
        const double ar = a[r];
        for (std::size_t c = 0; c < m.cols; ++c) row[c] += ar * b[c];
    }
}

Vec solve_linear(Mat a, Vec b) {
    const std::size_t n = a.rows;
    if (n != a.cols || b.size() != n) {
        throw Error(ErrorKind::ArgumentError, "solve_linear: non-square system");
    }

    double scale = 0.0;
    for (double v : a.data) scale = std::max(scale, std::fabs(v));
    const double pivot_floor = std::max(scale, 1.0) * 1e-12;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a.at(r, col)) > std::fabs(a.at(pivot, col))) pivot = r;
        }
        if (std::fabs(a.at(pivot, col)) < pivot_floor) {
            throw Error(ErrorKind::DegenerateFit,
                        "singular linear system at column " + std::to_string(col));
        }
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c)
                std::swap(a.at(col, c), a.at(pivot, c));
            std::swap(b[col], b[pivot]);
        }
        const double inv = 1.0 / a.at(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a.at(r, col) * inv;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a.at(r, c) -= f * a.at(col, c);
            b[r] -= f * b[col];
        }
    }

    Vec x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a.at(i, c) * x[c];
        x[i] = acc / a.at(i, i);
    }
    return x;
}

OlsFit ols(const Mat& design, const Vec& y) {
    const std::size_t m = design.rows;
    const std::size_t k = design.cols;
    if (m == 0 || k == 0 || y.size() != m) {
        throw Error(ErrorKind::ArgumentError, "ols: empty or mismatched inputs");
    }
    if (m < k) {
        throw Error(ErrorKind::DegenerateFit,
                    "ols: underdetermined system (" + std::to_string(m) +
                        " rows for " + std::to_string(k) + " columns)");
    }

    Mat xtx(k, k);
    Vec xty(k, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const double* row = design.row_ptr(r);
        for (std::size_t i = 0; i < k; ++i) {
            xty[i] += row[i] * y[r];
            for (std::size_t j = i; j < k; ++j) xtx.at(i, j) += row[i] * row[j];
        }
    }
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < i; ++j) xtx.at(i, j) = xtx.at(j, i);

    OlsFit fit;
    try {
        fit.coeffs = solve_linear(std::move(xtx), xty);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::DegenerateFit) {
            throw Error(ErrorKind::DegenerateFit,
                        std::string("ols: singular design (collinear or constant "
                                    "regressors): ") +
                            e.what());
        }
        throw;
    }

    fit.residuals.resize(m);
    double rss = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        const double* row = design.row_ptr(r);
        double pred = 0.0;
        for (std::size_t c = 0; c < k; ++c) pred += row[c] * fit.coeffs[c];
        fit.residuals[r] = y[r] - pred;
        rss += fit.residuals[r] * fit.residuals[r];
    }
    fit.sigma2 = rss / static_cast<double>(m);
    return fit;
}

double mean_of(const Vec& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double stdev_of(const Vec& v) {
    if (v.empty()) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace tracecast
