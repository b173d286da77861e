#pragma once

#include <cstddef>
#include <vector>

namespace tracecast {

using Vec = std::vector<double>;

// Dense row-major matrix. Big enough for this project: design matrices with
// ~20 columns and recurrent-cell weights up to a few hundred rows.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row_ptr(std::size_t r) { return data.data() + r * cols; }
    const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

    bool same_shape(const Mat& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

// y = A x
Vec matvec(const Mat& a, const Vec& x);

// y = A^T x
Vec matvec_transpose(const Mat& a, const Vec& x);

// A += a b^T
void add_outer(Mat& m, const Vec& a, const Vec& b);

// Solves A x = b by Gaussian elimination with partial pivoting. A is consumed.
// Throws DegenerateFit when a pivot collapses (rank-deficient system).
Vec solve_linear(Mat a, Vec b);

struct OlsFit {
    Vec coeffs;     // one per design column
    double sigma2;  // residual variance, RSS / n_rows
    Vec residuals;  // per-row residuals
};

// Ordinary least squares via normal equations. Throws DegenerateFit when the
// design is singular (e.g. duplicated or constant columns alongside an
// intercept).
OlsFit ols(const Mat& design, const Vec& y);

double mean_of(const Vec& v);
double stdev_of(const Vec& v);  // population SD

}  // namespace tracecast
