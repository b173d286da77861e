#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tracecast/types.hpp"

namespace tracecast {

// Canonical feature order. protocol_counts expands to one row per protocol.
enum class BaseFeature : std::uint8_t {
    UlCount,
    DlCount,
    UlBytes,
    DlBytes,
    UlDlRatio,
    ProtocolCounts,
};

enum class FeatureSetId : std::uint8_t { FS1, FS2, FS3, FS4, FS5, FS6 };

std::string_view to_string(FeatureSetId id);
bool feature_set_from_string(std::string_view s, FeatureSetId& out);

struct FeatureSet {
    FeatureSetId id;
    std::vector<BaseFeature> active;  // in canonical order

    bool has(BaseFeature f) const;
    // Number of matrix rows: protocol_counts contributes kProtocolCount rows.
    std::size_t row_count() const;
    std::vector<std::string> row_names() const;
};

// Fixed masks:
//   FS1 = {ul_count, dl_count, ul_bytes, dl_bytes, ul_dl_ratio}
//   FS2 = {ul_count, ul_dl_ratio}
//   FS3 = {ul_count}
//   FS4 = {ul_count, dl_count, ul_dl_ratio}
//   FS5 = {ul_count, dl_count}
//   FS6 = {ul_count, dl_count, protocol_counts}
FeatureSet feature_set(FeatureSetId id);

// One column per interval, rows in canonical feature order.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // column-major: data[c * rows + r]
    std::vector<std::string> feature_names;
    double tau = 0.0;

    double& at(std::size_t r, std::size_t c) { return data[c * rows + r]; }
    double at(std::size_t r, std::size_t c) const { return data[c * rows + r]; }

    double* col_ptr(std::size_t c) { return data.data() + c * rows; }
    const double* col_ptr(std::size_t c) const { return data.data() + c * rows; }

    // Columns [begin, end) as a fresh matrix.
    FeatureMatrix slice_cols(std::size_t begin, std::size_t end) const;
};

FeatureMatrix build_matrix(const std::vector<IntervalFeatures>& intervals,
                           const FeatureSet& fs, double tau);

// Binary row-selection vector (the indicator s of a feature submatrix).
struct Selector {
    std::vector<std::uint8_t> bits;
};

// Keeps rows where the selector is 1, in order. |s| must equal the row count.
FeatureMatrix apply_selector(const FeatureMatrix& x, const Selector& s);

// Per-row z-score fitted on a training column range. Scale is floored at
// 1e-12 so constant rows transform to zero.
class Normalizer {
  public:
    Normalizer() = default;

    static Normalizer fit(const FeatureMatrix& x, std::size_t col_begin,
                          std::size_t col_end);

    bool fitted() const { return !scale_.empty(); }
    std::size_t dimensions() const { return scale_.size(); }

    FeatureMatrix transform(const FeatureMatrix& x) const;
    FeatureMatrix inverse_transform(const FeatureMatrix& x) const;

    double transform_value(std::size_t row, double v) const;
    double inverse_value(std::size_t row, double v) const;

    const std::vector<double>& shift() const { return shift_; }
    const std::vector<double>& scale() const { return scale_; }

    static Normalizer from_parts(std::vector<double> shift, std::vector<double> scale);

  private:
    std::vector<double> shift_;
    std::vector<double> scale_;
};

// features-CSV: header = feature names, one row per interval.
void write_features_csv(const FeatureMatrix& x, std::ostream& out);

}  // namespace tracecast
