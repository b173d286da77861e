#include "tracecast/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "tracecast/error.hpp"

namespace tracecast {

std::string_view to_string(FeatureSetId id) {
    switch (id) {
        case FeatureSetId::FS1: return "fs1";
        case FeatureSetId::FS2: return "fs2";
        case FeatureSetId::FS3: return "fs3";
        case FeatureSetId::FS4: return "fs4";
        case FeatureSetId::FS5: return "fs5";
        case FeatureSetId::FS6: return "fs6";
    }
    return "fs1";
}

bool feature_set_from_string(std::string_view s, FeatureSetId& out) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (lower == "fs1") { out = FeatureSetId::FS1; return true; }
    if (lower == "fs2") { out = FeatureSetId::FS2; return true; }
    if (lower == "fs3") { out = FeatureSetId::FS3; return true; }
    if (lower == "fs4") { out = FeatureSetId::FS4; return true; }
    if (lower == "fs5") { out = FeatureSetId::FS5; return true; }
    if (lower == "fs6") { out = FeatureSetId::FS6; return true; }
    return false;
}

bool FeatureSet::has(BaseFeature f) const {
    return std::find(active.begin(), active.end(), f) != active.end();
}

std::size_t FeatureSet::row_count() const {
    std::size_t n = 0;
    for (BaseFeature f : active) {
        n += f == BaseFeature::ProtocolCounts ? kProtocolCount : 1;
    }
    return n;
}

std::vector<std::string> FeatureSet::row_names() const {
    std::vector<std::string> names;
    for (BaseFeature f : active) {
        switch (f) {
            case BaseFeature::UlCount: names.emplace_back("ul_count"); break;
            case BaseFeature::DlCount: names.emplace_back("dl_count"); break;
            case BaseFeature::UlBytes: names.emplace_back("ul_bytes"); break;
            case BaseFeature::DlBytes: names.emplace_back("dl_bytes"); break;
            case BaseFeature::UlDlRatio: names.emplace_back("ul_dl_ratio"); break;
            case BaseFeature::ProtocolCounts:
                for (std::size_t p = 0; p < kProtocolCount; ++p) {
                    std::string name = "proto_";
                    for (char c : to_string(static_cast<Protocol>(p))) {
                        name.push_back(static_cast<char>(std::tolower(c)));
                    }
                    names.push_back(std::move(name));
                }
                break;
        }
    }
    return names;
}

FeatureSet feature_set(FeatureSetId id) {
    using F = BaseFeature;
    switch (id) {
        case FeatureSetId::FS1:
            return {id, {F::UlCount, F::DlCount, F::UlBytes, F::DlBytes, F::UlDlRatio}};
        case FeatureSetId::FS2:
            return {id, {F::UlCount, F::UlDlRatio}};
        case FeatureSetId::FS3:
            return {id, {F::UlCount}};
        case FeatureSetId::FS4:
            return {id, {F::UlCount, F::DlCount, F::UlDlRatio}};
        case FeatureSetId::FS5:
            return {id, {F::UlCount, F::DlCount}};
        case FeatureSetId::FS6:
            return {id, {F::UlCount, F::DlCount, F::ProtocolCounts}};
    }
    throw Error(ErrorKind::ArgumentError, "unknown feature set");
}

FeatureMatrix FeatureMatrix::slice_cols(std::size_t begin, std::size_t end) const {
    if (begin > end || end > cols) {
        throw Error(ErrorKind::ArgumentError, "slice_cols: bad range");
    }
    FeatureMatrix out;
    out.rows = rows;
    out.cols = end - begin;
    out.feature_names = feature_names;
    out.tau = tau;
    out.data.assign(data.begin() + static_cast<std::ptrdiff_t>(begin * rows),
                    data.begin() + static_cast<std::ptrdiff_t>(end * rows));
    return out;
}

FeatureMatrix build_matrix(const std::vector<IntervalFeatures>& intervals,
                           const FeatureSet& fs, double tau) {
    if (intervals.empty()) {
        throw Error(ErrorKind::ArgumentError, "build_matrix: no intervals");
    }
    FeatureMatrix x;
    x.rows = fs.row_count();
    x.cols = intervals.size();
    x.feature_names = fs.row_names();
    x.tau = tau;
    x.data.resize(x.rows * x.cols);

    for (std::size_t c = 0; c < intervals.size(); ++c) {
        const IntervalFeatures& iv = intervals[c];
        double* col = x.col_ptr(c);
        std::size_t r = 0;
        for (BaseFeature f : fs.active) {
            switch (f) {
                case BaseFeature::UlCount:
                    col[r++] = static_cast<double>(iv.ul_count);
                    break;
                case BaseFeature::DlCount:
                    col[r++] = static_cast<double>(iv.dl_count);
                    break;
                case BaseFeature::UlBytes:
                    col[r++] = static_cast<double>(iv.ul_bytes);
                    break;
                case BaseFeature::DlBytes:
                    col[r++] = static_cast<double>(iv.dl_bytes);
                    break;
                case BaseFeature::UlDlRatio:
                    col[r++] = iv.ul_dl_ratio;
                    break;
                case BaseFeature::ProtocolCounts:
                    for (std::size_t p = 0; p < kProtocolCount; ++p) {
                        col[r++] = static_cast<double>(iv.protocol_counts[p]);
                    }
                    break;
            }
        }
    }
    return x;
}

FeatureMatrix apply_selector(const FeatureMatrix& x, const Selector& s) {
    if (s.bits.size() != x.rows) {
        throw Error(ErrorKind::ArgumentError,
                    "apply_selector: selector length " + std::to_string(s.bits.size()) +
                        " != row count " + std::to_string(x.rows));
    }
    FeatureMatrix out;
    out.cols = x.cols;
    out.tau = x.tau;
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < x.rows; ++r) {
        if (s.bits[r]) {
            keep.push_back(r);
            if (r < x.feature_names.size()) {
                out.feature_names.push_back(x.feature_names[r]);
            }
        }
    }
    out.rows = keep.size();
    out.data.resize(out.rows * out.cols);
    for (std::size_t c = 0; c < x.cols; ++c) {
        const double* src = x.col_ptr(c);
        double* dst = out.col_ptr(c);
        for (std::size_t i = 0; i < keep.size(); ++i) dst[i] = src[keep[i]];
    }
    return out;
}

Normalizer Normalizer::fit(const FeatureMatrix& x, std::size_t col_begin,
                           std::size_t col_end) {
    if (col_begin >= col_end || col_end > x.cols) {
        throw Error(ErrorKind::ArgumentError, "Normalizer::fit: empty train range");
    }
    const auto n = static_cast<double>(col_end - col_begin);
    Normalizer norm;
    norm.shift_.assign(x.rows, 0.0);
    norm.scale_.assign(x.rows, 0.0);
    for (std::size_t c = col_begin; c < col_end; ++c) {
        const double* col = x.col_ptr(c);
        for (std::size_t r = 0; r < x.rows; ++r) norm.shift_[r] += col[r];
    }
    for (std::size_t r = 0; r < x.rows; ++r) norm.shift_[r] /= n;
    for (std::size_t c = col_begin; c < col_end; ++c) {
        const double* col = x.col_ptr(c);
        for (std::size_t r = 0; r < x.rows; ++r) {
            const double d = col[r] - norm.shift_[r];
            norm.scale_[r] += d * d;
        }
    }
    for (std::size_t r = 0; r < x.rows; ++r) {
        norm.scale_[r] = std::max(std::sqrt(norm.scale_[r] / n), 1e-12);
    }
    return norm;
}

FeatureMatrix Normalizer::transform(const FeatureMatrix& x) const {
    if (x.rows != scale_.size()) {
        throw Error(ErrorKind::ArgumentError, "Normalizer: dimension mismatch");
    }
    FeatureMatrix out = x;
    for (std::size_t c = 0; c < x.cols; ++c) {
        double* col = out.col_ptr(c);
        for (std::size_t r = 0; r < x.rows; ++r) {
            col[r] = (col[r] - shift_[r]) / scale_[r];
        }
    }
    return out;
}

FeatureMatrix Normalizer::inverse_transform(const FeatureMatrix& x) const {
    if (x.rows != scale_.size()) {
        throw Error(ErrorKind::ArgumentError, "Normalizer: dimension mismatch");
    }
    FeatureMatrix out = x;
    for (std::size_t c = 0; c < x.cols; ++c) {
        double* col = out.col_ptr(c);
        for (std::size_t r = 0; r < x.rows; ++r) {
            col[r] = col[r] * scale_[r] + shift_[r];
        }
    }
    return out;
}

double Normalizer::transform_value(std::size_t row, double v) const {
    return (v - shift_[row]) / scale_[row];
}

double Normalizer::inverse_value(std::size_t row, double v) const {
    return v * scale_[row] + shift_[row];
}

Normalizer Normalizer::from_parts(std::vector<double> shift,
                                  std::vector<double> scale) {
    if (shift.size() != scale.size()) {
        throw Error(ErrorKind::ArgumentError, "Normalizer: shift/scale size mismatch");
    }
    Normalizer norm;
    norm.shift_ = std::move(shift);
    norm.scale_ = std::move(scale);
    return norm;
}

void write_features_csv(const FeatureMatrix& x, std::ostream& out) {
    for (std::size_t r = 0; r < x.feature_names.size(); ++r) {
        if (r) out << ',';
        out << x.feature_names[r];
    }
    out << '\n';
    char buf[64];
    for (std::size_t c = 0; c < x.cols; ++c) {
        const double* col = x.col_ptr(c);
        for (std::size_t r = 0; r < x.rows; ++r) {
            if (r) out << ',';
            const auto res = std::to_chars(buf, buf + sizeof(buf), col[r]);
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
}

}  // namespace tracecast
