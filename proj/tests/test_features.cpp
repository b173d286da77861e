#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "tracecast/error.hpp"
#include "tracecast/features.hpp"
#include "tracecast/rng.hpp"

using namespace tracecast;

namespace {

std::vector<IntervalFeatures> tiny_intervals() {
    std::vector<IntervalFeatures> ivs(3);
    ivs[0] = {0, 4, 2, 400, 900, 2.0, {1, 2, 3, 0}};
    ivs[1] = {1, 0, 0, 0, 0, 0.0, {0, 0, 0, 0}};
    ivs[2] = {2, 1, 5, 64, 7500, 0.2, {4, 1, 0, 1}};
    return ivs;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("feature set masks match their definitions") {
    using BF = BaseFeature;
    auto active = [](FeatureSetId id) { return feature_set(id).active; };

    CHECK(active(FeatureSetId::FS1) ==
          std::vector<BF>{BF::UlCount, BF::DlCount, BF::UlBytes, BF::DlBytes,
                          BF::UlDlRatio});
    CHECK(active(FeatureSetId::FS2) == std::vector<BF>{BF::UlCount, BF::UlDlRatio});
    CHECK(active(FeatureSetId::FS3) == std::vector<BF>{BF::UlCount});
    CHECK(active(FeatureSetId::FS4) ==
          std::vector<BF>{BF::UlCount, BF::DlCount, BF::UlDlRatio});
    CHECK(active(FeatureSetId::FS5) == std::vector<BF>{BF::UlCount, BF::DlCount});
    CHECK(active(FeatureSetId::FS6) ==
          std::vector<BF>{BF::UlCount, BF::DlCount, BF::ProtocolCounts});

    CHECK(feature_set(FeatureSetId::FS1).row_count() == 5);
    CHECK(feature_set(FeatureSetId::FS3).row_count() == 1);
    CHECK(feature_set(FeatureSetId::FS6).row_count() == 6);

    const auto names = feature_set(FeatureSetId::FS6).row_names();
    const std::vector<std::string> want = {"ul_count",  "dl_count",  "proto_tcp",
                                           "proto_udp", "proto_quic", "proto_other"};
    CHECK(names == want);
}

TEST_CASE("build_matrix lays out features column-major in canonical order") {
    const auto ivs = tiny_intervals();
    const FeatureMatrix m = build_matrix(ivs, feature_set(FeatureSetId::FS6), 10.0);
    REQUIRE(m.rows == 6);
    REQUIRE(m.cols == 3);

    CHECK(m.at(0, 0) == 4.0);   // ul_count
    CHECK(m.at(1, 0) == 2.0);   // dl_count
    CHECK(m.at(2, 0) == 1.0);   // tcp
    CHECK(m.at(3, 0) == 2.0);   // udp
    CHECK(m.at(4, 0) == 3.0);   // quic
    CHECK(m.at(5, 0) == 0.0);   // other
    CHECK(m.at(0, 1) == 0.0);
    CHECK(m.at(1, 2) == 5.0);
    CHECK(m.at(2, 2) == 4.0);

    // Column-major contract: column c is contiguous.
    CHECK(m.data[0 * 6 + 0] == m.at(0, 0));
    CHECK(m.data[2 * 6 + 5] == m.at(5, 2));

    const FeatureMatrix fs1 = build_matrix(ivs, feature_set(FeatureSetId::FS1), 10.0);
    CHECK(fs1.at(2, 0) == 400.0);  // ul_bytes
    CHECK(fs1.at(3, 2) == 7500.0); // dl_bytes
    CHECK(fs1.at(4, 0) == 2.0);    // ratio
}

TEST_CASE("apply_selector equals building the smaller set directly") {
    const auto ivs = tiny_intervals();
    const FeatureMatrix fs1 = build_matrix(ivs, feature_set(FeatureSetId::FS1), 10.0);
    const FeatureMatrix direct =
        build_matrix(ivs, feature_set(FeatureSetId::FS5), 10.0);
    // FS1 rows are (ul_count, dl_count, ul_bytes, dl_bytes, ratio); keeping the
    // first two reproduces FS5.
    const FeatureMatrix selected = apply_selector(fs1, Selector{{1, 1, 0, 0, 0}});
    REQUIRE(selected.rows == direct.rows);
    REQUIRE(selected.cols == direct.cols);
    CHECK(selected.data == direct.data);
    CHECK(selected.feature_names == direct.feature_names);

    CHECK_THROWS_AS(apply_selector(fs1, Selector{{1, 1}}), Error);
}

TEST_CASE("normalizer standardizes the fitted span and round trips") {
    Rng rng(3);
    FeatureMatrix m;
    m.rows = 3;
    m.cols = 200;
    m.data.resize(m.rows * m.cols);
    for (std::size_t c = 0; c < m.cols; ++c) {
        m.data[c * 3 + 0] = 50.0 + 12.0 * rng.normal();
        m.data[c * 3 + 1] = -4.0 + 0.5 * rng.normal();
        m.data[c * 3 + 2] = 7.0;  // constant row exercises the SD floor
    }

    const Normalizer norm = Normalizer::fit(m, 0, 150);
    const FeatureMatrix z = norm.transform(m);

    for (std::size_t r = 0; r < 2; ++r) {
        double sum = 0.0, sq = 0.0;
        for (std::size_t c = 0; c < 150; ++c) {
            sum += z.at(r, c);
            sq += z.at(r, c) * z.at(r, c);
        }
        const double mean = sum / 150.0;
        const double var = sq / 150.0 - mean * mean;
        CHECK(std::abs(mean) < 1e-9);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
    }
    // Constant row maps to zero, not NaN.
    CHECK(z.at(2, 10) == 0.0);
    CHECK(std::isfinite(norm.transform_value(2, 123.0)));

    for (std::size_t r = 0; r < 3; ++r) {
        const double v = m.at(r, 170);
        CHECK(norm.inverse_value(r, norm.transform_value(r, v)) ==
              doctest::Approx(v).epsilon(1e-12));
    }
}

TEST_CASE("normalizer ignores columns outside the fitted span") {
    FeatureMatrix m;
    m.rows = 1;
    m.cols = 10;
    m.data = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const Normalizer a = Normalizer::fit(m, 0, 5);
    for (std::size_t c = 5; c < 10; ++c) m.data[c] = 1e9;
    const Normalizer b = Normalizer::fit(m, 0, 5);
    CHECK(a.transform_value(0, 3.0) == b.transform_value(0, 3.0));
    CHECK(a.inverse_value(0, 1.0) == b.inverse_value(0, 1.0));
}

TEST_CASE("slice_cols keeps rows and copies the requested span") {
    const auto ivs = tiny_intervals();
    const FeatureMatrix m = build_matrix(ivs, feature_set(FeatureSetId::FS1), 10.0);
    const FeatureMatrix s = m.slice_cols(1, 3);
    REQUIRE(s.rows == m.rows);
    REQUIRE(s.cols == 2);
    for (std::size_t r = 0; r < s.rows; ++r) {
        CHECK(s.at(r, 0) == m.at(r, 1));
        CHECK(s.at(r, 1) == m.at(r, 2));
    }
}

TEST_CASE("features csv round trips through shortest-form doubles") {
    const auto ivs = tiny_intervals();
    const FeatureMatrix m = build_matrix(ivs, feature_set(FeatureSetId::FS4), 10.0);
    std::ostringstream out;
    write_features_csv(m, out);
    std::istringstream in(out.str());

    std::string header;
    std::getline(in, header);
    CHECK(header == "ul_count,dl_count,ul_dl_ratio");

    for (std::size_t c = 0; c < m.cols; ++c) {
        std::string line;
        REQUIRE(std::getline(in, line));
        std::istringstream cells(line);
        std::string cell;
        for (std::size_t r = 0; r < m.rows; ++r) {
            REQUIRE(std::getline(cells, cell, ','));
            CHECK(std::stod(cell) == m.at(r, c));
        }
    }
}

}  // TEST_SUITE
