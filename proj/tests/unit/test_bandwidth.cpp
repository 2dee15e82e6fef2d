#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pidiar/bandwidth.hpp"
#include "support.hpp"

#include <cmath>
#include <limits>

using namespace pidiar;

namespace {

MLPClassifier zero_model(int d, int h) {
    return {Eigen::MatrixXd::Zero(d, h), Eigen::VectorXd::Zero(h), Eigen::MatrixXd::Zero(h, 2), Eigen::VectorXd::Zero(2)};
}

} // namespace

TEST_CASE("zero model ties to WB") {
    SegmentDecision d = classify_segment(zero_model(3, 2), Eigen::VectorXd::Ones(3));
    CHECK(d.p_nb == doctest::Approx(0.5));
    CHECK(d.p_wb == doctest::Approx(0.5));
    CHECK(d.label == Band::WB);
}

TEST_CASE("logit gap of 3 gives NB") {
    MLPClassifier m = zero_model(2, 1);
    m.b2 << 3.0, 0.0;
    SegmentDecision d = classify_segment(m, Eigen::VectorXd::Zero(2));
    CHECK(d.label == Band::NB);
    CHECK(d.p_nb == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))).epsilon(1e-12));
    CHECK(d.p_nb + d.p_wb == doctest::Approx(1.0));
}

TEST_CASE("hidden layer uses ReLU") {
    MLPClassifier m = zero_model(1, 1);
    m.w1(0, 0) = 1.0;
    m.w2(0, 0) = 1.0;
    Eigen::VectorXd pos(1), neg(1);
    pos << 2.0;
    neg << -2.0;
    CHECK(classify_segment(m, pos).label == Band::NB);
    CHECK(classify_segment(m, neg).label == Band::WB);
    Eigen::VectorXd bad(1);
    bad << std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(classify_segment(m, bad));
    CHECK_THROWS(classify_segment(m, Eigen::VectorXd::Zero(2)));
}

TEST_CASE("majority vote") {
    CHECK(majority_vote({Band::NB, Band::NB, Band::WB}) == Band::NB);
    CHECK(majority_vote({Band::NB, Band::WB}) == Band::WB);
    CHECK(majority_vote({Band::WB}) == Band::WB);
    CHECK_THROWS(majority_vote({}));
}

TEST_CASE("recording decision and band names") {
    MLPClassifier m = zero_model(1, 1);
    m.w1(0, 0) = 1.0;
    m.w2(0, 0) = 1.0;
    Eigen::MatrixXd X(3, 1);
    X << 1.0, -1.0, 2.0;
    BandDecision d = classify_recording(m, "r", X);
    CHECK(d.segments.size() == 3);
    CHECK(d.file_label == Band::NB);
    CHECK(to_string(Band::NB) == "NB");
    CHECK(band_from_string("WB") == Band::WB);
    CHECK_THROWS(band_from_string("XB"));
}

TEST_CASE("classifier file round trip") {
    std::mt19937_64 rng(1);
    MLPClassifier m{testing::random_matrix(rng, 4, 3), testing::random_matrix(rng, 3, 1),
                    testing::random_matrix(rng, 3, 2), testing::random_matrix(rng, 2, 1)};
    testing::TempDir dir("mlp");
    write_mlp(m, dir.file("band.emb"));
    MLPClassifier back = read_mlp(dir.file("band.emb"));
    CHECK(back.input_dim() == 4);
    CHECK(back.hidden_dim() == 3);
    CHECK((back.w2 - m.w2).cwiseAbs().maxCoeff() < 1e-6);
    const Eigen::VectorXd x = testing::random_matrix(rng, 4, 1);
    CHECK(classify_segment(back, x).p_nb == doctest::Approx(classify_segment(m, x).p_nb).epsilon(1e-5));
}
