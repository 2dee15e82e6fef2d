#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pidiar/container.hpp"
#include "pidiar/embeddings.hpp"
#include "pidiar/error.hpp"
#include "pidiar/synthetic.hpp"
#include "support.hpp"

#include <cstring>
#include <limits>

using namespace pidiar;

TEST_CASE("window_times enumerates full windows") {
    auto w = window_times(2.0, 1.5, 0.25);
    REQUIRE(w.size() == 3);
    CHECK(w[0].onset == 0.0);
    CHECK(w[0].offset == 1.5);
    CHECK(w[1].onset == 0.25);
    CHECK(w[2].onset == 0.5);
    CHECK(w[2].offset == 2.0);

    auto one = window_times(1.5, 1.5, 0.25);
    REQUIRE(one.size() == 1);
    CHECK(one[0].offset == 1.5);

    CHECK_THROWS_AS(window_times(1.0, 1.5, 0.25), std::invalid_argument);
    CHECK_THROWS_AS(window_times(2.0, 1.5, 0.0), std::invalid_argument);
}

TEST_CASE("EMB1 round trip of a 3x4 matrix") {
    FloatMatrix m(3, 4);
    for (int i = 0; i < 12; ++i) m.data()[i] = static_cast<float>(i) * 0.37f - 1.0f;
    const std::string bytes = encode_emb1(m);
    CHECK(bytes.size() == 12 + 48);
    CHECK(bytes.substr(0, 4) == "EMB1");
    CHECK(decode_emb1(bytes) == m);
}

TEST_CASE("EMB1 decoding errors") {
    FloatMatrix m = FloatMatrix::Ones(10, 2);
    std::string bytes = encode_emb1(m);

    std::string bad = bytes;
    bad.replace(0, 4, "XXXX");
    CHECK_THROWS_AS(decode_emb1(bad), FormatError);

    std::string truncated = bytes.substr(0, bytes.size() - 8);
    try {
        decode_emb1(truncated);
        FAIL("expected truncation error");
    } catch (const FormatError &e) {
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
        CHECK(std::string(e.what()).find("10 rows") != std::string::npos);
    }

    CHECK_THROWS_AS(decode_emb1(bytes + "x"), FormatError);

    std::string nonfinite = bytes;
    const float inf = std::numeric_limits<float>::infinity();
    std::memcpy(nonfinite.data() + 12 + 4 * 5, &inf, 4);
    try {
        decode_emb1(nonfinite);
        FAIL("expected non-finite error");
    } catch (const FormatError &e) {
        CHECK(e.offset() == 12 + 4 * 5);
    }
}

TEST_CASE("sidecar encoding") {
    Sidecar meta{{"type", "embeddings"}, {"dim", "4"}};
    CHECK(decode_sidecar(encode_sidecar(meta)) == meta);
    CHECK(decode_sidecar("# note\n a : b \n").at("a") == "b");
    CHECK_THROWS_AS(decode_sidecar("novalue\n"), FormatError);
    CHECK(sidecar_path("dir/rec.emb") == "dir/rec.meta");
    CHECK(meta_int(meta, "dim") == 4);
    CHECK_THROWS_AS(meta_double(meta, "missing"), FormatError);
    CHECK_THROWS_AS(meta_int(meta, "type"), FormatError);
}

TEST_CASE("EmbeddingSequence validation and file round trip") {
    testing::TempDir dir("emb");
    FloatMatrix m(3, 2);
    m << 1, 2, 3, 4, 5, 6;
    EmbeddingSequence seq("rec", m, 1.5, 0.25, 2.0);
    CHECK(seq.center(2) == doctest::Approx(1.25));
    write_embeddings(seq, dir.file("rec.emb"));
    EmbeddingSequence back = read_embeddings(dir.file("rec.emb"));
    CHECK(back.recording_id() == "rec");
    CHECK(back.vectors() == m);
    CHECK(back.window_size() == 1.5);
    CHECK(back.window_shift() == 0.25);
    CHECK(back.recording_duration() == 2.0);

    CHECK_THROWS_AS(EmbeddingSequence("rec", FloatMatrix(4, 2), 1.5, 0.25, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(EmbeddingSequence("rec", FloatMatrix(0, 2), 1.5, 0.25, 2.0), std::invalid_argument);
    CHECK_THROWS(read_embeddings(dir.file("missing.emb")));
}

TEST_CASE("synthetic generator") {
    Eigen::MatrixXd one(1, 4);
    one << 1, 2, 3, 4;
    SyntheticSpec spec;
    spec.speaker_means = one;
    spec.duration = 60.0;
    spec.seed = 3;
    auto rec = generate_synthetic(spec);
    CHECK(rec.reference.speakers().size() == 1);
    CHECK(rec.reference.speech_regions().size() == 1);
    CHECK(rec.embeddings.size() == static_cast<Eigen::Index>(window_times(60.0, 1.5, 0.25).size()));

    std::mt19937_64 rng(1);
    Eigen::MatrixXd loading = testing::random_matrix(rng, 8, 3);
    spec.speaker_means = draw_speaker_means(loading, 3, 1.0, 5);
    spec.overlap_fraction = 0.2;
    auto a = generate_synthetic(spec);
    auto b = generate_synthetic(spec);
    CHECK(a.reference == b.reference);
    CHECK(a.embeddings.vectors() == b.embeddings.vectors());
    REQUIRE(a.overlaps.has_value());
    CHECK(*a.overlaps == *b.overlaps);
    CHECK(a.overlaps->total_duration() > 0.0);
}
