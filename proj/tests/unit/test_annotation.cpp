#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pidiar/annotation.hpp"
#include "pidiar/error.hpp"
#include "support.hpp"

using namespace pidiar;

TEST_CASE("parse_rttm reads a speaker line") {
    auto anns = parse_rttm("SPEAKER rec1 1 0.50 1.25 <NA> <NA> spkA <NA> <NA>\n");
    REQUIRE(anns.size() == 1);
    REQUIRE(anns[0].size() == 1);
    const Segment &s = anns[0].segments()[0];
    CHECK(s.recording_id == "rec1");
    CHECK(s.onset == 0.5);
    CHECK(s.duration == 1.25);
    CHECK(s.speaker == "spkA");
}

TEST_CASE("parse_rttm on empty input") {
    CHECK(parse_rttm("").empty());
    CHECK(parse_rttm("\n\n").empty());
}

TEST_CASE("parse_rttm errors carry the line number") {
    try {
        parse_rttm("SPEAKER rec1 1 0.50 abc <NA> <NA> spkA <NA> <NA>\n");
        FAIL("expected a parse error");
    } catch (const ParseError &e) {
        CHECK(e.line() == 1);
    }
    try {
        parse_rttm("SPEAKER rec1 1 0.0 1.0 <NA> <NA> a <NA> <NA>\nSPEAKER rec1 1 2.0 0 <NA> <NA> a <NA> <NA>\n");
        FAIL("expected a parse error");
    } catch (const ParseError &e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_rttm("SPEAKER rec1 1 0.0\n"), ParseError);
}

TEST_CASE("parse_rttm skips other line types and groups by recording") {
    const std::string text = "SPKR-INFO rec1 1 <NA> <NA> <NA> unknown a <NA> <NA>\n"
                             "SPEAKER rec2 1 1.0 1.0 <NA> <NA> b <NA> <NA>\n"
                             "SPEAKER rec1 1 3.0 1.0 <NA> <NA> a <NA> <NA>\n"
                             "SPEAKER rec1 1 0.0 1.0 <NA> <NA> a <NA> <NA>\n";
    auto anns = parse_rttm(text);
    REQUIRE(anns.size() == 2);
    CHECK(anns[0].recording_id() == "rec2");
    CHECK(anns[1].recording_id() == "rec1");
    CHECK(anns[1].segments()[0].onset == 0.0);
}

TEST_CASE("write_rttm formats three decimals") {
    Annotation a("rec1");
    a.add(0.5, 1.25, "spkA");
    CHECK(write_rttm(a) == "SPEAKER rec1 1 0.500 1.250 <NA> <NA> spkA <NA> <NA>\n");
    CHECK(write_rttm(Annotation("rec1")).empty());
}

TEST_CASE("RTTM round trip of random segments") {
    std::mt19937_64 rng(7);
    Annotation a = testing::random_annotation(rng, "r", 100, 4);
    auto back = parse_rttm(write_rttm(a));
    REQUIRE(back.size() == 1);
    REQUIRE(back[0].size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::abs(back[0].segments()[i].onset - a.segments()[i].onset) <= 1e-3);
        CHECK(std::abs(back[0].segments()[i].duration - a.segments()[i].duration) <= 1e-3);
        CHECK(back[0].segments()[i].speaker == a.segments()[i].speaker);
    }
}

TEST_CASE("Annotation rejects invalid segments") {
    Annotation a("rec1");
    CHECK_THROWS_AS(a.add(-1.0, 1.0, "a"), std::invalid_argument);
    CHECK_THROWS_AS(a.add(0.0, 0.0, "a"), std::invalid_argument);
    CHECK_THROWS_AS(a.add(Segment{"other", 0.0, 1.0, "a"}), std::invalid_argument);
}

TEST_CASE("Annotation summaries") {
    Annotation a("r");
    a.add(0.0, 2.0, "b");
    a.add(1.0, 2.0, "a");
    a.add(5.0, 1.0, "a");
    CHECK(a.speakers() == std::vector<std::string>{"a", "b"});
    CHECK(a.total_duration() == doctest::Approx(5.0));
    CHECK(a.speaker_durations().at("a") == doctest::Approx(3.0));
    auto regions = a.speech_regions();
    REQUIRE(regions.size() == 2);
    CHECK(regions[0] == std::pair<double, double>(0.0, 3.0));
    CHECK(regions[1] == std::pair<double, double>(5.0, 6.0));
}

TEST_CASE("merge_adjacent") {
    Annotation a("r");
    a.add(0.0, 1.0, "spkA");
    a.add(1.1, 0.9, "spkA");
    Annotation m = merge_adjacent(a, 0.2);
    REQUIRE(m.size() == 1);
    CHECK(m.segments()[0].onset == 0.0);
    CHECK(m.segments()[0].offset() == doctest::Approx(2.0));

    Annotation b("r");
    b.add(0.0, 1.0, "spkA");
    b.add(1.1, 0.9, "spkB");
    CHECK(merge_adjacent(b, 0.2) == b);

    Annotation c("r");
    c.add(0.0, 1.0, "spkA");
    c.add(1.5, 0.5, "spkA");
    CHECK(merge_adjacent(c, 0.2) == c);
    CHECK_THROWS(merge_adjacent(c, -1.0));
}

TEST_CASE("crop to scoring regions") {
    Annotation a("r");
    a.add(0.0, 10.0, "spkA");
    Annotation c = crop(a, ScoringRegions("r", {{2.0, 4.0}}));
    REQUIRE(c.size() == 1);
    CHECK(c.segments()[0].onset == 2.0);
    CHECK(c.segments()[0].offset() == doctest::Approx(4.0));

    Annotation out("r");
    out.add(20.0, 1.0, "spkA");
    CHECK(crop(out, ScoringRegions("r", {{0.0, 5.0}})).empty());

    Annotation span("r");
    span.add(0.0, 3.0, "spkA");
    Annotation s = crop(span, ScoringRegions("r", {{0.0, 1.0}, {2.0, 3.0}}));
    REQUIRE(s.size() == 2);
    CHECK(s.segments()[0].offset() == doctest::Approx(1.0));
    CHECK(s.segments()[1].onset == doctest::Approx(2.0));
    CHECK(s.segments()[1].offset() == doctest::Approx(3.0));
}

TEST_CASE("ScoringRegions merge and UEM round trip") {
    ScoringRegions r("rec", {{3.0, 4.0}, {0.0, 1.0}, {0.5, 2.0}});
    REQUIRE(r.intervals().size() == 2);
    CHECK(r.intervals()[0] == std::pair<double, double>(0.0, 2.0));
    CHECK(r.total_duration() == doctest::Approx(3.0));
    CHECK_THROWS(ScoringRegions("rec", {{1.0, 1.0}}));

    auto back = parse_uem(write_uem({r}));
    REQUIRE(back.size() == 1);
    CHECK(back[0].intervals() == r.intervals());
    CHECK_THROWS_AS(parse_uem("rec 1 2.0\n"), ParseError);
}

TEST_CASE("find_recording") {
    Annotation a("x");
    a.add(0.0, 1.0, "s");
    CHECK(find_recording({a}, "x") == a);
    Annotation missing = find_recording({a}, "y");
    CHECK(missing.recording_id() == "y");
    CHECK(missing.empty());
}
