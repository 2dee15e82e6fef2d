#pragma once

#include "pidiar/annotation.hpp"
#include "pidiar/metrics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace testing {

// Constructed scoring cases with values worked out by hand on interval
// arithmetic.
struct MetricCase {
    std::string name;
    pidiar::Annotation ref, hyp;
    pidiar::ScoringOptions options;
    std::optional<pidiar::ScoringRegions> regions;
    double scored, missed, false_alarm, confusion;
    std::optional<double> der, jer;
    int boundaries; // segment boundaries involved, for the frame tolerance
};

inline pidiar::Annotation ann(std::initializer_list<std::tuple<double, double, const char *>> segs) {
    pidiar::Annotation a("rec");
    for (const auto &[on, off, spk] : segs) a.add(on, off - on, spk);
    return a;
}

inline std::vector<MetricCase> metric_cases() {
    std::vector<MetricCase> c;
    c.push_back({"identical", ann({{0, 10, "A"}, {10, 14, "B"}}), ann({{0, 10, "A"}, {10, 14, "B"}}), {}, {},
                 14, 0, 0, 0, 0.0, 0.0, 4});
    c.push_back({"empty hypothesis", ann({{0, 10, "A"}}), pidiar::Annotation("rec"), {}, {}, 10, 10, 0, 0, 1.0, 1.0, 2});
    c.push_back({"one second confusion", ann({{0, 10, "A"}}), ann({{0, 9, "A"}, {9, 10, "B"}}), {}, {}, 10, 0, 0, 1,
                 0.1, 0.1, 3});
    c.push_back({"half missed", ann({{0, 10, "A"}}), ann({{0, 5, "A"}}), {}, {}, 10, 5, 0, 0, 0.5, 0.5, 3});
    c.push_back({"false alarm tail", ann({{0, 10, "A"}}), ann({{0, 10, "X"}, {10, 12, "Y"}}), {}, {}, 10, 0, 2, 0,
                 0.2, 0.0, 3});
    c.push_back({"missed overlap", ann({{0, 10, "A"}, {5, 10, "B"}}), ann({{0, 10, "A"}}), {}, {}, 15, 5, 0, 0,
                 1.0 / 3.0, 0.5, 3});
    c.push_back({"collar hides boundary shift", ann({{0, 10, "A"}, {10, 20, "B"}}), ann({{0, 10.5, "a"}, {10.5, 20, "b"}}),
                 {0.5, true}, {}, 18, 0, 0, 0, 0.0, 0.0, 4});
    c.push_back({"boundary shift without collar", ann({{0, 10, "A"}, {10, 20, "B"}}),
                 ann({{0, 10.5, "a"}, {10.5, 20, "b"}}), {}, {}, 20, 0, 0, 0.5, 0.025, (1 - 10 / 10.5 + 1 - 9.5 / 10) / 2, 4});
    c.push_back({"renamed speakers", ann({{0, 5, "A"}, {5, 10, "B"}, {10, 15, "C"}}),
                 ann({{0, 5, "z"}, {5, 10, "x"}, {10, 15, "y"}}), {}, {}, 15, 0, 0, 0, 0.0, 0.0, 4});
    c.push_back({"overlap excluded", ann({{0, 10, "A"}, {5, 10, "B"}}), ann({{0, 5, "A"}}), {0.0, false}, {}, 5, 0, 0,
                 0, 0.0, 0.0, 3});
    c.push_back({"scoring region", ann({{0, 10, "A"}}), ann({{0, 4, "A"}, {4, 10, "B"}}), {},
                 pidiar::ScoringRegions("rec", {{2, 6}}), 4, 0, 0, 2, 0.5, 0.5, 3});
    return c;
}

} // namespace testing
