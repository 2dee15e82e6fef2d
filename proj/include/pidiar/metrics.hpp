#pragma once

#include "pidiar/annotation.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace pidiar {

// Scoring works on a 10 ms grid. Frame k covers [k/100, (k+1)/100); a time t
// maps to the boundary floor(100 t + 1/2).
inline constexpr double kFrameStep = 0.01;
long frame_index(double seconds);

struct ScoringOptions {
    double collar = 0.0;       // seconds excluded on each side of reference boundaries
    bool score_overlap = true; // false drops frames with two or more reference speakers
};

struct SpeakerMapping {
    std::vector<std::pair<std::string, std::string>> pairs; // reference -> hypothesis
    double agreement = 0.0;                                  // seconds
};

// Maximum-agreement one-to-one mapping (Hungarian algorithm on the
// frame-overlap matrix, labels in sorted order). Pairs that never co-occur
// are left unmapped.
SpeakerMapping optimal_mapping(const Annotation &ref, const Annotation &hyp);

struct DERReport {
    std::string recording_id;
    double scored_speech = 0.0;
    double missed = 0.0;
    double false_alarm = 0.0;
    double confusion = 0.0;
    std::optional<double> der;
    std::optional<double> jer;
    std::vector<std::pair<std::string, std::string>> speaker_map;

    double error() const { return missed + false_alarm + confusion; }
};

// Frames scored: inside `regions` when given, else [0, last offset of ref or
// hyp); minus the collar around reference boundaries.
DERReport der(const Annotation &ref, const Annotation &hyp, const ScoringOptions &options = {},
              const std::optional<ScoringRegions> &regions = std::nullopt);
std::optional<double> jer(const Annotation &ref, const Annotation &hyp, const ScoringOptions &options = {},
                          const std::optional<ScoringRegions> &regions = std::nullopt);

// "ALL" report: pooled DER, mean of defined per-recording JERs. With a filter
// only the listed recordings contribute. Throws when nothing remains.
DERReport aggregate(const std::vector<DERReport> &reports, const std::optional<std::set<std::string>> &filter = std::nullopt);

struct DomainRow {
    std::string domain;
    int recordings = 0;
    std::optional<double> mean_der;
};

// `<recording> <domain>` per line.
std::map<std::string, std::string> parse_domain_map(std::string_view text);
// One row per domain present in the map and in the reports, sorted by name.
std::vector<DomainRow> domain_breakdown(const std::vector<DERReport> &reports,
                                        const std::map<std::string, std::string> &domains);

// Columns: recording, scored, miss, fa, conf, der, jer.
std::string format_report_table(const std::vector<DERReport> &reports, const DERReport &total);
std::string format_report_tsv(const std::vector<DERReport> &reports, const DERReport &total);
std::string format_domain_table(const std::vector<DomainRow> &rows);

} // namespace pidiar
