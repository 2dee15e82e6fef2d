#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pidiar {

struct Segment {
    std::string recording_id;
    double onset = 0.0;    // seconds, >= 0
    double duration = 0.0; // seconds, > 0
    std::string speaker;

    double offset() const { return onset + duration; }

    friend bool operator==(const Segment &, const Segment &) = default;
};

// Speaker-labeled timeline of one recording. Segments stay sorted by onset,
// then speaker label, then duration.
class Annotation {
public:
    Annotation() = default;
    explicit Annotation(std::string recording_id) : recording_id_(std::move(recording_id)) {}
    Annotation(std::string recording_id, std::vector<Segment> segments);

    const std::string &recording_id() const { return recording_id_; }
    const std::vector<Segment> &segments() const { return segments_; }
    bool empty() const { return segments_.empty(); }
    std::size_t size() const { return segments_.size(); }

    // Inserts keeping sorted order. Throws std::invalid_argument on an
    // invalid segment or a foreign recording id.
    void add(Segment segment);
    void add(double onset, double duration, const std::string &speaker);

    // Sorted unique speaker labels.
    std::vector<std::string> speakers() const;

    // Summed segment durations (overlapping speech counted per speaker).
    double total_duration() const;
    std::map<std::string, double> speaker_durations() const;

    // Union of all segments as disjoint sorted intervals.
    std::vector<std::pair<double, double>> speech_regions() const;

    friend bool operator==(const Annotation &, const Annotation &) = default;

private:
    std::string recording_id_;
    std::vector<Segment> segments_;
};

// Disjoint sorted scoring intervals (UEM) of one recording.
class ScoringRegions {
public:
    ScoringRegions() = default;
    // Sorts and merges touching/overlapping intervals; rejects offset <= onset.
    ScoringRegions(std::string recording_id, std::vector<std::pair<double, double>> intervals);

    const std::string &recording_id() const { return recording_id_; }
    const std::vector<std::pair<double, double>> &intervals() const { return intervals_; }
    bool empty() const { return intervals_.empty(); }
    double total_duration() const;

private:
    std::string recording_id_;
    std::vector<std::pair<double, double>> intervals_;
};

// `SPEAKER` lines grouped by recording id, in order of first appearance.
// Other line types and blank lines are skipped. Throws ParseError.
std::vector<Annotation> parse_rttm(std::string_view text);
std::vector<Annotation> read_rttm_file(const std::string &path);

std::string write_rttm(const std::vector<Annotation> &annotations);
std::string write_rttm(const Annotation &annotation);

// `<rec> 1 <onset> <offset>` per line.
std::vector<ScoringRegions> parse_uem(std::string_view text);
std::string write_uem(const std::vector<ScoringRegions> &regions);

Annotation merge_adjacent(const Annotation &annotation, double gap);
Annotation crop(const Annotation &annotation, const ScoringRegions &regions);
Annotation crop(const Annotation &annotation, const std::vector<std::pair<double, double>> &intervals);

// Convenience lookup; returns an empty annotation with the id when absent.
Annotation find_recording(const std::vector<Annotation> &annotations, const std::string &recording_id);

std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, std::string_view text);

} // namespace pidiar
