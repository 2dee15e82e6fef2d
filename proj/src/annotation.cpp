#include "pidiar/annotation.hpp"
#include "pidiar/error.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pidiar {

using namespace detail;

namespace {

bool segment_less(const Segment &a, const Segment &b) {
    if (a.onset != b.onset) return a.onset < b.onset;
    if (a.speaker != b.speaker) return a.speaker < b.speaker;
    return a.duration < b.duration;
}

void validate(const Segment &s) {
    if (!(s.onset >= 0.0) || !std::isfinite(s.onset))
        throw std::invalid_argument("segment onset must be finite and >= 0");
    if (!(s.duration > 0.0) || !std::isfinite(s.duration))
        throw std::invalid_argument("segment duration must be finite and > 0");
}

} // namespace

Annotation::Annotation(std::string recording_id, std::vector<Segment> segments)
    : recording_id_(std::move(recording_id)), segments_(std::move(segments)) {
    for (auto &s : segments_) {
        validate(s);
        if (s.recording_id.empty()) s.recording_id = recording_id_;
        if (s.recording_id != recording_id_)
            throw std::invalid_argument("segment recording id '" + s.recording_id +
                                        "' differs from annotation '" + recording_id_ + "'");
    }
    std::stable_sort(segments_.begin(), segments_.end(), segment_less);
}

void Annotation::add(Segment segment) {
    validate(segment);
    if (segment.recording_id.empty()) segment.recording_id = recording_id_;
    if (segment.recording_id != recording_id_)
        throw std::invalid_argument("segment recording id '" + segment.recording_id +
                                    "' differs from annotation '" + recording_id_ + "'");
    auto it = std::upper_bound(segments_.begin(), segments_.end(), segment, segment_less);
    segments_.insert(it, std::move(segment));
}

void Annotation::add(double onset, double duration, const std::string &speaker) {
    add(Segment{recording_id_, onset, duration, speaker});
}

std::vector<std::string> Annotation::speakers() const {
    std::vector<std::string> out;
    for (const auto &s : segments_) out.push_back(s.speaker);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double Annotation::total_duration() const {
    double total = 0.0;
    for (const auto &s : segments_) total += s.duration;
    return total;
}

std::map<std::string, double> Annotation::speaker_durations() const {
    std::map<std::string, double> out;
    for (const auto &s : segments_) out[s.speaker] += s.duration;
    return out;
}

std::vector<std::pair<double, double>> Annotation::speech_regions() const {
    std::vector<std::pair<double, double>> out;
    for (const auto &s : segments_) {
        if (!out.empty() && s.onset <= out.back().second) {
            out.back().second = std::max(out.back().second, s.offset());
        } else {
            out.emplace_back(s.onset, s.offset());
        }
    }
    return out;
}

ScoringRegions::ScoringRegions(std::string recording_id,
                               std::vector<std::pair<double, double>> intervals)
    : recording_id_(std::move(recording_id)) {
    for (const auto &[on, off] : intervals) {
        if (!(off > on) || !std::isfinite(on) || !std::isfinite(off))
            throw std::invalid_argument("scoring region must satisfy offset > onset");
    }
    std::sort(intervals.begin(), intervals.end());
    for (const auto &iv : intervals) {
        if (!intervals_.empty() && iv.first <= intervals_.back().second) {
            intervals_.back().second = std::max(intervals_.back().second, iv.second);
        } else {
            intervals_.push_back(iv);
        }
    }
}

double ScoringRegions::total_duration() const {
    double total = 0.0;
    for (const auto &[on, off] : intervals_) total += off - on;
    return total;
}

std::vector<Annotation> parse_rttm(std::string_view text) {
    std::vector<Annotation> out;
    std::map<std::string, std::size_t, std::less<>> index;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        auto fields = split_fields(line);
        if (fields.empty() || fields[0] != "SPEAKER") return;
        if (fields.size() != 9 && fields.size() != 10)
            throw ParseError(line_no, "expected 10 fields, got " + std::to_string(fields.size()));
        double onset = 0.0, duration = 0.0;
        if (!parse_double(fields[3], onset))
            throw ParseError(line_no, "non-numeric onset '" + std::string(fields[3]) + "'");
        if (!parse_double(fields[4], duration))
            throw ParseError(line_no, "non-numeric duration '" + std::string(fields[4]) + "'");
        if (onset < 0.0) throw ParseError(line_no, "negative onset");
        if (duration <= 0.0) throw ParseError(line_no, "duration must be positive");
        std::string rec(fields[1]);
        auto it = index.find(rec);
        if (it == index.end()) {
            it = index.emplace(rec, out.size()).first;
            out.emplace_back(rec);
        }
        out[it->second].add(Segment{rec, onset, duration, std::string(fields[7])});
    });
    return out;
}

std::vector<Annotation> read_rttm_file(const std::string &path) {
    return parse_rttm(read_text_file(path));
}

std::string write_rttm(const std::vector<Annotation> &annotations) {
    std::string out;
    for (const auto &a : annotations) out += write_rttm(a);
    return out;
}

std::string write_rttm(const Annotation &annotation) {
    std::string out;
    for (const auto &s : annotation.segments()) {
        out += "SPEAKER ";
        out += s.recording_id;
        out += " 1 ";
        out += format_seconds(s.onset);
        out += ' ';
        out += format_seconds(s.duration);
        out += " <NA> <NA> ";
        out += s.speaker;
        out += " <NA> <NA>\n";
    }
    return out;
}

std::vector<ScoringRegions> parse_uem(std::string_view text) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<double, double>>> by_rec;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        auto fields = split_fields(line);
        if (fields.empty() || fields[0].front() == '#') return;
        if (fields.size() != 4)
            throw ParseError(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
        double on = 0.0, off = 0.0;
        if (!parse_double(fields[2], on) || !parse_double(fields[3], off))
            throw ParseError(line_no, "non-numeric time");
        if (!(off > on) || on < 0.0) throw ParseError(line_no, "region must satisfy 0 <= onset < offset");
        std::string rec(fields[0]);
        if (!by_rec.count(rec)) order.push_back(rec);
        by_rec[rec].emplace_back(on, off);
    });
    std::vector<ScoringRegions> out;
    for (const auto &rec : order) out.emplace_back(rec, by_rec[rec]);
    return out;
}

std::string write_uem(const std::vector<ScoringRegions> &regions) {
    std::string out;
    for (const auto &r : regions) {
        for (const auto &[on, off] : r.intervals()) {
            out += r.recording_id() + " 1 " + format_seconds(on) + ' ' + format_seconds(off) + '\n';
        }
    }
    return out;
}

Annotation merge_adjacent(const Annotation &annotation, double gap) {
    if (gap < 0.0) throw std::invalid_argument("merge gap must be >= 0");
    std::map<std::string, std::vector<const Segment *>> by_speaker;
    for (const auto &s : annotation.segments()) by_speaker[s.speaker].push_back(&s);

    // A run of one segment keeps its original duration bit for bit.
    Annotation out(annotation.recording_id());
    for (auto &[speaker, segs] : by_speaker) {
        std::sort(segs.begin(), segs.end(), [](const Segment *a, const Segment *b) {
            return a->onset != b->onset ? a->onset < b->onset : a->offset() < b->offset();
        });
        const Segment *first = segs.front();
        double off = first->offset();
        std::size_t run = 1;
        auto flush = [&] {
            if (run == 1) {
                out.add(first->onset, first->duration, speaker);
            } else {
                out.add(first->onset, off - first->onset, speaker);
            }
        };
        for (std::size_t i = 1; i < segs.size(); ++i) {
            if (segs[i]->onset - off <= gap) {
                off = std::max(off, segs[i]->offset());
                ++run;
            } else {
                flush();
                first = segs[i];
                off = first->offset();
                run = 1;
            }
        }
        flush();
    }
    return out;
}

Annotation crop(const Annotation &annotation, const ScoringRegions &regions) {
    return crop(annotation, regions.intervals());
}

Annotation crop(const Annotation &annotation, const std::vector<std::pair<double, double>> &intervals) {
    Annotation out(annotation.recording_id());
    for (const auto &s : annotation.segments()) {
        for (const auto &[ron, roff] : intervals) {
            double on = std::max(s.onset, ron);
            double off = std::min(s.offset(), roff);
            if (on == s.onset && off == s.offset()) {
                out.add(s);
            } else if (off > on) {
                out.add(on, off - on, s.speaker);
            }
        }
    }
    return out;
}

Annotation find_recording(const std::vector<Annotation> &annotations, const std::string &recording_id) {
    for (const auto &a : annotations)
        if (a.recording_id() == recording_id) return a;
    return Annotation(recording_id);
}

std::string read_text_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string &path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

} // namespace pidiar
