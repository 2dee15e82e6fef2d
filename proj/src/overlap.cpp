#include "pidiar/error.hpp"
#include "pidiar/reseg.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace pidiar {

using namespace detail;

OverlapRegions::OverlapRegions(std::string recording_id, std::vector<std::pair<double, double>> intervals)
    : recording_id_(std::move(recording_id)) {
    for (const auto &[on, off] : intervals)
        if (!(off > on) || !std::isfinite(on) || !std::isfinite(off) || on < 0.0)
            throw std::invalid_argument("overlap region needs 0 <= onset < offset");
    std::sort(intervals.begin(), intervals.end());
    for (const auto &iv : intervals) {
        if (!intervals_.empty() && iv.first <= intervals_.back().second) {
            intervals_.back().second = std::max(intervals_.back().second, iv.second);
        } else {
            intervals_.push_back(iv);
        }
    }
}

double OverlapRegions::total_duration() const {
    double t = 0.0;
    for (const auto &[on, off] : intervals_) t += off - on;
    return t;
}

std::vector<OverlapRegions> parse_overlaps(std::string_view text) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<double, double>>> spans;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        auto fields = split_fields(line);
        if (fields.empty() || fields[0].front() == '#') return;
        if (fields.size() != 5 || fields[0] != "OVL") throw ParseError(line_no, "expected 'OVL <rec> 1 <onset> <dur>'");
        double onset = 0.0, duration = 0.0;
        if (!parse_double(fields[3], onset) || onset < 0.0) throw ParseError(line_no, "bad overlap onset");
        if (!parse_double(fields[4], duration) || !(duration > 0.0)) throw ParseError(line_no, "bad overlap duration");
        std::string rec(fields[1]);
        auto [it, inserted] = spans.try_emplace(rec);
        if (inserted) order.push_back(rec);
        it->second.emplace_back(onset, onset + duration);
    });
    std::vector<OverlapRegions> out;
    for (const auto &rec : order) out.emplace_back(rec, spans[rec]);
    return out;
}

std::string write_overlaps(const std::vector<OverlapRegions> &regions) {
    std::string out;
    for (const auto &r : regions) {
        for (const auto &[on, off] : r.intervals()) {
            out += "OVL " + r.recording_id() + " 1 " + format_seconds(on) + " " + format_seconds(off - on) + "\n";
        }
    }
    return out;
}

OverlapRegions find_overlaps(const std::vector<OverlapRegions> &all, const std::string &recording_id) {
    for (const auto &r : all)
        if (r.recording_id() == recording_id) return r;
    return OverlapRegions(recording_id, {});
}

namespace {

// Parts of [on, off) not covered by `covered` (sorted, possibly overlapping).
std::vector<std::pair<double, double>> gaps(double on, double off, std::vector<std::pair<double, double>> covered) {
    std::sort(covered.begin(), covered.end());
    std::vector<std::pair<double, double>> out;
    double cursor = on;
    for (const auto &[a, b] : covered) {
        if (b <= cursor) continue;
        if (a >= off) break;
        if (a > cursor) out.emplace_back(cursor, a);
        cursor = std::max(cursor, b);
        if (cursor >= off) break;
    }
    if (cursor < off) out.emplace_back(cursor, off);
    return out;
}

} // namespace

OverlapAssignment assign_overlap(const Annotation &annotation, const PosteriorMatrix &posteriors,
                                 const OverlapRegions &overlaps) {
    posteriors.validate();
    OverlapAssignment result{annotation, {}};
    const Eigen::Index S = posteriors.num_speakers();
    for (const auto &[on, off] : overlaps.intervals()) {
        Eigen::VectorXd mass = Eigen::VectorXd::Zero(S);
        double weight = 0.0;
        for (Eigen::Index r = 0; r < posteriors.frames(); ++r) {
            const double a = std::max(on, posteriors.row_onset(r));
            const double b = std::min(off, posteriors.row_onset(r) + posteriors.row_duration());
            if (b <= a) continue;
            mass += (b - a) * posteriors.values.row(r).transpose();
            weight += b - a;
        }
        if (S < 2 || weight <= 0.0) {
            result.warnings.push_back("overlap region " + format_seconds(on) + "-" + format_seconds(off) + " of '" +
                                      overlaps.recording_id() + "' has fewer than two available speakers; left unchanged");
            continue;
        }
        Eigen::Index first = 0;
        for (Eigen::Index c = 1; c < S; ++c)
            if (mass(c) > mass(first)) first = c;
        Eigen::Index second = first == 0 ? 1 : 0;
        for (Eigen::Index c = 0; c < S; ++c)
            if (c != first && mass(c) > mass(second)) second = c;

        for (Eigen::Index c : {first, second}) {
            const std::string label = posteriors.speaker_label(c);
            std::vector<std::pair<double, double>> covered;
            for (const auto &s : result.annotation.segments())
                if (s.speaker == label) covered.emplace_back(s.onset, s.offset());
            for (const auto &[a, b] : gaps(on, off, covered)) result.annotation.add(a, b - a, label);
        }
    }
    return result;
}

} // namespace pidiar
