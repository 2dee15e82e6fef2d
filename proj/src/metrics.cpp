#include "pidiar/metrics.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace pidiar {

long frame_index(double seconds) { return static_cast<long>(std::floor(seconds * 100.0 + 0.5 + 1e-9)); }

namespace {

// Minimum-cost assignment of rows to distinct columns, rows <= cols.
// Returns the column of each row.
std::vector<int> hungarian(const std::vector<std::vector<double>> &cost, int rows, int cols) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(rows + 1)), v(static_cast<std::size_t>(cols + 1));
    std::vector<int> p(static_cast<std::size_t>(cols + 1)), way(static_cast<std::size_t>(cols + 1));
    for (int i = 1; i <= rows; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(cols + 1), inf);
        std::vector<char> used(static_cast<std::size_t>(cols + 1), 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= cols; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                                   u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= cols; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assign(static_cast<std::size_t>(rows), -1);
    for (int j = 1; j <= cols; ++j)
        if (p[static_cast<std::size_t>(j)] > 0) assign[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    return assign;
}

// Speaker activity on the frame grid.
struct FrameGrid {
    std::vector<std::string> labels;
    std::vector<std::vector<char>> active; // [speaker][frame]
};

FrameGrid rasterize(const Annotation &a, long frames) {
    FrameGrid g;
    g.labels = a.speakers();
    g.active.assign(g.labels.size(), std::vector<char>(static_cast<std::size_t>(frames), 0));
    for (const auto &s : a.segments()) {
        const auto idx = static_cast<std::size_t>(
            std::lower_bound(g.labels.begin(), g.labels.end(), s.speaker) - g.labels.begin());
        const long b = std::max(0L, frame_index(s.onset));
        const long e = std::min(frames, frame_index(s.offset()));
        for (long k = b; k < e; ++k) g.active[idx][static_cast<std::size_t>(k)] = 1;
    }
    return g;
}

long extent(const Annotation &a) {
    long e = 0;
    for (const auto &s : a.segments()) e = std::max(e, frame_index(s.offset()));
    return e;
}

std::vector<char> scored_mask(const Annotation &ref, const FrameGrid &rg, long frames, const ScoringOptions &opt,
                              const std::optional<ScoringRegions> &regions) {
    std::vector<char> mask(static_cast<std::size_t>(frames), regions ? 0 : 1);
    if (regions) {
        for (const auto &[on, off] : regions->intervals()) {
            const long b = std::max(0L, frame_index(on));
            const long e = std::min(frames, frame_index(off));
            for (long k = b; k < e; ++k) mask[static_cast<std::size_t>(k)] = 1;
        }
    }
    if (opt.collar > 0.0) {
        for (const auto &s : ref.segments()) {
            for (double t : {s.onset, s.offset()}) {
                const long b = std::max(0L, frame_index(t - opt.collar));
                const long e = std::min(frames, frame_index(t + opt.collar));
                for (long k = b; k < e; ++k) mask[static_cast<std::size_t>(k)] = 0;
            }
        }
    }
    if (!opt.score_overlap) {
        for (long k = 0; k < frames; ++k) {
            int n = 0;
            for (const auto &row : rg.active) n += row[static_cast<std::size_t>(k)];
            if (n > 1) mask[static_cast<std::size_t>(k)] = 0;
        }
    }
    return mask;
}

struct Scored {
    FrameGrid ref, hyp;
    std::vector<char> mask;
    std::vector<int> map; // ref speaker -> hyp speaker or -1
    long agreement = 0;
};

Scored score_frames(const Annotation &ref, const Annotation &hyp, const ScoringOptions &opt,
                    const std::optional<ScoringRegions> &regions) {
    if (!(opt.collar >= 0.0)) throw std::invalid_argument("collar must be >= 0");
    long frames = std::max(extent(ref), extent(hyp));
    if (regions)
        for (const auto &iv : regions->intervals()) frames = std::max(frames, frame_index(iv.second));
    Scored sc;
    sc.ref = rasterize(ref, frames);
    sc.hyp = rasterize(hyp, frames);
    sc.mask = scored_mask(ref, sc.ref, frames, opt, regions);

    const int R = static_cast<int>(sc.ref.labels.size());
    const int H = static_cast<int>(sc.hyp.labels.size());
    std::vector<std::vector<long>> overlap(static_cast<std::size_t>(R), std::vector<long>(static_cast<std::size_t>(H), 0));
    for (int r = 0; r < R; ++r)
        for (int h = 0; h < H; ++h)
            for (long k = 0; k < frames; ++k)
                if (sc.mask[static_cast<std::size_t>(k)] && sc.ref.active[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] &&
                    sc.hyp.active[static_cast<std::size_t>(h)][static_cast<std::size_t>(k)])
                    ++overlap[static_cast<std::size_t>(r)][static_cast<std::size_t>(h)];

    sc.map.assign(static_cast<std::size_t>(R), -1);
    if (R > 0 && H > 0) {
        const bool flip = R > H;
        const int n = flip ? H : R, m = flip ? R : H;
        std::vector<std::vector<double>> cost(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(m)));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    -static_cast<double>(flip ? overlap[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]
                                              : overlap[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
        const auto assign = hungarian(cost, n, m);
        for (int i = 0; i < n; ++i) {
            const int j = assign[static_cast<std::size_t>(i)];
            const int r = flip ? j : i, h = flip ? i : j;
            if (overlap[static_cast<std::size_t>(r)][static_cast<std::size_t>(h)] > 0) {
                sc.map[static_cast<std::size_t>(r)] = h;
                sc.agreement += overlap[static_cast<std::size_t>(r)][static_cast<std::size_t>(h)];
            }
        }
    }
    return sc;
}

std::optional<double> jer_from(const Scored &sc) {
    const std::size_t R = sc.ref.labels.size();
    if (R == 0) return std::nullopt;
    // Reference speakers without scored frames do not count.
    double total = 0.0;
    int counted = 0;
    for (std::size_t r = 0; r < R; ++r) {
        const int h = sc.map[r];
        long inter = 0, uni = 0, own = 0;
        for (std::size_t k = 0; k < sc.mask.size(); ++k) {
            if (!sc.mask[k]) continue;
            const bool a = sc.ref.active[r][k];
            const bool b = h >= 0 && sc.hyp.active[static_cast<std::size_t>(h)][k];
            own += a;
            inter += a && b;
            uni += a || b;
        }
        if (own == 0) continue;
        ++counted;
        total += h < 0 ? 1.0 : 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
    }
    if (counted == 0) return std::nullopt;
    return total / static_cast<double>(counted);
}

std::string fmt(const char *spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string fmt_opt(const std::optional<double> &v) { return v ? fmt("%.4f", *v) : "NA"; }

} // namespace

SpeakerMapping optimal_mapping(const Annotation &ref, const Annotation &hyp) {
    const Scored sc = score_frames(ref, hyp, {}, std::nullopt);
    SpeakerMapping out;
    for (std::size_t r = 0; r < sc.map.size(); ++r)
        if (sc.map[r] >= 0) out.pairs.emplace_back(sc.ref.labels[r], sc.hyp.labels[static_cast<std::size_t>(sc.map[r])]);
    out.agreement = static_cast<double>(sc.agreement) * kFrameStep;
    return out;
}

DERReport der(const Annotation &ref, const Annotation &hyp, const ScoringOptions &options,
              const std::optional<ScoringRegions> &regions) {
    const Scored sc = score_frames(ref, hyp, options, regions);
    long scored = 0, miss = 0, fa = 0, conf = 0;
    for (std::size_t k = 0; k < sc.mask.size(); ++k) {
        if (!sc.mask[k]) continue;
        long nref = 0, nhyp = 0, correct = 0;
        for (std::size_t r = 0; r < sc.ref.labels.size(); ++r) {
            if (!sc.ref.active[r][k]) continue;
            ++nref;
            const int h = sc.map[r];
            if (h >= 0 && sc.hyp.active[static_cast<std::size_t>(h)][k]) ++correct;
        }
        for (const auto &row : sc.hyp.active) nhyp += row[k];
        scored += nref;
        miss += std::max(0L, nref - nhyp);
        fa += std::max(0L, nhyp - nref);
        conf += std::min(nref, nhyp) - correct;
    }
    DERReport rep;
    rep.recording_id = ref.recording_id().empty() ? hyp.recording_id() : ref.recording_id();
    rep.scored_speech = static_cast<double>(scored) * kFrameStep;
    rep.missed = static_cast<double>(miss) * kFrameStep;
    rep.false_alarm = static_cast<double>(fa) * kFrameStep;
    rep.confusion = static_cast<double>(conf) * kFrameStep;
    if (scored > 0) rep.der = static_cast<double>(miss + fa + conf) / static_cast<double>(scored);
    rep.jer = jer_from(sc);
    for (std::size_t r = 0; r < sc.map.size(); ++r)
        if (sc.map[r] >= 0) rep.speaker_map.emplace_back(sc.ref.labels[r], sc.hyp.labels[static_cast<std::size_t>(sc.map[r])]);
    return rep;
}

std::optional<double> jer(const Annotation &ref, const Annotation &hyp, const ScoringOptions &options,
                          const std::optional<ScoringRegions> &regions) {
    return jer_from(score_frames(ref, hyp, options, regions));
}

DERReport aggregate(const std::vector<DERReport> &reports, const std::optional<std::set<std::string>> &filter) {
    DERReport all;
    all.recording_id = "ALL";
    double jer_sum = 0.0;
    int jer_count = 0, used = 0;
    for (const auto &r : reports) {
        if (filter && !filter->count(r.recording_id)) continue;
        ++used;
        all.scored_speech += r.scored_speech;
        all.missed += r.missed;
        all.false_alarm += r.false_alarm;
        all.confusion += r.confusion;
        if (r.jer) {
            jer_sum += *r.jer;
            ++jer_count;
        }
    }
    if (used == 0) throw std::invalid_argument("no reports to aggregate");
    if (all.scored_speech > 0.0) all.der = all.error() / all.scored_speech;
    if (jer_count > 0) all.jer = jer_sum / jer_count;
    if (used == 1) {
        for (const auto &r : reports)
            if (!filter || filter->count(r.recording_id)) {
                all.der = r.der;
                all.jer = r.jer;
            }
    }
    return all;
}

std::map<std::string, std::string> parse_domain_map(std::string_view text) {
    std::map<std::string, std::string> out;
    detail::for_each_line(text, [&](std::size_t, std::string_view line) {
        auto f = detail::split_fields(line);
        if (f.empty() || f[0].front() == '#') return;
        if (f.size() != 2) throw std::invalid_argument("domain map lines are '<recording> <domain>'");
        out[std::string(f[0])] = std::string(f[1]);
    });
    return out;
}

std::vector<DomainRow> domain_breakdown(const std::vector<DERReport> &reports,
                                        const std::map<std::string, std::string> &domains) {
    std::map<std::string, std::pair<double, int>> acc;
    std::map<std::string, int> counts;
    for (const auto &r : reports) {
        auto it = domains.find(r.recording_id);
        if (it == domains.end()) continue;
        ++counts[it->second];
        if (r.der) {
            acc[it->second].first += *r.der;
            ++acc[it->second].second;
        }
    }
    std::vector<DomainRow> rows;
    for (const auto &[domain, n] : counts) {
        DomainRow row{domain, n, std::nullopt};
        auto it = acc.find(domain);
        if (it != acc.end() && it->second.second > 0) row.mean_der = it->second.first / it->second.second;
        rows.push_back(row);
    }
    return rows;
}

std::string format_report_table(const std::vector<DERReport> &reports, const DERReport &total) {
    std::size_t width = 9;
    for (const auto &r : reports) width = std::max(width, r.recording_id.size());
    auto line = [&](const std::string &a, const std::string &b, const std::string &c, const std::string &d,
                    const std::string &e, const std::string &f, const std::string &g) {
        char buf[512];
        std::snprintf(buf, sizeof buf, "%-*s  %10s  %9s  %9s  %9s  %7s  %7s\n", static_cast<int>(width), a.c_str(),
                      b.c_str(), c.c_str(), d.c_str(), e.c_str(), f.c_str(), g.c_str());
        return std::string(buf);
    };
    auto row = [&](const DERReport &r) {
        return line(r.recording_id, fmt("%.2f", r.scored_speech), fmt("%.2f", r.missed), fmt("%.2f", r.false_alarm),
                    fmt("%.2f", r.confusion), fmt_opt(r.der), fmt_opt(r.jer));
    };
    std::string out = line("recording", "scored", "miss", "fa", "conf", "der", "jer");
    for (const auto &r : reports) out += row(r);
    out += row(total);
    return out;
}

std::string format_report_tsv(const std::vector<DERReport> &reports, const DERReport &total) {
    std::string out = "recording\tscored\tmiss\tfa\tconf\tder\tjer\n";
    auto row = [&](const DERReport &r) {
        out += r.recording_id + "\t" + fmt("%.3f", r.scored_speech) + "\t" + fmt("%.3f", r.missed) + "\t" +
               fmt("%.3f", r.false_alarm) + "\t" + fmt("%.3f", r.confusion) + "\t" + fmt_opt(r.der) + "\t" +
               fmt_opt(r.jer) + "\n";
    };
    for (const auto &r : reports) row(r);
    row(total);
    return out;
}

std::string format_domain_table(const std::vector<DomainRow> &rows) {
    std::size_t width = 6;
    for (const auto &r : rows) width = std::max(width, r.domain.size());
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s  %10s  %8s\n", static_cast<int>(width), "domain", "recordings", "mean_der");
    std::string out = buf;
    for (const auto &r : rows) {
        std::snprintf(buf, sizeof buf, "%-*s  %10d  %8s\n", static_cast<int>(width), r.domain.c_str(), r.recordings,
                      fmt_opt(r.mean_der).c_str());
        out += buf;
    }
    return out;
}

} // namespace pidiar
