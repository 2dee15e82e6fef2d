#include "pidiar/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace pidiar {

namespace {

struct Turn {
    double onset;
    double offset;
    int speaker;
};

int pick_next_speaker(std::mt19937_64 &rng, int previous, int count) {
    if (count == 1) return 0;
    if (previous < 0) return std::uniform_int_distribution<int>(0, count - 1)(rng);
    int s = std::uniform_int_distribution<int>(0, count - 2)(rng);
    return s >= previous ? s + 1 : s;
}

} // namespace

SyntheticRecording generate_synthetic(const SyntheticSpec &spec) {
    const int K = spec.num_speakers();
    const int D = spec.embedding_dim();
    if (K < 1 || D < 1) throw std::invalid_argument("synthetic spec needs at least one speaker mean");
    if (!(spec.overlap_fraction >= 0.0 && spec.overlap_fraction < 1.0))
        throw std::invalid_argument("overlap fraction must be in [0, 1)");
    if (!(spec.within_std >= 0.0)) throw std::invalid_argument("within-speaker std must be >= 0");
    if (!(spec.min_turn > 0.0) || spec.mean_turn < spec.min_turn)
        throw std::invalid_argument("turn lengths need 0 < min_turn <= mean_turn");

    std::mt19937_64 rng(spec.seed);
    std::exponential_distribution<double> turn_tail(1.0 / std::max(spec.mean_turn - spec.min_turn, 1e-9));

    std::vector<Turn> turns;
    double t = 0.0;
    int prev = -1;
    while (t < spec.duration) {
        int s = pick_next_speaker(rng, prev, K);
        double len = spec.min_turn + (spec.mean_turn > spec.min_turn ? turn_tail(rng) : 0.0);
        double end = std::min(t + len, spec.duration);
        turns.push_back({t, end, s});
        prev = s;
        t = end;
        if (spec.pause_mean > 0.0) t += std::exponential_distribution<double>(1.0 / spec.pause_mean)(rng);
    }

    // Speaker segments; the next turn starts early to create overlap.
    std::vector<double> seg_onset(turns.size());
    for (std::size_t i = 0; i < turns.size(); ++i) seg_onset[i] = turns[i].onset;
    std::vector<std::pair<double, double>> overlap_spans;
    if (spec.overlap_fraction > 0.0 && K > 1) {
        double speech = 0.0, eligible = 0.0;
        for (std::size_t i = 0; i < turns.size(); ++i) {
            speech += turns[i].offset - turns[i].onset;
            if (i + 1 < turns.size() && turns[i + 1].onset == turns[i].offset &&
                turns[i + 1].speaker != turns[i].speaker)
                eligible += turns[i].offset - turns[i].onset;
        }
        if (eligible > 0.0) {
            const double rho = std::min(spec.overlap_fraction * speech / eligible, 0.9);
            for (std::size_t i = 0; i + 1 < turns.size(); ++i) {
                if (turns[i + 1].onset != turns[i].offset || turns[i + 1].speaker == turns[i].speaker) continue;
                double delta = rho * (turns[i].offset - turns[i].onset);
                seg_onset[i + 1] = turns[i + 1].onset - delta;
                overlap_spans.emplace_back(seg_onset[i + 1], turns[i].offset);
            }
        }
    }

    const std::string label_prefix = spec.recording_id + "_spk";
    Annotation raw(spec.recording_id);
    for (std::size_t i = 0; i < turns.size(); ++i) {
        double on = seg_onset[i];
        double off = turns[i].offset;
        if (off > on) raw.add(on, off - on, label_prefix + std::to_string(turns[i].speaker + 1));
    }
    Annotation reference = merge_adjacent(raw, 0.0);

    auto windows = window_times(spec.duration, spec.window_size, spec.window_shift);
    FloatMatrix vectors(static_cast<Eigen::Index>(windows.size()), D);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&](int speaker) {
        Eigen::VectorXd v(D);
        for (int d = 0; d < D; ++d) v(d) = spec.speaker_means(speaker, d) + spec.within_std * normal(rng);
        return v;
    };
    for (std::size_t w = 0; w < windows.size(); ++w) {
        const double c = static_cast<double>(w) * spec.window_shift + spec.window_size / 2.0;
        std::vector<int> active;
        for (std::size_t i = 0; i < turns.size(); ++i) {
            if (seg_onset[i] <= c && c < turns[i].offset) active.push_back(turns[i].speaker);
        }
        if (active.empty()) {
            double best = std::numeric_limits<double>::infinity();
            int who = turns.front().speaker;
            for (std::size_t i = 0; i < turns.size(); ++i) {
                double dist = c < seg_onset[i] ? seg_onset[i] - c : c - turns[i].offset;
                if (dist < best) {
                    best = dist;
                    who = turns[i].speaker;
                }
            }
            active.push_back(who);
        }
        Eigen::VectorXd v = draw(active[0]);
        if (active.size() >= 2) v = 0.5 * (v + draw(active[1]));
        vectors.row(static_cast<Eigen::Index>(w)) = v.cast<float>().transpose();
    }

    SyntheticRecording out{
        EmbeddingSequence(spec.recording_id, std::move(vectors), spec.window_size, spec.window_shift, spec.duration),
        std::move(reference), std::nullopt};
    if (spec.overlap_fraction > 0.0) {
        Annotation ovl(spec.recording_id);
        for (const auto &[on, off] : overlap_spans)
            if (off > on) ovl.add(on, off - on, "overlap");
        out.overlaps = merge_adjacent(ovl, 0.0);
    }
    return out;
}

Eigen::MatrixXd draw_speaker_means(const Eigen::MatrixXd &loading, int count, double min_separation,
                                   std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Index D = loading.rows();
    const Eigen::Index R = loading.cols();
    for (int attempt = 0; attempt < 10000; ++attempt) {
        Eigen::MatrixXd means(count, D);
        for (int k = 0; k < count; ++k) {
            Eigen::VectorXd z(R);
            for (Eigen::Index r = 0; r < R; ++r) z(r) = normal(rng);
            means.row(k) = (loading * z).transpose();
        }
        bool ok = true;
        for (int a = 0; a < count && ok; ++a)
            for (int b = a + 1; b < count && ok; ++b)
                ok = (means.row(a) - means.row(b)).norm() >= min_separation;
        if (ok) return means;
    }
    throw std::runtime_error("could not draw speaker means with the requested separation");
}

} // namespace pidiar
