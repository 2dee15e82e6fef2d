#pragma once

#include "pidiar/annotation.hpp"
#include "pidiar/embeddings.hpp"

#include <cstdint>
#include <optional>

namespace pidiar {

// Parameters of one synthetic recording. Speaker count and embedding
// dimension are the shape of `speaker_means` (one row per speaker).
struct SyntheticSpec {
    std::string recording_id = "synth";
    Eigen::MatrixXd speaker_means;
    double within_std = 1.0;
    double duration = 300.0;
    double window_size = 1.5;
    double window_shift = 0.25;
    // Turn length = min_turn + Exponential(mean_turn - min_turn).
    double mean_turn = 8.0;
    double min_turn = 2.0;
    // Mean of exponential pauses between turns; 0 gives back-to-back turns.
    double pause_mean = 0.0;
    // Overlapped share of speech time, in [0, 1).
    double overlap_fraction = 0.0;
    std::uint64_t seed = 0;

    int num_speakers() const { return static_cast<int>(speaker_means.rows()); }
    int embedding_dim() const { return static_cast<int>(speaker_means.cols()); }
};

struct SyntheticRecording {
    EmbeddingSequence embeddings;
    Annotation reference;
    // Present when overlap_fraction > 0; every segment is labeled "overlap".
    std::optional<Annotation> overlaps;
};

// Turns follow the turn-length distribution with the next speaker drawn
// uniformly from the others. Overlap is created by starting the next turn
// early. Each window's embedding is a draw from the speaker active at the
// window center (the nearest turn during pauses); with two active speakers
// it is the mean of one draw from each.
SyntheticRecording generate_synthetic(const SyntheticSpec &spec);

// `count` speaker means drawn from N(0, loading * loading^T), redrawn until
// every pair is at least `min_separation` apart. Throws std::runtime_error
// after 10000 failed draws.
Eigen::MatrixXd draw_speaker_means(const Eigen::MatrixXd &loading, int count, double min_separation,
                                   std::uint64_t seed);

} // namespace pidiar
