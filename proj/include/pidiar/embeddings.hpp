#pragma once

#include "pidiar/container.hpp"

#include <string>
#include <utility>
#include <vector>

namespace pidiar {

struct Window {
    double onset = 0.0;
    double offset = 0.0;
};

// Windows start at 0, shift, 2*shift, ...; the last one is the largest i with
// i*shift + size <= duration + shift/2, its offset clipped to `duration`.
// Throws std::invalid_argument when duration < size or size/shift <= 0.
std::vector<Window> window_times(double duration, double size, double shift);

// Per-recording embedding matrix (one row per window) plus window timing.
class EmbeddingSequence {
public:
    EmbeddingSequence() = default;
    // Validates N >= 1, D >= 1, finite rows, and that N matches window_times.
    EmbeddingSequence(std::string recording_id, FloatMatrix vectors, double window_size,
                      double window_shift, double recording_duration);

    const std::string &recording_id() const { return recording_id_; }
    const FloatMatrix &vectors() const { return vectors_; }
    Eigen::MatrixXd vectors_d() const { return vectors_.cast<double>(); }
    Eigen::Index size() const { return vectors_.rows(); }
    Eigen::Index dim() const { return vectors_.cols(); }
    double window_size() const { return window_size_; }
    double window_shift() const { return window_shift_; }
    double recording_duration() const { return recording_duration_; }

    std::vector<Window> windows() const;
    // Nominal center of window i (i*shift + size/2).
    double center(Eigen::Index i) const { return static_cast<double>(i) * window_shift_ + window_size_ / 2.0; }

private:
    std::string recording_id_;
    FloatMatrix vectors_;
    double window_size_ = 0.0;
    double window_shift_ = 0.0;
    double recording_duration_ = 0.0;
};

// EMB1 payload at `path`, metadata at `<basename>.meta`.
void write_embeddings(const EmbeddingSequence &seq, const std::string &path);
EmbeddingSequence read_embeddings(const std::string &path);

} // namespace pidiar
