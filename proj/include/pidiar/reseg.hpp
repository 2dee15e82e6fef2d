#pragma once

#include "pidiar/annotation.hpp"
#include "pidiar/clustering.hpp"
#include "pidiar/scoring.hpp"

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace pidiar {

struct VBxConfig {
    double loop_probability = 0.8;
    int lda_dim = 220;
    double plda_interpolation_alpha = 0.5;
    int max_iterations = 40;
    double convergence_tolerance = 1e-4;
    // Acoustic and speaker-prior scaling; 1.0 is the plain Bayesian model.
    double fa = 1.0;
    double fb = 1.0;

    void validate() const;
};

// Frame-wise speaker activity posteriors. Row r covers base frames
// [r*subsample_factor, (r+1)*subsample_factor), each frame_shift seconds,
// starting at `offset`.
struct PosteriorMatrix {
    std::string recording_id;
    Eigen::MatrixXd values; // frames x speakers
    double frame_shift = 0.01;
    int subsample_factor = 1;
    double offset = 0.0;
    // Optional speaker labels, one per column.
    std::vector<std::string> speakers;

    Eigen::Index frames() const { return values.rows(); }
    Eigen::Index num_speakers() const { return values.cols(); }
    double row_duration() const { return frame_shift * subsample_factor; }
    double row_onset(Eigen::Index r) const {
        return offset + static_cast<double>(r * subsample_factor) * frame_shift;
    }
    // Column label: speakers[c] when present, else "spk<c+1>".
    std::string speaker_label(Eigen::Index c) const;

    void validate() const;
};

void write_posteriors(const PosteriorMatrix &post, const std::string &path);
PosteriorMatrix read_posteriors(const std::string &path);

// Sorted disjoint overlapped-speech intervals of one recording.
class OverlapRegions {
public:
    OverlapRegions() = default;
    // Sorts and merges touching intervals; rejects offset <= onset.
    OverlapRegions(std::string recording_id, std::vector<std::pair<double, double>> intervals);

    const std::string &recording_id() const { return recording_id_; }
    const std::vector<std::pair<double, double>> &intervals() const { return intervals_; }
    bool empty() const { return intervals_.empty(); }
    double total_duration() const;

private:
    std::string recording_id_;
    std::vector<std::pair<double, double>> intervals_;
};

// `OVL <rec> 1 <onset> <dur>` lines; blank lines and `#` comments skipped.
std::vector<OverlapRegions> parse_overlaps(std::string_view text);
std::string write_overlaps(const std::vector<OverlapRegions> &regions);
OverlapRegions find_overlaps(const std::vector<OverlapRegions> &all, const std::string &recording_id);

// mean, between and within each alpha*m1 + (1-alpha)*m2.
PLDAModel interpolate_plda(const PLDAModel &m1, const PLDAModel &m2, double alpha);

// Two-covariance PLDA estimated from labeled rows: within = pooled
// within-class covariance, between = covariance of class means.
PLDAModel estimate_plda(const Eigen::MatrixXd &X, const std::vector<int> &labels);

struct WhiteningStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd factor; // lower Cholesky factor of the covariance
};

// Mean and Cholesky factor of (covariance + ridge*I) of the rows of X.
WhiteningStats fit_whitening(const Eigen::MatrixXd &X, double ridge = 0.0);
// Rows of L^{-1}(x - mean).
Eigen::MatrixXd whiten(const WhiteningStats &stats, const Eigen::MatrixXd &X);
// whiten() then each row scaled to unit norm (zero rows stay zero).
Eigen::MatrixXd whiten_and_normalize(const WhiteningStats &stats, const Eigen::MatrixXd &X);

void write_whitening(const WhiteningStats &stats, const std::string &path);
WhiteningStats read_whitening(const std::string &path);

struct LdaProjection {
    Eigen::MatrixXd matrix;      // D x out_dim, y = matrix^T x
    Eigen::VectorXd eigenvalues; // out_dim, non-increasing
    Eigen::MatrixXd projected;   // X * matrix
};

// Generalized eigenproblem S_b v = lambda (S_w + ridge I) v. Columns beyond
// classes-1 continue down the eigenvalue order (near-zero between scatter).
LdaProjection lda_project(const Eigen::MatrixXd &X, const std::vector<int> &labels, int out_dim,
                          double ridge = 1e-6);

void write_lda(const Eigen::MatrixXd &matrix, const std::string &path);
Eigen::MatrixXd read_lda(const std::string &path);

struct VBxResult {
    Partition partition;
    // One column per surviving state, column c = partition cluster c.
    PosteriorMatrix posteriors;
    std::vector<double> elbo; // one value per iteration
};

// Bayesian HMM over window embeddings with one speaker state per initial
// cluster. `X` rows live in the PLDA space. Posterior frames are centered
// on the window centers (offset = window_size/2 - window_shift/2).
VBxResult vbx_resegment(const EmbeddingSequence &seq, const Eigen::MatrixXd &X, const PLDAModel &plda,
                        const Partition &init, const VBxConfig &cfg);
VBxResult vbx_resegment(const EmbeddingSequence &seq, const PLDAModel &plda, const Partition &init,
                        const VBxConfig &cfg);

struct OverlapAssignment {
    Annotation annotation;
    std::vector<std::string> warnings;
};

// Inside each overlap region the two speakers with the highest average
// posterior are both made active over the whole region. Speech already
// present is kept. Regions with fewer than two speakers stay unchanged.
OverlapAssignment assign_overlap(const Annotation &annotation, const PosteriorMatrix &posteriors,
                                 const OverlapRegions &overlaps);

// Threshold (argmax fallback when nothing clears it), per-speaker median
// filter over `median_window` rows, segments on the base frame grid, then
// cropped to the SAD speech regions.
Annotation decode_posteriors(const PosteriorMatrix &post, double threshold, const Annotation &sad,
                             int median_window = 11);

} // namespace pidiar
