#pragma once

#include "pidiar/embeddings.hpp"

#include <Eigen/Dense>

#include <string>

namespace pidiar {

struct PCAModel {
    Eigen::VectorXd mean;        // D
    Eigen::MatrixXd basis;       // D x d, orthonormal columns
    Eigen::VectorXd eigenvalues; // d, non-increasing

    Eigen::Index input_dim() const { return basis.rows(); }
    Eigen::Index output_dim() const { return basis.cols(); }
};

// Either a fixed dimension count or a fraction of total variance in (0, 1].
struct PcaTarget {
    enum class Kind { Count, EnergyFraction };
    Kind kind = Kind::Count;
    double value = 0.0;

    static PcaTarget count(int n) { return {Kind::Count, static_cast<double>(n)}; }
    static PcaTarget energy(double fraction) { return {Kind::EnergyFraction, fraction}; }
};

// Principal directions of mean-centered rows of X (unbiased covariance).
// Energy targets keep the smallest k whose cumulative eigenvalue share
// reaches the fraction; zero-variance data keeps one direction.
PCAModel fit_pca(const Eigen::MatrixXd &X, PcaTarget target);
// Rows of (X - mean) * basis.
Eigen::MatrixXd pca_project(const PCAModel &pca, const Eigen::MatrixXd &X);

// Two-covariance Gaussian PLDA: x = m + y + e, y ~ N(0, between), e ~ N(0, within).
struct PLDAModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd between;
    Eigen::MatrixXd within;

    Eigen::Index dim() const { return mean.size(); }
    // Throws NumericalError when asymmetric or `within` is not positive definite.
    void validate() const;
};

// Simultaneously diagonalized PLDA: transform() maps x to coordinates where
// the within covariance is I and the between covariance is diag(psi).
class PldaScorer {
public:
    explicit PldaScorer(const PLDAModel &model);

    Eigen::Index dim() const { return psi_.size(); }
    const Eigen::VectorXd &psi() const { return psi_; }
    const Eigen::MatrixXd &transform_matrix() const { return transform_; }

    Eigen::VectorXd transform(const Eigen::VectorXd &x) const;
    Eigen::MatrixXd transform_rows(const Eigen::MatrixXd &X) const;

    // log p(x1, x2 | same) - log p(x1, x2 | different).
    double llr(const Eigen::VectorXd &x1, const Eigen::VectorXd &x2) const;
    // LLRs between all rows of X; exactly symmetric.
    Eigen::MatrixXd llr_matrix(const Eigen::MatrixXd &X) const;

private:
    double llr_transformed(const Eigen::VectorXd &u1, const Eigen::VectorXd &u2) const;

    Eigen::VectorXd mean_;
    Eigen::MatrixXd transform_;
    Eigen::VectorXd psi_;
    Eigen::VectorXd constant_, quadratic_, cross_;
    double constant_sum_ = 0.0;
};

double plda_llr(const PLDAModel &model, const Eigen::VectorXd &x1, const Eigen::VectorXd &x2);

// Congruence transform of a PLDA model into a PCA subspace.
PLDAModel project_plda(const PLDAModel &model, const PCAModel &pca);

enum class ScoreKind { Cosine, Plda };
std::string to_string(ScoreKind kind);
ScoreKind score_kind_from_string(const std::string &s);

struct SimilarityMatrix {
    std::string recording_id;
    Eigen::MatrixXd scores;
    ScoreKind kind = ScoreKind::Cosine;

    Eigen::Index size() const { return scores.rows(); }
};

// Cosine similarity in the PCA space. A zero-norm projection zeroes its row
// and column (diagonal included).
SimilarityMatrix cosine_similarity(const std::string &recording_id, const Eigen::MatrixXd &X, const PCAModel &pca);
SimilarityMatrix cosine_similarity(const EmbeddingSequence &seq, const PCAModel &pca);

// Recording-level PCA at `energy_fraction`, PLDA projected into that space,
// then all pairwise LLRs.
SimilarityMatrix score_plda_matrix(const EmbeddingSequence &seq, const PLDAModel &model, double energy_fraction = 0.3);
SimilarityMatrix score_plda_matrix(const std::string &recording_id, const Eigen::MatrixXd &X, const PLDAModel &model,
                                   double energy_fraction = 0.3);

// w = 1 / (1 + exp(-scale * (s - offset))), elementwise.
Eigen::MatrixXd sigmoid_weights(const SimilarityMatrix &scores, double scale, double offset);
// Affine map making the off-diagonal scores zero-mean, unit-variance.
SimilarityMatrix standardize_scores(const SimilarityMatrix &scores);

void write_plda(const PLDAModel &model, const std::string &path);
PLDAModel read_plda(const std::string &path);
void write_pca(const PCAModel &model, const std::string &path);
PCAModel read_pca(const std::string &path);

} // namespace pidiar
