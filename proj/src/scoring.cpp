#include "pidiar/scoring.hpp"
#include "pidiar/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pidiar {

PCAModel fit_pca(const Eigen::MatrixXd &X, PcaTarget target) {
    if (X.rows() < 2) throw std::invalid_argument("PCA needs at least two rows");
    if (target.kind == PcaTarget::Kind::EnergyFraction && !(target.value > 0.0 && target.value <= 1.0))
        throw std::invalid_argument("PCA energy fraction must be in (0, 1]");
    if (target.kind == PcaTarget::Kind::Count && target.value < 1.0)
        throw std::invalid_argument("PCA dimension count must be >= 1");

    PCAModel pca;
    pca.mean = X.colwise().mean().transpose();
    const Eigen::MatrixXd centered = X.rowwise() - pca.mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(X.rows() - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw NumericalError("PCA eigendecomposition failed");
    const Eigen::Index D = cov.rows();
    // Descending order.
    Eigen::VectorXd values = eig.eigenvalues().reverse().cwiseMax(0.0);
    Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();

    const double total = values.sum();
    const double largest = values(0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < D; ++i)
        if (values(i) > 1e-12 * largest) ++rank;

    Eigen::Index keep = 1;
    if (target.kind == PcaTarget::Kind::Count) {
        keep = std::max<Eigen::Index>(1, std::min<Eigen::Index>(static_cast<Eigen::Index>(target.value), rank));
    } else if (total > 0.0) {
        double cumulative = 0.0;
        keep = D;
        for (Eigen::Index i = 0; i < D; ++i) {
            cumulative += values(i);
            if (cumulative >= target.value * total * (1.0 - 1e-12)) {
                keep = i + 1;
                break;
            }
        }
    }
    pca.basis = vectors.leftCols(keep);
    pca.eigenvalues = values.head(keep);
    return pca;
}

Eigen::MatrixXd pca_project(const PCAModel &pca, const Eigen::MatrixXd &X) {
    if (X.cols() != pca.input_dim()) throw std::invalid_argument("PCA input dimension mismatch");
    return (X.rowwise() - pca.mean.transpose()) * pca.basis;
}

void PLDAModel::validate() const {
    const Eigen::Index D = mean.size();
    if (D < 1 || between.rows() != D || between.cols() != D || within.rows() != D || within.cols() != D)
        throw NumericalError("PLDA parameter shapes are inconsistent");
    const double scale_b = std::max(1.0, between.cwiseAbs().maxCoeff());
    const double scale_w = std::max(1.0, within.cwiseAbs().maxCoeff());
    if ((between - between.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale_b ||
        (within - within.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale_w)
        throw NumericalError("PLDA covariances must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(within);
    if (llt.info() != Eigen::Success) throw NumericalError("PLDA within-speaker covariance is not positive definite");
}

PldaScorer::PldaScorer(const PLDAModel &model) : mean_(model.mean) {
    model.validate();
    const Eigen::MatrixXd within = 0.5 * (model.within + model.within.transpose());
    const Eigen::MatrixXd between = 0.5 * (model.between + model.between.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(within);
    if (llt.info() != Eigen::Success) throw NumericalError("total covariance is singular");
    const Eigen::Index D = within.rows();
    const Eigen::MatrixXd L_inv = llt.matrixL().solve(Eigen::MatrixXd::Identity(D, D));
    Eigen::MatrixXd M = L_inv * between * L_inv.transpose();
    M = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
    if (eig.info() != Eigen::Success) throw NumericalError("PLDA diagonalization failed");
    psi_ = eig.eigenvalues();
    const double scale = std::max(1.0, psi_.cwiseAbs().maxCoeff());
    if (psi_.minCoeff() < -1e-8 * scale) throw NumericalError("PLDA between-speaker covariance is not PSD");
    psi_ = psi_.cwiseMax(0.0);
    transform_ = eig.eigenvectors().transpose() * L_inv;

    constant_.resize(D);
    quadratic_.resize(D);
    cross_.resize(D);
    for (Eigen::Index d = 0; d < D; ++d) {
        const double p = psi_(d);
        constant_(d) = std::log1p(p) - 0.5 * std::log1p(2.0 * p);
        quadratic_(d) = p * p / ((1.0 + 2.0 * p) * (1.0 + p));
        cross_(d) = p / (1.0 + 2.0 * p);
    }
    constant_sum_ = constant_.sum();
}

Eigen::VectorXd PldaScorer::transform(const Eigen::VectorXd &x) const {
    if (x.size() != mean_.size()) throw std::invalid_argument("PLDA input dimension mismatch");
    return transform_ * (x - mean_);
}

Eigen::MatrixXd PldaScorer::transform_rows(const Eigen::MatrixXd &X) const {
    if (X.cols() != mean_.size()) throw std::invalid_argument("PLDA input dimension mismatch");
    return (X.rowwise() - mean_.transpose()) * transform_.transpose();
}

double PldaScorer::llr_transformed(const Eigen::VectorXd &u1, const Eigen::VectorXd &u2) const {
    double s = 0.0;
    for (Eigen::Index d = 0; d < u1.size(); ++d) {
        const double a = u1(d), b = u2(d);
        s += constant_(d) - 0.5 * quadratic_(d) * (a * a + b * b) + cross_(d) * (a * b);
    }
    return s;
}

double PldaScorer::llr(const Eigen::VectorXd &x1, const Eigen::VectorXd &x2) const {
    return llr_transformed(transform(x1), transform(x2));
}

Eigen::MatrixXd PldaScorer::llr_matrix(const Eigen::MatrixXd &X) const {
    const Eigen::MatrixXd U = transform_rows(X);
    const Eigen::VectorXd self = -0.5 * (U.array().square().rowwise() * quadratic_.transpose().array()).rowwise().sum();
    Eigen::MatrixXd S = (U * cross_.asDiagonal()) * U.transpose();
    S.colwise() += self;
    S.rowwise() += self.transpose();
    S.array() += constant_sum_;
    return 0.5 * (S + S.transpose());
}

double plda_llr(const PLDAModel &model, const Eigen::VectorXd &x1, const Eigen::VectorXd &x2) {
    return PldaScorer(model).llr(x1, x2);
}

PLDAModel project_plda(const PLDAModel &model, const PCAModel &pca) {
    if (model.dim() != pca.input_dim()) throw std::invalid_argument("PLDA and PCA dimensions differ");
    const Eigen::MatrixXd &B = pca.basis;
    PLDAModel out;
    out.mean = B.transpose() * (model.mean - pca.mean);
    out.between = B.transpose() * model.between * B;
    out.within = B.transpose() * model.within * B;
    out.between = 0.5 * (out.between + out.between.transpose()).eval();
    out.within = 0.5 * (out.within + out.within.transpose()).eval();
    return out;
}

std::string to_string(ScoreKind kind) { return kind == ScoreKind::Cosine ? "cosine" : "plda"; }

ScoreKind score_kind_from_string(const std::string &s) {
    if (s == "cosine") return ScoreKind::Cosine;
    if (s == "plda") return ScoreKind::Plda;
    throw std::invalid_argument("unknown scoring kind '" + s + "' (expected cosine or plda)");
}

SimilarityMatrix cosine_similarity(const std::string &recording_id, const Eigen::MatrixXd &X, const PCAModel &pca) {
    Eigen::MatrixXd P = pca_project(pca, X);
    const Eigen::Index N = P.rows();
    Eigen::VectorXd norms = P.rowwise().norm();
    for (Eigen::Index i = 0; i < N; ++i) {
        if (norms(i) > 0.0) P.row(i) /= norms(i);
    }
    SimilarityMatrix out{recording_id, P * P.transpose(), ScoreKind::Cosine};
    Eigen::MatrixXd &S = out.scores;
    S = (0.5 * (S + S.transpose())).cwiseMax(-1.0).cwiseMin(1.0);
    for (Eigen::Index i = 0; i < N; ++i) {
        if (norms(i) > 0.0) {
            S(i, i) = 1.0;
        } else {
            S.row(i).setZero();
            S.col(i).setZero();
        }
    }
    return out;
}

SimilarityMatrix cosine_similarity(const EmbeddingSequence &seq, const PCAModel &pca) {
    return cosine_similarity(seq.recording_id(), seq.vectors_d(), pca);
}

SimilarityMatrix score_plda_matrix(const std::string &recording_id, const Eigen::MatrixXd &X, const PLDAModel &model,
                                   double energy_fraction) {
    if (X.rows() < 2) throw std::invalid_argument("PLDA scoring needs at least two embeddings");
    if (X.cols() != model.dim()) throw std::invalid_argument("embedding and PLDA dimensions differ");
    const PCAModel pca = fit_pca(X, PcaTarget::energy(energy_fraction));
    const PldaScorer scorer(project_plda(model, pca));
    return {recording_id, scorer.llr_matrix(pca_project(pca, X)), ScoreKind::Plda};
}

SimilarityMatrix score_plda_matrix(const EmbeddingSequence &seq, const PLDAModel &model, double energy_fraction) {
    return score_plda_matrix(seq.recording_id(), seq.vectors_d(), model, energy_fraction);
}

Eigen::MatrixXd sigmoid_weights(const SimilarityMatrix &scores, double scale, double offset) {
    if (!(scale > 0.0)) throw std::invalid_argument("sigmoid scale must be positive");
    return (1.0 + (-scale * (scores.scores.array() - offset)).exp()).inverse().matrix();
}

SimilarityMatrix standardize_scores(const SimilarityMatrix &scores) {
    const Eigen::Index N = scores.size();
    SimilarityMatrix out = scores;
    if (N < 2) return out;
    double sum = 0.0, sum_sq = 0.0;
    const double count = static_cast<double>(N) * static_cast<double>(N - 1);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < N; ++j)
            if (i != j) sum += scores.scores(i, j);
    const double mean = sum / count;
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < N; ++j)
            if (i != j) sum_sq += (scores.scores(i, j) - mean) * (scores.scores(i, j) - mean);
    const double sd = std::sqrt(sum_sq / count);
    out.scores.array() -= mean;
    if (sd > 0.0) out.scores /= sd;
    return out;
}

// PLDA payload rows: mean, then D rows of `between`, then D rows of `within`.
void write_plda(const PLDAModel &model, const std::string &path) {
    model.validate();
    const Eigen::Index D = model.dim();
    FloatMatrix m(2 * D + 1, D);
    m.row(0) = model.mean.cast<float>().transpose();
    m.middleRows(1, D) = model.between.cast<float>();
    m.middleRows(1 + D, D) = model.within.cast<float>();
    write_container(path, m, {{"type", "plda"}, {"dim", std::to_string(D)}});
}

PLDAModel read_plda(const std::string &path) {
    auto [m, meta] = read_container(path, "plda");
    const Eigen::Index D = meta_int(meta, "dim");
    if (m.cols() != D || m.rows() != 2 * D + 1) throw FormatError(4, "PLDA payload shape does not match dim");
    PLDAModel model;
    model.mean = m.row(0).transpose().cast<double>();
    model.between = m.middleRows(1, D).cast<double>();
    model.within = m.middleRows(1 + D, D).cast<double>();
    model.validate();
    return model;
}

// PCA payload rows: mean, eigenvalues (zero padded to D), then d basis columns.
void write_pca(const PCAModel &model, const std::string &path) {
    const Eigen::Index D = model.input_dim();
    const Eigen::Index d = model.output_dim();
    FloatMatrix m = FloatMatrix::Zero(d + 2, D);
    m.row(0) = model.mean.cast<float>().transpose();
    m.row(1).head(d) = model.eigenvalues.cast<float>().transpose();
    m.bottomRows(d) = model.basis.transpose().cast<float>();
    write_container(path, m, {{"type", "pca"}, {"input_dim", std::to_string(D)}, {"output_dim", std::to_string(d)}});
}

PCAModel read_pca(const std::string &path) {
    auto [m, meta] = read_container(path, "pca");
    const Eigen::Index D = meta_int(meta, "input_dim");
    const Eigen::Index d = meta_int(meta, "output_dim");
    if (m.cols() != D || m.rows() != d + 2 || d < 1 || d > D) throw FormatError(4, "PCA payload shape does not match sidecar");
    PCAModel model;
    model.mean = m.row(0).transpose().cast<double>();
    model.eigenvalues = m.row(1).head(d).transpose().cast<double>();
    model.basis = m.bottomRows(d).transpose().cast<double>();
    return model;
}

} // namespace pidiar
