#include "pidiar/error.hpp"
#include "pidiar/reseg.hpp"

#include <map>
#include <stdexcept>

namespace pidiar {

PLDAModel interpolate_plda(const PLDAModel &m1, const PLDAModel &m2, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("interpolation alpha must be in [0, 1]");
    if (m1.dim() != m2.dim()) throw std::invalid_argument("PLDA models differ in dimension");
    if (alpha == 1.0) return m1;
    if (alpha == 0.0) return m2;
    PLDAModel out;
    out.mean = alpha * m1.mean + (1.0 - alpha) * m2.mean;
    out.between = alpha * m1.between + (1.0 - alpha) * m2.between;
    out.within = alpha * m1.within + (1.0 - alpha) * m2.within;
    out.validate();
    return out;
}

namespace {

struct ClassStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd within;  // pooled, divided by N
    Eigen::MatrixXd between; // count-weighted, divided by N
    int classes = 0;
};

ClassStats class_stats(const Eigen::MatrixXd &X, const std::vector<int> &labels) {
    if (static_cast<Eigen::Index>(labels.size()) != X.rows()) throw std::invalid_argument("label count differs from row count");
    if (X.rows() < 2) throw std::invalid_argument("need at least two labeled rows");
    std::map<int, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < X.rows(); ++i) groups[labels[static_cast<std::size_t>(i)]].push_back(i);
    const Eigen::Index D = X.cols();
    const double N = static_cast<double>(X.rows());
    ClassStats st;
    st.classes = static_cast<int>(groups.size());
    st.mean = X.colwise().mean().transpose();
    st.within = Eigen::MatrixXd::Zero(D, D);
    st.between = Eigen::MatrixXd::Zero(D, D);
    for (const auto &[label, rows] : groups) {
        Eigen::MatrixXd Xc(static_cast<Eigen::Index>(rows.size()), D);
        for (std::size_t k = 0; k < rows.size(); ++k) Xc.row(static_cast<Eigen::Index>(k)) = X.row(rows[k]);
        const Eigen::VectorXd mc = Xc.colwise().mean().transpose();
        Xc.rowwise() -= mc.transpose();
        st.within.noalias() += Xc.transpose() * Xc;
        const Eigen::VectorXd dm = mc - st.mean;
        st.between.noalias() += static_cast<double>(rows.size()) * dm * dm.transpose();
    }
    st.within /= N;
    st.between /= N;
    return st;
}

} // namespace

PLDAModel estimate_plda(const Eigen::MatrixXd &X, const std::vector<int> &labels) {
    ClassStats st = class_stats(X, labels);
    PLDAModel m{st.mean, 0.5 * (st.between + st.between.transpose()), 0.5 * (st.within + st.within.transpose())};
    m.validate();
    return m;
}

WhiteningStats fit_whitening(const Eigen::MatrixXd &X, double ridge) {
    if (X.rows() < 2) throw std::invalid_argument("whitening needs at least two rows");
    if (!(ridge >= 0.0)) throw std::invalid_argument("ridge must be >= 0");
    WhiteningStats st;
    st.mean = X.colwise().mean().transpose();
    const Eigen::MatrixXd C = X.rowwise() - st.mean.transpose();
    Eigen::MatrixXd cov = (C.transpose() * C) / static_cast<double>(X.rows() - 1);
    cov.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw NumericalError("whitening covariance is singular; use a positive ridge to regularize it");
    st.factor = llt.matrixL();
    return st;
}

Eigen::MatrixXd whiten(const WhiteningStats &stats, const Eigen::MatrixXd &X) {
    if (X.cols() != stats.mean.size()) throw std::invalid_argument("whitening dimension mismatch");
    const Eigen::MatrixXd C = (X.rowwise() - stats.mean.transpose()).transpose();
    return stats.factor.triangularView<Eigen::Lower>().solve(C).transpose();
}

Eigen::MatrixXd whiten_and_normalize(const WhiteningStats &stats, const Eigen::MatrixXd &X) {
    Eigen::MatrixXd Y = whiten(stats, X);
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
        const double n = Y.row(i).norm();
        if (n > 0.0) Y.row(i) /= n;
    }
    return Y;
}

void write_whitening(const WhiteningStats &stats, const std::string &path) {
    const Eigen::Index D = stats.mean.size();
    FloatMatrix m(D + 1, D);
    m.row(0) = stats.mean.transpose().cast<float>();
    m.bottomRows(D) = stats.factor.cast<float>();
    write_container(path, m, {{"type", "whitening"}, {"dim", std::to_string(D)}});
}

WhiteningStats read_whitening(const std::string &path) {
    auto [m, meta] = read_container(path, "whitening");
    const long D = meta_int(meta, "dim");
    if (m.rows() != D + 1 || m.cols() != D) throw FormatError(0, "whitening payload shape does not match dim");
    WhiteningStats st;
    st.mean = m.row(0).transpose().cast<double>();
    st.factor = m.bottomRows(D).cast<double>().triangularView<Eigen::Lower>();
    return st;
}

LdaProjection lda_project(const Eigen::MatrixXd &X, const std::vector<int> &labels, int out_dim, double ridge) {
    const ClassStats st = class_stats(X, labels);
    const Eigen::Index D = X.cols();
    if (st.classes < 2) throw std::invalid_argument("LDA needs at least two classes");
    if (out_dim < 1 || out_dim > D) throw std::invalid_argument("LDA output dimension must be in [1, D]");
    if (!(ridge >= 0.0)) throw std::invalid_argument("ridge must be >= 0");

    Eigen::MatrixXd Sw = 0.5 * (st.within + st.within.transpose());
    Sw.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(Sw);
    if (llt.info() != Eigen::Success)
        throw NumericalError("within-class scatter is singular; use a positive ridge to regularize it");
    const Eigen::MatrixXd L_inv = llt.matrixL().solve(Eigen::MatrixXd::Identity(D, D));
    Eigen::MatrixXd M = L_inv * st.between * L_inv.transpose();
    M = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
    if (eig.info() != Eigen::Success) throw NumericalError("LDA eigendecomposition failed");

    LdaProjection out;
    out.matrix.resize(D, out_dim);
    out.eigenvalues.resize(out_dim);
    for (int k = 0; k < out_dim; ++k) {
        const Eigen::Index src = D - 1 - k;
        Eigen::VectorXd v = L_inv.transpose() * eig.eigenvectors().col(src);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        out.matrix.col(k) = v;
        out.eigenvalues(k) = eig.eigenvalues()(src);
    }
    out.projected = X * out.matrix;
    return out;
}

void write_lda(const Eigen::MatrixXd &matrix, const std::string &path) {
    const FloatMatrix m = matrix.transpose().cast<float>();
    write_container(path, m,
                    {{"type", "lda"}, {"input_dim", std::to_string(matrix.rows())},
                     {"output_dim", std::to_string(matrix.cols())}});
}

Eigen::MatrixXd read_lda(const std::string &path) {
    auto [m, meta] = read_container(path, "lda");
    if (m.rows() != meta_int(meta, "output_dim") || m.cols() != meta_int(meta, "input_dim"))
        throw FormatError(0, "LDA payload shape does not match its metadata");
    return m.cast<double>().transpose();
}

} // namespace pidiar
