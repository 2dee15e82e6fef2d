#include "pidiar/error.hpp"
#include "pidiar/reseg.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pidiar {

void VBxConfig::validate() const {
    if (!(loop_probability > 0.0 && loop_probability < 1.0)) throw std::invalid_argument("loop probability must be in (0, 1)");
    if (!(plda_interpolation_alpha >= 0.0 && plda_interpolation_alpha <= 1.0))
        throw std::invalid_argument("PLDA interpolation alpha must be in [0, 1]");
    if (lda_dim < 1) throw std::invalid_argument("LDA dimension must be >= 1");
    if (max_iterations < 1) throw std::invalid_argument("VBx needs at least one iteration");
    if (!(convergence_tolerance >= 0.0)) throw std::invalid_argument("convergence tolerance must be >= 0");
    if (!(fa > 0.0 && fb > 0.0)) throw std::invalid_argument("VBx scaling factors must be positive");
}

namespace {

double log_sum_exp(const double *v, Eigen::Index n) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) m = std::max(m, v[i]);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}

// Returns log p(X); fills gamma (T x S) with state occupation posteriors.
double forward_backward(const Eigen::MatrixXd &log_p, const Eigen::MatrixXd &log_tr, double log_init,
                        Eigen::MatrixXd &gamma) {
    const Eigen::Index T = log_p.rows(), S = log_p.cols();
    Eigen::MatrixXd lf(T, S), lb(T, S);
    std::vector<double> buf(static_cast<std::size_t>(S));
    for (Eigen::Index s = 0; s < S; ++s) lf(0, s) = log_init + log_p(0, s);
    for (Eigen::Index t = 1; t < T; ++t) {
        for (Eigen::Index s = 0; s < S; ++s) {
            for (Eigen::Index j = 0; j < S; ++j) buf[static_cast<std::size_t>(j)] = lf(t - 1, j) + log_tr(j, s);
            lf(t, s) = log_p(t, s) + log_sum_exp(buf.data(), S);
        }
    }
    lb.row(T - 1).setZero();
    for (Eigen::Index t = T - 2; t >= 0; --t) {
        for (Eigen::Index s = 0; s < S; ++s) {
            for (Eigen::Index j = 0; j < S; ++j)
                buf[static_cast<std::size_t>(j)] = log_tr(s, j) + log_p(t + 1, j) + lb(t + 1, j);
            lb(t, s) = log_sum_exp(buf.data(), S);
        }
    }
    Eigen::VectorXd final_row = lf.row(T - 1).transpose();
    const double log_px = log_sum_exp(final_row.data(), S);
    gamma = (lf + lb).array() - log_px;
    gamma = gamma.array().exp();
    return log_px;
}

} // namespace

VBxResult vbx_resegment(const EmbeddingSequence &seq, const Eigen::MatrixXd &X, const PLDAModel &plda,
                        const Partition &init, const VBxConfig &cfg) {
    cfg.validate();
    const Eigen::Index T = X.rows();
    if (T < 1) throw std::invalid_argument("VBx needs at least one frame");
    if (init.size() != T) throw std::invalid_argument("initial partition size differs from frame count");
    if (init.num_clusters() < 1) throw std::invalid_argument("VBx needs at least one initial cluster");
    const Eigen::Index S = init.num_clusters();

    const PldaScorer scorer(plda);
    const Eigen::MatrixXd Xt = scorer.transform_rows(X);
    const Eigen::VectorXd &phi = scorer.psi();
    const Eigen::Index d = phi.size();
    const Eigen::MatrixXd rho = Xt * phi.cwiseSqrt().asDiagonal();
    const Eigen::VectorXd G =
        -0.5 * (Xt.rowwise().squaredNorm().array() + static_cast<double>(d) * std::log(2.0 * std::numbers::pi));

    Eigen::MatrixXd log_tr(S, S);
    if (S == 1) {
        log_tr.setZero();
    } else {
        log_tr.setConstant(std::log((1.0 - cfg.loop_probability) / static_cast<double>(S - 1)));
        log_tr.diagonal().setConstant(std::log(cfg.loop_probability));
    }
    const double log_init = -std::log(static_cast<double>(S));
    const double ratio = cfg.fa / cfg.fb;

    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(T, S);
    for (Eigen::Index t = 0; t < T; ++t) gamma(t, init.labels()[static_cast<std::size_t>(t)]) = 1.0;

    VBxResult result;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        const Eigen::VectorXd counts = gamma.colwise().sum().transpose();
        Eigen::MatrixXd inv_l(S, d);
        for (Eigen::Index s = 0; s < S; ++s)
            for (Eigen::Index k = 0; k < d; ++k) inv_l(s, k) = 1.0 / (1.0 + ratio * counts(s) * phi(k));
        const Eigen::MatrixXd a = ratio * inv_l.cwiseProduct(gamma.transpose() * rho);

        const Eigen::VectorXd penalty = (inv_l + a.cwiseAbs2()) * phi;
        Eigen::MatrixXd log_p = rho * a.transpose();
        log_p.rowwise() -= 0.5 * penalty.transpose();
        log_p.colwise() += G;
        log_p *= cfg.fa;

        const double log_px = forward_backward(log_p, log_tr, log_init, gamma);
        const double elbo =
            log_px + cfg.fb * 0.5 * (inv_l.array().log() - inv_l.array() - a.array().square() + 1.0).sum();
        if (!std::isfinite(elbo))
            throw NumericalError("VBx evidence lower bound is not finite at iteration " + std::to_string(it + 1));
        result.elbo.push_back(elbo);
        if (it > 0 && elbo - result.elbo[result.elbo.size() - 2] < cfg.convergence_tolerance) break;
    }

    std::vector<int> labels(static_cast<std::size_t>(T));
    for (Eigen::Index t = 0; t < T; ++t) {
        Eigen::Index arg = 0;
        gamma.row(t).maxCoeff(&arg);
        labels[static_cast<std::size_t>(t)] = static_cast<int>(arg);
    }
    result.partition = Partition::from_labels(labels);

    const auto &clusters = result.partition.clusters();
    PosteriorMatrix &post = result.posteriors;
    post.recording_id = seq.recording_id();
    post.frame_shift = seq.window_shift();
    post.subsample_factor = 1;
    post.offset = seq.window_size() / 2.0 - seq.window_shift() / 2.0;
    post.values.resize(T, static_cast<Eigen::Index>(clusters.size()));
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const int state = labels[static_cast<std::size_t>(clusters[c].front())];
        post.values.col(static_cast<Eigen::Index>(c)) = gamma.col(state).cwiseMax(0.0).cwiseMin(1.0);
    }
    return result;
}

VBxResult vbx_resegment(const EmbeddingSequence &seq, const PLDAModel &plda, const Partition &init,
                        const VBxConfig &cfg) {
    return vbx_resegment(seq, seq.vectors_d(), plda, init, cfg);
}

} // namespace pidiar
