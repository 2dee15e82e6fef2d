#include "pidiar/bandwidth.hpp"
#include "pidiar/container.hpp"
#include "pidiar/error.hpp"

#include <cmath>
#include <stdexcept>

namespace pidiar {

std::string to_string(Band band) { return band == Band::NB ? "NB" : "WB"; }

Band band_from_string(const std::string &s) {
    if (s == "NB") return Band::NB;
    if (s == "WB") return Band::WB;
    throw std::invalid_argument("unknown band '" + s + "'");
}

void MLPClassifier::validate() const {
    const Eigen::Index H = w1.cols();
    if (w1.rows() < 1 || H < 1) throw std::invalid_argument("classifier needs input and hidden dimensions >= 1");
    if (b1.size() != H || w2.rows() != H || w2.cols() != 2 || b2.size() != 2)
        throw std::invalid_argument("classifier layer shapes are inconsistent");
    if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite())
        throw std::invalid_argument("classifier parameters must be finite");
}

SegmentDecision classify_segment(const MLPClassifier &model, const Eigen::VectorXd &x) {
    if (x.size() != model.input_dim()) throw std::invalid_argument("classifier input dimension mismatch");
    if (!x.allFinite()) throw std::invalid_argument("classifier input must be finite");
    const Eigen::VectorXd hidden = (model.w1.transpose() * x + model.b1).cwiseMax(0.0);
    const Eigen::VectorXd logits = model.w2.transpose() * hidden + model.b2;
    const double m = logits.maxCoeff();
    const double e_nb = std::exp(logits(0) - m);
    const double e_wb = std::exp(logits(1) - m);
    SegmentDecision d;
    d.p_nb = e_nb / (e_nb + e_wb);
    d.p_wb = e_wb / (e_nb + e_wb);
    d.label = logits(0) > logits(1) ? Band::NB : Band::WB;
    return d;
}

Band majority_vote(const std::vector<Band> &labels) {
    if (labels.empty()) throw std::invalid_argument("majority vote over an empty list");
    std::size_t nb = 0;
    for (Band b : labels)
        if (b == Band::NB) ++nb;
    return 2 * nb > labels.size() ? Band::NB : Band::WB;
}

BandDecision classify_recording(const MLPClassifier &model, const std::string &recording_id, const Eigen::MatrixXd &X) {
    BandDecision out;
    out.recording_id = recording_id;
    for (Eigen::Index i = 0; i < X.rows(); ++i) out.segments.push_back(classify_segment(model, X.row(i).transpose()).label);
    out.file_label = majority_vote(out.segments);
    return out;
}

void write_mlp(const MLPClassifier &model, const std::string &path) {
    model.validate();
    const Eigen::Index D = model.input_dim(), H = model.hidden_dim();
    FloatMatrix flat(1, D * H + H + H * 2 + 2);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < D; ++i)
        for (Eigen::Index j = 0; j < H; ++j) flat(0, k++) = static_cast<float>(model.w1(i, j));
    for (Eigen::Index j = 0; j < H; ++j) flat(0, k++) = static_cast<float>(model.b1(j));
    for (Eigen::Index i = 0; i < H; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) flat(0, k++) = static_cast<float>(model.w2(i, j));
    for (Eigen::Index j = 0; j < 2; ++j) flat(0, k++) = static_cast<float>(model.b2(j));
    write_container(path, flat,
                    {{"type", "mlp"}, {"input_dim", std::to_string(D)}, {"hidden_dim", std::to_string(H)},
                     {"output_dim", "2"}, {"activation", "relu"}, {"outputs", "NB,WB"}});
}

MLPClassifier read_mlp(const std::string &path) {
    auto [flat, meta] = read_container(path, "mlp");
    const long D = meta_int(meta, "input_dim");
    const long H = meta_int(meta, "hidden_dim");
    if (meta_int(meta, "output_dim") != 2) throw FormatError(0, "classifier must have 2 outputs");
    if (D < 1 || H < 1 || flat.rows() != 1 || flat.cols() != D * H + H + H * 2 + 2)
        throw FormatError(0, "classifier payload does not match its layer shapes");
    MLPClassifier m;
    m.w1.resize(D, H);
    m.b1.resize(H);
    m.w2.resize(H, 2);
    m.b2.resize(2);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < D; ++i)
        for (Eigen::Index j = 0; j < H; ++j) m.w1(i, j) = flat(0, k++);
    for (Eigen::Index j = 0; j < H; ++j) m.b1(j) = flat(0, k++);
    for (Eigen::Index i = 0; i < H; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) m.w2(i, j) = flat(0, k++);
    for (Eigen::Index j = 0; j < 2; ++j) m.b2(j) = flat(0, k++);
    return m;
}

} // namespace pidiar
