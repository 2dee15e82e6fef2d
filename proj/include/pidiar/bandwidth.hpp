#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace pidiar {

enum class Band { NB, WB };
std::string to_string(Band band);
Band band_from_string(const std::string &s);

// Two-layer feed-forward classifier: logits = W2^T relu(W1^T x + b1) + b2,
// logit 0 = NB, logit 1 = WB.
struct MLPClassifier {
    Eigen::MatrixXd w1; // input_dim x hidden
    Eigen::VectorXd b1; // hidden
    Eigen::MatrixXd w2; // hidden x 2
    Eigen::VectorXd b2; // 2

    Eigen::Index input_dim() const { return w1.rows(); }
    Eigen::Index hidden_dim() const { return w1.cols(); }
    void validate() const;
};

struct SegmentDecision {
    Band label = Band::WB;
    double p_nb = 0.5;
    double p_wb = 0.5;
};

// Softmax over the two logits; NB only when its probability is strictly larger.
SegmentDecision classify_segment(const MLPClassifier &model, const Eigen::VectorXd &x);

// Most frequent label, ties to WB. Throws on an empty list.
Band majority_vote(const std::vector<Band> &labels);

struct BandDecision {
    std::string recording_id;
    std::vector<Band> segments;
    Band file_label = Band::WB;
};

// One decision per row of X, file label by majority vote.
BandDecision classify_recording(const MLPClassifier &model, const std::string &recording_id, const Eigen::MatrixXd &X);

// Parameters flattened into a single row (w1 row-major, b1, w2 row-major,
// b2); shapes in the sidecar.
void write_mlp(const MLPClassifier &model, const std::string &path);
MLPClassifier read_mlp(const std::string &path);

} // namespace pidiar
