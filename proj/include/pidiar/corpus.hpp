#pragma once

#include "pidiar/bandwidth.hpp"
#include "pidiar/config.hpp"
#include "pidiar/reseg.hpp"
#include "pidiar/synthetic.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pidiar {

// Synthetic corpus with speaker means drawn from a shared low-rank
// subspace plus isotropic within-speaker noise.
struct CorpusSpec {
    int recordings = 10;
    int narrowband = 0; // extra two-speaker recordings routed to the posterior decoder
    int min_speakers = 3;
    int max_speakers = 5;
    double duration = 300.0;
    int dim = 256;
    int rank = 16;
    double between_scale = 2.5;
    double within_std = 1.0;
    double separation = 10.0; // minimum distance between speaker means, in within-speaker stds
    double overlap_fraction = 0.0;
    int dev_speakers = 40;
    int dev_samples = 50;
    int lda_dim = 220;
    std::uint64_t seed = 0;
};

struct CorpusModels {
    Eigen::MatrixXd loading; // dim x rank
    PCAModel pca;            // 30 dims, fitted on the dev pool
    PLDAModel plda;          // generative model of the corpus
    WhiteningStats whitening;
    Eigen::MatrixXd lda;
    PLDAModel vbx_in_domain;     // estimated on the projected dev pool
    PLDAModel vbx_out_of_domain; // mismatched: within x2, between x0.5
    MLPClassifier band;
    double ahc_threshold_cosine = 0.0;
    double ahc_threshold_plda = 0.0;
};

struct SyntheticCorpus {
    std::vector<SyntheticRecording> recordings; // wideband first, then narrowband
    std::vector<Band> bands;
    std::vector<EmbeddingSequence> band_embeddings; // 10 s / 5 s windows
    std::vector<std::optional<PosteriorMatrix>> posteriors; // narrowband recordings only
    CorpusModels models;
};

SyntheticCorpus make_corpus(const CorpusSpec &spec);

// Index into reference.speakers() of the speaker active at each window
// center (the nearest segment when none is).
std::vector<int> window_labels(const Annotation &reference, const EmbeddingSequence &seq);

// Hidden width 2 classifier reading the sign of coordinate 0 (positive = NB).
MLPClassifier band_classifier(int dim);

// Writes every input file, model and config.yaml under `dir`; returns the
// loaded config.
PipelineConfig write_corpus(const SyntheticCorpus &corpus, const CorpusSpec &spec, const std::string &dir);

} // namespace pidiar
