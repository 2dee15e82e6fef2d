#include "pidiar/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

namespace pidiar {

namespace fs = std::filesystem;

namespace {

std::string numbered(const std::string &prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%02d", prefix.c_str(), i);
    return buf;
}

Eigen::MatrixXd gaussian(std::mt19937_64 &rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

double mean_calibration(const std::vector<SyntheticRecording> &recs, const CorpusModels &m, ScoreKind kind,
                        double energy) {
    double sum = 0.0;
    for (const auto &r : recs) {
        const SimilarityMatrix s = kind == ScoreKind::Cosine ? cosine_similarity(r.embeddings, m.pca)
                                                             : score_plda_matrix(r.embeddings, m.plda, energy);
        sum += calibrate_threshold(s, window_labels(r.reference, r.embeddings));
    }
    return sum / static_cast<double>(recs.size());
}

} // namespace

std::vector<int> window_labels(const Annotation &reference, const EmbeddingSequence &seq) {
    const std::vector<std::string> speakers = reference.speakers();
    if (speakers.empty()) throw std::invalid_argument("reference has no speakers");
    std::vector<int> labels(static_cast<std::size_t>(seq.size()));
    for (Eigen::Index i = 0; i < seq.size(); ++i) {
        const double c = seq.center(i);
        const Segment *best = nullptr;
        double best_dist = std::numeric_limits<double>::infinity();
        for (const auto &s : reference.segments()) {
            const double d = c < s.onset ? s.onset - c : (c >= s.offset() ? c - s.offset() : 0.0);
            if (d < best_dist) {
                best_dist = d;
                best = &s;
            }
        }
        labels[static_cast<std::size_t>(i)] = static_cast<int>(
            std::lower_bound(speakers.begin(), speakers.end(), best->speaker) - speakers.begin());
    }
    return labels;
}

MLPClassifier band_classifier(int dim) {
    MLPClassifier m;
    m.w1 = Eigen::MatrixXd::Zero(dim, 2);
    m.w1(0, 0) = 1.0;
    m.w1(0, 1) = -1.0;
    m.b1 = Eigen::VectorXd::Zero(2);
    m.w2 = Eigen::MatrixXd::Zero(2, 2);
    m.w2(0, 0) = 2.0;
    m.w2(1, 1) = 2.0;
    m.b2 = Eigen::VectorXd::Zero(2);
    return m;
}

SyntheticCorpus make_corpus(const CorpusSpec &spec) {
    if (spec.recordings < 0 || spec.narrowband < 0 || spec.recordings + spec.narrowband < 1)
        throw std::invalid_argument("corpus needs at least one recording");
    if (spec.min_speakers < 1 || spec.max_speakers < spec.min_speakers)
        throw std::invalid_argument("speaker count range is invalid");
    if (spec.rank < 1 || spec.rank > spec.dim) throw std::invalid_argument("subspace rank must be in [1, dim]");

    std::mt19937_64 master(spec.seed);
    auto sub_seed = [&] { return master(); };

    SyntheticCorpus corpus;
    CorpusModels &m = corpus.models;
    {
        std::mt19937_64 rng(sub_seed());
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(rng, spec.dim, spec.rank));
        m.loading = spec.between_scale * (qr.householderQ() * Eigen::MatrixXd::Identity(spec.dim, spec.rank));
    }
    m.plda.mean = Eigen::VectorXd::Zero(spec.dim);
    m.plda.between = m.loading * m.loading.transpose();
    m.plda.within = spec.within_std * spec.within_std * Eigen::MatrixXd::Identity(spec.dim, spec.dim);

    // Development pool: single-speaker draws from speakers outside the corpus.
    Eigen::MatrixXd dev(spec.dev_speakers * spec.dev_samples, spec.dim);
    std::vector<int> dev_labels(static_cast<std::size_t>(dev.rows()));
    {
        const Eigen::MatrixXd means = draw_speaker_means(m.loading, spec.dev_speakers, 0.0, sub_seed());
        std::mt19937_64 rng(sub_seed());
        const Eigen::MatrixXd noise = gaussian(rng, dev.rows(), spec.dim);
        for (Eigen::Index i = 0; i < dev.rows(); ++i) {
            const auto k = static_cast<int>(i / spec.dev_samples);
            dev.row(i) = means.row(k) + spec.within_std * noise.row(i);
            dev_labels[static_cast<std::size_t>(i)] = k;
        }
    }
    m.pca = fit_pca(dev, PcaTarget::count(30));
    m.whitening = fit_whitening(dev);
    const LdaProjection lda = lda_project(whiten_and_normalize(m.whitening, dev), dev_labels, spec.lda_dim);
    m.lda = lda.matrix;
    m.vbx_in_domain = estimate_plda(lda.projected, dev_labels);
    m.vbx_out_of_domain = m.vbx_in_domain;
    m.vbx_out_of_domain.within *= 2.0;
    m.vbx_out_of_domain.between *= 0.5;
    m.band = band_classifier(spec.dim);

    auto make_recording = [&](const std::string &id, int speakers, double overlap) {
        SyntheticSpec s;
        s.recording_id = id;
        s.speaker_means = draw_speaker_means(m.loading, speakers, spec.separation * spec.within_std, sub_seed());
        s.within_std = spec.within_std;
        s.duration = spec.duration;
        s.overlap_fraction = overlap;
        s.seed = sub_seed();
        return generate_synthetic(s);
    };

    // Held-out recordings place the AHC thresholds between the same- and
    // different-speaker score populations.
    std::vector<SyntheticRecording> held_out;
    for (int i = 0; i < 2; ++i) held_out.push_back(make_recording(numbered("dev", i + 1), spec.max_speakers, 0.0));
    m.ahc_threshold_cosine = mean_calibration(held_out, m, ScoreKind::Cosine, 0.3);
    m.ahc_threshold_plda = mean_calibration(held_out, m, ScoreKind::Plda, 0.3);

    std::mt19937_64 rng(sub_seed());
    std::uniform_int_distribution<int> count(spec.min_speakers, spec.max_speakers);
    std::uniform_real_distribution<double> jitter(0.0, 0.2);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < spec.recordings + spec.narrowband; ++i) {
        const bool nb = i >= spec.recordings;
        const std::string id = nb ? numbered("nb", i - spec.recordings + 1) : numbered("rec", i + 1);
        corpus.recordings.push_back(make_recording(id, nb ? 2 : count(rng), nb ? 0.0 : spec.overlap_fraction));
        corpus.bands.push_back(nb ? Band::NB : Band::WB);

        const auto windows = window_times(spec.duration, 10.0, 5.0);
        FloatMatrix band(static_cast<Eigen::Index>(windows.size()), spec.dim);
        for (Eigen::Index r = 0; r < band.rows(); ++r)
            for (Eigen::Index c = 0; c < band.cols(); ++c) band(r, c) = static_cast<float>(normal(rng));
        band.col(0).array() += nb ? 3.0f : -3.0f;
        corpus.band_embeddings.emplace_back(id, std::move(band), 10.0, 5.0, spec.duration);

        if (!nb) {
            corpus.posteriors.emplace_back();
            continue;
        }
        const Annotation &ref = corpus.recordings.back().reference;
        const auto speakers = ref.speakers();
        PosteriorMatrix post;
        post.recording_id = id;
        post.frame_shift = 0.01;
        post.subsample_factor = 10;
        const auto rows = static_cast<Eigen::Index>(std::ceil(spec.duration / post.row_duration() - 1e-9));
        post.values.resize(rows, static_cast<Eigen::Index>(speakers.size()));
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double t = post.row_onset(r) + 0.5 * post.row_duration();
            for (std::size_t c = 0; c < speakers.size(); ++c) {
                bool active = false;
                for (const auto &s : ref.segments())
                    if (s.speaker == speakers[c] && s.onset <= t && t < s.offset()) active = true;
                post.values(r, static_cast<Eigen::Index>(c)) = active ? 0.9 - jitter(rng) : jitter(rng);
            }
        }
        corpus.posteriors.push_back(std::move(post));
    }
    return corpus;
}

PipelineConfig write_corpus(const SyntheticCorpus &corpus, const CorpusSpec &spec, const std::string &dir) {
    const fs::path root(dir);
    for (const char *sub : {"emb", "band", "post", "models"}) fs::create_directories(root / sub);
    const CorpusModels &m = corpus.models;

    std::vector<Annotation> refs, sads;
    std::vector<OverlapRegions> overlaps;
    std::string ids, domains, core;
    for (std::size_t i = 0; i < corpus.recordings.size(); ++i) {
        const SyntheticRecording &r = corpus.recordings[i];
        const std::string &id = r.embeddings.recording_id();
        write_embeddings(r.embeddings, (root / "emb" / (id + ".emb")).string());
        write_embeddings(corpus.band_embeddings[i], (root / "band" / (id + ".emb")).string());
        if (corpus.posteriors[i]) write_posteriors(*corpus.posteriors[i], (root / "post" / (id + ".post")).string());
        refs.push_back(r.reference);
        Annotation sad(id);
        for (const auto &[on, off] : r.reference.speech_regions()) sad.add(on, off - on, "speech");
        sads.push_back(sad);
        if (r.overlaps) {
            std::vector<std::pair<double, double>> spans;
            for (const auto &s : r.overlaps->segments()) spans.emplace_back(s.onset, s.offset());
            overlaps.emplace_back(id, spans);
        }
        ids += id + "\n";
        domains += id + (corpus.bands[i] == Band::NB ? " cts\n" : (i % 2 == 0 ? " broadcast\n" : " meeting\n"));
        if (i + 1 < corpus.recordings.size()) core += id + "\n";
    }
    write_text_file((root / "ref.rttm").string(), write_rttm(refs));
    write_text_file((root / "sad.rttm").string(), write_rttm(sads));
    write_text_file((root / "recordings.txt").string(), ids);
    write_text_file((root / "domains.txt").string(), domains);
    write_text_file((root / "core.txt").string(), core);
    if (!overlaps.empty()) write_text_file((root / "overlaps.txt").string(), write_overlaps(overlaps));

    write_pca(m.pca, (root / "models" / "pca30.emb").string());
    write_plda(m.plda, (root / "models" / "plda.emb").string());
    write_whitening(m.whitening, (root / "models" / "whitening.emb").string());
    write_lda(m.lda, (root / "models" / "lda.emb").string());
    write_plda(m.vbx_in_domain, (root / "models" / "plda_dev.emb").string());
    write_plda(m.vbx_out_of_domain, (root / "models" / "plda_vox.emb").string());
    write_mlp(m.band, (root / "models" / "band.emb").string());

    PipelineConfig c;
    c.data.embeddings_dir = "emb";
    c.data.band_embeddings_dir = "band";
    c.data.posteriors_dir = "post";
    c.data.recordings = "recordings.txt";
    c.data.sad = "sad.rttm";
    c.data.reference = "ref.rttm";
    if (!overlaps.empty()) c.data.overlaps = "overlaps.txt";
    c.models.pca = "models/pca30.emb";
    c.models.plda = "models/plda.emb";
    c.models.whitening = "models/whitening.emb";
    c.models.lda = "models/lda.emb";
    c.models.vbx_plda_in_domain = "models/plda_dev.emb";
    c.models.vbx_plda_out_of_domain = "models/plda_vox.emb";
    c.models.band_classifier = "models/band.emb";
    c.ahc_threshold_cosine = m.ahc_threshold_cosine;
    c.ahc_threshold_plda = m.ahc_threshold_plda;
    c.vbx.lda_dim = spec.lda_dim;
    c.output_dir = "out";
    c.seed = spec.seed;
    const std::string path = (root / "config.yaml").string();
    write_text_file(path, config_to_yaml(c));
    return load_config(path);
}

} // namespace pidiar
