#include "pidiar/pipeline.hpp"
#include "pidiar/clustering.hpp"
#include "pidiar/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <thread>

namespace pidiar {

namespace fs = std::filesystem;

namespace {

class StageTimer {
public:
    StageTimer(StageLog *log, std::string stage) : log_(log), stage_(std::move(stage)), start_(clock::now()) {}
    ~StageTimer() {
        if (log_) log_->timings.emplace_back(stage_, std::chrono::duration<double>(clock::now() - start_).count());
    }

private:
    using clock = std::chrono::steady_clock;
    StageLog *log_;
    std::string stage_;
    clock::time_point start_;
};

void warn(StageLog *log, const std::string &msg) {
    if (log) log->warnings.push_back(msg);
}

std::string join_path(const std::string &dir, const std::string &file) { return (fs::path(dir) / file).string(); }

std::string speaker_label(int c) { return "spk" + std::to_string(c + 1); }

} // namespace

PipelineModels load_models(const PipelineConfig &config) {
    PipelineModels m;
    if (!config.models.pca.empty()) m.pca = read_pca(config.models.pca);
    if (!config.models.plda.empty()) m.plda = read_plda(config.models.plda);
    if (!config.models.band_classifier.empty()) m.band_classifier = read_mlp(config.models.band_classifier);
    if (config.vbx_enabled && !config.data.embeddings_dir.empty()) {
        m.whitening = read_whitening(config.models.whitening);
        m.lda = read_lda(config.models.lda);
        const PLDAModel in_domain = read_plda(config.models.vbx_plda_in_domain);
        const PLDAModel out_of_domain = read_plda(config.models.vbx_plda_out_of_domain);
        m.vbx_plda = interpolate_plda(in_domain, out_of_domain, config.vbx.plda_interpolation_alpha);
        if (m.lda->rows() != m.whitening->mean.size())
            throw ConfigError("LDA input dimension does not match the whitening model");
        if (m.lda->cols() != config.vbx.lda_dim)
            throw ConfigError("LDA output dimension " + std::to_string(m.lda->cols()) + " differs from vbx.lda_dim " +
                              std::to_string(config.vbx.lda_dim));
        if (m.vbx_plda->dim() != m.lda->cols()) throw ConfigError("VBx PLDA dimension does not match the LDA output");
    }
    return m;
}

Annotation labels_to_annotation(const EmbeddingSequence &seq, const std::vector<int> &labels) {
    const auto N = static_cast<std::size_t>(seq.size());
    if (labels.size() != N) throw std::invalid_argument("label count differs from window count");
    Annotation out(seq.recording_id());
    auto boundary = [&](std::size_t i) {
        if (i == 0) return 0.0;
        if (i == N) return seq.recording_duration();
        return 0.5 * (seq.center(static_cast<Eigen::Index>(i - 1)) + seq.center(static_cast<Eigen::Index>(i)));
    };
    std::size_t start = 0;
    for (std::size_t i = 1; i <= N; ++i) {
        if (i < N && labels[i] == labels[start]) continue;
        const double on = boundary(start), off = boundary(i);
        if (off > on) out.add(on, off - on, speaker_label(labels[start]));
        start = i;
    }
    return out;
}

Annotation run_wideband(const PipelineConfig &config, const PipelineModels &models, const EmbeddingSequence &seq,
                        const RecordingInputs &inputs, StageLog *log) {
    const Eigen::Index N = seq.size();
    std::vector<int> labels(static_cast<std::size_t>(N), 0);
    std::optional<PosteriorMatrix> posteriors;

    if (N >= 2) {
        SimilarityMatrix scores;
        {
            StageTimer t(log, "score");
            if (config.scoring == ScoreKind::Cosine) {
                if (!models.pca) throw ConfigError("cosine scoring needs a PCA model");
                scores = cosine_similarity(seq, *models.pca);
            } else {
                if (!models.plda) throw ConfigError("PLDA scoring needs a PLDA model");
                scores = score_plda_matrix(seq, *models.plda, config.plda_energy_fraction);
            }
        }
        int count = 0;
        {
            StageTimer t(log, "count");
            count = config.num_speakers ? *config.num_speakers : estimate_num_speakers(scores, config.ahc_threshold());
            count = std::clamp(count, 1, static_cast<int>(N));
        }
        Partition partition;
        {
            StageTimer t(log, "cluster");
            if (config.method == ClusterMethod::Pic) {
                const SimilarityMatrix graph_scores =
                    config.scoring == ScoreKind::Plda ? standardize_scores(scores) : scores;
                PICParams params = config.pic;
                params.K = std::min(params.K, static_cast<int>(N - 1));
                params.target_clusters = count;
                const AffinityGraph graph =
                    build_knn_graph(graph_scores, params.K, config.sigmoid_scale, config.sigmoid_offset);
                PicResult res = pic_cluster(graph, params);
                if (res.warning) warn(log, *res.warning);
                partition = std::move(res.partition);
            } else {
                partition = ahc_cluster(scores, AhcStop::at_count(count));
            }
        }
        if (config.vbx_enabled) {
            StageTimer t(log, "vbx");
            if (!models.whitening || !models.lda || !models.vbx_plda) throw ConfigError("VBx models are not loaded");
            const Eigen::MatrixXd X = whiten_and_normalize(*models.whitening, seq.vectors_d()) * *models.lda;
            VBxResult res = vbx_resegment(seq, X, *models.vbx_plda, partition, config.vbx);
            partition = std::move(res.partition);
            posteriors = std::move(res.posteriors);
        }
        labels = partition.labels();
    }

    Annotation hyp = labels_to_annotation(seq, labels);
    hyp = crop(hyp, inputs.sad.speech_regions());
    if (config.overlap_enabled && inputs.overlaps && !inputs.overlaps->empty()) {
        StageTimer t(log, "overlap");
        if (!posteriors) {
            warn(log, "overlap assignment skipped: needs VBx posteriors");
        } else {
            for (Eigen::Index c = 0; c < posteriors->num_speakers(); ++c)
                posteriors->speakers.push_back(speaker_label(static_cast<int>(c)));
            OverlapAssignment res = assign_overlap(hyp, *posteriors, *inputs.overlaps);
            for (auto &w : res.warnings) warn(log, w);
            hyp = std::move(res.annotation);
        }
    }
    return hyp.empty() ? hyp : merge_adjacent(hyp, 0.0);
}

Annotation run_wideband(const PipelineConfig &config, const PipelineModels &models, const RecordingInputs &inputs,
                        StageLog *log) {
    if (config.data.embeddings_dir.empty()) throw ConfigError("data.embeddings_dir is not set");
    EmbeddingSequence seq;
    {
        StageTimer t(log, "load");
        seq = read_embeddings(join_path(config.data.embeddings_dir, inputs.recording_id + ".emb"));
    }
    if (seq.recording_id() != inputs.recording_id)
        throw FormatError(0, "embedding file holds recording '" + seq.recording_id() + "'");
    return run_wideband(config, models, seq, inputs, log);
}

Annotation run_narrowband(const PipelineConfig &config, const RecordingInputs &inputs, StageLog *log) {
    if (config.data.posteriors_dir.empty()) throw ConfigError("data.posteriors_dir is not set");
    PosteriorMatrix post;
    {
        StageTimer t(log, "load");
        post = read_posteriors(join_path(config.data.posteriors_dir, inputs.recording_id + ".post"));
    }
    StageTimer t(log, "decode");
    post.recording_id = inputs.recording_id;
    return decode_posteriors(post, config.decode_threshold, inputs.sad, config.median_window);
}

BandDecision route_recording(const PipelineConfig &config, const PipelineModels &models, const std::string &recording_id) {
    BandDecision d;
    d.recording_id = recording_id;
    d.file_label = Band::WB;
    if (!config.routing_enabled || !models.band_classifier || config.data.band_embeddings_dir.empty()) return d;
    const EmbeddingSequence band = read_embeddings(join_path(config.data.band_embeddings_dir, recording_id + ".emb"));
    return classify_recording(*models.band_classifier, recording_id, band.vectors_d());
}

int CorpusResult::succeeded() const {
    return static_cast<int>(std::count_if(outcomes.begin(), outcomes.end(), [](const auto &o) { return o.ok; }));
}

std::vector<std::string> corpus_recordings(const PipelineConfig &config) {
    std::vector<std::string> ids;
    if (!config.data.recordings.empty()) {
        const std::string text = read_text_file(config.data.recordings);
        std::size_t pos = 0;
        while (pos < text.size()) {
            std::size_t end = text.find('\n', pos);
            if (end == std::string::npos) end = text.size();
            std::string line = text.substr(pos, end - pos);
            line.erase(0, line.find_first_not_of(" \t\r"));
            line.erase(line.find_last_not_of(" \t\r") + 1);
            if (!line.empty() && line.front() != '#') ids.push_back(line);
            pos = end + 1;
        }
    } else {
        for (const auto &a : read_rttm_file(config.data.sad)) ids.push_back(a.recording_id());
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

CorpusResult score_corpus(const std::vector<Annotation> &references, const std::vector<Annotation> &hypotheses,
                          const ScoringOptions &options, const std::vector<ScoringRegions> &uem,
                          const std::optional<std::set<std::string>> &core_list,
                          const std::map<std::string, std::string> &domains) {
    CorpusResult result;
    std::vector<std::string> ids;
    for (const auto &r : references) ids.push_back(r.recording_id());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (const auto &id : ids) {
        std::optional<ScoringRegions> regions;
        for (const auto &u : uem)
            if (u.recording_id() == id) regions = u;
        result.reports.push_back(der(find_recording(references, id), find_recording(hypotheses, id), options, regions));
    }
    if (!result.reports.empty()) {
        try {
            result.total = aggregate(result.reports, core_list);
        } catch (const std::invalid_argument &) {
            result.total.reset();
        }
    }
    if (!domains.empty()) result.domains = domain_breakdown(result.reports, domains);
    return result;
}

void write_reports(const std::string &dir, const CorpusResult &result) {
    if (result.reports.empty() || !result.total) return;
    fs::create_directories(dir);
    std::string table = format_report_table(result.reports, *result.total);
    if (!result.domains.empty()) table += "\n" + format_domain_table(result.domains);
    write_text_file(join_path(dir, "report.txt"), table);
    write_text_file(join_path(dir, "report.tsv"), format_report_tsv(result.reports, *result.total));
}

CorpusResult run_corpus(const PipelineConfig &config, const RunOptions &options) {
    config.validate();
    const std::vector<std::string> ids = corpus_recordings(config);
    const std::vector<Annotation> sad = read_rttm_file(config.data.sad);
    std::vector<OverlapRegions> overlaps;
    if (!config.data.overlaps.empty()) overlaps = parse_overlaps(read_text_file(config.data.overlaps));
    const PipelineModels models = load_models(config);

    const std::string hyp_dir = join_path(config.output_dir, "hyp");
    if (options.write_outputs) fs::create_directories(hyp_dir);

    CorpusResult result;
    result.config_hash = fnv1a_hex(config.describe());
    result.outcomes.resize(ids.size());

    auto process = [&](std::size_t i) {
        RecordingOutcome &out = result.outcomes[i];
        out.recording_id = ids[i];
        try {
            RecordingInputs inputs{ids[i], find_recording(sad, ids[i]), std::nullopt};
            if (inputs.sad.empty()) throw std::runtime_error("no SAD speech for recording");
            if (!overlaps.empty()) inputs.overlaps = find_overlaps(overlaps, ids[i]);
            {
                StageTimer t(&out.log, "route");
                out.route = route_recording(config, models, ids[i]).file_label;
            }
            out.hypothesis = out.route == Band::NB ? run_narrowband(config, inputs, &out.log)
                                                   : run_wideband(config, models, inputs, &out.log);
            if (options.write_outputs)
                write_text_file(join_path(hyp_dir, ids[i] + ".rttm"), write_rttm(out.hypothesis));
            out.ok = true;
        } catch (const std::exception &e) {
            out.ok = false;
            out.error = e.what();
            out.hypothesis = Annotation(ids[i]);
        }
    };

    const int workers = std::max(1, std::min(options.workers, static_cast<int>(ids.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < ids.size(); i = next++) process(i);
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto &t : pool) t.join();
    }

    if (!config.data.reference.empty()) {
        const std::vector<Annotation> refs = read_rttm_file(config.data.reference);
        std::vector<ScoringRegions> uem;
        if (!config.data.uem.empty()) uem = parse_uem(read_text_file(config.data.uem));
        std::vector<Annotation> hyps;
        std::vector<Annotation> scored_refs;
        for (const auto &o : result.outcomes) {
            hyps.push_back(o.hypothesis);
            for (const auto &r : refs)
                if (r.recording_id() == o.recording_id) scored_refs.push_back(r);
        }
        std::map<std::string, std::string> domains;
        if (!options.domain_map.empty()) domains = parse_domain_map(read_text_file(options.domain_map));
        CorpusResult scored = score_corpus(scored_refs, hyps, config.metrics, uem, options.core_list, domains);
        result.reports = std::move(scored.reports);
        result.total = std::move(scored.total);
        result.domains = std::move(scored.domains);
    }

    if (options.write_outputs) {
        write_text_file(join_path(config.output_dir, "manifest.txt"), format_manifest(config, result));
        write_reports(config.output_dir, result);
    }
    return result;
}

std::string format_manifest(const PipelineConfig &config, const CorpusResult &result) {
    char buf[128];
    std::string out;
    out += "pidiar " + std::string(kVersion) + "\n";
    std::snprintf(buf, sizeof buf, "eigen %d.%d.%d\n", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
    out += buf;
    out += "config_hash " + result.config_hash + "\n";
    out += "seed " + std::to_string(config.seed) + "\n";
    out += "recordings " + std::to_string(result.outcomes.size()) + "\n";
    out += "succeeded " + std::to_string(result.succeeded()) + "\n\n";
    out += "recording\troute\tstatus\ttimings\tmessage\n";
    for (const auto &o : result.outcomes) {
        std::string timings;
        for (const auto &[stage, secs] : o.log.timings) {
            std::snprintf(buf, sizeof buf, "%s%s=%.3f", timings.empty() ? "" : ",", stage.c_str(), secs);
            timings += buf;
        }
        std::string message = o.ok ? "" : o.error;
        for (const auto &w : o.log.warnings) message += (message.empty() ? "" : "; ") + w;
        out += o.recording_id + "\t" + to_string(o.route) + "\t" + (o.ok ? "ok" : "failed") + "\t" +
               (timings.empty() ? "-" : timings) + "\t" + (message.empty() ? "-" : message) + "\n";
    }
    return out;
}

} // namespace pidiar
