#pragma once

#include "pidiar/bandwidth.hpp"
#include "pidiar/config.hpp"
#include "pidiar/metrics.hpp"
#include "pidiar/reseg.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pidiar {

inline constexpr const char *kVersion = "0.1.0";

// Read-only models shared by every recording of a run.
struct PipelineModels {
    std::optional<PCAModel> pca;
    std::optional<PLDAModel> plda;
    std::optional<WhiteningStats> whitening;
    std::optional<Eigen::MatrixXd> lda;       // D x lda_dim
    std::optional<PLDAModel> vbx_plda;        // interpolated, in the LDA space
    std::optional<MLPClassifier> band_classifier;
};

PipelineModels load_models(const PipelineConfig &config);

// Per-recording inputs taken from the corpus-level files.
struct RecordingInputs {
    std::string recording_id;
    Annotation sad;
    std::optional<OverlapRegions> overlaps;
};

struct StageLog {
    std::vector<std::pair<std::string, double>> timings; // stage, seconds
    std::vector<std::string> warnings;
};

// Window-level labels to a timeline: window i owns the span between the
// midpoints to its neighbors' centers; the first starts at 0 and the last
// ends at the recording duration. Labels are "spk<c+1>".
Annotation labels_to_annotation(const EmbeddingSequence &seq, const std::vector<int> &labels);

// Scores, graph, speaker count, clustering, optional VBx, SAD crop,
// optional overlap assignment, adjacent-segment merge.
Annotation run_wideband(const PipelineConfig &config, const PipelineModels &models, const EmbeddingSequence &seq,
                        const RecordingInputs &inputs, StageLog *log = nullptr);
Annotation run_wideband(const PipelineConfig &config, const PipelineModels &models, const RecordingInputs &inputs,
                        StageLog *log = nullptr);
Annotation run_narrowband(const PipelineConfig &config, const RecordingInputs &inputs, StageLog *log = nullptr);

// NB when routing is enabled and the band classifier votes NB, else WB.
BandDecision route_recording(const PipelineConfig &config, const PipelineModels &models, const std::string &recording_id);

struct RecordingOutcome {
    std::string recording_id;
    Band route = Band::WB;
    bool ok = false;
    std::string error;
    Annotation hypothesis;
    StageLog log;
};

struct RunOptions {
    int workers = 1;
    std::optional<std::set<std::string>> core_list; // aggregate filter
    std::string domain_map;                         // path, optional
    bool write_outputs = true;
};

struct CorpusResult {
    std::vector<RecordingOutcome> outcomes; // sorted by recording id
    std::vector<DERReport> reports;         // recordings with a reference
    std::optional<DERReport> total;
    std::vector<DomainRow> domains;
    std::string config_hash;

    int succeeded() const;
};

// Ids from data.recordings, else the SAD file, sorted.
std::vector<std::string> corpus_recordings(const PipelineConfig &config);

// Routes and diarizes every recording on a worker pool. With
// write_outputs, writes hyp/<rec>.rttm, manifest.txt and, when references
// exist, report.txt / report.tsv under config.output_dir.
CorpusResult run_corpus(const PipelineConfig &config, const RunOptions &options = {});

std::string format_manifest(const PipelineConfig &config, const CorpusResult &result);

// Scores hypotheses against references and writes report.txt / report.tsv.
CorpusResult score_corpus(const std::vector<Annotation> &references, const std::vector<Annotation> &hypotheses,
                          const ScoringOptions &options, const std::vector<ScoringRegions> &uem,
                          const std::optional<std::set<std::string>> &core_list,
                          const std::map<std::string, std::string> &domains);

void write_reports(const std::string &dir, const CorpusResult &result);

} // namespace pidiar
