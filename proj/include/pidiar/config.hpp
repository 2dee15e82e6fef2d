#pragma once

#include "pidiar/clustering.hpp"
#include "pidiar/metrics.hpp"
#include "pidiar/reseg.hpp"
#include "pidiar/scoring.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace pidiar {

// Relative paths are resolved against the config file's directory. Empty
// optional paths disable the feature that uses them.
struct DataPaths {
    std::string embeddings_dir;      // <rec>.emb, 1.5 s / 0.25 s windows
    std::string band_embeddings_dir; // <rec>.emb, 10 s / 5 s windows for routing
    std::string posteriors_dir;      // <rec>.post for the narrowband branch
    std::string recordings;          // one id per line; defaults to the SAD ids
    std::string sad;
    std::string reference;
    std::string uem;
    std::string overlaps;
};

struct ModelPaths {
    std::string pca;
    std::string plda;
    std::string whitening;
    std::string lda;
    std::string vbx_plda_in_domain;
    std::string vbx_plda_out_of_domain;
    std::string band_classifier;
};

enum class ClusterMethod { Pic, Ahc };

struct PipelineConfig {
    DataPaths data;
    ModelPaths models;

    double window_size = 1.5;
    double window_shift = 0.25;

    ScoreKind scoring = ScoreKind::Plda;
    int cosine_pca_dim = 30;
    double plda_energy_fraction = 0.3;
    double sigmoid_scale = 1.0;
    double sigmoid_offset = 0.0;

    ClusterMethod method = ClusterMethod::Pic;
    PICParams pic;
    double ahc_threshold_cosine = 0.5;
    double ahc_threshold_plda = 0.0;
    std::optional<int> num_speakers; // oracle count, skips estimation

    bool vbx_enabled = true;
    VBxConfig vbx;
    double whitening_ridge = 0.0;
    bool overlap_enabled = true;

    double decode_threshold = 0.5;
    int median_window = 11;

    bool routing_enabled = true;
    ScoringOptions metrics;

    std::string output_dir = "out";
    std::uint64_t seed = 0;

    // Checks numeric ranges and that every referenced path exists.
    void validate() const;
    double ahc_threshold() const { return scoring == ScoreKind::Cosine ? ahc_threshold_cosine : ahc_threshold_plda; }
    // Canonical `key: value` listing of every setting.
    std::string describe() const;
};

// Throws ConfigError on malformed YAML, unknown keys or invalid values.
PipelineConfig load_config(const std::string &path);
PipelineConfig parse_config(const std::string &yaml_text, const std::string &base_dir);
std::string config_to_yaml(const PipelineConfig &config);

// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

} // namespace pidiar
