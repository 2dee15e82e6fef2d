#include "pidiar/config.hpp"
#include "pidiar/error.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

namespace pidiar {

namespace fs = std::filesystem;

namespace {

// Reads typed values out of one YAML mapping and rejects unknown keys.
class Section {
public:
    Section(const YAML::Node &node, std::string name) : node_(node), name_(std::move(name)) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError("'" + name_ + "' must be a mapping");
    }

    template <typename T>
    void get(const std::string &key, T &out) {
        seen_.insert(key);
        if (!node_ || node_.IsNull() || !node_[key] || node_[key].IsNull()) return;
        try {
            out = node_[key].as<T>();
        } catch (const YAML::Exception &) {
            throw ConfigError("'" + name_ + "." + key + "' has the wrong type");
        }
    }

    Section sub(const std::string &key) {
        seen_.insert(key);
        return Section(node_ && node_.IsMap() ? node_[key] : YAML::Node(), name_.empty() ? key : name_ + "." + key);
    }

    void finish() const {
        if (!node_ || !node_.IsMap()) return;
        for (const auto &kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.count(key)) throw ConfigError("unknown config key '" + (name_.empty() ? key : name_ + "." + key) + "'");
        }
    }

private:
    YAML::Node node_;
    std::string name_;
    std::set<std::string> seen_;
};

std::string resolve(const std::string &base, const std::string &p) {
    if (p.empty() || fs::path(p).is_absolute() || base.empty()) return p;
    return (fs::path(base) / p).lexically_normal().string();
}

void require_path(const std::string &what, const std::string &p) {
    if (!p.empty() && !fs::exists(p)) throw ConfigError(what + " '" + p + "' does not exist");
}

} // namespace

PipelineConfig parse_config(const std::string &yaml_text, const std::string &base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception &e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    PipelineConfig c;
    Section top(root, "");

    Section data = top.sub("data");
    data.get("embeddings_dir", c.data.embeddings_dir);
    data.get("band_embeddings_dir", c.data.band_embeddings_dir);
    data.get("posteriors_dir", c.data.posteriors_dir);
    data.get("recordings", c.data.recordings);
    data.get("sad", c.data.sad);
    data.get("reference", c.data.reference);
    data.get("uem", c.data.uem);
    data.get("overlaps", c.data.overlaps);
    data.finish();

    Section models = top.sub("models");
    models.get("pca", c.models.pca);
    models.get("plda", c.models.plda);
    models.get("whitening", c.models.whitening);
    models.get("lda", c.models.lda);
    models.get("vbx_plda_in_domain", c.models.vbx_plda_in_domain);
    models.get("vbx_plda_out_of_domain", c.models.vbx_plda_out_of_domain);
    models.get("band_classifier", c.models.band_classifier);
    models.finish();

    Section emb = top.sub("embedding");
    emb.get("window_size", c.window_size);
    emb.get("window_shift", c.window_shift);
    emb.finish();

    Section scoring = top.sub("scoring");
    std::string kind = to_string(c.scoring);
    scoring.get("kind", kind);
    try {
        c.scoring = score_kind_from_string(kind);
    } catch (const std::exception &) {
        throw ConfigError("scoring.kind must be 'cosine' or 'plda'");
    }
    scoring.get("cosine_pca_dim", c.cosine_pca_dim);
    scoring.get("plda_energy_fraction", c.plda_energy_fraction);
    scoring.get("sigmoid_scale", c.sigmoid_scale);
    scoring.get("sigmoid_offset", c.sigmoid_offset);
    scoring.finish();

    Section cl = top.sub("clustering");
    std::string method = c.method == ClusterMethod::Pic ? "pic" : "ahc";
    cl.get("method", method);
    if (method == "pic") {
        c.method = ClusterMethod::Pic;
    } else if (method == "ahc") {
        c.method = ClusterMethod::Ahc;
    } else {
        throw ConfigError("clustering.method must be 'pic' or 'ahc'");
    }
    cl.get("z", c.pic.z);
    cl.get("K", c.pic.K);
    cl.get("ahc_threshold_cosine", c.ahc_threshold_cosine);
    cl.get("ahc_threshold_plda", c.ahc_threshold_plda);
    int oracle = 0;
    cl.get("num_speakers", oracle);
    if (oracle > 0) c.num_speakers = oracle;
    cl.finish();

    Section vbx = top.sub("vbx");
    vbx.get("enabled", c.vbx_enabled);
    vbx.get("loop_probability", c.vbx.loop_probability);
    vbx.get("lda_dim", c.vbx.lda_dim);
    vbx.get("plda_interpolation_alpha", c.vbx.plda_interpolation_alpha);
    vbx.get("max_iterations", c.vbx.max_iterations);
    vbx.get("convergence_tolerance", c.vbx.convergence_tolerance);
    vbx.get("fa", c.vbx.fa);
    vbx.get("fb", c.vbx.fb);
    vbx.get("whitening_ridge", c.whitening_ridge);
    vbx.finish();

    Section ovl = top.sub("overlap");
    ovl.get("enabled", c.overlap_enabled);
    ovl.finish();

    Section dec = top.sub("decode");
    dec.get("threshold", c.decode_threshold);
    dec.get("median_window", c.median_window);
    dec.finish();

    Section routing = top.sub("routing");
    routing.get("enabled", c.routing_enabled);
    routing.finish();

    Section met = top.sub("metrics");
    met.get("collar", c.metrics.collar);
    met.get("score_overlap", c.metrics.score_overlap);
    met.finish();

    top.get("output_dir", c.output_dir);
    top.get("seed", c.seed);
    top.finish();

    for (std::string *p : {&c.data.embeddings_dir, &c.data.band_embeddings_dir, &c.data.posteriors_dir,
                           &c.data.recordings, &c.data.sad, &c.data.reference, &c.data.uem, &c.data.overlaps,
                           &c.models.pca, &c.models.plda, &c.models.whitening, &c.models.lda,
                           &c.models.vbx_plda_in_domain, &c.models.vbx_plda_out_of_domain,
                           &c.models.band_classifier, &c.output_dir})
        *p = resolve(base_dir, *p);
    c.validate();
    return c;
}

PipelineConfig load_config(const std::string &path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception &e) {
        throw ConfigError(e.what());
    }
    return parse_config(text, fs::path(path).parent_path().string());
}

void PipelineConfig::validate() const {
    if (!(window_size > 0.0 && window_shift > 0.0)) throw ConfigError("window size and shift must be positive");
    if (cosine_pca_dim < 1) throw ConfigError("scoring.cosine_pca_dim must be >= 1");
    if (!(plda_energy_fraction > 0.0 && plda_energy_fraction <= 1.0))
        throw ConfigError("scoring.plda_energy_fraction must be in (0, 1]");
    if (!(sigmoid_scale > 0.0)) throw ConfigError("scoring.sigmoid_scale must be positive");
    if (!(pic.z > 0.0 && pic.z < 1.0)) throw ConfigError("clustering.z must be in (0, 1)");
    if (pic.K < 1) throw ConfigError("clustering.K must be >= 1");
    try {
        vbx.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError(std::string("vbx: ") + e.what());
    }
    if (!(whitening_ridge >= 0.0)) throw ConfigError("vbx.whitening_ridge must be >= 0");
    if (!(decode_threshold > 0.0 && decode_threshold < 1.0)) throw ConfigError("decode.threshold must be in (0, 1)");
    if (median_window < 1) throw ConfigError("decode.median_window must be >= 1");
    if (!(metrics.collar >= 0.0)) throw ConfigError("metrics.collar must be >= 0");

    if (data.sad.empty()) throw ConfigError("data.sad is required");
    if (data.embeddings_dir.empty() && data.posteriors_dir.empty())
        throw ConfigError("one of data.embeddings_dir or data.posteriors_dir is required");
    require_path("data.embeddings_dir", data.embeddings_dir);
    require_path("data.band_embeddings_dir", data.band_embeddings_dir);
    require_path("data.posteriors_dir", data.posteriors_dir);
    require_path("data.recordings", data.recordings);
    require_path("data.sad", data.sad);
    require_path("data.reference", data.reference);
    require_path("data.uem", data.uem);
    require_path("data.overlaps", data.overlaps);
    if (!data.embeddings_dir.empty()) {
        if (scoring == ScoreKind::Cosine && models.pca.empty()) throw ConfigError("cosine scoring needs models.pca");
        if (scoring == ScoreKind::Plda && models.plda.empty()) throw ConfigError("PLDA scoring needs models.plda");
        if (vbx_enabled && (models.whitening.empty() || models.lda.empty() || models.vbx_plda_in_domain.empty() ||
                            models.vbx_plda_out_of_domain.empty()))
            throw ConfigError("vbx needs models.whitening, models.lda and both vbx PLDA models");
    }
    require_path("models.pca", models.pca);
    require_path("models.plda", models.plda);
    require_path("models.whitening", models.whitening);
    require_path("models.lda", models.lda);
    require_path("models.vbx_plda_in_domain", models.vbx_plda_in_domain);
    require_path("models.vbx_plda_out_of_domain", models.vbx_plda_out_of_domain);
    require_path("models.band_classifier", models.band_classifier);
}

std::string PipelineConfig::describe() const {
    std::ostringstream o;
    o.precision(17);
    o << "data.embeddings_dir: " << data.embeddings_dir << "\n"
      << "data.band_embeddings_dir: " << data.band_embeddings_dir << "\n"
      << "data.posteriors_dir: " << data.posteriors_dir << "\n"
      << "data.recordings: " << data.recordings << "\n"
      << "data.sad: " << data.sad << "\n"
      << "data.reference: " << data.reference << "\n"
      << "data.uem: " << data.uem << "\n"
      << "data.overlaps: " << data.overlaps << "\n"
      << "models.pca: " << models.pca << "\n"
      << "models.plda: " << models.plda << "\n"
      << "models.whitening: " << models.whitening << "\n"
      << "models.lda: " << models.lda << "\n"
      << "models.vbx_plda_in_domain: " << models.vbx_plda_in_domain << "\n"
      << "models.vbx_plda_out_of_domain: " << models.vbx_plda_out_of_domain << "\n"
      << "models.band_classifier: " << models.band_classifier << "\n"
      << "embedding.window_size: " << window_size << "\n"
      << "embedding.window_shift: " << window_shift << "\n"
      << "scoring.kind: " << to_string(scoring) << "\n"
      << "scoring.cosine_pca_dim: " << cosine_pca_dim << "\n"
      << "scoring.plda_energy_fraction: " << plda_energy_fraction << "\n"
      << "scoring.sigmoid_scale: " << sigmoid_scale << "\n"
      << "scoring.sigmoid_offset: " << sigmoid_offset << "\n"
      << "clustering.method: " << (method == ClusterMethod::Pic ? "pic" : "ahc") << "\n"
      << "clustering.z: " << pic.z << "\n"
      << "clustering.K: " << pic.K << "\n"
      << "clustering.ahc_threshold_cosine: " << ahc_threshold_cosine << "\n"
      << "clustering.ahc_threshold_plda: " << ahc_threshold_plda << "\n"
      << "clustering.num_speakers: " << (num_speakers ? *num_speakers : 0) << "\n"
      << "vbx.enabled: " << vbx_enabled << "\n"
      << "vbx.loop_probability: " << vbx.loop_probability << "\n"
      << "vbx.lda_dim: " << vbx.lda_dim << "\n"
      << "vbx.plda_interpolation_alpha: " << vbx.plda_interpolation_alpha << "\n"
      << "vbx.max_iterations: " << vbx.max_iterations << "\n"
      << "vbx.convergence_tolerance: " << vbx.convergence_tolerance << "\n"
      << "vbx.fa: " << vbx.fa << "\n"
      << "vbx.fb: " << vbx.fb << "\n"
      << "vbx.whitening_ridge: " << whitening_ridge << "\n"
      << "overlap.enabled: " << overlap_enabled << "\n"
      << "decode.threshold: " << decode_threshold << "\n"
      << "decode.median_window: " << median_window << "\n"
      << "routing.enabled: " << routing_enabled << "\n"
      << "metrics.collar: " << metrics.collar << "\n"
      << "metrics.score_overlap: " << metrics.score_overlap << "\n"
      << "output_dir: " << output_dir << "\n"
      << "seed: " << seed << "\n";
    return o.str();
}

namespace {

// Shortest text that parses back to the same double.
std::string shortest(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

} // namespace

std::string config_to_yaml(const PipelineConfig &c) {
    YAML::Emitter e;
    auto opt = [&](const char *key, const std::string &v) {
        if (!v.empty()) e << YAML::Key << key << YAML::Value << v;
    };
    e << YAML::BeginMap;
    e << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
    opt("embeddings_dir", c.data.embeddings_dir);
    opt("band_embeddings_dir", c.data.band_embeddings_dir);
    opt("posteriors_dir", c.data.posteriors_dir);
    opt("recordings", c.data.recordings);
    opt("sad", c.data.sad);
    opt("reference", c.data.reference);
    opt("uem", c.data.uem);
    opt("overlaps", c.data.overlaps);
    e << YAML::EndMap;
    e << YAML::Key << "models" << YAML::Value << YAML::BeginMap;
    opt("pca", c.models.pca);
    opt("plda", c.models.plda);
    opt("whitening", c.models.whitening);
    opt("lda", c.models.lda);
    opt("vbx_plda_in_domain", c.models.vbx_plda_in_domain);
    opt("vbx_plda_out_of_domain", c.models.vbx_plda_out_of_domain);
    opt("band_classifier", c.models.band_classifier);
    e << YAML::EndMap;
    e << YAML::Key << "embedding" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "window_size" << YAML::Value << shortest(c.window_size);
    e << YAML::Key << "window_shift" << YAML::Value << shortest(c.window_shift);
    e << YAML::EndMap;
    e << YAML::Key << "scoring" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "kind" << YAML::Value << to_string(c.scoring);
    e << YAML::Key << "cosine_pca_dim" << YAML::Value << c.cosine_pca_dim;
    e << YAML::Key << "plda_energy_fraction" << YAML::Value << shortest(c.plda_energy_fraction);
    e << YAML::Key << "sigmoid_scale" << YAML::Value << shortest(c.sigmoid_scale);
    e << YAML::Key << "sigmoid_offset" << YAML::Value << shortest(c.sigmoid_offset);
    e << YAML::EndMap;
    e << YAML::Key << "clustering" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "method" << YAML::Value << (c.method == ClusterMethod::Pic ? "pic" : "ahc");
    e << YAML::Key << "z" << YAML::Value << shortest(c.pic.z);
    e << YAML::Key << "K" << YAML::Value << c.pic.K;
    e << YAML::Key << "ahc_threshold_cosine" << YAML::Value << shortest(c.ahc_threshold_cosine);
    e << YAML::Key << "ahc_threshold_plda" << YAML::Value << shortest(c.ahc_threshold_plda);
    if (c.num_speakers) e << YAML::Key << "num_speakers" << YAML::Value << *c.num_speakers;
    e << YAML::EndMap;
    e << YAML::Key << "vbx" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "enabled" << YAML::Value << c.vbx_enabled;
    e << YAML::Key << "loop_probability" << YAML::Value << shortest(c.vbx.loop_probability);
    e << YAML::Key << "lda_dim" << YAML::Value << c.vbx.lda_dim;
    e << YAML::Key << "plda_interpolation_alpha" << YAML::Value << shortest(c.vbx.plda_interpolation_alpha);
    e << YAML::Key << "max_iterations" << YAML::Value << c.vbx.max_iterations;
    e << YAML::Key << "convergence_tolerance" << YAML::Value << shortest(c.vbx.convergence_tolerance);
    e << YAML::Key << "fa" << YAML::Value << shortest(c.vbx.fa);
    e << YAML::Key << "fb" << YAML::Value << shortest(c.vbx.fb);
    e << YAML::Key << "whitening_ridge" << YAML::Value << shortest(c.whitening_ridge);
    e << YAML::EndMap;
    e << YAML::Key << "overlap" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "enabled" << YAML::Value << c.overlap_enabled;
    e << YAML::EndMap;
    e << YAML::Key << "decode" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "threshold" << YAML::Value << shortest(c.decode_threshold);
    e << YAML::Key << "median_window" << YAML::Value << c.median_window;
    e << YAML::EndMap;
    e << YAML::Key << "routing" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "enabled" << YAML::Value << c.routing_enabled;
    e << YAML::EndMap;
    e << YAML::Key << "metrics" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "collar" << YAML::Value << shortest(c.metrics.collar);
    e << YAML::Key << "score_overlap" << YAML::Value << c.metrics.score_overlap;
    e << YAML::EndMap;
    e << YAML::Key << "output_dir" << YAML::Value << c.output_dir;
    e << YAML::Key << "seed" << YAML::Value << c.seed;
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace pidiar
