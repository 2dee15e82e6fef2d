#include "pidiar/corpus.hpp"
#include "pidiar/error.hpp"
#include "pidiar/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace pidiar;

namespace {

struct SubsetArgs {
    std::string subset = "full";
    std::string core_list;
    std::string domain_map;

    void add(CLI::App *app) {
        app->add_option("--subset", subset, "Aggregate over the full set or the core list")
            ->check(CLI::IsMember({"full", "core"}));
        app->add_option("--core-list", core_list, "Recording ids of the core subset, one per line")
            ->check(CLI::ExistingFile);
        app->add_option("--domain-map", domain_map, "`<recording> <domain>` lines for a per-domain table")
            ->check(CLI::ExistingFile);
    }

    std::optional<std::set<std::string>> core() const {
        if (subset != "core") return std::nullopt;
        if (core_list.empty()) throw ConfigError("--subset core needs --core-list");
        std::set<std::string> ids;
        std::istringstream in(read_text_file(core_list));
        for (std::string id; in >> id;) ids.insert(id);
        return ids;
    }

    std::map<std::string, std::string> domains() const {
        if (domain_map.empty()) return {};
        return parse_domain_map(read_text_file(domain_map));
    }
};

void print_report(const CorpusResult &r) {
    if (r.reports.empty() || !r.total) return;
    std::cout << format_report_table(r.reports, *r.total);
    if (!r.domains.empty()) std::cout << "\n" << format_domain_table(r.domains);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Speaker diarization with path integral clustering and VB resegmentation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("pidiar ") + kVersion);

    // synth
    CorpusSpec spec;
    std::string synth_dir;
    auto *synth = app.add_subcommand("synth", "Write a synthetic corpus, its models and a config");
    synth->add_option("--output", synth_dir, "Corpus directory")->required();
    synth->add_option("--seed", spec.seed, "Random seed");
    synth->add_option("--recordings", spec.recordings, "Wideband recordings");
    synth->add_option("--narrowband", spec.narrowband, "Two-speaker narrowband recordings");
    synth->add_option("--overlap", spec.overlap_fraction, "Overlapped share of speech")->check(CLI::Range(0.0, 0.9));
    synth->add_option("--duration", spec.duration, "Recording duration in seconds");
    synth->add_option("--min-speakers", spec.min_speakers, "Fewest speakers per wideband recording");
    synth->add_option("--max-speakers", spec.max_speakers, "Most speakers per wideband recording");

    // route / diarize / report share the config
    std::string config_path, output_dir;
    int workers = 1;
    std::optional<std::uint64_t> seed;
    SubsetArgs subset;

    auto *route = app.add_subcommand("route", "Classify each recording as narrowband or wideband");
    route->add_option("--config", config_path, "Pipeline config")->required()->check(CLI::ExistingFile);

    auto *diarize = app.add_subcommand("diarize", "Route, diarize and score every recording");
    diarize->add_option("--config", config_path, "Pipeline config")->required()->check(CLI::ExistingFile);
    diarize->add_option("--output", output_dir, "Output directory (overrides the config)");
    diarize->add_option("--workers", workers, "Parallel recordings")->check(CLI::PositiveNumber);
    diarize->add_option("--seed", seed, "Run seed recorded in the manifest");
    subset.add(diarize);

    std::string ref_path, hyp_path, uem_path;
    ScoringOptions scoring;
    bool ignore_overlap = false;
    auto *score = app.add_subcommand("score", "DER/JER of a hypothesis RTTM against a reference RTTM");
    score->add_option("--ref", ref_path, "Reference RTTM")->required()->check(CLI::ExistingFile);
    score->add_option("--hyp", hyp_path, "Hypothesis RTTM")->required()->check(CLI::ExistingFile);
    score->add_option("--uem", uem_path, "Scoring regions")->check(CLI::ExistingFile);
    score->add_option("--collar", scoring.collar, "Seconds excluded around reference boundaries")
        ->check(CLI::NonNegativeNumber);
    score->add_flag("--ignore-overlap", ignore_overlap, "Skip frames with overlapping reference speech");
    score->add_option("--output", output_dir, "Write report.txt and report.tsv here");
    subset.add(score);

    auto *report = app.add_subcommand("report", "Rescore the hypotheses of a finished run");
    report->add_option("--config", config_path, "Pipeline config")->required()->check(CLI::ExistingFile);
    report->add_option("--output", output_dir, "Run directory (overrides the config)");
    subset.add(report);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            const SyntheticCorpus corpus = make_corpus(spec);
            write_corpus(corpus, spec, synth_dir);
            std::cout << (fs::path(synth_dir) / "config.yaml").string() << "\n";
            return 0;
        }

        if (*score) {
            scoring.score_overlap = !ignore_overlap;
            std::vector<ScoringRegions> uem;
            if (!uem_path.empty()) uem = parse_uem(read_text_file(uem_path));
            const CorpusResult r = score_corpus(read_rttm_file(ref_path), read_rttm_file(hyp_path), scoring, uem,
                                                subset.core(), subset.domains());
            print_report(r);
            if (!output_dir.empty()) write_reports(output_dir, r);
            return r.total ? 0 : 1;
        }

        PipelineConfig config = load_config(config_path);
        if (!output_dir.empty()) config.output_dir = output_dir;
        if (seed) config.seed = *seed;

        if (*route) {
            const PipelineModels models = load_models(config);
            int ok = 0;
            for (const auto &id : corpus_recordings(config)) {
                try {
                    const BandDecision d = route_recording(config, models, id);
                    std::cout << id << "\t" << to_string(d.file_label) << "\n";
                    ++ok;
                } catch (const std::exception &e) {
                    std::cerr << id << ": " << e.what() << "\n";
                }
            }
            return ok > 0 ? 0 : 1;
        }

        if (*report) {
            if (config.data.reference.empty()) throw ConfigError("report needs data.reference");
            std::vector<Annotation> hyps;
            for (const auto &id : corpus_recordings(config)) {
                const fs::path p = fs::path(config.output_dir) / "hyp" / (id + ".rttm");
                if (!fs::exists(p)) continue;
                for (auto &a : read_rttm_file(p.string())) hyps.push_back(std::move(a));
            }
            std::vector<ScoringRegions> uem;
            if (!config.data.uem.empty()) uem = parse_uem(read_text_file(config.data.uem));
            const CorpusResult r = score_corpus(read_rttm_file(config.data.reference), hyps, config.metrics, uem,
                                                subset.core(), subset.domains());
            print_report(r);
            write_reports(config.output_dir, r);
            return r.total ? 0 : 1;
        }

        RunOptions options;
        options.workers = workers;
        options.core_list = subset.core();
        options.domain_map = subset.domain_map;
        const CorpusResult r = run_corpus(config, options);
        for (const auto &o : r.outcomes)
            if (!o.ok) std::cerr << o.recording_id << ": " << o.error << "\n";
        print_report(r);
        return r.succeeded() > 0 ? 0 : 1;
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
