#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pidiar/corpus.hpp"
#include "pidiar/error.hpp"
#include "pidiar/pipeline.hpp"
#include "support.hpp"

#include <filesystem>

using namespace pidiar;
namespace fs = std::filesystem;

namespace {

CorpusSpec small_spec() {
    CorpusSpec s;
    s.recordings = 2;
    s.narrowband = 1;
    s.min_speakers = 2;
    s.max_speakers = 3;
    s.duration = 60.0;
    s.dim = 32;
    s.rank = 8;
    s.dev_speakers = 20;
    s.dev_samples = 20;
    s.lda_dim = 16;
    s.seed = 4;
    return s;
}

// One shared small corpus on disk for the whole binary.
struct Fixture {
    testing::TempDir dir{"pipeline"};
    CorpusSpec spec = small_spec();
    SyntheticCorpus corpus = make_corpus(spec);
    PipelineConfig config = write_corpus(corpus, spec, dir.path().string());
};

Fixture &fixture() {
    static Fixture f;
    return f;
}

std::string yaml_with(const std::string &extra) {
    return "data:\n  sad: sad.rttm\n  embeddings_dir: emb\nmodels:\n  plda: models/plda.emb\nvbx:\n  enabled: false\noverlap:\n  enabled: false\n" + extra;
}

Annotation sad(const std::string &rec, double on, double off) {
    Annotation a(rec);
    a.add(on, off - on, "speech");
    return a;
}

} // namespace

TEST_CASE("config errors") {
    Fixture &f = fixture();
    const std::string base = f.dir.path().string();
    CHECK_NOTHROW(parse_config(yaml_with(""), base));
    CHECK_THROWS_AS(parse_config(yaml_with("clustering:\n  zz: 1\n"), base), ConfigError);
    CHECK_THROWS_AS(parse_config(yaml_with("bogus: 1\n"), base), ConfigError);
    CHECK_THROWS_AS(parse_config("data: [unclosed\n", base), ConfigError);
    CHECK_THROWS_AS(parse_config(yaml_with("clustering:\n  z: 1.5\n"), base), ConfigError);
    CHECK_THROWS_AS(parse_config(yaml_with("clustering:\n  method: kmeans\n"), base), ConfigError);
    CHECK_THROWS_AS(parse_config(yaml_with("scoring:\n  kind: euclid\n"), base), ConfigError);
    CHECK_THROWS_AS(parse_config(yaml_with("decode:\n  threshold: 1.5\n"), base), ConfigError);
    CHECK_THROWS_AS(parse_config(yaml_with("clustering:\n  K: abc\n"), base), ConfigError);
    CHECK_THROWS_AS(parse_config("data:\n  sad: missing.rttm\n", base), ConfigError);
    CHECK_THROWS_AS(load_config(f.dir.file("nope.yaml")), ConfigError);
}

TEST_CASE("config paths resolve against the config directory and round trip") {
    Fixture &f = fixture();
    CHECK(fs::path(f.config.data.sad).is_absolute());
    CHECK(fs::exists(f.config.data.sad));
    const PipelineConfig again = parse_config(config_to_yaml(f.config), "/");
    CHECK(again.describe() == f.config.describe());
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("window labels become a timeline") {
    FloatMatrix m = FloatMatrix::Zero(5, 2);
    EmbeddingSequence seq("r", m, 1.5, 0.25, 2.5);
    Annotation a = labels_to_annotation(seq, {0, 0, 1, 1, 1});
    REQUIRE(a.size() == 2);
    CHECK(a.segments()[0].speaker == "spk1");
    CHECK(a.segments()[0].onset == 0.0);
    CHECK(a.segments()[0].offset() == doctest::Approx(1.125));
    CHECK(a.segments()[1].onset == doctest::Approx(1.125));
    CHECK(a.segments()[1].offset() == doctest::Approx(2.5));
}

TEST_CASE("single-window recording is one speaker over the SAD") {
    Fixture &f = fixture();
    const PipelineModels models = load_models(f.config);
    const auto &rec = f.corpus.recordings[0].embeddings;
    FloatMatrix one = rec.vectors().topRows(1);
    EmbeddingSequence seq("tiny", one, 1.5, 0.25, 1.5);
    RecordingInputs in{"tiny", sad("tiny", 0.2, 1.4), std::nullopt};
    Annotation a = run_wideband(f.config, models, seq, in);
    REQUIRE(a.size() == 1);
    CHECK(a.segments()[0].onset == doctest::Approx(0.2));
    CHECK(a.segments()[0].offset() == doctest::Approx(1.4));
}

TEST_CASE("narrowband decoding fixtures") {
    testing::TempDir dir("nb");
    PipelineConfig c;
    c.data.posteriors_dir = dir.path().string();
    PosteriorMatrix p;
    p.recording_id = "n";
    p.subsample_factor = 10;
    p.values = Eigen::MatrixXd::Zero(100, 2);
    p.values.col(0).setOnes();
    write_posteriors(p, dir.file("n.post"));
    RecordingInputs in{"n", sad("n", 1.0, 9.0), std::nullopt};
    Annotation one = run_narrowband(c, in);
    REQUIRE(one.size() == 1);
    CHECK(one.segments()[0].speaker == "spk1");
    CHECK(one.segments()[0].onset == doctest::Approx(1.0));
    CHECK(one.segments()[0].offset() == doctest::Approx(9.0));

    for (int r = 0; r < 100; ++r) p.values.row(r) = (r / 25) % 2 == 0 ? Eigen::RowVector2d(1, 0) : Eigen::RowVector2d(0, 1);
    write_posteriors(p, dir.file("n.post"));
    Annotation alt = run_narrowband(c, RecordingInputs{"n", sad("n", 0.0, 10.0), std::nullopt});
    REQUIRE(alt.size() == 4);
    for (int b = 0; b < 4; ++b) {
        const Segment &s = alt.segments()[static_cast<std::size_t>(b)];
        CHECK(s.speaker == (b % 2 == 0 ? "spk1" : "spk2"));
        CHECK(s.onset == doctest::Approx(2.5 * b));
        CHECK(s.offset() == doctest::Approx(2.5 * (b + 1)));
    }

    p.values.setZero();
    write_posteriors(p, dir.file("n.post"));
    Annotation fb = run_narrowband(c, in);
    REQUIRE(fb.size() == 1);
    CHECK(fb.segments()[0].speaker == "spk1");

    CHECK_THROWS(run_narrowband(c, RecordingInputs{"missing", sad("missing", 0, 1), std::nullopt}));
}

TEST_CASE("routing sends the narrowband recording to the decoder") {
    Fixture &f = fixture();
    const PipelineModels models = load_models(f.config);
    CHECK(route_recording(f.config, models, "rec01").file_label == Band::WB);
    CHECK(route_recording(f.config, models, "nb01").file_label == Band::NB);
    PipelineConfig off = f.config;
    off.routing_enabled = false;
    CHECK(route_recording(off, models, "nb01").file_label == Band::WB);
}

TEST_CASE("corpus run writes reports and isolates failures") {
    Fixture &f = fixture();
    PipelineConfig c = f.config;
    c.output_dir = f.dir.file("run1");
    RunOptions opt;
    write_text_file(f.dir.file("two_domains.txt"), "rec01 broadcast\nrec02 meeting\nnb01 meeting\n");
    opt.domain_map = f.dir.file("two_domains.txt");
    const CorpusResult r = run_corpus(c, opt);
    REQUIRE(r.outcomes.size() == 3);
    CHECK(r.succeeded() == 3);
    CHECK(r.reports.size() == 3);
    REQUIRE(r.total.has_value());
    CHECK(r.total->der.value() < 0.05);
    CHECK(r.domains.size() == 2);
    CHECK(fs::exists(fs::path(c.output_dir) / "hyp" / "rec01.rttm"));
    CHECK(fs::exists(fs::path(c.output_dir) / "report.tsv"));
    const std::string manifest = read_text_file((fs::path(c.output_dir) / "manifest.txt").string());
    CHECK(manifest.find(r.config_hash) != std::string::npos);
    const std::string tsv = read_text_file((fs::path(c.output_dir) / "report.tsv").string());
    CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 5);

    // A missing embedding file fails that recording only.
    testing::TempDir broken("broken");
    fs::copy(f.dir.path(), broken.path(), fs::copy_options::recursive | fs::copy_options::overwrite_existing);
    fs::remove(broken.path() / "emb" / "rec02.emb");
    PipelineConfig bc = load_config(broken.file("config.yaml"));
    const CorpusResult br = run_corpus(bc, {});
    CHECK(br.succeeded() == 2);
    for (const auto &o : br.outcomes) {
        if (o.recording_id == "rec02") {
            CHECK_FALSE(o.ok);
            CHECK(o.error.find("rec02") != std::string::npos);
        } else {
            CHECK(o.ok);
        }
    }
    CHECK(br.reports.size() == 3);
}

TEST_CASE("corpus rerun is byte-identical") {
    Fixture &f = fixture();
    PipelineConfig a = f.config, b = f.config;
    a.output_dir = f.dir.file("det_a");
    b.output_dir = f.dir.file("det_b");
    run_corpus(a, {});
    RunOptions two;
    two.workers = 2;
    run_corpus(b, two);
    for (const char *file : {"hyp/rec01.rttm", "hyp/rec02.rttm", "hyp/nb01.rttm", "report.tsv", "report.txt"})
        CHECK(read_text_file((fs::path(a.output_dir) / file).string()) ==
              read_text_file((fs::path(b.output_dir) / file).string()));
}

TEST_CASE("scoring a finished run with a core list") {
    Fixture &f = fixture();
    const auto refs = read_rttm_file(f.config.data.reference);
    const CorpusResult r = score_corpus(refs, refs, {}, {}, std::set<std::string>{"rec01"}, {});
    REQUIRE(r.total.has_value());
    CHECK(r.total->der.value() == 0.0);
    CHECK(r.reports.size() == 3);
}
