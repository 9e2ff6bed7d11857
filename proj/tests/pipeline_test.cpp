#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "polarity/pipeline.hpp"
#include "polarity/synthetic.hpp"

using namespace polarity;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("polarity_pipeline_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Small generated task plus a config that trains in well under a second.
struct TinyRun {
    fs::path dir;
    RunConfig cfg;
};

TinyRun tiny_run(const std::string& name, EncoderKind encoder = EncoderKind::sgns_add)
{
    TinyRun r;
    r.dir = scratch(name);
    SyntheticConfig sc;
    sc.unlabeled_sentences = 200;
    sc.labeled_sentences = 60;
    SeededRng rng(11);
    write_synthetic(make_synthetic(sc, rng), r.dir / "data");
    r.cfg.encoder = encoder;
    r.cfg.corpus = (r.dir / "data/corpus.txt").string();
    r.cfg.train_data = (r.dir / "data/train.tsv").string();
    r.cfg.test_data = (r.dir / "data/test.tsv").string();
    r.cfg.output_dir = (r.dir / "run").string();
    r.cfg.min_count = 1;
    r.cfg.probe_seeds = 2;
    r.cfg.sgns.dim = 8;
    r.cfg.sgns.epochs = 1;
    r.cfg.sgns.threshold = 0;
    r.cfg.fastsent.dim = 8;
    r.cfg.fastsent.epochs = 1;
    r.cfg.pv.dim = 8;
    r.cfg.pv.epochs = 1;
    r.cfg.pv_infer_steps = 3;
    r.cfg.sdae.embed = 4;
    r.cfg.sdae.hidden = 6;
    r.cfg.sdae.epochs = 1;
    r.cfg.probe.hidden = 4;
    r.cfg.probe.epochs = 2;
    r.cfg.bilstm.hidden = 3;
    r.cfg.bilstm.epochs = 1;
    return r;
}

Vocabulary small_vocab()
{
    return Vocabulary(std::vector<Vocabulary::Entry>{{"the", 9}, {"good", 5}, {"bad", 4}, {"not", 3}});
}

template <typename Model>
std::string model_bytes(const Model& m)
{
    std::ostringstream os(std::ios::binary);
    save_model(os, m);
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

TEST(Config, DefaultsMatchDocumentedValues)
{
    RunConfig c;
    EXPECT_EQ(c.sgns.dim, 300u);
    EXPECT_EQ(c.sgns.window, 10u);
    EXPECT_DOUBLE_EQ(c.sgns.threshold, 1e-5);
    EXPECT_EQ(c.fastsent.dim, 300u);
    EXPECT_EQ(c.pv.dim, 300u);
    EXPECT_EQ(c.pv.window, 10u);
    EXPECT_EQ(c.sdae.hidden, 2400u);
    EXPECT_DOUBLE_EQ(c.sdae.corruption.p_delete, 0.1);
    EXPECT_DOUBLE_EQ(c.sdae.corruption.p_swap, 0.1);
    EXPECT_EQ(c.probe.hidden, 60u);
    EXPECT_DOUBLE_EQ(c.probe.lambda, 1e-3);
    EXPECT_DOUBLE_EQ(c.probe.lr, 1e-2);
    EXPECT_EQ(c.probe.batch, 10u);
    EXPECT_EQ(c.probe.epochs, 20u);
    EXPECT_DOUBLE_EQ(c.bilstm.lr, 5e-2);
    EXPECT_EQ(c.bilstm.epochs, 20u);
    EXPECT_DOUBLE_EQ(c.bilstm.dropout, 0.2);
    EXPECT_EQ(c.bilstm.hidden, 60u);

    EXPECT_EQ(c.effective_min_count(), 5u);
    c.encoder = EncoderKind::fastsent;
    EXPECT_EQ(c.effective_min_count(), 3u);
    c.min_count = 7;
    EXPECT_EQ(c.effective_min_count(), 7u);
}

TEST(Config, SentenceWidthFollowsEncoder)
{
    RunConfig c;
    EXPECT_EQ(c.sentence_width(), 300u);
    c.encoder = EncoderKind::sdae;
    EXPECT_EQ(c.sentence_width(), 2400u);

    // The configured width is what the encoder actually emits.
    c.sdae.hidden = 7;
    c.sdae.embed = 3;
    SeededRng rng(1);
    const auto m = init_sdae<double>(small_vocab(), c.sdae, rng);
    EXPECT_EQ(encode_sdae(m, {"good", "not"}).vector.size(), c.sentence_width());
}

TEST(Config, DumpLoadRoundTrip)
{
    RunConfig c;
    c.encoder = EncoderKind::pv_dm;
    c.seed = 123456789012345ull;
    c.sgns.lr = 0.1 + 0.2;  // not exactly representable in short decimal
    c.fastsent.objective = OutputObjective::negative_sampling;
    c.deterministic = false;
    c.corpus = "some dir/corpus.txt";
    c.probe.lambda = 3.0e-7;

    std::istringstream in(dump_config(c));
    RunConfig back;
    const auto keys = load_config(in, back);
    EXPECT_EQ(back, c);
    EXPECT_EQ(back.sgns.lr, c.sgns.lr);
    EXPECT_EQ(back.corpus, "some dir/corpus.txt");

    std::size_t n = 0;
    c.visit([&](std::string_view, const auto&) { ++n; });
    EXPECT_EQ(keys.size(), n);
}

TEST(Config, CommentsAndBlankLinesAreSkipped)
{
    std::istringstream in("# demo\n\n  sgns.dim = 40  \nencoder=fastsent\n");
    RunConfig c;
    const auto keys = load_config(in, c);
    EXPECT_EQ(keys, (std::vector<std::string>{"sgns.dim", "encoder"}));
    EXPECT_EQ(c.sgns.dim, 40u);
    EXPECT_EQ(c.encoder, EncoderKind::fastsent);
}

TEST(Config, ErrorsCarryTheLineNumber)
{
    RunConfig c;
    std::istringstream unknown("seed = 3\n\nsgns.dimm = 4\n");
    try {
        load_config(unknown, c, "x.conf");
        FAIL() << "unknown key accepted";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("sgns.dimm"), std::string::npos);
    }

    std::istringstream bad_value("probe.lr = fast\n");
    EXPECT_THROW(load_config(bad_value, c), ParseError);
    std::istringstream no_eq("seed 3\n");
    EXPECT_THROW(load_config(no_eq, c), ParseError);
    std::istringstream negative("sgns.dim = -4\n");
    EXPECT_THROW(load_config(negative, c), ParseError);
}

TEST(Config, GetAndSetByKey)
{
    RunConfig c;
    set_config_value(c, "pv.infer_steps", "9");
    EXPECT_EQ(get_config_value(c, "pv.infer_steps"), "9");
    set_config_value(c, "deterministic", "no");
    EXPECT_FALSE(c.deterministic);
    EXPECT_THROW(get_config_value(c, "nope"), std::invalid_argument);
    EXPECT_THROW(set_config_value(c, "encoder", "lstm"), std::invalid_argument);
}

TEST(Config, ThreadsCollapseToOneWhenDeterministic)
{
    RunConfig c;
    c.threads = 8;
    EXPECT_EQ(c.effective_threads(), 1u);
    c.deterministic = false;
    EXPECT_EQ(c.effective_threads(), 8u);
}

TEST(Config, ValidateRejectsBadValues)
{
    RunConfig c;
    EXPECT_NO_THROW(c.validate());
    c.probe_seeds = 1;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c.probe_seeds = 5;
    c.bilstm.dropout = 1.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Model files

TEST(ModelIo, EveryKindRoundTrips)
{
    SeededRng rng(5);
    const auto vocab = small_vocab();
    const auto dir = scratch("models");

    SgnsConfig sc;
    sc.dim = 4;
    const auto sgns = init_sgns<double>(vocab, sc, rng);
    FastSentConfig fc;
    fc.dim = 3;
    fc.objective = OutputObjective::negative_sampling;
    const auto fs_model = init_fastsent<double>(vocab, fc, rng);
    PvConfig pc;
    pc.mode = PvMode::dm;
    pc.dim = 3;
    pc.window = 2;
    auto pv = init_pv<double>(vocab, 4, pc, rng);
    pv.b = {0.5, -0.25, 1.0, 2.0};
    SdaeConfig dc;
    dc.embed = 3;
    dc.hidden = 5;
    const auto sdae = init_sdae<double>(vocab, dc, rng);
    BiLstmConfig bc;
    bc.hidden = 2;
    const auto bilstm = init_bilstm(sgns, bc, rng);
    auto probe = ProbeModel<double>::zeros(4, 3);
    probe.visit([&](std::string_view, Matrix<double>& t) { t = uniform_init<double>(t.rows(), t.cols(), 1.0, rng); });

    auto check = [&](const auto& model, auto load, const char* name) {
        const auto path = (dir / name).string();
        save_model(path, model);
        const auto back = load(path);
        EXPECT_EQ(model_bytes(back), model_bytes(model)) << name;
        EXPECT_EQ(slurp(path), model_bytes(model)) << name;
    };
    check(sgns, [](const std::string& p) { return load_sgns(p); }, "sgns.model");
    check(fs_model, [](const std::string& p) { return load_fastsent(p); }, "fastsent.model");
    check(pv, [](const std::string& p) { return load_pv(p); }, "pv.model");
    check(sdae, [](const std::string& p) { return load_sdae(p); }, "sdae.model");
    check(bilstm, [](const std::string& p) { return load_bilstm(p); }, "bilstm.model");
    check(probe, [](const std::string& p) { return load_probe(p); }, "probe.model");

    const auto pv_back = load_pv((dir / "pv.model").string());
    EXPECT_EQ(pv_back.b, pv.b);
    EXPECT_EQ(pv_back.mode(), PvMode::dm);
    EXPECT_EQ(pv_back.vocab, vocab);
    EXPECT_EQ(load_fastsent((dir / "fastsent.model").string()).config.objective, OutputObjective::negative_sampling);
    EXPECT_EQ(load_sgns((dir / "sgns.model").string()).w_in, sgns.w_in);
    EXPECT_EQ(peek_model_kind((dir / "sdae.model").string()), "sdae");
}

TEST(ModelIo, RejectsDamagedFiles)
{
    SeededRng rng(2);
    SgnsConfig sc;
    sc.dim = 3;
    const auto bytes = model_bytes(init_sgns<double>(small_vocab(), sc, rng));
    const auto dir = scratch("damaged");
    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream(dir / name, std::ios::binary) << content;
        return (dir / name).string();
    };

    EXPECT_THROW(load_sgns(write("magic", "NOT-A-MODEL\n" + bytes.substr(12))), ModelFormatError);
    EXPECT_THROW(load_sgns(write("short", bytes.substr(0, bytes.size() - 5))), ModelFormatError);
    EXPECT_THROW(load_sgns(write("header", bytes.substr(0, kModelMagic.size() + 20))), ModelFormatError);

    // Changing a word in the header breaks the vocabulary fingerprint.
    auto renamed = bytes;
    const auto at = renamed.find("\"good\"");
    ASSERT_NE(at, std::string::npos);
    renamed.replace(at, 6, "\"gold\"");
    EXPECT_THROW(load_sgns(write("fingerprint", renamed)), ModelFormatError);

    // Right file, wrong kind.
    EXPECT_THROW(load_probe(write("kind", bytes)), ModelFormatError);
    EXPECT_THROW(load_encoder(write("probe", model_bytes(ProbeModel<double>::zeros(2, 2)))), ModelFormatError);
    EXPECT_THROW(load_sgns((dir / "absent").string()), std::runtime_error);
}

TEST(ModelIo, EncoderVariantKeepsKind)
{
    SeededRng rng(3);
    PvConfig pc;
    pc.dim = 2;
    const auto dir = scratch("variant");
    save_model((dir / "pv.model").string(), init_pv<double>(small_vocab(), 2, pc, rng));
    const auto e = load_encoder((dir / "pv.model").string());
    EXPECT_EQ(encoder_kind(e), EncoderKind::pv_dbow);
    EXPECT_EQ(encoder_vocab(e), small_vocab());
}

// ---------------------------------------------------------------------------
// Vectors, reports, comparison

TEST(Vectors, RoundTripExactly)
{
    EncodedSplit s;
    s.x = Matrix<double>(3, 2);
    s.x(0, 0) = 0.1;
    s.x(1, 1) = -1e-300;
    s.x(2, 0) = 1.0 / 3.0;
    s.y = {Polarity::positive, Polarity::negative, Polarity::positive};
    std::stringstream ss;
    write_vectors(ss, s);
    const auto back = read_vectors(ss);
    EXPECT_EQ(back.x, s.x);
    EXPECT_EQ(back.y, s.y);
}

TEST(Vectors, RaggedRowsAreRejected)
{
    std::istringstream in("positive\t1\t2\nnegative\t3\n");
    EXPECT_THROW(read_vectors(in), ParseError);
    std::istringstream label("maybe\t1\n");
    EXPECT_THROW(read_vectors(label), ParseError);
}

TEST(Report, ReadBackGivesTheNumbers)
{
    EvalReport rep;
    rep.seeds = {7, 8, 9};
    rep.scores = {0.8, 0.9, 0.85};
    const auto ms = mean_and_sample_std(rep.scores);
    rep.mean = ms.mean;
    rep.std = ms.std;
    std::stringstream ss;
    write_report(ss, "de", "fastsent", rep);
    const auto r = read_report(ss);
    EXPECT_EQ(r.language, "de");
    EXPECT_EQ(r.encoder, "fastsent");
    ASSERT_EQ(r.scores.size(), 3u);
    EXPECT_NEAR(r.mean, 0.85, 1e-6);
    EXPECT_NEAR(r.std, 0.05, 1e-6);

    std::istringstream junk("hello\n");
    EXPECT_THROW(read_report(junk), ParseError);
}

TEST(Compare, TableLayoutAndBest)
{
    std::vector<ReportSummary> rs{
        {"en", "sdae", {}, 0.70, 0.01},
        {"en", "sgns-add", {}, 0.8123, 0.0234},
        {"de", "bilstm", {}, 0.9, 0.0},
    };
    const auto t = compare_table(rs);
    EXPECT_EQ(t,
              "language\tsgns-add\tsdae\tbilstm\tbest\n"
              "de\t-\t-\t90.00 ± 0.00\tbilstm\n"
              "en\t81.23 ± 2.34\t70.00 ± 1.00\t-\tsgns-add\n");
}

TEST(Compare, DuplicatesAndEmptyInputThrow)
{
    std::vector<ReportSummary> rs{{"en", "sdae", {}, 0.7, 0.0}, {"en", "sdae", {}, 0.6, 0.0}};
    EXPECT_THROW(compare_table(rs), std::invalid_argument);
    EXPECT_THROW(compare_table({}), std::invalid_argument);
}

TEST(Compare, UnknownEncodersGoLastByName)
{
    std::vector<ReportSummary> rs{{"en", "zeta", {}, 0.1, 0.0}, {"en", "alpha", {}, 0.2, 0.0},
                                  {"en", "fastsent", {}, 0.3, 0.0}};
    const auto t = compare_table(rs);
    EXPECT_EQ(t.substr(0, t.find('\n')), "language\tfastsent\talpha\tzeta\tbest");
}

// ---------------------------------------------------------------------------
// Synthetic generator

TEST(Synthetic, ShapesAndLabelsAreConsistent)
{
    SyntheticConfig sc;
    SeededRng rng(4);
    const auto d = make_synthetic(sc, rng);
    EXPECT_EQ(d.train.size() + d.test.size(), sc.labeled_sentences);
    EXPECT_EQ(d.test.size(), 100u);

    std::set<std::string> pos(d.positive_words.begin(), d.positive_words.end());
    std::set<std::string> neg(d.negative_words.begin(), d.negative_words.end());
    for (const auto* split : {&d.train, &d.test}) {
        for (const auto& ex : split->examples) {
            ASSERT_GE(ex.tokens.size(), sc.min_length);
            ASSERT_LE(ex.tokens.size(), sc.max_length);
            std::size_t sentiment = 0;
            for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
                const bool p = pos.count(ex.tokens[i]) > 0, n = neg.count(ex.tokens[i]) > 0;
                if (!p && !n)
                    continue;
                ++sentiment;
                const bool negated = i > 0 && ex.tokens[i - 1] == sc.negation;
                EXPECT_EQ(p != negated, ex.label == Polarity::positive) << join(ex.tokens);
            }
            EXPECT_EQ(sentiment, 1u);
        }
    }

    const auto st = negation_stats(d.train, d.lexicon);
    EXPECT_GT(st.at_least_one(Polarity::negative), st.at_least_one(Polarity::positive));
}

TEST(Synthetic, SameSeedSameData)
{
    SyntheticConfig sc;
    sc.unlabeled_sentences = 50;
    sc.labeled_sentences = 20;
    SeededRng a(9), b(9);
    const auto da = make_synthetic(sc, a), db = make_synthetic(sc, b);
    EXPECT_EQ(da.unlabeled.documents, db.unlabeled.documents);
    EXPECT_EQ(da.train.examples.size(), db.train.examples.size());
    for (std::size_t i = 0; i < da.train.size(); ++i)
        EXPECT_EQ(da.train.examples[i].tokens, db.train.examples[i].tokens);
}

// ---------------------------------------------------------------------------
// Pipeline runs

TEST(Pipeline, RerunIsByteIdentical)
{
    auto r = tiny_run("rerun");
    const auto first = run_pipeline(r.cfg);
    const auto report1 = slurp(r.dir / "run/report.tsv");
    const auto model1 = slurp(r.dir / "run/encoder.model");
    EXPECT_FALSE(fs::exists(r.dir / "run/STALE"));
    EXPECT_TRUE(fs::exists(r.dir / "run/manifest.json"));
    EXPECT_EQ(first.report.scores.size(), 2u);
    EXPECT_EQ(first.report.test_reads_during_training, 0u);

    r.cfg.output_dir = (r.dir / "run2").string();
    run_pipeline(r.cfg);
    EXPECT_EQ(slurp(r.dir / "run2/report.tsv"), report1);
    EXPECT_EQ(slurp(r.dir / "run2/encoder.model"), model1);

    const auto m = read_manifest((r.dir / "run/manifest.json").string());
    EXPECT_EQ(m.config.sgns.dim, 8u);
    EXPECT_EQ(m.outputs.at("report.tsv"), hash_file(r.dir / "run/report.tsv"));
    EXPECT_EQ(m.inputs.at("corpus").second, hash_file(r.cfg.corpus));
    EXPECT_EQ(m.outputs.size(), 3u);
}

TEST(Pipeline, SeedChangesTheEncoder)
{
    auto r = tiny_run("seed");
    run_pipeline(r.cfg);
    r.cfg.seed = 2;
    r.cfg.output_dir = (r.dir / "other").string();
    run_pipeline(r.cfg);
    EXPECT_NE(slurp(r.dir / "run/encoder.model"), slurp(r.dir / "other/encoder.model"));
}

TEST(Pipeline, VerifyDetectsChanges)
{
    auto r = tiny_run("verify");
    run_pipeline(r.cfg);
    const auto manifest = (r.dir / "run/manifest.json").string();
    const auto ok = verify_manifest(manifest, r.dir / "scratch");
    EXPECT_TRUE(ok.ok);
    EXPECT_TRUE(ok.differences.empty());

    std::ofstream(r.cfg.train_data, std::ios::app) << "extra line\tpositive\n";
    const auto bad = verify_manifest(manifest, r.dir / "scratch2");
    EXPECT_FALSE(bad.ok);
    ASSERT_EQ(bad.differences.size(), 1u);
    EXPECT_NE(bad.differences[0].find("train"), std::string::npos);
}

TEST(Pipeline, EveryEncoderRuns)
{
    for (auto k : all_encoder_kinds) {
        auto r = tiny_run("enc_" + std::string(to_string(k)), k);
        const auto res = run_pipeline(r.cfg);
        EXPECT_EQ(res.report.scores.size(), 2u) << to_string(k);
        const auto e = load_encoder((r.dir / "run/encoder.model").string());
        EXPECT_EQ(encoder_kind(e), k);

        // A saved encoder can replace training and gives the same report.
        r.cfg.encoder_model = (r.dir / "run/encoder.model").string();
        r.cfg.output_dir = (r.dir / "reuse").string();
        run_pipeline(r.cfg);
        EXPECT_EQ(slurp(r.dir / "reuse/report.tsv"), slurp(r.dir / "run/report.tsv")) << to_string(k);
    }
}

TEST(Pipeline, BilstmRunWritesItsOutputs)
{
    auto r = tiny_run("bilstm");
    r.cfg.subcommand = "bilstm";
    const auto res = run_configured(r.cfg);
    EXPECT_EQ(res.report.scores.size(), 2u);
    for (const char* f : {"vocab.tsv", "sgns.model", "bilstm.model", "report.tsv", "manifest.json"})
        EXPECT_TRUE(fs::exists(r.dir / "run" / f)) << f;
    EXPECT_EQ(read_report_file((r.dir / "run/report.tsv").string()).encoder, "bilstm");
    EXPECT_TRUE(verify_manifest((r.dir / "run/manifest.json").string(), r.dir / "scratch").ok);
}

TEST(Pipeline, MissingCorpusNamesTheStage)
{
    auto r = tiny_run("missing");
    r.cfg.corpus = (r.dir / "nope.txt").string();
    try {
        run_pipeline(r.cfg);
        FAIL() << "run succeeded without a corpus";
    } catch (const PipelineError& e) {
        EXPECT_EQ(e.stage(), "corpus");
        EXPECT_EQ(e.exit_code(), kExitInput);
    }
    ASSERT_TRUE(fs::exists(r.dir / "run/STALE"));
    EXPECT_NE(slurp(r.dir / "run/STALE").find("corpus"), std::string::npos);
    EXPECT_FALSE(fs::exists(r.dir / "run/manifest.json"));
}

TEST(Pipeline, MalformedDataIsAnInputError)
{
    auto r = tiny_run("malformed");
    std::ofstream(r.cfg.test_data, std::ios::app) << "no label here\n";
    try {
        run_pipeline(r.cfg);
        FAIL();
    } catch (const PipelineError& e) {
        EXPECT_EQ(e.stage(), "dataset");
        EXPECT_EQ(e.exit_code(), kExitInput);
    }
}

TEST(Pipeline, WrongEncoderModelIsRejected)
{
    auto r = tiny_run("wrongkind");
    run_pipeline(r.cfg);
    r.cfg.encoder = EncoderKind::fastsent;
    r.cfg.encoder_model = (r.dir / "run/encoder.model").string();
    r.cfg.output_dir = (r.dir / "again").string();
    try {
        run_pipeline(r.cfg);
        FAIL();
    } catch (const PipelineError& e) {
        EXPECT_EQ(e.stage(), "train");
        EXPECT_EQ(e.exit_code(), kExitInput);
    }
}

// ---------------------------------------------------------------------------
// Shipped data files

#ifdef POLARITY_SOURCE_DIR

TEST(ShippedData, LexiconsParseAndMarkKnownNegations)
{
    const fs::path dir = fs::path(POLARITY_SOURCE_DIR) / "data/lexicons";
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto lex = load_lexicon(entry.path().string());
        EXPECT_FALSE(lex.words().empty()) << entry.path();
        ++files;
    }
    EXPECT_EQ(files, 9u);

    const auto en = load_lexicon((dir / "en.txt").string());
    EXPECT_EQ(en.count_markers(tokenize("I don't like it, not at all.")), 2u);
    EXPECT_EQ(en.count_markers(tokenize("Notable food, nice staff")), 0u);
    const auto fr = load_lexicon((dir / "fr.txt").string());
    EXPECT_EQ(fr.count_markers(tokenize("Ce n'est pas bon")), 2u);
    const auto tr = load_lexicon((dir / "tr.txt").string());
    EXPECT_EQ(tr.count_markers(tokenize("Yemekler güzel değil, gelmedi")), 2u);
}

TEST(ShippedData, SyntheticConfigLoads)
{
    RunConfig c;
    const auto keys = load_config_file(std::string(POLARITY_SOURCE_DIR) + "/data/synthetic.conf", c);
    EXPECT_FALSE(keys.empty());
    EXPECT_EQ(c.sgns.threshold, 0.0);
    EXPECT_NO_THROW(c.validate());
}

#endif

// ---------------------------------------------------------------------------
// Command line

#ifdef POLARITY_CLI_PATH

namespace {

int cli(const std::string& args)
{
    const auto cmd = std::string(POLARITY_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes)
{
    const auto dir = scratch("cli");
    const auto d = dir.string();
    EXPECT_EQ(cli("--version"), 0);
    EXPECT_EQ(cli("--help"), 0);
    EXPECT_EQ(cli(""), 2);
    EXPECT_EQ(cli("frobnicate"), 2);
    EXPECT_EQ(cli("eval --corpus " + d + "/nope.txt --train x --test y --out " + d + "/run"), 2);
    EXPECT_TRUE(fs::exists(dir / "run/STALE"));
    EXPECT_EQ(cli("eval --set sgns.dimm=3"), 2);

    ASSERT_EQ(cli("synth --out " + d + "/data --unlabeled 200 --labeled 60"), 0);
    const auto common = "--corpus " + d + "/data/corpus.txt --train " + d + "/data/train.tsv --test " + d +
                        "/data/test.tsv --set min_count=1 --set sgns.dim=6 --set sgns.epochs=1 --set "
                        "sgns.threshold=0 --set probe_seeds=2 --set probe.epochs=2";
    ASSERT_EQ(cli("eval " + common + " --out " + d + "/ok"), 0);
    EXPECT_EQ(cli("eval --verify " + d + "/ok/manifest.json --verify-dir " + d + "/scratch"), 0);
    EXPECT_EQ(cli("negstats --data " + d + "/data/train.tsv --lexicon " + d + "/data/lexicon.txt"), 0);
    EXPECT_EQ(cli("negstats --data " + d + "/data/train.tsv --lexicon " + d + "/none.txt"), 2);
    EXPECT_EQ(cli("compare " + d + "/ok/report.tsv " + d + "/ok/report.tsv"), 2);
    EXPECT_EQ(cli("compare " + d + "/ok/report.tsv"), 0);
    EXPECT_EQ(cli("saliency --model " + d + "/ok/encoder.model --sentence good"), 2);
}

TEST(Cli, FlagsOverrideConfigFile)
{
    const auto dir = scratch("cli_precedence");
    std::ofstream(dir / "a.conf") << "seed = 5\nsgns.dim = 11\n";
    const auto out = (dir / "dump.conf").string();
    const auto cmd = std::string(POLARITY_CLI_PATH) + " eval --config " + (dir / "a.conf").string() +
                     " --set sgns.dim=12 --seed 9 --dump-config > " + out;
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    RunConfig c;
    load_config_file(out, c);
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.sgns.dim, 12u);
}

#endif
