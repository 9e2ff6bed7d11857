// polarity-probe: train sentence encoders, probe them for polarity, and
// report. Run `polarity-probe --help` or `polarity-probe <command> --help`.
//
// Exit codes: 0 success, 1 internal error, 2 usage or input error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polarity/config.hpp"
#include "polarity/model_io.hpp"
#include "polarity/pipeline.hpp"
#include "polarity/saliency.hpp"
#include "polarity/synthetic.hpp"

namespace {

using namespace polarity;

/// Options shared by every command that builds a RunConfig. Precedence:
/// explicit flags, then --set, then the config file, then
/// POLARITY_PROBE_SEED for the seed, then built-in defaults.
struct CommonOptions {
    std::string config_file;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    bool nondeterministic = false;

    void attach(CLI::App* cmd)
    {
        cmd->add_option("--config", config_file, "Config file with key = value lines")->check(CLI::ExistingFile);
        cmd->add_option("--set", sets, "Override one config key, as key=value (repeatable)");
        cmd->add_option("--seed", seed, "Base seed (falls back to POLARITY_PROBE_SEED, then 1)");
        cmd->add_option("--threads", threads, "Worker threads; deterministic mode forces 1");
        cmd->add_flag("--nondeterministic", nondeterministic, "Allow more than one thread");
    }

    RunConfig build(const std::string& subcommand) const
    {
        RunConfig cfg;
        std::vector<std::string> from_file;
        if (!config_file.empty())
            from_file = load_config_file(config_file, cfg);
        const bool file_seed = std::find(from_file.begin(), from_file.end(), "seed") != from_file.end();
        if (!file_seed)
            if (const char* env = std::getenv("POLARITY_PROBE_SEED"))
                set_config_value(cfg, "seed", env);
        for (const auto& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
            set_config_value(cfg, detail::trim(std::string_view(kv).substr(0, eq)),
                             detail::trim(std::string_view(kv).substr(eq + 1)));
        }
        if (seed)
            cfg.seed = *seed;
        if (threads)
            cfg.threads = *threads;
        if (nondeterministic)
            cfg.deterministic = false;
        cfg.subcommand = subcommand;
        return cfg;
    }
};

void log(const std::string& msg) { std::cerr << "polarity-probe: " << msg << '\n'; }

template <typename Write>
void write_output(const std::string& path, Write&& write)
{
    if (path.empty() || path == "-") {
        write(std::cout);
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot write '" + path + "'");
    write(os);
}

void print_result(const PipelineResult& r)
{
    std::cout << r.manifest.config.language << '\t'
              << (r.manifest.config.subcommand == "bilstm" ? "bilstm" : std::string(to_string(r.manifest.config.encoder)))
              << '\t' << r.report.summary() << '\n';
    log("outputs in " + r.output_dir.string());
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sentence-representation polarity probing toolkit"};
    app.set_version_flag("--version", std::string(POLARITY_VERSION));
    app.require_subcommand(1);

    // build-vocab
    auto* vocab_cmd = app.add_subcommand("build-vocab", "Count words in a corpus and write the vocabulary");
    std::string vocab_corpus, vocab_out = "-";
    std::uint64_t vocab_min_count = 5;
    vocab_cmd->add_option("--corpus", vocab_corpus, "Raw corpus, one sentence per line")->required();
    vocab_cmd->add_option("--min-count", vocab_min_count, "Minimum word frequency");
    vocab_cmd->add_option("--out", vocab_out, "Output TSV (word, count); '-' for stdout");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train one sentence encoder on a raw corpus");
    CommonOptions train_common;
    train_common.attach(train_cmd);
    std::string train_kind, train_mode = "dbow", train_corpus, train_out;
    std::optional<std::uint64_t> train_min_count;
    train_cmd->add_option("encoder", train_kind, "sgns, fastsent, pv or sdae")
        ->required()
        ->check(CLI::IsMember({"sgns", "fastsent", "pv", "sdae"}));
    train_cmd->add_option("--mode", train_mode, "Paragraph-vector mode")->check(CLI::IsMember({"dbow", "dm"}));
    train_cmd->add_option("--corpus", train_corpus, "Raw corpus")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--out", train_out, "Model file to write")->required();
    train_cmd->add_option("--min-count", train_min_count, "Minimum word frequency (default 5, FastSent 3)");

    // encode
    auto* encode_cmd = app.add_subcommand("encode", "Encode labeled sentences with a trained encoder");
    CommonOptions encode_common;
    encode_common.attach(encode_cmd);
    std::string encode_model, encode_data, encode_out = "-";
    std::optional<std::size_t> encode_steps;
    std::optional<double> encode_lr;
    encode_cmd->add_option("--model", encode_model, "Encoder model file")->required()->check(CLI::ExistingFile);
    encode_cmd->add_option("--data", encode_data, "Labeled TSV (text, labels)")->required()->check(CLI::ExistingFile);
    encode_cmd->add_option("--out", encode_out, "Vectors TSV (label, values); '-' for stdout");
    encode_cmd->add_option("--steps", encode_steps, "Paragraph-vector inference steps");
    encode_cmd->add_option("--lr", encode_lr, "Paragraph-vector inference learning rate");

    // probe
    auto* probe_cmd = app.add_subcommand("probe", "Train and score the polarity probe over sentence vectors");
    CommonOptions probe_common;
    probe_common.attach(probe_cmd);
    std::string probe_train, probe_test, probe_out = "-", probe_save, probe_language = "unknown",
                                         probe_encoder = "unknown";
    std::optional<std::size_t> probe_seeds;
    probe_cmd->add_option("--train-vectors", probe_train, "Training vectors TSV")->required()->check(CLI::ExistingFile);
    probe_cmd->add_option("--test-vectors", probe_test, "Test vectors TSV")->required()->check(CLI::ExistingFile);
    probe_cmd->add_option("--seeds", probe_seeds, "Number of probe seeds (default 5)");
    probe_cmd->add_option("--out", probe_out, "Report TSV; '-' for stdout");
    probe_cmd->add_option("--save-model", probe_save, "Also write the probe trained with the first seed");
    probe_cmd->add_option("--language", probe_language, "Language label for the report");
    probe_cmd->add_option("--encoder-name", probe_encoder, "Encoder label for the report");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Full run: corpus, encoder, vectors, probe, report, manifest");
    CommonOptions eval_common;
    eval_common.attach(eval_cmd);
    std::string eval_corpus, eval_train, eval_test, eval_encoder, eval_out, eval_language, eval_model, eval_verify,
        eval_verify_dir;
    bool eval_dump = false;
    eval_cmd->add_option("--corpus", eval_corpus, "Raw unlabeled corpus");
    eval_cmd->add_option("--train", eval_train, "Labeled training TSV");
    eval_cmd->add_option("--test", eval_test, "Labeled test TSV");
    eval_cmd->add_option("--encoder", eval_encoder, "sgns-add, fastsent, pv-dbow, pv-dm or sdae");
    eval_cmd->add_option("--encoder-model", eval_model, "Use a trained encoder instead of training one");
    eval_cmd->add_option("--out", eval_out, "Output directory");
    eval_cmd->add_option("--language", eval_language, "Language label for the report");
    eval_cmd->add_flag("--dump-config", eval_dump, "Print the effective config and exit");
    eval_cmd->add_option("--verify", eval_verify, "Re-execute the run in this manifest and compare output hashes");
    eval_cmd->add_option("--verify-dir", eval_verify_dir, "Scratch directory for --verify");

    // bilstm
    auto* bilstm_cmd = app.add_subcommand("bilstm", "Supervised bi-LSTM ceiling over SGNS-initialised embeddings");
    CommonOptions bilstm_common;
    bilstm_common.attach(bilstm_cmd);
    std::string bilstm_corpus, bilstm_train, bilstm_test, bilstm_sgns, bilstm_out, bilstm_language;
    bilstm_cmd->add_option("--corpus", bilstm_corpus, "Raw corpus for the SGNS embeddings");
    bilstm_cmd->add_option("--sgns-model", bilstm_sgns, "Use trained SGNS embeddings instead");
    bilstm_cmd->add_option("--train", bilstm_train, "Labeled training TSV");
    bilstm_cmd->add_option("--test", bilstm_test, "Labeled test TSV");
    bilstm_cmd->add_option("--out", bilstm_out, "Output directory");
    bilstm_cmd->add_option("--language", bilstm_language, "Language label for the report");

    // saliency
    auto* sal_cmd = app.add_subcommand("saliency", "Word-by-dimension saliency heatmap for one sentence");
    std::string sal_model, sal_encoder, sal_probe, sal_sentence, sal_class = "positive", sal_format = "svg",
                                                                 sal_out;
    bool sal_signed = false;
    sal_cmd->add_option("--model", sal_model, "bi-LSTM model file")->check(CLI::ExistingFile);
    sal_cmd->add_option("--encoder", sal_encoder, "SGNS model file (with --probe)")->check(CLI::ExistingFile);
    sal_cmd->add_option("--probe", sal_probe, "Probe model file (with --encoder)")->check(CLI::ExistingFile);
    sal_cmd->add_option("--sentence", sal_sentence, "Raw sentence text")->required();
    sal_cmd->add_option("--class", sal_class, "Target class")->check(CLI::IsMember({"positive", "negative"}));
    sal_cmd->add_option("--format", sal_format, "tsv or svg")->check(CLI::IsMember({"tsv", "svg"}));
    sal_cmd->add_option("--out", sal_out, "Output file")->required();
    sal_cmd->add_flag("--signed", sal_signed, "Keep the sign of the derivative (TSV only is meaningful)");

    // negstats
    auto* neg_cmd = app.add_subcommand("negstats", "Per-class percentages of sentences with 0, 1, >=2 negation markers");
    std::string neg_data, neg_lexicon, neg_out = "-";
    neg_cmd->add_option("--data", neg_data, "Labeled TSV")->required()->check(CLI::ExistingFile);
    neg_cmd->add_option("--lexicon", neg_lexicon, "Negation lexicon file")->required()->check(CLI::ExistingFile);
    neg_cmd->add_option("--out", neg_out, "Output TSV; '-' for stdout");

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "Table of mean ± std per language and encoder");
    std::vector<std::string> cmp_reports;
    std::string cmp_out = "-";
    cmp_cmd->add_option("reports", cmp_reports, "Report files")->required()->check(CLI::ExistingFile);
    cmp_cmd->add_option("--out", cmp_out, "Output TSV; '-' for stdout");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Write the generated sentiment corpus with a known answer");
    std::string synth_out;
    std::uint64_t synth_seed = 1;
    SyntheticConfig synth_cfg;
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();
    synth_cmd->add_option("--seed", synth_seed, "Generator seed");
    synth_cmd->add_option("--unlabeled", synth_cfg.unlabeled_sentences, "Unlabeled sentences");
    synth_cmd->add_option("--labeled", synth_cfg.labeled_sentences, "Labeled sentences (train + test)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*vocab_cmd) {
            const auto vocab = build_vocabulary(read_corpus_file(vocab_corpus), vocab_min_count);
            write_output(vocab_out, [&](std::ostream& os) { vocab.write_tsv(os); });
            log("vocabulary of " + std::to_string(vocab.size()) + " words");
        } else if (*train_cmd) {
            auto cfg = train_common.build("train");
            cfg.encoder = train_kind == "sgns"       ? EncoderKind::sgns_add
                          : train_kind == "fastsent" ? EncoderKind::fastsent
                          : train_kind == "sdae"     ? EncoderKind::sdae
                          : train_mode == "dm"       ? EncoderKind::pv_dm
                                                     : EncoderKind::pv_dbow;
            if (train_min_count)
                cfg.min_count = *train_min_count;
            cfg.validate();
            const auto corpus = read_corpus_file(train_corpus);
            const auto vocab = build_vocabulary(corpus, cfg.effective_min_count());
            const SentenceStream stream(corpus, vocab);
            SeededRng rng(derive_seed(cfg.seed, seed_stream::encoder));
            TrainingLog tlog;
            const auto enc = train_encoder(cfg, stream, vocab, rng, &tlog);
            save_encoder(train_out, enc);
            for (std::size_t e = 0; e < tlog.epoch_loss.size(); ++e)
                log("epoch " + std::to_string(e + 1) + " mean loss " + std::to_string(tlog.epoch_loss[e]));
            log("wrote " + train_out);
        } else if (*encode_cmd) {
            auto cfg = encode_common.build("encode");
            if (encode_steps)
                cfg.pv_infer_steps = *encode_steps;
            if (encode_lr)
                cfg.pv_infer_lr = *encode_lr;
            cfg.validate();
            const auto enc = load_encoder(encode_model);
            const auto data = load_labeled_dataset(encode_data, Split::train);
            const auto split = encode_dataset(enc, data, EncodeOptions::from(cfg));
            write_output(encode_out, [&](std::ostream& os) { write_vectors(os, split); });
            if (split.empty_warnings)
                log("warning: " + std::to_string(split.empty_warnings) +
                    " sentences had no known word and were encoded as zero vectors");
        } else if (*probe_cmd) {
            auto cfg = probe_common.build("probe");
            if (probe_seeds)
                cfg.probe_seeds = *probe_seeds;
            cfg.validate();
            auto tr_split = read_vectors_file(probe_train);
            auto te_split = read_vectors_file(probe_test);
            const TrainVectors<double> tr(std::move(tr_split.x), std::move(tr_split.y));
            const TestVectors<double> te(std::move(te_split.x), std::move(te_split.y));
            const auto seeds = derived_seeds(derive_seed(cfg.seed, seed_stream::probe), cfg.probe_seeds);
            const auto rep = repeated_eval(tr, te, cfg.probe, seeds);
            write_output(probe_out, [&](std::ostream& os) { write_report(os, probe_language, probe_encoder, rep); });
            if (!probe_save.empty()) {
                SeededRng rng(seeds.front());
                save_model(probe_save, train_probe(tr, cfg.probe, rng));
            }
            log("weighted F1 " + rep.summary());
        } else if (*eval_cmd) {
            if (!eval_verify.empty()) {
                const auto scratch = eval_verify_dir.empty()
                                         ? std::filesystem::path(eval_verify).parent_path() / "verify"
                                         : std::filesystem::path(eval_verify_dir);
                const auto v = verify_manifest(eval_verify, scratch);
                for (const auto& d : v.differences)
                    std::cout << "MISMATCH\t" << d << '\n';
                std::cout << (v.ok ? "VERIFIED" : "NOT VERIFIED") << '\n';
                return v.ok ? kExitOk : kExitInternal;
            }
            auto cfg = eval_common.build("eval");
            if (!eval_corpus.empty())
                cfg.corpus = eval_corpus;
            if (!eval_train.empty())
                cfg.train_data = eval_train;
            if (!eval_test.empty())
                cfg.test_data = eval_test;
            if (!eval_encoder.empty())
                cfg.encoder = parse_encoder_kind(eval_encoder);
            if (!eval_model.empty())
                cfg.encoder_model = eval_model;
            if (!eval_out.empty())
                cfg.output_dir = eval_out;
            if (!eval_language.empty())
                cfg.language = eval_language;
            if (eval_dump) {
                dump_config(std::cout, cfg);
                return kExitOk;
            }
            print_result(run_pipeline(cfg));
        } else if (*bilstm_cmd) {
            auto cfg = bilstm_common.build("bilstm");
            if (!bilstm_corpus.empty())
                cfg.corpus = bilstm_corpus;
            if (!bilstm_sgns.empty())
                cfg.encoder_model = bilstm_sgns;
            if (!bilstm_train.empty())
                cfg.train_data = bilstm_train;
            if (!bilstm_test.empty())
                cfg.test_data = bilstm_test;
            if (!bilstm_out.empty())
                cfg.output_dir = bilstm_out;
            if (!bilstm_language.empty())
                cfg.language = bilstm_language;
            print_result(run_bilstm_pipeline(cfg));
        } else if (*sal_cmd) {
            const auto target = *parse_polarity(sal_class);
            const auto tokens = tokenize(sal_sentence);
            SaliencyMap map;
            if (!sal_model.empty()) {
                map = word_saliency(load_bilstm(sal_model), tokens, target, !sal_signed);
            } else if (!sal_encoder.empty() && !sal_probe.empty()) {
                map = probe_saliency(load_sgns(sal_encoder), load_probe(sal_probe), tokens, target, !sal_signed);
            } else {
                throw std::invalid_argument("saliency needs --model, or both --encoder and --probe");
            }
            emit_heatmap(map, sal_out, parse_heatmap_format(sal_format));
            const auto per_token = map.per_token();
            for (std::size_t t = 0; t < tokens.size(); ++t)
                std::cout << tokens[t] << '\t' << per_token[t] << '\n';
        } else if (*neg_cmd) {
            const auto ds = load_labeled_dataset(neg_data, Split::train);
            const auto stats = negation_stats(ds, load_lexicon(neg_lexicon));
            write_output(neg_out, [&](std::ostream& os) { stats.write_tsv(os); });
        } else if (*cmp_cmd) {
            std::vector<ReportSummary> reports;
            for (const auto& p : cmp_reports)
                reports.push_back(read_report_file(p));
            const auto table = compare_table(reports);
            write_output(cmp_out, [&](std::ostream& os) { os << table; });
        } else if (*synth_cmd) {
            SeededRng rng(synth_seed);
            write_synthetic(make_synthetic(synth_cfg, rng), synth_out);
            log("wrote corpus.txt, train.tsv, test.tsv and lexicon.txt to " + synth_out);
        }
    } catch (const PipelineError& e) {
        std::cerr << "polarity-probe: error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const ParseError& e) {
        std::cerr << "polarity-probe: error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "polarity-probe: error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ModelFormatError& e) {
        std::cerr << "polarity-probe: error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "polarity-probe: internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitOk;
}
