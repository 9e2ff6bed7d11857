#pragma once

// End-to-end runs: corpus -> vocabulary -> encoder -> sentence vectors ->
// repeated probe evaluation -> report + manifest. Also the supervised
// bi-LSTM run and the comparison table over finished reports.
//
// Every run writes manifest.json next to its outputs. The manifest holds the
// full config, input hashes and output hashes, which is enough to re-execute
// the run and check the outputs byte for byte.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "polarity/config.hpp"
#include "polarity/model_io.hpp"

#ifndef POLARITY_VERSION
#define POLARITY_VERSION "0.0.0"
#endif

namespace polarity {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;

class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string stage, const std::string& what, int exit_code = kExitInput)
        : std::runtime_error("stage '" + stage + "': " + what), stage_(std::move(stage)), exit_code_(exit_code)
    {
    }

    const std::string& stage() const noexcept { return stage_; }
    int exit_code() const noexcept { return exit_code_; }

private:
    std::string stage_;
    int exit_code_;
};

// Independent random streams of one run, all derived from the base seed.
namespace seed_stream {
inline constexpr std::uint64_t encoder = 1;
inline constexpr std::uint64_t inference = 2;
inline constexpr std::uint64_t probe = 3;
inline constexpr std::uint64_t bilstm = 4;
}  // namespace seed_stream

namespace detail {

/// Runs one stage. Bad input (parse errors, invalid arguments, unreadable
/// files) maps to exit code 2, anything else to 1.
template <typename F>
auto run_stage(const std::string& stage, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const PipelineError&) {
        throw;
    } catch (const ParseError& e) {
        throw PipelineError(stage, e.what(), kExitInput);
    } catch (const std::invalid_argument& e) {
        throw PipelineError(stage, e.what(), kExitInput);
    } catch (const ModelFormatError& e) {
        throw PipelineError(stage, e.what(), kExitInput);
    } catch (const std::exception& e) {
        throw PipelineError(stage, e.what(), kExitInternal);
    }
}

inline void require_file(const std::string& stage, const std::string& path, const std::string& what)
{
    if (path.empty())
        throw PipelineError(stage, "no " + what + " path given");
    std::error_code ec;
    if (!fs::is_regular_file(path, ec))
        throw PipelineError(stage, "cannot read " + what + " '" + path + "'");
}

template <typename Write>
void write_text(const fs::path& path, Write&& write)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    write(os);
    if (!os)
        throw std::runtime_error("error while writing '" + path.string() + "'");
}

}  // namespace detail

inline std::string hash_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read '" + path.string() + "' for hashing");
    Fnv1a h;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        h.update(std::string_view(buf, static_cast<std::size_t>(in.gcount())));
    }
    return h.hex();
}

// ---------------------------------------------------------------------------
// Encoders behind one type

using AnyEncoder = std::variant<SgnsModel<double>, FastSentModel<double>, PvModel<double>, SdaeModel<double>>;

inline const Vocabulary& encoder_vocab(const AnyEncoder& e)
{
    return std::visit([](const auto& m) -> const Vocabulary& { return m.vocab; }, e);
}

inline EncoderKind encoder_kind(const AnyEncoder& e)
{
    switch (e.index()) {
    case 0: return EncoderKind::sgns_add;
    case 1: return EncoderKind::fastsent;
    case 2: return std::get<2>(e).mode() == PvMode::dm ? EncoderKind::pv_dm : EncoderKind::pv_dbow;
    default: return EncoderKind::sdae;
    }
}

inline AnyEncoder train_encoder(const RunConfig& cfg, const SentenceStream& stream, const Vocabulary& vocab,
                                SeededRng& rng, TrainingLog* log = nullptr)
{
    switch (cfg.encoder) {
    case EncoderKind::sgns_add: return train_sgns<double>(stream, vocab, cfg.sgns, rng, log);
    case EncoderKind::fastsent: return train_fastsent<double>(stream, vocab, cfg.fastsent, rng, log);
    case EncoderKind::pv_dbow:
    case EncoderKind::pv_dm: return train_pv<double>(stream, vocab, cfg.effective_pv(), rng, log);
    case EncoderKind::sdae: return train_sdae<double>(stream, vocab, cfg.sdae, rng, log);
    }
    throw std::logic_error("train_encoder: unhandled encoder kind");
}

inline void save_encoder(const std::string& path, const AnyEncoder& e)
{
    std::visit([&](const auto& m) { save_model(path, m); }, e);
}

inline AnyEncoder load_encoder(const std::string& path)
{
    const auto kind = peek_model_kind(path);
    if (kind == "sgns")
        return load_sgns(path);
    if (kind == "fastsent")
        return load_fastsent(path);
    if (kind == "pv")
        return load_pv(path);
    if (kind == "sdae")
        return load_sdae(path);
    throw ModelFormatError("model file '" + path + "' holds a " + kind + " model, which is not a sentence encoder");
}

struct EncodeOptions {
    std::uint64_t seed = 0;  // paragraph-vector inference only
    std::size_t pv_steps = 50;
    double pv_lr = 0.01;

    static EncodeOptions from(const RunConfig& cfg)
    {
        return {derive_seed(cfg.seed, seed_stream::inference), cfg.pv_infer_steps, cfg.pv_infer_lr};
    }
};

/// Sentence vector under any encoder. Paragraph-vector inference draws from
/// a stream keyed by the sentence text, so a sentence always gets the same
/// vector wherever it appears. DBOW keys on the sorted words, which keeps its
/// vectors independent of word order.
inline Encoding<double> encode_sentence(const AnyEncoder& e, const Tokens& tokens, const EncodeOptions& opt)
{
    switch (e.index()) {
    case 0: return encode_additive(std::get<0>(e), tokens);
    case 1: return encode_fastsent(std::get<1>(e), tokens);
    case 2: {
        Tokens key = tokens;
        if (std::get<2>(e).mode() == PvMode::dbow)
            std::sort(key.begin(), key.end());
        Fnv1a h;
        h.update(join(key));
        SeededRng rng(derive_seed(opt.seed, h.digest()));
        return infer_vector(std::get<2>(e), tokens, static_cast<int>(opt.pv_steps), opt.pv_lr, rng);
    }
    default: return encode_sdae(std::get<3>(e), tokens);
    }
}

struct EncodedSplit {
    Matrix<double> x;
    std::vector<Polarity> y;
    std::size_t empty_warnings = 0;  // sentences with no in-vocabulary word
};

inline EncodedSplit encode_dataset(const AnyEncoder& e, const LabeledDataset& ds, const EncodeOptions& opt)
{
    if (ds.examples.empty())
        throw std::invalid_argument("encode_dataset: empty dataset");
    EncodedSplit out;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto enc = encode_sentence(e, ds.examples[i].tokens, opt);
        if (i == 0)
            out.x = Matrix<double>(ds.size(), enc.vector.size());
        std::copy(enc.vector.begin(), enc.vector.end(), out.x.row(i).begin());
        out.y.push_back(ds.examples[i].label);
        if (enc.empty_warning())
            ++out.empty_warnings;
    }
    return out;
}

/// One sentence per line: label, then the vector, tab separated.
inline void write_vectors(std::ostream& os, const EncodedSplit& s)
{
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < s.y.size(); ++i) {
        os << to_string(s.y[i]);
        for (double v : s.x.row(i))
            os << '\t' << v;
        os << '\n';
    }
}

inline EncodedSplit read_vectors(std::istream& in, const std::string& source = "<vectors>")
{
    EncodedSplit s;
    std::vector<double> values;
    std::size_t width = 0, lineno = 0;
    std::string line, cell;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty())
            continue;
        std::istringstream row(line);
        std::getline(row, cell, '\t');
        const auto label = parse_polarity(cell);
        if (!label)
            throw ParseError(source, lineno, "unknown label '" + cell + "'");
        std::size_t n = 0;
        while (std::getline(row, cell, '\t')) {
            double v = 0;
            detail::parse_value(cell, v);
            values.push_back(v);
            ++n;
        }
        if (s.y.empty())
            width = n;
        if (n != width || n == 0)
            throw ParseError(source, lineno, "expected " + std::to_string(width) + " values");
        s.y.push_back(*label);
    }
    if (s.y.empty())
        throw ParseError(source, lineno, "no vectors");
    s.x = Matrix<double>(s.y.size(), width);
    std::copy(values.begin(), values.end(), s.x.flat().begin());
    return s;
}

inline EncodedSplit read_vectors_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open vectors file '" + path + "'");
    return read_vectors(in, path);
}

// ---------------------------------------------------------------------------
// Reports

inline void write_report(std::ostream& os, const std::string& language, const std::string& encoder,
                         const EvalReport& rep)
{
    os << "# language\t" << language << '\n' << "# encoder\t" << encoder << '\n';
    rep.write_tsv(os);
}

struct ReportSummary {
    std::string language;
    std::string encoder;
    std::vector<double> scores;
    double mean = 0;
    double std = 0;
};

inline ReportSummary read_report(std::istream& in, const std::string& source = "<report>")
{
    ReportSummary r;
    bool have_mean = false, have_std = false, in_seeds = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto tab = line.find('\t');
        const std::string key = line.substr(0, tab);
        const std::string value = tab == std::string::npos ? "" : line.substr(tab + 1);
        try {
            if (key == "# language") {
                r.language = value;
            } else if (key == "# encoder") {
                r.encoder = value;
            } else if (key == "seed") {
                in_seeds = true;
            } else if (key == "mean") {
                detail::parse_value(value, r.mean);
                have_mean = true;
                in_seeds = false;
            } else if (key == "std") {
                detail::parse_value(value, r.std);
                have_std = true;
            } else if (in_seeds) {
                double v = 0;
                detail::parse_value(value, v);
                r.scores.push_back(v);
            }
        } catch (const std::invalid_argument& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
    if (r.language.empty() || r.encoder.empty() || !have_mean || !have_std)
        throw ParseError(source, lineno, "not a report file (needs language, encoder, mean and std)");
    return r;
}

inline ReportSummary read_report_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open report '" + path + "'");
    return read_report(in, path);
}

/// Rows are languages, columns encoders (known encoders first, in a fixed
/// order, then the supervised ceiling, then anything else by name). The last
/// column names the encoder with the highest mean in that row.
inline std::string compare_table(const std::vector<ReportSummary>& reports)
{
    if (reports.empty())
        throw std::invalid_argument("compare_table: no reports");
    std::vector<std::string> columns;
    for (auto k : all_encoder_kinds)
        columns.emplace_back(to_string(k));
    columns.emplace_back("bilstm");
    std::vector<std::string> extra;
    std::map<std::string, std::map<std::string, const ReportSummary*>> cells;
    for (const auto& r : reports) {
        auto& row = cells[r.language];
        if (!row.emplace(r.encoder, &r).second)
            throw std::invalid_argument("compare_table: duplicate report for language '" + r.language +
                                        "' and encoder '" + r.encoder + "'");
        if (std::find(columns.begin(), columns.end(), r.encoder) == columns.end() &&
            std::find(extra.begin(), extra.end(), r.encoder) == extra.end())
            extra.push_back(r.encoder);
    }
    std::sort(extra.begin(), extra.end());
    columns.insert(columns.end(), extra.begin(), extra.end());
    std::erase_if(columns, [&](const std::string& c) {
        return std::none_of(reports.begin(), reports.end(), [&](const auto& r) { return r.encoder == c; });
    });

    std::ostringstream os;
    os << "language";
    for (const auto& c : columns)
        os << '\t' << c;
    os << "\tbest\n";
    for (const auto& [language, row] : cells) {
        os << language;
        const ReportSummary* best = nullptr;
        for (const auto& c : columns) {
            const auto it = row.find(c);
            if (it == row.end()) {
                os << "\t-";
                continue;
            }
            os << '\t' << format_score(it->second->mean, it->second->std);
            if (!best || it->second->mean > best->mean)
                best = it->second;
        }
        os << '\t' << best->encoder << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Manifest

struct RunManifest {
    std::string version = POLARITY_VERSION;
    RunConfig config;
    std::map<std::string, std::pair<std::string, std::string>> inputs;  // role -> (path, hash)
    std::map<std::string, std::string> outputs;                         // file name -> hash
    double wall_clock_seconds = 0;

    Json to_json() const
    {
        Json in = Json::object();
        for (const auto& [role, ph] : inputs)
            in[role] = {{"path", ph.first}, {"fnv1a", ph.second}};
        return {{"toolkit", "polarity-probe"},
                {"version", version},
                {"subcommand", config.subcommand},
                {"seed", config.seed},
                {"deterministic", config.deterministic},
                {"config", dump_config(config)},
                {"inputs", in},
                {"outputs", outputs},
                {"wall_clock_seconds", wall_clock_seconds}};
    }

    static RunManifest from_json(const Json& j)
    {
        RunManifest m;
        m.version = j.at("version").get<std::string>();
        std::istringstream cfg(j.at("config").get<std::string>());
        load_config(cfg, m.config, "manifest config");
        for (const auto& [role, v] : j.at("inputs").items())
            m.inputs[role] = {v.at("path").get<std::string>(), v.at("fnv1a").get<std::string>()};
        m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
        m.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
        return m;
    }
};

inline RunManifest read_manifest(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open manifest '" + path + "'");
    try {
        return RunManifest::from_json(Json::parse(in));
    } catch (const Json::exception& e) {
        throw ParseError(path, 0, std::string("bad manifest: ") + e.what());
    }
}

struct PipelineResult {
    EvalReport report;
    RunManifest manifest;
    fs::path output_dir;
};

namespace detail {

inline constexpr const char* kStaleMarker = "STALE";

/// Runs `body` inside the output directory. A STALE marker stays in the
/// directory until the run completes, and records the failing stage if the
/// run aborts, so partial outputs are never mistaken for results.
template <typename Body>
PipelineResult guarded_run(const RunConfig& cfg, Body&& body)
{
    const auto start = std::chrono::steady_clock::now();
    run_stage("config", [&] { cfg.validate(); });
    const fs::path dir = cfg.output_dir;
    run_stage("config", [&] {
        fs::create_directories(dir);
        write_text(dir / kStaleMarker, [](std::ostream& os) { os << "run in progress\n"; });
    });
    PipelineResult res;
    res.output_dir = dir;
    res.manifest.config = cfg;
    try {
        body(res);
        for (auto& [name, hash] : res.manifest.outputs)
            hash = hash_file(dir / name);
        res.manifest.wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        run_stage("report", [&] {
            write_text(dir / "manifest.json", [&](std::ostream& os) { os << res.manifest.to_json().dump(2) << '\n'; });
        });
    } catch (const PipelineError& e) {
        std::ofstream os(dir / kStaleMarker, std::ios::binary);
        os << "failed: " << e.what() << '\n';
        throw;
    }
    fs::remove(dir / kStaleMarker);
    return res;
}

inline void record_input(RunManifest& m, const std::string& role, const std::string& path)
{
    m.inputs[role] = {path, hash_file(path)};
}

struct CorpusStage {
    Vocabulary vocab;
    SentenceStream stream;
};

inline CorpusStage corpus_stage(const RunConfig& cfg, std::uint64_t min_count, PipelineResult& res)
{
    require_file("corpus", cfg.corpus, "corpus");
    CorpusStage out;
    const auto corpus = run_stage("corpus", [&] {
        record_input(res.manifest, "corpus", cfg.corpus);
        return read_corpus_file(cfg.corpus);
    });
    run_stage("vocab", [&] {
        out.vocab = build_vocabulary(corpus, min_count);
        out.stream = SentenceStream(corpus, out.vocab);
        write_text(res.output_dir / "vocab.tsv", [&](std::ostream& os) { out.vocab.write_tsv(os); });
        res.manifest.outputs["vocab.tsv"];
    });
    return out;
}

inline std::pair<LabeledDataset, LabeledDataset> dataset_stage(const RunConfig& cfg, PipelineResult& res)
{
    require_file("dataset", cfg.train_data, "training data");
    require_file("dataset", cfg.test_data, "test data");
    return run_stage("dataset", [&] {
        record_input(res.manifest, "train", cfg.train_data);
        record_input(res.manifest, "test", cfg.test_data);
        auto train = load_labeled_dataset(cfg.train_data, Split::train);
        auto test = load_labeled_dataset(cfg.test_data, Split::test);
        if (train.examples.empty() || test.examples.empty())
            throw std::invalid_argument("labeled data has no usable rows");
        return std::pair{std::move(train), std::move(test)};
    });
}

inline void report_stage(const RunConfig& cfg, const std::string& encoder_name, PipelineResult& res)
{
    run_stage("report", [&] {
        write_text(res.output_dir / "report.tsv",
                   [&](std::ostream& os) { write_report(os, cfg.language, encoder_name, res.report); });
        res.manifest.outputs["report.tsv"];
    });
}

}  // namespace detail

/// Unsupervised encoder + probe. Writes vocab.tsv (when training),
/// encoder.model, report.tsv and manifest.json into cfg.output_dir.
inline PipelineResult run_pipeline(const RunConfig& cfg)
{
    return detail::guarded_run(cfg, [&](PipelineResult& res) {
        AnyEncoder enc;
        if (!cfg.encoder_model.empty()) {
            detail::require_file("train", cfg.encoder_model, "encoder model");
            enc = detail::run_stage("train", [&] {
                detail::record_input(res.manifest, "encoder_model", cfg.encoder_model);
                auto e = load_encoder(cfg.encoder_model);
                if (encoder_kind(e) != cfg.encoder)
                    throw std::invalid_argument("encoder model holds " + std::string(to_string(encoder_kind(e))) +
                                                ", config asks for " + std::string(to_string(cfg.encoder)));
                return e;
            });
        } else {
            const auto corpus = detail::corpus_stage(cfg, cfg.effective_min_count(), res);
            enc = detail::run_stage("train", [&] {
                SeededRng rng(derive_seed(cfg.seed, seed_stream::encoder));
                auto e = train_encoder(cfg, corpus.stream, corpus.vocab, rng);
                save_encoder((res.output_dir / "encoder.model").string(), e);
                res.manifest.outputs["encoder.model"];
                return e;
            });
        }
        const auto [train, test] = detail::dataset_stage(cfg, res);
        auto [xtrain, xtest] = detail::run_stage("encode", [&] {
            const auto opt = EncodeOptions::from(cfg);
            return std::pair{encode_dataset(enc, train, opt), encode_dataset(enc, test, opt)};
        });
        res.report = detail::run_stage("probe", [&] {
            const TrainVectors<double> tr(std::move(xtrain.x), std::move(xtrain.y));
            const TestVectors<double> te(std::move(xtest.x), std::move(xtest.y));
            return repeated_eval(tr, te, cfg.probe, derived_seeds(derive_seed(cfg.seed, seed_stream::probe),
                                                                  cfg.probe_seeds));
        });
        detail::report_stage(cfg, std::string(to_string(cfg.encoder)), res);
    });
}

/// Supervised ceiling: SGNS embeddings from the corpus, then one bi-LSTM per
/// seed. Writes vocab.tsv, sgns.model, bilstm.model (first seed),
/// report.tsv and manifest.json.
inline PipelineResult run_bilstm_pipeline(const RunConfig& cfg)
{
    return detail::guarded_run(cfg, [&](PipelineResult& res) {
        SgnsModel<double> sgns;
        if (!cfg.encoder_model.empty()) {
            detail::require_file("train", cfg.encoder_model, "SGNS model");
            sgns = detail::run_stage("train", [&] {
                detail::record_input(res.manifest, "encoder_model", cfg.encoder_model);
                return load_sgns(cfg.encoder_model);
            });
        } else {
            const auto corpus = detail::corpus_stage(cfg, cfg.min_count ? cfg.min_count : 5, res);
            sgns = detail::run_stage("train", [&] {
                SeededRng rng(derive_seed(cfg.seed, seed_stream::encoder));
                auto m = train_sgns<double>(corpus.stream, corpus.vocab, cfg.sgns, rng);
                save_model((res.output_dir / "sgns.model").string(), m);
                res.manifest.outputs["sgns.model"];
                return m;
            });
        }
        const auto [train, test] = detail::dataset_stage(cfg, res);
        res.report = detail::run_stage("bilstm", [&] {
            EvalReport rep;
            rep.seeds = derived_seeds(derive_seed(cfg.seed, seed_stream::bilstm), cfg.probe_seeds);
            std::vector<Polarity> preds, golds;
            for (std::size_t i = 0; i < rep.seeds.size(); ++i) {
                SeededRng rng(rep.seeds[i]);
                const auto model = train_bilstm(train, sgns, cfg.bilstm, rng);
                if (i == 0) {
                    save_model((res.output_dir / "bilstm.model").string(), model);
                    res.manifest.outputs["bilstm.model"];
                }
                std::vector<Polarity> p, g;
                for (const auto& ex : test.examples) {
                    p.push_back(bilstm_predict(model, ex.tokens).label);
                    g.push_back(ex.label);
                }
                rep.scores.push_back(weighted_f1(p, g));
                preds.insert(preds.end(), p.begin(), p.end());
                golds.insert(golds.end(), g.begin(), g.end());
            }
            const auto ms = mean_and_sample_std(rep.scores);
            rep.mean = ms.mean;
            rep.std = ms.std;
            rep.pooled = classification_report(preds, golds);
            return rep;
        });
        detail::report_stage(cfg, "bilstm", res);
    });
}

/// Dispatches on the config's subcommand ("eval" or "bilstm").
inline PipelineResult run_configured(const RunConfig& cfg)
{
    if (cfg.subcommand == "bilstm")
        return run_bilstm_pipeline(cfg);
    if (cfg.subcommand == "eval")
        return run_pipeline(cfg);
    throw PipelineError("config", "subcommand '" + cfg.subcommand + "' cannot be replayed from a manifest");
}

struct VerifyResult {
    bool ok = true;
    std::vector<std::string> differences;
};

/// Re-executes the run recorded in `manifest_path` into `scratch_dir` and
/// compares every output hash. Changed inputs are reported as differences
/// without re-running.
inline VerifyResult verify_manifest(const std::string& manifest_path, const fs::path& scratch_dir)
{
    const auto m = detail::run_stage("verify", [&] { return read_manifest(manifest_path); });
    VerifyResult v;
    for (const auto& [role, ph] : m.inputs) {
        std::error_code ec;
        if (!fs::is_regular_file(ph.first, ec))
            v.differences.push_back("input " + role + " '" + ph.first + "' is missing");
        else if (hash_file(ph.first) != ph.second)
            v.differences.push_back("input " + role + " '" + ph.first + "' has changed");
    }
    if (!v.differences.empty()) {
        v.ok = false;
        return v;
    }
    auto cfg = m.config;
    cfg.output_dir = scratch_dir.string();
    const auto rerun = run_configured(cfg);
    for (const auto& [name, hash] : m.outputs) {
        const auto it = rerun.manifest.outputs.find(name);
        if (it == rerun.manifest.outputs.end())
            v.differences.push_back("output " + name + " was not produced");
        else if (it->second != hash)
            v.differences.push_back("output " + name + " differs (" + hash + " vs " + it->second + ")");
    }
    v.ok = v.differences.empty();
    return v;
}

}  // namespace polarity
