#pragma once

// Run configuration: every knob of a pipeline run in one flat struct, with a
// line-oriented `key = value` file format. Lines starting with '#' and blank
// lines are ignored. Dumping a config and loading it back gives an identical
// effective config.

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "polarity/bilstm.hpp"
#include "polarity/corpus.hpp"
#include "polarity/fastsent.hpp"
#include "polarity/probe.hpp"
#include "polarity/pvec.hpp"
#include "polarity/sdae.hpp"
#include "polarity/sgns.hpp"

namespace polarity {

enum class EncoderKind { sgns_add, fastsent, pv_dbow, pv_dm, sdae };

inline constexpr std::array<EncoderKind, 5> all_encoder_kinds{EncoderKind::sgns_add, EncoderKind::fastsent,
                                                               EncoderKind::sdae, EncoderKind::pv_dbow,
                                                               EncoderKind::pv_dm};

inline std::string_view to_string(EncoderKind k)
{
    switch (k) {
    case EncoderKind::sgns_add: return "sgns-add";
    case EncoderKind::fastsent: return "fastsent";
    case EncoderKind::pv_dbow: return "pv-dbow";
    case EncoderKind::pv_dm: return "pv-dm";
    case EncoderKind::sdae: return "sdae";
    }
    return "?";
}

inline EncoderKind parse_encoder_kind(std::string_view s)
{
    for (auto k : all_encoder_kinds)
        if (to_string(k) == s)
            return k;
    throw std::invalid_argument("unknown encoder '" + std::string(s) +
                                "' (expected sgns-add, fastsent, pv-dbow, pv-dm or sdae)");
}

struct RunConfig {
    std::string subcommand = "eval";
    std::string language = "synthetic";
    EncoderKind encoder = EncoderKind::sgns_add;
    std::string corpus;
    std::string train_data;
    std::string test_data;
    std::string lexicon;
    std::string output_dir = "run";
    std::string encoder_model;  // reuse a trained encoder instead of training one

    std::uint64_t seed = 1;
    std::size_t probe_seeds = 5;
    std::size_t threads = 1;
    bool deterministic = true;
    std::uint64_t min_count = 0;  // 0: 3 for FastSent, 5 otherwise

    SgnsConfig sgns;
    FastSentConfig fastsent;
    PvConfig pv;
    std::size_t pv_infer_steps = 50;
    double pv_infer_lr = 0.01;
    SdaeConfig sdae;
    ProbeConfig probe;
    BiLstmConfig bilstm;

    std::uint64_t effective_min_count() const
    {
        if (min_count)
            return min_count;
        return encoder == EncoderKind::fastsent ? 3 : 5;
    }

    std::size_t effective_threads() const { return deterministic ? 1 : threads; }

    PvConfig effective_pv() const
    {
        auto c = pv;
        c.mode = encoder == EncoderKind::pv_dm ? PvMode::dm : PvMode::dbow;
        return c;
    }

    /// Width of the sentence vectors the configured encoder produces.
    std::size_t sentence_width() const
    {
        switch (encoder) {
        case EncoderKind::sgns_add: return sgns.dim;
        case EncoderKind::fastsent: return fastsent.dim;
        case EncoderKind::pv_dbow:
        case EncoderKind::pv_dm: return pv.dim;
        case EncoderKind::sdae: return sdae.hidden;
        }
        return 0;
    }

    void validate() const
    {
        sgns.validate();
        effective_pv().validate();
        sdae.validate();
        probe.validate();
        bilstm.validate();
        if (fastsent.dim == 0 || !(fastsent.lr > 0))
            throw std::invalid_argument("fastsent: dim must be >= 1 and lr positive");
        if (probe_seeds < 2)
            throw std::invalid_argument("probe_seeds must be >= 2");
        if (pv_infer_steps == 0 || !(pv_infer_lr >= 0))
            throw std::invalid_argument("pv.infer_steps must be >= 1 and pv.infer_lr non-negative");
        if (threads == 0)
            throw std::invalid_argument("threads must be >= 1");
    }

    template <typename F>
    void visit(F&& f)
    {
        visit_impl(*this, f);
    }
    template <typename F>
    void visit(F&& f) const
    {
        visit_impl(*this, f);
    }

private:
    template <typename Self, typename F>
    static void visit_impl(Self& c, F& f)
    {
        f("subcommand", c.subcommand);
        f("language", c.language);
        f("encoder", c.encoder);
        f("corpus", c.corpus);
        f("train", c.train_data);
        f("test", c.test_data);
        f("lexicon", c.lexicon);
        f("output_dir", c.output_dir);
        f("encoder_model", c.encoder_model);
        f("seed", c.seed);
        f("probe_seeds", c.probe_seeds);
        f("threads", c.threads);
        f("deterministic", c.deterministic);
        f("min_count", c.min_count);

        f("sgns.dim", c.sgns.dim);
        f("sgns.window", c.sgns.window);
        f("sgns.negatives", c.sgns.negatives);
        f("sgns.epochs", c.sgns.epochs);
        f("sgns.lr", c.sgns.lr);
        f("sgns.lr_decay", c.sgns.lr_decay);
        f("sgns.threshold", c.sgns.threshold);
        f("sgns.noise_power", c.sgns.noise_power);

        f("fastsent.dim", c.fastsent.dim);
        f("fastsent.epochs", c.fastsent.epochs);
        f("fastsent.lr", c.fastsent.lr);
        f("fastsent.objective", c.fastsent.objective);
        f("fastsent.negatives", c.fastsent.negatives);
        f("fastsent.noise_power", c.fastsent.noise_power);

        f("pv.dim", c.pv.dim);
        f("pv.window", c.pv.window);
        f("pv.epochs", c.pv.epochs);
        f("pv.lr", c.pv.lr);
        f("pv.threshold", c.pv.threshold);
        f("pv.objective", c.pv.objective);
        f("pv.negatives", c.pv.negatives);
        f("pv.noise_power", c.pv.noise_power);
        f("pv.infer_steps", c.pv_infer_steps);
        f("pv.infer_lr", c.pv_infer_lr);

        f("sdae.embed", c.sdae.embed);
        f("sdae.hidden", c.sdae.hidden);
        f("sdae.epochs", c.sdae.epochs);
        f("sdae.lr", c.sdae.lr);
        f("sdae.clip", c.sdae.clip);
        f("sdae.p_delete", c.sdae.corruption.p_delete);
        f("sdae.p_swap", c.sdae.corruption.p_swap);

        f("probe.hidden", c.probe.hidden);
        f("probe.lr", c.probe.lr);
        f("probe.batch", c.probe.batch);
        f("probe.epochs", c.probe.epochs);
        f("probe.lambda", c.probe.lambda);
        f("probe.validation_fraction", c.probe.validation_fraction);
        f("probe.patience", c.probe.patience);

        f("bilstm.hidden", c.bilstm.hidden);
        f("bilstm.lr", c.bilstm.lr);
        f("bilstm.batch", c.bilstm.batch);
        f("bilstm.epochs", c.bilstm.epochs);
        f("bilstm.dropout", c.bilstm.dropout);
    }
};

namespace detail {

inline std::string format_value(const std::string& v) { return v; }
inline std::string format_value(bool v) { return v ? "true" : "false"; }
inline std::string format_value(EncoderKind v) { return std::string(to_string(v)); }
inline std::string format_value(OutputObjective v) { return v == OutputObjective::softmax ? "softmax" : "ns"; }
inline std::string format_value(std::uint64_t v) { return std::to_string(v); }

/// Shortest text that reads back to the same double.
inline std::string format_value(double v)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline void parse_value(std::string_view s, std::string& out) { out = std::string(s); }

inline void parse_value(std::string_view s, bool& out)
{
    if (s == "true" || s == "1" || s == "yes")
        out = true;
    else if (s == "false" || s == "0" || s == "no")
        out = false;
    else
        throw std::invalid_argument("expected true or false, got '" + std::string(s) + "'");
}

inline void parse_value(std::string_view s, EncoderKind& out) { out = parse_encoder_kind(s); }

inline void parse_value(std::string_view s, OutputObjective& out)
{
    if (s == "softmax")
        out = OutputObjective::softmax;
    else if (s == "ns" || s == "negative_sampling")
        out = OutputObjective::negative_sampling;
    else
        throw std::invalid_argument("expected softmax or ns, got '" + std::string(s) + "'");
}

inline void parse_value(std::string_view s, std::uint64_t& out)
{
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw std::invalid_argument("expected a non-negative integer, got '" + std::string(s) + "'");
}

inline void parse_value(std::string_view s, double& out)
{
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw std::invalid_argument("expected a number, got '" + std::string(s) + "'");
}

}  // namespace detail

/// Sets one key; throws std::invalid_argument for unknown keys or bad values.
inline void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value)
{
    bool found = false;
    cfg.visit([&](std::string_view k, auto& field) {
        if (k != key)
            return;
        found = true;
        try {
            detail::parse_value(value, field);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config key '" + std::string(key) + "': " + e.what());
        }
    });
    if (!found)
        throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
}

inline std::string get_config_value(const RunConfig& cfg, std::string_view key)
{
    std::optional<std::string> out;
    cfg.visit([&](std::string_view k, const auto& field) {
        if (k == key)
            out = detail::format_value(field);
    });
    if (!out)
        throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
    return *out;
}

inline void dump_config(std::ostream& os, const RunConfig& cfg)
{
    cfg.visit([&](std::string_view k, const auto& field) { os << k << " = " << detail::format_value(field) << '\n'; });
}

inline std::string dump_config(const RunConfig& cfg)
{
    std::ostringstream os;
    dump_config(os, cfg);
    return os.str();
}

/// Applies the lines of `in` on top of `cfg`. Returns the keys that were set.
inline std::vector<std::string> load_config(std::istream& in, RunConfig& cfg, const std::string& source = "<config>")
{
    std::vector<std::string> keys;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(source, lineno, "expected key = value");
        const auto key = detail::trim(t.substr(0, eq));
        try {
            set_config_value(cfg, key, detail::trim(t.substr(eq + 1)));
        } catch (const std::invalid_argument& e) {
            throw ParseError(source, lineno, e.what());
        }
        keys.emplace_back(key);
    }
    return keys;
}

inline std::vector<std::string> load_config_file(const std::string& path, RunConfig& cfg)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file '" + path + "'");
    return load_config(in, cfg, path);
}

inline bool operator==(const RunConfig& a, const RunConfig& b) { return dump_config(a) == dump_config(b); }

}  // namespace polarity
