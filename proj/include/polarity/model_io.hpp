#pragma once

// Model files.
//
//   "POLARITY-MODEL 1\n"
//   header length   uint64, little endian
//   header          one line of JSON: kind, config, vocabulary, tensor list
//   tensors         write_matrix records, in header order
//
// Loading checks the vocabulary fingerprint and every tensor shape against
// the header, so a truncated or mismatched file fails loudly.

#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "polarity/bilstm.hpp"
#include "polarity/corpus.hpp"
#include "polarity/fastsent.hpp"
#include "polarity/numerics.hpp"
#include "polarity/probe.hpp"
#include "polarity/pvec.hpp"
#include "polarity/sdae.hpp"
#include "polarity/sgns.hpp"

namespace polarity {

using Json = nlohmann::json;

inline constexpr std::string_view kModelMagic = "POLARITY-MODEL 1\n";

class ModelFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Configs as JSON

inline OutputObjective parse_objective(std::string_view s)
{
    if (s == "softmax")
        return OutputObjective::softmax;
    if (s == "negative_sampling" || s == "ns")
        return OutputObjective::negative_sampling;
    throw std::invalid_argument("unknown output objective '" + std::string(s) + "' (expected softmax or ns)");
}

inline Json to_json(const SgnsConfig& c)
{
    return {{"dim", c.dim},     {"window", c.window},         {"negatives", c.negatives},
            {"epochs", c.epochs}, {"lr", c.lr},               {"lr_decay", c.lr_decay},
            {"threshold", c.threshold}, {"noise_power", c.noise_power}};
}

inline Json to_json(const FastSentConfig& c)
{
    return {{"dim", c.dim},
            {"epochs", c.epochs},
            {"lr", c.lr},
            {"objective", std::string(to_string(c.objective))},
            {"negatives", c.negatives},
            {"noise_power", c.noise_power}};
}

inline Json to_json(const PvConfig& c)
{
    return {{"mode", std::string(to_string(c.mode))},
            {"dim", c.dim},
            {"window", c.window},
            {"epochs", c.epochs},
            {"lr", c.lr},
            {"threshold", c.threshold},
            {"objective", std::string(to_string(c.objective))},
            {"negatives", c.negatives},
            {"noise_power", c.noise_power}};
}

inline Json to_json(const SdaeConfig& c)
{
    return {{"embed", c.embed},
            {"hidden", c.hidden},
            {"epochs", c.epochs},
            {"lr", c.lr},
            {"clip", c.clip},
            {"p_delete", c.corruption.p_delete},
            {"p_swap", c.corruption.p_swap}};
}

inline Json to_json(const BiLstmConfig& c)
{
    return {{"hidden", c.hidden}, {"lr", c.lr}, {"batch", c.batch}, {"epochs", c.epochs}, {"dropout", c.dropout}};
}

inline Json to_json(const ProbeConfig& c)
{
    return {{"hidden", c.hidden}, {"lr", c.lr},         {"batch", c.batch},
            {"epochs", c.epochs}, {"lambda", c.lambda}, {"validation_fraction", c.validation_fraction},
            {"patience", c.patience}};
}

inline void from_json(const Json& j, SgnsConfig& c)
{
    j.at("dim").get_to(c.dim);
    j.at("window").get_to(c.window);
    j.at("negatives").get_to(c.negatives);
    j.at("epochs").get_to(c.epochs);
    j.at("lr").get_to(c.lr);
    j.at("lr_decay").get_to(c.lr_decay);
    j.at("threshold").get_to(c.threshold);
    j.at("noise_power").get_to(c.noise_power);
}

inline void from_json(const Json& j, FastSentConfig& c)
{
    j.at("dim").get_to(c.dim);
    j.at("epochs").get_to(c.epochs);
    j.at("lr").get_to(c.lr);
    c.objective = parse_objective(j.at("objective").get<std::string>());
    j.at("negatives").get_to(c.negatives);
    j.at("noise_power").get_to(c.noise_power);
}

inline void from_json(const Json& j, PvConfig& c)
{
    c.mode = parse_pv_mode(j.at("mode").get<std::string>());
    j.at("dim").get_to(c.dim);
    j.at("window").get_to(c.window);
    j.at("epochs").get_to(c.epochs);
    j.at("lr").get_to(c.lr);
    j.at("threshold").get_to(c.threshold);
    c.objective = parse_objective(j.at("objective").get<std::string>());
    j.at("negatives").get_to(c.negatives);
    j.at("noise_power").get_to(c.noise_power);
}

inline void from_json(const Json& j, SdaeConfig& c)
{
    j.at("embed").get_to(c.embed);
    j.at("hidden").get_to(c.hidden);
    j.at("epochs").get_to(c.epochs);
    j.at("lr").get_to(c.lr);
    j.at("clip").get_to(c.clip);
    j.at("p_delete").get_to(c.corruption.p_delete);
    j.at("p_swap").get_to(c.corruption.p_swap);
}

inline void from_json(const Json& j, BiLstmConfig& c)
{
    j.at("hidden").get_to(c.hidden);
    j.at("lr").get_to(c.lr);
    j.at("batch").get_to(c.batch);
    j.at("epochs").get_to(c.epochs);
    j.at("dropout").get_to(c.dropout);
}

inline void from_json(const Json& j, ProbeConfig& c)
{
    j.at("hidden").get_to(c.hidden);
    j.at("lr").get_to(c.lr);
    j.at("batch").get_to(c.batch);
    j.at("epochs").get_to(c.epochs);
    j.at("lambda").get_to(c.lambda);
    j.at("validation_fraction").get_to(c.validation_fraction);
    j.at("patience").get_to(c.patience);
}

inline Json to_json(const Vocabulary& v)
{
    Json words = Json::array();
    for (const auto& e : v.entries())
        words.push_back({e.word, e.count});
    return {{"min_count", v.min_count()}, {"fingerprint", v.fingerprint()}, {"words", std::move(words)}};
}

inline Vocabulary vocabulary_from_json(const Json& j)
{
    std::vector<Vocabulary::Entry> entries;
    for (const auto& w : j.at("words"))
        entries.push_back({w.at(0).get<std::string>(), w.at(1).get<std::uint64_t>()});
    Vocabulary v(std::move(entries), j.at("min_count").get<std::uint64_t>());
    if (v.fingerprint() != j.at("fingerprint").get<std::string>())
        throw ModelFormatError("model file: vocabulary fingerprint mismatch");
    return v;
}

// ---------------------------------------------------------------------------
// Container

template <typename Real>
struct NamedTensor {
    std::string name;
    const Matrix<Real>* value;
};

template <typename Real>
void write_model(std::ostream& os, std::string_view kind, const Json& config, const Vocabulary* vocab,
                 const std::vector<NamedTensor<Real>>& tensors)
{
    Json header{{"kind", kind}, {"config", config}, {"dtype", sizeof(Real) == 4 ? "f32" : "f64"}};
    if (vocab)
        header["vocab"] = to_json(*vocab);
    Json list = Json::array();
    for (const auto& t : tensors)
        list.push_back({{"name", t.name}, {"rows", t.value->rows()}, {"cols", t.value->cols()}});
    header["tensors"] = std::move(list);
    const auto text = header.dump() + "\n";
    os.write(kModelMagic.data(), static_cast<std::streamsize>(kModelMagic.size()));
    detail::write_le(os, text.size(), 8);
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : tensors)
        write_matrix(os, *t.value);
}

template <typename Real = double>
struct LoadedModel {
    Json header;
    std::vector<std::pair<std::string, Matrix<Real>>> tensors;

    std::string kind() const { return header.at("kind").get<std::string>(); }

    Matrix<Real> take(std::string_view name)
    {
        for (auto& [n, m] : tensors)
            if (n == name)
                return std::move(m);
        throw ModelFormatError("model file: missing tensor '" + std::string(name) + "'");
    }
};

inline Json read_model_header(std::istream& is)
{
    std::string magic(kModelMagic.size(), '\0');
    if (!is.read(magic.data(), static_cast<std::streamsize>(magic.size())) || magic != kModelMagic)
        throw ModelFormatError("model file: bad magic line");
    std::uint64_t n = 0;
    try {
        n = detail::read_le(is, 8);
    } catch (const std::runtime_error&) {
        throw ModelFormatError("model file: truncated header length");
    }
    if (n > (std::uint64_t(1) << 32))
        throw ModelFormatError("model file: implausible header length");
    std::string text(n, '\0');
    if (!is.read(text.data(), static_cast<std::streamsize>(n)))
        throw ModelFormatError("model file: truncated header");
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw ModelFormatError(std::string("model file: bad header: ") + e.what());
    }
}

template <typename Real = double>
LoadedModel<Real> read_model(std::istream& is)
{
    LoadedModel<Real> out;
    out.header = read_model_header(is);
    for (const auto& t : out.header.at("tensors")) {
        Matrix<Real> m;
        try {
            m = read_matrix<Real>(is);
        } catch (const std::runtime_error& e) {
            throw ModelFormatError(std::string("model file: ") + e.what());
        }
        if (m.rows() != t.at("rows").template get<std::size_t>() || m.cols() != t.at("cols").template get<std::size_t>())
            throw ModelFormatError("model file: tensor '" + t.at("name").template get<std::string>() +
                                   "' does not match its declared shape");
        out.tensors.emplace_back(t.at("name").template get<std::string>(), std::move(m));
    }
    return out;
}

inline std::string peek_model_kind(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open model file '" + path + "'");
    return read_model_header(is).at("kind").template get<std::string>();
}

namespace detail {

template <typename Real>
LoadedModel<Real> open_model(const std::string& path, std::string_view expected_kind)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open model file '" + path + "'");
    auto m = read_model<Real>(is);
    if (m.kind() != expected_kind)
        throw ModelFormatError("model file '" + path + "' holds a " + m.kind() + " model, expected " +
                               std::string(expected_kind));
    return m;
}

template <typename Write>
void save_to(const std::string& path, Write&& write)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot write model file '" + path + "'");
    write(os);
    if (!os)
        throw std::runtime_error("error while writing model file '" + path + "'");
}

template <typename Params, typename Real>
std::vector<NamedTensor<Real>> param_tensors(const Params& p)
{
    std::vector<NamedTensor<Real>> out;
    p.visit([&](std::string_view name, const Matrix<Real>& m) { out.push_back({std::string(name), &m}); });
    return out;
}

template <typename Params, typename Real>
void fill_params(Params& p, LoadedModel<Real>& loaded)
{
    p.visit([&](std::string_view name, Matrix<Real>& m) { m = loaded.take(name); });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Per-model save/load

template <typename Real>
void save_model(std::ostream& os, const SgnsModel<Real>& m)
{
    write_model<Real>(os, "sgns", to_json(m.config), &m.vocab, {{"w_in", &m.w_in}, {"w_out", &m.w_out}});
}

template <typename Real>
void save_model(std::ostream& os, const FastSentModel<Real>& m)
{
    write_model<Real>(os, "fastsent", to_json(m.config), &m.vocab, {{"u", &m.u}, {"v", &m.v}});
}

template <typename Real>
void save_model(std::ostream& os, const PvModel<Real>& m)
{
    Matrix<Real> b(1, m.b.size());
    std::copy(m.b.begin(), m.b.end(), b.flat().begin());
    write_model<Real>(os, "pv", to_json(m.config), &m.vocab, {{"D", &m.D}, {"W", &m.W}, {"U", &m.U}, {"b", &b}});
}

template <typename Real>
void save_model(std::ostream& os, const SdaeModel<Real>& m)
{
    write_model<Real>(os, "sdae", to_json(m.config), &m.vocab, detail::param_tensors<SdaeParams<Real>, Real>(m.params));
}

template <typename Real>
void save_model(std::ostream& os, const BiLstmModel<Real>& m)
{
    write_model<Real>(os, "bilstm", to_json(m.config), &m.vocab,
                      detail::param_tensors<BiLstmParams<Real>, Real>(m.params));
}

template <typename Real>
void save_model(std::ostream& os, const ProbeModel<Real>& m)
{
    write_model<Real>(os, "probe", Json::object(), nullptr, detail::param_tensors<ProbeModel<Real>, Real>(m));
}

template <typename Model>
void save_model(const std::string& path, const Model& m)
{
    detail::save_to(path, [&](std::ostream& os) { save_model(os, m); });
}

template <typename Real = double>
SgnsModel<Real> load_sgns(const std::string& path)
{
    auto f = detail::open_model<Real>(path, "sgns");
    SgnsModel<Real> m;
    m.vocab = vocabulary_from_json(f.header.at("vocab"));
    m.config = f.header.at("config").template get<SgnsConfig>();
    m.w_in = f.take("w_in");
    m.w_out = f.take("w_out");
    return m;
}

template <typename Real = double>
FastSentModel<Real> load_fastsent(const std::string& path)
{
    auto f = detail::open_model<Real>(path, "fastsent");
    FastSentModel<Real> m;
    m.vocab = vocabulary_from_json(f.header.at("vocab"));
    m.config = f.header.at("config").template get<FastSentConfig>();
    m.u = f.take("u");
    m.v = f.take("v");
    return m;
}

template <typename Real = double>
PvModel<Real> load_pv(const std::string& path)
{
    auto f = detail::open_model<Real>(path, "pv");
    PvModel<Real> m;
    m.vocab = vocabulary_from_json(f.header.at("vocab"));
    m.config = f.header.at("config").template get<PvConfig>();
    m.D = f.take("D");
    m.W = f.take("W");
    m.U = f.take("U");
    const auto b = f.take("b");
    m.b.assign(b.flat().begin(), b.flat().end());
    return m;
}

template <typename Real = double>
SdaeModel<Real> load_sdae(const std::string& path)
{
    auto f = detail::open_model<Real>(path, "sdae");
    SdaeModel<Real> m;
    m.vocab = vocabulary_from_json(f.header.at("vocab"));
    m.config = f.header.at("config").template get<SdaeConfig>();
    detail::fill_params(m.params, f);
    return m;
}

template <typename Real = double>
BiLstmModel<Real> load_bilstm(const std::string& path)
{
    auto f = detail::open_model<Real>(path, "bilstm");
    BiLstmModel<Real> m;
    m.vocab = vocabulary_from_json(f.header.at("vocab"));
    m.config = f.header.at("config").template get<BiLstmConfig>();
    detail::fill_params(m.params, f);
    return m;
}

template <typename Real = double>
ProbeModel<Real> load_probe(const std::string& path)
{
    auto f = detail::open_model<Real>(path, "probe");
    ProbeModel<Real> m;
    detail::fill_params(m, f);
    return m;
}

}  // namespace polarity
