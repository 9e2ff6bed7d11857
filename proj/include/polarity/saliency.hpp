#pragma once

// First-derivative saliency: how strongly each embedding coordinate of each
// word moves the pre-softmax score of a target class.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "polarity/bilstm.hpp"
#include "polarity/corpus.hpp"
#include "polarity/numerics.hpp"
#include "polarity/probe.hpp"
#include "polarity/sgns.hpp"

namespace polarity {

struct SaliencyMap {
    Tokens tokens;
    Matrix<double> grid;  // tokens x embedding dims
    Polarity target = Polarity::positive;
    bool absolute = true;

    /// Mean over embedding dimensions, one value per token.
    std::vector<double> per_token() const
    {
        std::vector<double> out(grid.rows(), 0.0);
        for (std::size_t t = 0; t < grid.rows(); ++t) {
            for (double v : grid.row(t))
                out[t] += v;
            if (grid.cols())
                out[t] /= static_cast<double>(grid.cols());
        }
        return out;
    }
};

namespace detail {

inline void finish_map(SaliencyMap& m, bool absolute)
{
    m.absolute = absolute;
    if (absolute)
        for (double& v : m.grid.flat())
            v = std::abs(v);
}

}  // namespace detail

/// Derivative of the target class score with respect to each position's
/// input embedding, through the inference-mode network.
template <typename Real>
SaliencyMap word_saliency(const BiLstmModel<Real>& m, const Tokens& tokens, Polarity target, bool absolute = true)
{
    if (tokens.empty())
        throw std::invalid_argument("word_saliency: empty sentence");
    const auto f = bilstm_forward_inputs(m.params, gather_embeddings(m, m.ids(tokens)),
                                         static_cast<const std::vector<Real>*>(nullptr));
    std::array<Real, kNumClasses> ds{};
    ds[static_cast<std::size_t>(class_index(target))] = Real(1);
    auto scratch = BiLstmParams<Real>::zeros(0, m.embed_dim(), m.hidden());
    const auto dx = bilstm_backward(m.params, f, ds, scratch);
    SaliencyMap map{tokens, Matrix<double>(dx.rows(), dx.cols()), target, absolute};
    std::copy(dx.flat().begin(), dx.flat().end(), map.grid.flat().begin());
    detail::finish_map(map, absolute);
    return map;
}

/// Gradient of one probe class score (pre-softmax) with respect to its input.
template <typename Real>
std::vector<Real> probe_input_gradient(const ProbeModel<Real>& p, std::span<const Real> x, Polarity target)
{
    const auto f = probe_forward(p, x);
    const auto c = static_cast<std::size_t>(class_index(target));
    std::vector<Real> dh(p.hidden());
    for (std::size_t j = 0; j < dh.size(); ++j)
        dh[j] = p.W2(c, j) * (Real(1) - f.hidden[j] * f.hidden[j]);
    std::vector<Real> dx(p.input_dim(), Real(0));
    gemv_t_acc(p.W1, dh, dx);
    return dx;
}

/// Saliency of the probe's class score through the additive sentence
/// encoding. Every in-vocabulary position receives the same row, since the
/// sentence vector is a plain sum; out-of-vocabulary positions get zeros.
template <typename Real>
SaliencyMap probe_saliency(const SgnsModel<Real>& encoder, const ProbeModel<Real>& probe, const Tokens& tokens,
                           Polarity target, bool absolute = true)
{
    if (encoder.dim() != probe.input_dim())
        throw std::invalid_argument("probe_saliency: encoder width " + std::to_string(encoder.dim()) +
                                    " does not match probe input " + std::to_string(probe.input_dim()));
    if (tokens.empty())
        throw std::invalid_argument("probe_saliency: empty sentence");
    const auto enc = encode_additive(encoder, tokens);
    const auto dx = probe_input_gradient(probe, std::span<const Real>(enc.vector), target);
    SaliencyMap map{tokens, Matrix<double>(tokens.size(), encoder.dim()), target, absolute};
    for (std::size_t t = 0; t < tokens.size(); ++t)
        if (encoder.vocab.find(tokens[t]))
            std::copy(dx.begin(), dx.end(), map.grid.row(t).begin());
    detail::finish_map(map, absolute);
    return map;
}

/// Tab-separated grid: a header "token\t0\t1...", then one row per token
/// with values printed to round-trip exactly.
inline void write_heatmap_tsv(std::ostream& os, const SaliencyMap& map)
{
    os << "token";
    for (std::size_t j = 0; j < map.grid.cols(); ++j)
        os << '\t' << j;
    os << '\n';
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t t = 0; t < map.grid.rows(); ++t) {
        os << map.tokens[t];
        for (double v : map.grid.row(t))
            os << '\t' << v;
        os << '\n';
    }
}

inline SaliencyMap read_heatmap_tsv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("token", 0) != 0)
        throw ParseError("heatmap", 1, "missing 'token' header");
    const auto cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), '\t'));
    SaliencyMap map;
    std::vector<double> values;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream row(line);
        std::string token, cell;
        std::getline(row, token, '\t');
        std::size_t n = 0;
        while (std::getline(row, cell, '\t')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError("heatmap", lineno, "bad number '" + cell + "'");
            }
            ++n;
        }
        if (n != cols)
            throw ParseError("heatmap", lineno, "expected " + std::to_string(cols) + " values");
        map.tokens.push_back(token);
    }
    map.grid = Matrix<double>(map.tokens.size(), cols);
    std::copy(values.begin(), values.end(), map.grid.flat().begin());
    return map;
}

/// Cell colour on a linear white-to-blue ramp: 0 is white (#ffffff), `max`
/// is pure blue (#0000ff). Red and green fall together as the value grows.
inline std::string ramp_color(double value, double max)
{
    const double t = max > 0 ? std::clamp(value / max, 0.0, 1.0) : 0.0;
    const auto level = static_cast<int>(std::lround(255.0 * (1.0 - t)));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", level, level, 255);
    return buf;
}

namespace detail {

inline std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

}  // namespace detail

/// Standalone SVG: one row of cells per token, one column per embedding
/// dimension, coloured relative to the largest magnitude in this map.
inline void write_heatmap_svg(std::ostream& os, const SaliencyMap& map)
{
    constexpr int cell = 12, label_width = 120, top = 20;
    double max = 0;
    for (double v : map.grid.flat())
        max = std::max(max, std::abs(v));
    const auto width = label_width + cell * static_cast<int>(map.grid.cols());
    const auto height = top + cell * static_cast<int>(map.grid.rows());
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    os << "<text x=\"0\" y=\"14\" font-family=\"monospace\" font-size=\"11\">class "
       << to_string(map.target) << "</text>\n";
    for (std::size_t t = 0; t < map.grid.rows(); ++t) {
        const auto y = top + cell * static_cast<int>(t);
        os << "<text x=\"0\" y=\"" << y + cell - 2 << "\" font-family=\"monospace\" font-size=\"11\">"
           << detail::xml_escape(map.tokens[t]) << "</text>\n";
        for (std::size_t j = 0; j < map.grid.cols(); ++j)
            os << "<rect x=\"" << label_width + cell * static_cast<int>(j) << "\" y=\"" << y << "\" width=\"" << cell
               << "\" height=\"" << cell << "\" fill=\"" << ramp_color(std::abs(map.grid(t, j)), max) << "\"/>\n";
    }
    os << "</svg>\n";
}

enum class HeatmapFormat { tsv, svg };

inline HeatmapFormat parse_heatmap_format(std::string_view s)
{
    if (s == "tsv")
        return HeatmapFormat::tsv;
    if (s == "svg")
        return HeatmapFormat::svg;
    throw std::invalid_argument("unknown heatmap format '" + std::string(s) + "' (expected tsv or svg)");
}

inline void emit_heatmap(const SaliencyMap& map, const std::string& path, HeatmapFormat format)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot write heatmap to '" + path + "'");
    if (format == HeatmapFormat::tsv)
        write_heatmap_tsv(os, map);
    else
        write_heatmap_svg(os, map);
    if (!os)
        throw std::runtime_error("error while writing heatmap to '" + path + "'");
}

}  // namespace polarity
