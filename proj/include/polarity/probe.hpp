#pragma once

// Polarity probe: a one-hidden-layer tanh MLP trained on frozen sentence
// vectors, plus weighted F1 and the repeated-seed evaluation protocol.

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "polarity/corpus.hpp"
#include "polarity/numerics.hpp"

namespace polarity {

inline constexpr std::size_t kNumClasses = 2;

struct ProbeConfig {
    std::size_t hidden = 60;
    double lr = 0.01;
    std::size_t batch = 10;
    std::size_t epochs = 20;
    double lambda = 1e-3;  // L2 penalty on weights, biases excluded
    double validation_fraction = 0.1;
    std::size_t patience = 3;

    void validate() const
    {
        if (hidden == 0 || batch == 0 || epochs == 0)
            throw std::invalid_argument("ProbeConfig: hidden, batch and epochs must be >= 1");
        if (!(lr > 0) || !(lambda >= 0))
            throw std::invalid_argument("ProbeConfig: lr must be positive and lambda non-negative");
        if (!(validation_fraction >= 0 && validation_fraction < 1))
            throw std::invalid_argument("ProbeConfig: validation_fraction must lie in [0, 1)");
    }
};

/// W1 is hidden x d_in (row per hidden unit), W2 is classes x hidden.
template <typename Real = double>
struct ProbeModel {
    Matrix<Real> W1, b1, W2, b2;

    static ProbeModel zeros(std::size_t d_in, std::size_t hidden)
    {
        return {Matrix<Real>(hidden, d_in), Matrix<Real>(1, hidden), Matrix<Real>(kNumClasses, hidden),
                Matrix<Real>(1, kNumClasses)};
    }

    std::size_t input_dim() const noexcept { return W1.cols(); }
    std::size_t hidden() const noexcept { return W1.rows(); }

    template <typename F>
    void visit(F&& f)
    {
        f("W1", W1);
        f("b1", b1);
        f("W2", W2);
        f("b2", b2);
    }
    template <typename F>
    void visit(F&& f) const
    {
        f("W1", W1);
        f("b1", b1);
        f("W2", W2);
        f("b2", b2);
    }
};

/// Vectors with labels for one split. Every row access is counted, so tests
/// can show which split a procedure read.
template <typename Real, Split S>
class LabeledVectors {
public:
    LabeledVectors() = default;
    LabeledVectors(Matrix<Real> x, std::vector<Polarity> y) : x_(std::move(x)), y_(std::move(y))
    {
        if (x_.rows() != y_.size())
            throw std::invalid_argument("LabeledVectors: " + std::to_string(x_.rows()) + " vectors but " +
                                        std::to_string(y_.size()) + " labels");
    }

    std::size_t size() const noexcept { return y_.size(); }
    std::size_t dim() const noexcept { return x_.cols(); }
    Polarity label(std::size_t i) const { return y_.at(i); }
    const std::vector<Polarity>& labels() const noexcept { return y_; }

    std::span<const Real> row(std::size_t i) const
    {
        ++reads_;
        return x_.row(i);
    }

    std::size_t reads() const noexcept { return reads_; }
    std::size_t count(Polarity p) const { return static_cast<std::size_t>(std::count(y_.begin(), y_.end(), p)); }

private:
    Matrix<Real> x_;
    std::vector<Polarity> y_;
    mutable std::size_t reads_ = 0;
};

template <typename Real = double>
using TrainVectors = LabeledVectors<Real, Split::train>;
template <typename Real = double>
using TestVectors = LabeledVectors<Real, Split::test>;

template <typename Real>
struct ProbeForward {
    std::vector<Real> hidden;  // tanh activations
    std::array<Real, kNumClasses> logits{};
    std::array<Real, kNumClasses> probs{};
};

template <typename Real>
ProbeForward<Real> probe_forward(const ProbeModel<Real>& m, std::span<const Real> x)
{
    if (x.size() != m.input_dim())
        throw std::invalid_argument("probe: vector has dimension " + std::to_string(x.size()) + ", expected " +
                                    std::to_string(m.input_dim()));
    ProbeForward<Real> f;
    f.hidden.assign(m.b1.flat().begin(), m.b1.flat().end());
    gemv(m.W1, x, f.hidden, true);
    for (auto& h : f.hidden)
        h = std::tanh(h);
    for (std::size_t c = 0; c < kNumClasses; ++c)
        f.logits[c] = m.b2(0, c) + dot(m.W2.row(c), f.hidden);
    const auto p = softmax(std::span<const Real>(f.logits));
    std::copy(p.begin(), p.end(), f.probs.begin());
    return f;
}

template <typename Real>
struct Prediction {
    Polarity label;
    std::array<Real, kNumClasses> probs;
};

/// Argmax class and class probabilities; ties go to the lower class index.
template <typename Real>
Prediction<Real> predict(const ProbeModel<Real>& m, std::span<const Real> x)
{
    const auto f = probe_forward(m, x);
    const std::size_t best = f.probs[1] > f.probs[0] ? 1 : 0;
    return {all_polarities[best], f.probs};
}

template <typename Real>
Real probe_penalty(const ProbeModel<Real>& m, double lambda)
{
    return static_cast<Real>(lambda) * (squared_norm(m.W1.flat()) + squared_norm(m.W2.flat()));
}

template <typename Real>
struct ProbeLossResult {
    Real loss = 0;
    ProbeModel<Real> grads;
};

/// Mean cross-entropy over the batch plus lambda * (|W1|^2 + |W2|^2).
template <typename Real>
ProbeLossResult<Real> probe_batch_loss(const ProbeModel<Real>& m, const std::vector<std::span<const Real>>& xs,
                                       const std::vector<Polarity>& ys, double lambda)
{
    if (xs.empty() || xs.size() != ys.size())
        throw std::invalid_argument("probe_batch_loss: need a non-empty batch with one label per vector");
    ProbeLossResult<Real> res;
    res.grads = ProbeModel<Real>::zeros(m.input_dim(), m.hidden());
    auto& g = res.grads;
    const Real inv_n = Real(1) / static_cast<Real>(xs.size());
    std::vector<Real> dh(m.hidden());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto f = probe_forward(m, xs[i]);
        const auto y = static_cast<std::size_t>(class_index(ys[i]));
        res.loss -= std::log(std::max(f.probs[y], std::numeric_limits<Real>::min())) * inv_n;
        std::fill(dh.begin(), dh.end(), Real(0));
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            const Real dz = (f.probs[c] - (c == y ? Real(1) : Real(0))) * inv_n;
            axpy(dz, f.hidden, g.W2.row(c));
            g.b2(0, c) += dz;
            axpy(dz, m.W2.row(c), dh);
        }
        for (std::size_t j = 0; j < dh.size(); ++j)
            dh[j] *= Real(1) - f.hidden[j] * f.hidden[j];
        for (std::size_t j = 0; j < dh.size(); ++j)
            axpy(dh[j], xs[i], g.W1.row(j));
        axpy(Real(1), dh, g.b1.flat());
    }
    res.loss += probe_penalty(m, lambda);
    axpy(static_cast<Real>(2 * lambda), m.W1.flat(), g.W1.flat());
    axpy(static_cast<Real>(2 * lambda), m.W2.flat(), g.W2.flat());
    return res;
}

/// Per-epoch record of one probe training run.
struct ProbeTrainLog {
    std::vector<double> train_loss;
    std::vector<double> validation_loss;  // empty when no validation split was held out
    std::size_t best_epoch = 0;           // 1-based epoch whose weights were kept
    std::size_t epochs_run = 0;
};

namespace detail {

template <typename Real>
double mean_cross_entropy(const ProbeModel<Real>& m, const TrainVectors<Real>& data,
                          const std::vector<std::size_t>& idx)
{
    double total = 0;
    for (std::size_t i : idx) {
        const auto f = probe_forward(m, data.row(i));
        total -= std::log(std::max(static_cast<double>(f.probs[static_cast<std::size_t>(class_index(data.label(i)))]),
                                   std::numeric_limits<double>::min()));
    }
    return idx.empty() ? 0.0 : total / static_cast<double>(idx.size());
}

}  // namespace detail

/// Minibatch SGD with early stopping. The held-out validation part is the
/// last `validation_fraction` of a seeded shuffle of the training set;
/// training stops after `patience` epochs without a new best validation
/// loss and the best weights are restored.
template <typename Real>
ProbeModel<Real> train_probe(const TrainVectors<Real>& train, const ProbeConfig& cfg, SeededRng& rng,
                             ProbeTrainLog* log = nullptr)
{
    cfg.validate();
    if (train.dim() == 0)
        throw std::invalid_argument("train_probe: vectors have dimension 0");
    for (Polarity p : all_polarities)
        if (train.count(p) < 2)
            throw std::invalid_argument("train_probe: training split needs at least 2 examples of class '" +
                                        std::string(to_string(p)) + "', found " + std::to_string(train.count(p)));

    ProbeModel<Real> m;
    m.W1 = xavier_init<Real>(cfg.hidden, train.dim(), rng);
    m.b1 = Matrix<Real>(1, cfg.hidden);
    m.W2 = xavier_init<Real>(kNumClasses, cfg.hidden, rng);
    m.b2 = Matrix<Real>(1, kNumClasses);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(order.size())));
    if (order.size() - n_val < 2)
        n_val = 0;
    std::vector<std::size_t> val(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    std::vector<std::size_t> fit(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));

    ProbeTrainLog local;
    ProbeTrainLog& lg = log ? *log : local;
    lg = {};
    std::optional<ProbeModel<Real>> best;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    std::vector<std::span<const Real>> xs;
    std::vector<Polarity> ys;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(fit);
        double total = 0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < fit.size(); start += cfg.batch) {
            xs.clear();
            ys.clear();
            for (std::size_t k = start; k < std::min(fit.size(), start + cfg.batch); ++k) {
                xs.push_back(train.row(fit[k]));
                ys.push_back(train.label(fit[k]));
            }
            auto r = probe_batch_loss(m, xs, ys, cfg.lambda);
            total += static_cast<double>(r.loss);
            ++batches;
            std::vector<Matrix<Real>*> grads;
            r.grads.visit([&](std::string_view, Matrix<Real>& t) { grads.push_back(&t); });
            std::size_t k = 0;
            m.visit([&](std::string_view, Matrix<Real>& t) { sgd_step(t, *grads[k++], static_cast<Real>(cfg.lr)); });
        }
        lg.train_loss.push_back(total / static_cast<double>(batches));
        lg.epochs_run = epoch;
        if (val.empty()) {
            lg.best_epoch = epoch;
            continue;
        }
        const double v = detail::mean_cross_entropy(m, train, val);
        lg.validation_loss.push_back(v);
        if (v < best_val) {
            best_val = v;
            best = m;
            lg.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return best ? *best : m;
}

/// Precision, recall and F1 per class plus the support-weighted F1.
/// confusion[gold][predicted].
struct ClassificationReport {
    std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};
    std::array<double, kNumClasses> precision{}, recall{}, f1{};
    std::array<std::size_t, kNumClasses> support{};
    double weighted_f1 = 0;
    double accuracy = 0;
};

/// F1 of a class is 0 when its precision and recall are both 0, including
/// when the class is never predicted.
inline ClassificationReport classification_report(const std::vector<Polarity>& predictions,
                                                  const std::vector<Polarity>& golds)
{
    if (predictions.size() != golds.size())
        throw std::invalid_argument("weighted_f1: " + std::to_string(predictions.size()) + " predictions but " +
                                    std::to_string(golds.size()) + " gold labels");
    if (golds.empty())
        throw std::invalid_argument("weighted_f1: no examples");
    ClassificationReport r;
    for (std::size_t i = 0; i < golds.size(); ++i)
        ++r.confusion[static_cast<std::size_t>(class_index(golds[i]))]
                     [static_cast<std::size_t>(class_index(predictions[i]))];
    const double n = static_cast<double>(golds.size());
    std::size_t correct = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        std::size_t predicted = 0;
        for (std::size_t g = 0; g < kNumClasses; ++g)
            predicted += r.confusion[g][c];
        for (std::size_t p = 0; p < kNumClasses; ++p)
            r.support[c] += r.confusion[c][p];
        const auto tp = static_cast<double>(r.confusion[c][c]);
        correct += r.confusion[c][c];
        r.precision[c] = predicted ? tp / static_cast<double>(predicted) : 0.0;
        r.recall[c] = r.support[c] ? tp / static_cast<double>(r.support[c]) : 0.0;
        const double pr = r.precision[c] + r.recall[c];
        r.f1[c] = pr > 0 ? 2 * r.precision[c] * r.recall[c] / pr : 0.0;
        r.weighted_f1 += static_cast<double>(r.support[c]) / n * r.f1[c];
    }
    r.accuracy = static_cast<double>(correct) / n;
    return r;
}

inline double weighted_f1(const std::vector<Polarity>& predictions, const std::vector<Polarity>& golds)
{
    return classification_report(predictions, golds).weighted_f1;
}

template <typename Real, Split S>
std::vector<Polarity> predict_all(const ProbeModel<Real>& m, const LabeledVectors<Real, S>& data)
{
    std::vector<Polarity> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        out.push_back(predict(m, data.row(i)).label);
    return out;
}

struct MeanStd {
    double mean = 0;
    double std = 0;  // sample standard deviation (n - 1)
};

inline MeanStd mean_and_sample_std(const std::vector<double>& xs)
{
    if (xs.size() < 2)
        throw std::invalid_argument("mean_and_sample_std: need at least 2 values");
    MeanStd r;
    for (double x : xs)
        r.mean += x;
    r.mean /= static_cast<double>(xs.size());
    double ss = 0;
    for (double x : xs)
        ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return r;
}

/// Weighted F1 scaled by 100 as "mean ± std" with two decimals.
inline std::string format_score(double mean, double std)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << mean * 100 << " ± " << std * 100;
    return os.str();
}

struct EvalReport {
    std::vector<std::uint64_t> seeds;
    std::vector<double> scores;  // weighted F1 per seed
    double mean = 0;
    double std = 0;  // sample standard deviation
    ClassificationReport pooled;  // confusion summed over seeds, metrics recomputed from it
    std::size_t test_reads_during_training = 0;

    std::string summary() const { return format_score(mean, std); }

    void write_tsv(std::ostream& os) const
    {
        os << "# weighted F1 over " << scores.size() << " probe seeds; std is the sample standard deviation\n";
        os << "seed\tweighted_f1\n";
        os << std::fixed << std::setprecision(6);
        for (std::size_t i = 0; i < scores.size(); ++i)
            os << seeds[i] << '\t' << scores[i] << '\n';
        os << "mean\t" << mean << '\n' << "std\t" << std << '\n';
        os << "class\tprecision\trecall\tf1\tsupport\n";
        for (std::size_t c = 0; c < kNumClasses; ++c)
            os << to_string(all_polarities[c]) << '\t' << pooled.precision[c] << '\t' << pooled.recall[c] << '\t'
               << pooled.f1[c] << '\t' << pooled.support[c] << '\n';
        os << "confusion\tpred_negative\tpred_positive\n";
        for (std::size_t g = 0; g < kNumClasses; ++g)
            os << "gold_" << to_string(all_polarities[g]) << '\t' << pooled.confusion[g][0] << '\t'
               << pooled.confusion[g][1] << '\n';
        os.unsetf(std::ios::floatfield);
    }
};

/// Trains one probe per seed on `train` and scores it on `test`.
template <typename Real>
EvalReport repeated_eval(const TrainVectors<Real>& train, const TestVectors<Real>& test, const ProbeConfig& cfg,
                         const std::vector<std::uint64_t>& seeds)
{
    if (seeds.size() < 2)
        throw std::invalid_argument("repeated_eval: need at least 2 seeds, got " + std::to_string(seeds.size()));
    if (test.size() == 0)
        throw std::invalid_argument("repeated_eval: empty test split");
    if (test.dim() != train.dim())
        throw std::invalid_argument("repeated_eval: train and test vectors differ in dimension");
    EvalReport rep;
    rep.seeds = seeds;
    std::vector<Polarity> all_preds, all_golds;
    for (auto seed : seeds) {
        SeededRng rng(seed);
        const auto before = test.reads();
        const auto model = train_probe(train, cfg, rng);
        rep.test_reads_during_training += test.reads() - before;
        const auto preds = predict_all(model, test);
        rep.scores.push_back(weighted_f1(preds, test.labels()));
        all_preds.insert(all_preds.end(), preds.begin(), preds.end());
        all_golds.insert(all_golds.end(), test.labels().begin(), test.labels().end());
    }
    const auto ms = mean_and_sample_std(rep.scores);
    rep.mean = ms.mean;
    rep.std = ms.std;
    rep.pooled = classification_report(all_preds, all_golds);
    return rep;
}

/// Seeds derived from `base_seed` as derive_seed(base_seed, i), i = 0..n-1.
inline std::vector<std::uint64_t> derived_seeds(std::uint64_t base_seed, std::size_t n)
{
    std::vector<std::uint64_t> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = derive_seed(base_seed, i);
    return out;
}

template <typename Real>
EvalReport repeated_eval(const TrainVectors<Real>& train, const TestVectors<Real>& test, const ProbeConfig& cfg,
                         std::uint64_t base_seed, std::size_t n_seeds = 5)
{
    if (n_seeds < 2)
        throw std::invalid_argument("repeated_eval: n_seeds must be >= 2, got " + std::to_string(n_seeds));
    return repeated_eval(train, test, cfg, derived_seeds(base_seed, n_seeds));
}

}  // namespace polarity
