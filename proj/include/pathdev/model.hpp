#pragma once

// Classifier around the development layer: dense ReLU head with a two-way
// softmax, cross-entropy + L2 loss, Adam, NPV-constrained threshold selection
// and the training loop.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathdev/dataset.hpp"
#include "pathdev/devlayer.hpp"

namespace pathdev {

/// Raised when training produces a non-finite loss.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kProbEpsilon = 1e-12;

// ---------------------------------------------------------------------------
// Dense head
// ---------------------------------------------------------------------------

/// input -> relu(w1 x + b1) -> w2 h + b2 -> softmax over two classes.
/// w1 is hidden x input, w2 is 2 x hidden, both row-major.
struct DenseHead {
    std::size_t input = 0;
    std::size_t hidden = 0;
    std::vector<double> w1, b1, w2, b2;

    std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
};

inline DenseHead init_head(std::size_t input, std::size_t hidden, std::uint64_t seed) {
    if (input == 0 || hidden == 0) throw dimension_error("init_head: widths must be >= 1");
    std::mt19937_64 rng(seed);
    DenseHead h{input, hidden, std::vector<double>(hidden * input), std::vector<double>(hidden, 0.0),
                std::vector<double>(2 * hidden), std::vector<double>(2, 0.0)};
    std::normal_distribution<double> n1(0.0, std::sqrt(2.0 / static_cast<double>(input)));
    for (double& w : h.w1) w = n1(rng);
    std::normal_distribution<double> n2(0.0, std::sqrt(1.0 / static_cast<double>(hidden)));
    for (double& w : h.w2) w = n2(rng);
    return h;
}

inline std::array<double, 2> softmax(std::array<double, 2> logits) {
    const double mx = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - mx), e1 = std::exp(logits[1] - mx);
    const double s = e0 + e1;
    return {e0 / s, e1 / s};
}

struct HeadActivations {
    std::vector<double> flat;
    std::vector<double> pre;
    std::vector<double> hidden;
    std::array<double, 2> logits{};
    std::array<double, 2> probs{};
};

inline HeadActivations head_activations(const DenseHead& head, const SquareMatrix& z) {
    if (z.size() != head.input)
        throw dimension_error("head: input has " + std::to_string(z.size()) + " features, expected " +
                              std::to_string(head.input));
    HeadActivations a;
    a.flat.assign(z.values().begin(), z.values().end());
    a.pre.resize(head.hidden);
    a.hidden.resize(head.hidden);
    for (std::size_t i = 0; i < head.hidden; ++i) {
        double s = head.b1[i];
        const double* row = &head.w1[i * head.input];
        for (std::size_t k = 0; k < head.input; ++k) s += row[k] * a.flat[k];
        a.pre[i] = s;
        a.hidden[i] = s > 0.0 ? s : 0.0;
    }
    for (std::size_t c = 0; c < 2; ++c) {
        double s = head.b2[c];
        for (std::size_t i = 0; i < head.hidden; ++i) s += head.w2[c * head.hidden + i] * a.hidden[i];
        a.logits[c] = s;
    }
    a.probs = softmax(a.logits);
    return a;
}

/// Class probabilities (negative, positive) for a development output.
inline std::array<double, 2> head_forward(const DenseHead& head, const SquareMatrix& z) {
    return head_activations(head, z).probs;
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

/// -[y log p + (1-y) log(1-p)] with p clamped to [eps, 1-eps].
inline double cross_entropy(double p_positive, int label) {
    const double p = std::clamp(p_positive, kProbEpsilon, 1.0 - kProbEpsilon);
    return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

/// Cross-entropy of one prediction plus l2_weight times the squared weight norm.
inline double loss(const std::array<double, 2>& pred, int label, double params_norms, double l2_weight) {
    return cross_entropy(pred[1], label) + l2_weight * params_norms;
}

// ---------------------------------------------------------------------------
// Model state and flat parameter view
// ---------------------------------------------------------------------------

struct ModelState {
    DevParams dev;
    DenseHead head;

    std::size_t parameter_count() const {
        return dev.channels() * dev.order() * dev.order() + head.parameter_count();
    }
};

/// Flat order: theta_1..theta_d (row-major), w1, b1, w2, b2.
inline std::vector<double> flatten(const ModelState& s) {
    std::vector<double> out;
    out.reserve(s.parameter_count());
    for (const auto& t : s.dev.theta) out.insert(out.end(), t.values().begin(), t.values().end());
    for (const auto* v : {&s.head.w1, &s.head.b1, &s.head.w2, &s.head.b2}) out.insert(out.end(), v->begin(), v->end());
    return out;
}

inline void unflatten(std::span<const double> flat, ModelState& s) {
    if (flat.size() != s.parameter_count()) throw dimension_error("unflatten: parameter count mismatch");
    std::size_t k = 0;
    for (auto& t : s.dev.theta)
        for (double& v : t.values()) v = flat[k++];
    for (auto* v : {&s.head.w1, &s.head.b1, &s.head.w2, &s.head.b2})
        for (double& x : *v) x = flat[k++];
}

/// Squared Frobenius norm of every weight matrix (theta, w1, w2); biases excluded.
inline double squared_weight_norm(const ModelState& s) {
    double n = 0.0;
    for (const auto& t : s.dev.theta) n += hs_inner(t, t);
    for (double w : s.head.w1) n += w * w;
    for (double w : s.head.w2) n += w * w;
    return n;
}

inline double predict_positive(const ModelState& s, const TimeSeries& x) {
    return head_forward(s.head, forward(s.dev, x, true).final())[1];
}

struct LossAndGradient {
    double loss = 0.0;
    std::vector<double> gradient;  ///< flat, same order as flatten()
    int dexp_fallbacks = 0;
};

/// Mean cross-entropy over `batch` plus the L2 term, and its gradient with
/// respect to every trainable scalar.
inline LossAndGradient batch_loss_and_gradient(const ModelState& s, std::span<const Sample* const> batch,
                                               double l2_weight, const DexpConfig& cfg = {}) {
    if (batch.empty()) throw std::invalid_argument("batch is empty");
    const std::size_t m = s.dev.order();
    const std::size_t theta_size = s.dev.channels() * m * m;
    const DenseHead& h = s.head;
    LossAndGradient out{0.0, std::vector<double>(s.parameter_count(), 0.0), 0};
    double* g_w1 = out.gradient.data() + theta_size;
    double* g_b1 = g_w1 + h.w1.size();
    double* g_w2 = g_b1 + h.b1.size();
    double* g_b2 = g_w2 + h.w2.size();
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    std::vector<double> d_hidden(h.hidden);
    for (const Sample* smp : batch) {
        const DevOutput z = forward(s.dev, smp->series, true);
        const HeadActivations a = head_activations(h, z.final());
        out.loss += cross_entropy(a.probs[1], smp->label) * inv_n;

        // d(CE)/d(logits) = probs - onehot; scaled by 1/n for the mean
        const std::array<double, 2> d_logits{(a.probs[0] - (smp->label == 0 ? 1.0 : 0.0)) * inv_n,
                                             (a.probs[1] - (smp->label == 1 ? 1.0 : 0.0)) * inv_n};
        std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
        for (std::size_t c = 0; c < 2; ++c) {
            g_b2[c] += d_logits[c];
            for (std::size_t i = 0; i < h.hidden; ++i) {
                g_w2[c * h.hidden + i] += d_logits[c] * a.hidden[i];
                d_hidden[i] += d_logits[c] * h.w2[c * h.hidden + i];
            }
        }
        SquareMatrix d_z(m);
        auto dz = d_z.values();
        for (std::size_t i = 0; i < h.hidden; ++i) {
            if (a.pre[i] <= 0.0) continue;
            const double d_pre = d_hidden[i];
            g_b1[i] += d_pre;
            const double* row = &h.w1[i * h.input];
            double* g_row = g_w1 + i * h.input;
            for (std::size_t k = 0; k < h.input; ++k) {
                g_row[k] += d_pre * a.flat[k];
                dz[k] += d_pre * row[k];
            }
        }
        const DevGradient dg = backward_static(s.dev, smp->series, d_z, cfg);
        out.dexp_fallbacks += dg.dexp_fallbacks;
        std::size_t k = 0;
        for (const auto& gj : dg.theta)
            for (double v : gj.values()) out.gradient[k++] += v;
    }

    if (l2_weight != 0.0) {
        out.loss += l2_weight * squared_weight_norm(s);
        std::size_t k = 0;
        for (const auto& t : s.dev.theta)
            for (double v : t.values()) out.gradient[k++] += 2.0 * l2_weight * v;
        for (std::size_t i = 0; i < h.w1.size(); ++i) g_w1[i] += 2.0 * l2_weight * h.w1[i];
        for (std::size_t i = 0; i < h.w2.size(); ++i) g_w2[i] += 2.0 * l2_weight * h.w2[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

class Adam {
public:
    Adam(std::size_t size, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

    /// Returns the step to subtract from the parameters.
    std::vector<double> step(std::span<const double> grad, double lr) {
        if (grad.size() != m_.size()) throw dimension_error("Adam: gradient size mismatch");
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        std::vector<double> out(grad.size());
        for (std::size_t i = 0; i < grad.size(); ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
            const double m_hat = m_[i] / c1;
            const double v_hat = v_[i] / c2;
            out[i] = lr * m_hat / (std::sqrt(v_hat) + eps_);
        }
        return out;
    }

    long steps_taken() const noexcept { return t_; }

private:
    double beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

/// Subtracts `step` from the head directly and from theta through the algebra projection.
inline void apply_model_step(ModelState& s, std::span<const double> step) {
    if (step.size() != s.parameter_count()) throw dimension_error("apply_model_step: size mismatch");
    const std::size_t m = s.dev.order();
    std::vector<SquareMatrix> theta_step;
    std::size_t k = 0;
    for (std::size_t j = 0; j < s.dev.channels(); ++j) {
        SquareMatrix t(m);
        for (double& v : t.values()) v = step[k++];
        theta_step.push_back(std::move(t));
    }
    s.dev = apply_update(s.dev, theta_step);
    for (auto* v : {&s.head.w1, &s.head.b1, &s.head.w2, &s.head.b2})
        for (double& x : *v) x -= step[k++];
}

// ---------------------------------------------------------------------------
// Metrics and threshold selection
// ---------------------------------------------------------------------------

struct ConfusionCounts {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::size_t total() const noexcept { return tp + tn + fp + fn; }
    std::size_t predicted_negative() const noexcept { return tn + fn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct EvalReport {
    ConfusionCounts counts;
    std::optional<double> npv;
    std::optional<double> specificity;
    double threshold = 0.0;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline EvalReport metrics(const ConfusionCounts& c) {
    EvalReport r{c, std::nullopt, std::nullopt, 0.0};
    if (c.tn + c.fn > 0) r.npv = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fn);
    if (c.tn + c.fp > 0) r.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    return r;
}

/// A sample is predicted negative iff its positive-class probability is below `threshold`.
inline ConfusionCounts confusion(std::span<const double> probs, std::span<const int> labels, double threshold) {
    if (probs.size() != labels.size()) throw dimension_error("confusion: length mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const bool neg = probs[i] < threshold;
        if (labels[i] == 1) (neg ? c.fn : c.tp)++;
        else (neg ? c.tn : c.fp)++;
    }
    return c;
}

inline EvalReport evaluate_at(std::span<const double> probs, std::span<const int> labels, double threshold) {
    EvalReport r = metrics(confusion(probs, labels, threshold));
    r.threshold = threshold;
    return r;
}

/// Picks the threshold with the highest specificity among those whose predicted
/// negatives are all true negatives (an empty negative set qualifies with
/// specificity 0). Candidates are the distinct probabilities plus 0 and 1;
/// ties go to the smaller threshold.
inline EvalReport select_threshold(std::span<const double> probs, std::span<const int> labels) {
    if (probs.empty()) throw std::invalid_argument("select_threshold: empty input");
    if (probs.size() != labels.size()) throw dimension_error("select_threshold: length mismatch");

    std::vector<std::size_t> order(probs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });

    std::vector<double> candidates{0.0, 1.0};
    candidates.insert(candidates.end(), probs.begin(), probs.end());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::size_t negatives_total = 0;
    for (int l : labels) negatives_total += l == 0;

    double best_threshold = candidates.front();
    double best_spec = -1.0;
    std::size_t tn = 0, fn = 0, next = 0;
    for (double tau : candidates) {
        while (next < order.size() && probs[order[next]] < tau) {
            (labels[order[next]] == 1 ? fn : tn)++;
            ++next;
        }
        if (fn > 0) break;  // fn only grows with tau
        const double spec = negatives_total ? static_cast<double>(tn) / static_cast<double>(negatives_total) : 0.0;
        if (spec > best_spec) {
            best_spec = spec;
            best_threshold = tau;
        }
    }
    return evaluate_at(probs, labels, best_threshold);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
    double lr = 0.01;
    int epochs = 100;
    int batch_size = 32;
    double l2_weight = 0.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    std::size_t hidden_width = 16;
    double init_scale = 1.0;
    DexpConfig dexp{};

    void validate() const {
        if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
        if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
        if (!(l2_weight >= 0.0)) throw std::invalid_argument("L2 weight must be >= 0");
        if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0))
            throw std::invalid_argument("Adam betas must lie in (0, 1)");
        if (!(adam_eps > 0.0)) throw std::invalid_argument("Adam epsilon must be > 0");
        if (hidden_width < 1) throw std::invalid_argument("hidden width must be >= 1");
        if (!(init_scale > 0.0)) throw std::invalid_argument("init scale must be > 0");
        dexp.validate();
    }
};

struct TraceRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_specificity = 0.0;
    double threshold = 0.0;
};

struct TrainResult {
    ModelState model;
    EvalReport validation;  ///< report of the kept snapshot on the validation split
    std::vector<TraceRecord> trace;
    int best_epoch = 0;
    /// false when no epoch reached validation NPV = 1 with a predicted negative;
    /// the final epoch is kept in that case.
    bool eligible = false;
    int dexp_fallbacks = 0;
};

struct Predictions {
    std::vector<double> probs;
    std::vector<int> labels;
};

inline Predictions predict_all(const ModelState& s, std::span<const Sample* const> samples) {
    Predictions p;
    p.probs.reserve(samples.size());
    p.labels.reserve(samples.size());
    for (const Sample* smp : samples) {
        p.probs.push_back(predict_positive(s, smp->series));
        p.labels.push_back(smp->label);
    }
    return p;
}

inline double mean_loss(const Predictions& p, double l2_weight, const ModelState& s) {
    double total = 0.0;
    for (std::size_t i = 0; i < p.probs.size(); ++i) total += cross_entropy(p.probs[i], p.labels[i]);
    return total / static_cast<double>(p.probs.size()) + l2_weight * squared_weight_norm(s);
}

inline ModelState init_model(AlgebraKind algebra, std::size_t order, std::size_t channels, const TrainConfig& cfg) {
    // independent streams for the two initialisers
    return ModelState{init_params(algebra, order, channels, cfg.init_scale, cfg.seed),
                      init_head(order * order, cfg.hidden_width, cfg.seed ^ 0x9E3779B97F4A7C15ULL)};
}

using EpochCallback = std::function<void(const TraceRecord&)>;

/// Mini-batch Adam over theta and the head. Each epoch ends with a validation
/// pass; the snapshot with the highest validation specificity at NPV = 1 is kept
/// (ties: lowest validation loss).
inline TrainResult train(const Dataset& data, AlgebraKind algebra, std::size_t order, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
    cfg.validate();
    data.validate();
    const auto train_set = data.in_split(Split::train);
    const auto val_set = data.in_split(Split::validation);
    if (train_set.empty()) throw std::invalid_argument("train: training split is empty");
    if (val_set.empty()) throw std::invalid_argument("train: validation split is empty");

    ModelState state = init_model(algebra, order, data.channels(), cfg);
    Adam adam(state.parameter_count(), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    std::mt19937_64 rng(cfg.seed + 1);

    TrainResult result{state, {}, {}, 0, false, 0};
    double best_spec = -1.0;
    double best_val_loss = 0.0;
    std::vector<const Sample*> order_buf(train_set.begin(), train_set.end());
    const auto bs = static_cast<std::size_t>(cfg.batch_size);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order_buf.begin(), order_buf.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order_buf.size(); start += bs) {
            const std::size_t len = std::min(bs, order_buf.size() - start);
            std::span<const Sample* const> batch(order_buf.data() + start, len);
            const LossAndGradient lg = batch_loss_and_gradient(state, batch, cfg.l2_weight, cfg.dexp);
            if (!std::isfinite(lg.loss))
                throw numerical_error("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                                      ", batch starting at " + std::to_string(start));
            result.dexp_fallbacks += lg.dexp_fallbacks;
            loss_sum += lg.loss * static_cast<double>(len);
            apply_model_step(state, adam.step(lg.gradient, cfg.lr));
        }

        const Predictions val = predict_all(state, val_set);
        const EvalReport report = select_threshold(val.probs, val.labels);
        TraceRecord rec{epoch, loss_sum / static_cast<double>(order_buf.size()), mean_loss(val, cfg.l2_weight, state),
                        report.specificity.value_or(0.0), report.threshold};
        if (!std::isfinite(rec.val_loss))
            throw numerical_error("training diverged: non-finite validation loss at epoch " + std::to_string(epoch));
        result.trace.push_back(rec);
        if (on_epoch) on_epoch(rec);

        const bool eligible = report.npv.has_value() && *report.npv == 1.0;
        // equal specificity: prefer the lower validation loss
        if (eligible && (rec.val_specificity > best_spec ||
                         (rec.val_specificity == best_spec && rec.val_loss < best_val_loss))) {
            best_spec = rec.val_specificity;
            best_val_loss = rec.val_loss;
            result.model = state;
            result.validation = report;
            result.best_epoch = epoch;
            result.eligible = true;
        }
        if (!result.eligible && epoch == cfg.epochs) {
            result.model = state;
            result.validation = report;
            result.best_epoch = epoch;
        }
    }
    return result;
}

}  // namespace pathdev
