#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pathdev/model.hpp"

using namespace pathdev;

namespace {

// Every distinct cut of the sorted probabilities, evaluated from scratch.
EvalReport brute_force_threshold(const std::vector<double>& probs, const std::vector<int>& labels) {
    std::vector<double> taus{0.0, 1.0};
    for (double p : probs) taus.push_back(p);
    double best_tau = 2.0, best_spec = -1.0;
    for (double tau : taus) {
        std::size_t tn = 0, fn = 0, fp = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] < tau) (labels[i] ? fn : tn)++;
            else if (!labels[i]) ++fp;
        }
        if (fn != 0) continue;
        const double spec = tn + fp ? double(tn) / double(tn + fp) : 0.0;
        if (spec > best_spec || (spec == best_spec && tau < best_tau)) {
            best_spec = spec;
            best_tau = tau;
        }
    }
    return evaluate_at(probs, labels, best_tau);
}

Dataset tiny_dataset(std::size_t n, std::size_t points, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0, 0.3);
    Dataset ds;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v(points * 2);
        for (std::size_t k = 2; k < v.size(); ++k) v[k] = v[k - 2] + nd(rng);
        Sample s{"s" + std::to_string(i), TimeSeries(2, v), int(i % 2), i % 5 == 0 ? Split::validation : Split::train};
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace

TEST(Head, EqualLogitsGiveHalf) {
    DenseHead h = init_head(4, 3, 1);
    std::fill(h.w2.begin(), h.w2.end(), 0.0);
    const auto p = head_forward(h, SquareMatrix{{1, 2}, {3, 4}});
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Head, SoftmaxClosedForm) {
    const auto p = softmax({std::log(3.0), 0.0});
    EXPECT_NEAR(p[0], 0.75, 1e-15);
    EXPECT_NEAR(p[1], 0.25, 1e-15);
    const auto big = softmax({800.0, -800.0});
    EXPECT_NEAR(big[0] + big[1], 1.0, 1e-12);
}

TEST(Head, ReluBlocksNegativePreActivations) {
    DenseHead h{1, 1, {-1.0}, {0.0}, {5.0, -5.0}, {0.0, 0.0}};
    // input 2 -> pre -2 -> hidden 0 -> logits (0, 0)
    const auto p = head_forward(h, SquareMatrix(1, {2.0}));
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_THROW(head_forward(h, SquareMatrix(2)), dimension_error);
}

TEST(Loss, Values) {
    EXPECT_NEAR(loss({0.0, 1.0}, 1, 0.0, 0.0), 0.0, 1e-11);
    EXPECT_NEAR(loss({0.0, 1.0}, 1, 2.0, 0.5), 1.0, 1e-11);
    EXPECT_NEAR(loss({0.5, 0.5}, 0, 0.0, 0.0), 0.693147180559945, 1e-12);
    const double batch = 0.5 * (loss({0.1, 0.9}, 1, 0, 0) + loss({0.8, 0.2}, 0, 0, 0));
    EXPECT_NEAR(batch, 0.164252033486018, 1e-12);
    // saturated predictions are clamped rather than infinite
    EXPECT_TRUE(std::isfinite(loss({1.0, 0.0}, 1, 0.0, 0.0)));
    EXPECT_NEAR(loss({1.0, 0.0}, 1, 0.0, 0.0), -std::log(1e-12), 1e-9);
}

TEST(Metrics, Ratios) {
    EXPECT_EQ(metrics({0, 5, 0, 0}).npv, 1.0);
    EXPECT_EQ(metrics({0, 3, 9, 0}).specificity, 0.25);
    const EvalReport r = metrics({0, 10, 5, 2});
    EXPECT_DOUBLE_EQ(*r.npv, 10.0 / 12.0);
    EXPECT_DOUBLE_EQ(*r.specificity, 10.0 / 15.0);
    const EvalReport none = metrics({4, 0, 0, 0});
    EXPECT_FALSE(none.npv.has_value());
    EXPECT_FALSE(none.specificity.has_value());
}

TEST(SelectThreshold, NamedCases) {
    const std::vector<double> p1{0.1, 0.2, 0.6, 0.9};
    const std::vector<int> l1{0, 0, 1, 1};
    const EvalReport r1 = select_threshold(p1, l1);
    EXPECT_DOUBLE_EQ(r1.threshold, 0.6);
    EXPECT_EQ(r1.specificity, 1.0);
    EXPECT_EQ(r1.npv, 1.0);

    const std::vector<double> p2{0.3, 0.7};
    const std::vector<int> l2{1, 1};
    const EvalReport r2 = select_threshold(p2, l2);
    EXPECT_EQ(r2.threshold, 0.0);
    EXPECT_EQ(r2.specificity.value_or(0.0), 0.0);

    // predicting 0.4 negative breaks NPV; every feasible threshold predicts no negatives
    const std::vector<double> p3{0.4, 0.5};
    const std::vector<int> l3{1, 0};
    const EvalReport r3 = select_threshold(p3, l3);
    EXPECT_EQ(r3.specificity, 0.0);
    EXPECT_EQ(r3.counts.predicted_negative(), 0u);
    EXPECT_EQ(r3.threshold, 0.0);

    const std::vector<double> empty;
    const std::vector<int> no_labels;
    EXPECT_THROW(select_threshold(empty, no_labels), std::invalid_argument);
}

TEST(SelectThreshold, MatchesBruteForce) {
    std::mt19937_64 rng(99);
    for (int t = 0; t < 300; ++t) {
        std::uniform_int_distribution<int> len(1, 50);
        const int n = len(rng);
        std::vector<double> probs(n);
        std::vector<int> labels(n);
        std::uniform_int_distribution<int> coarse(0, 20);
        std::bernoulli_distribution coin(0.4);
        for (int i = 0; i < n; ++i) {
            probs[i] = coarse(rng) / 20.0;  // coarse grid forces ties
            labels[i] = coin(rng);
        }
        const EvalReport fast = select_threshold(probs, labels);
        const EvalReport slow = brute_force_threshold(probs, labels);
        EXPECT_EQ(fast.threshold, slow.threshold);
        EXPECT_EQ(fast.specificity, slow.specificity);
        EXPECT_EQ(fast.counts, slow.counts);
        EXPECT_TRUE(fast.counts.fn == 0);
    }
}

TEST(Adam, SingleStepWithBiasCorrection) {
    Adam adam(1);
    const std::vector<double> g{1.0};
    const auto step = adam.step(g, 0.1);
    // m_hat = 1, v_hat = 1 -> step = 0.1 / (1 + 1e-8)
    EXPECT_NEAR(step[0], 0.1 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, ZeroGradientIsFixedPoint) {
    Adam adam(3);
    const std::vector<double> g(3, 0.0);
    for (int i = 0; i < 5; ++i)
        for (double s : adam.step(g, 0.01)) EXPECT_EQ(s, 0.0);
}

TEST(Model, FlattenRoundTrip) {
    ModelState s{init_params(AlgebraKind::special_orthogonal, 3, 2, 1.0, 1), init_head(9, 4, 2)};
    auto flat = flatten(s);
    ASSERT_EQ(flat.size(), s.parameter_count());
    ModelState t = s;
    for (double& v : flat) v += 1.0;
    unflatten(flat, t);
    EXPECT_EQ(flatten(t), flat);
}

TEST(Model, EndToEndGradientMatchesFiniteDifferences) {
    const AlgebraKind kinds[] = {AlgebraKind::special_orthogonal, AlgebraKind::special_linear,
                                 AlgebraKind::general_linear};
    for (int trial = 0; trial < 6; ++trial) {
        const std::size_t m = 2 + trial % 2;
        const std::size_t points = 3 + trial;
        const Dataset ds = tiny_dataset(4, points, 10 + trial);
        std::vector<const Sample*> batch;
        for (const auto& s : ds.samples) batch.push_back(&s);
        // make the head non-trivial in both layers
        ModelState s{init_params(kinds[trial % 3], m, 2, 0.8, trial), init_head(m * m, 5, 100 + trial)};
        std::mt19937_64 rng(trial);
        std::normal_distribution<double> nd(0, 0.3);
        for (double& b : s.head.b1) b = nd(rng);
        const double l2 = trial % 2 ? 0.01 : 0.0;
        const LossAndGradient lg = batch_loss_and_gradient(s, batch, l2);

        const auto base = flatten(s);
        double num = 0, den = 0;
        for (std::size_t i = 0; i < base.size(); ++i) {
            auto plus = base, minus = base;
            const double h = 1e-6;
            plus[i] += h;
            minus[i] -= h;
            ModelState sp = s, sm = s;
            unflatten(plus, sp);
            unflatten(minus, sm);
            const double fd = (batch_loss_and_gradient(sp, batch, l2).loss - batch_loss_and_gradient(sm, batch, l2).loss) / (2 * h);
            num += (fd - lg.gradient[i]) * (fd - lg.gradient[i]);
            den += fd * fd;
        }
        EXPECT_LE(std::sqrt(num / den), 1e-4) << "trial " << trial;
    }
}

TEST(Model, ApplyStepKeepsThetaInAlgebra) {
    ModelState s{init_params(AlgebraKind::symplectic, 4, 2, 1.0, 1), init_head(16, 4, 2)};
    std::vector<double> step(s.parameter_count());
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd(0, 1);
    for (double& v : step) v = nd(rng);
    apply_model_step(s, step);
    EXPECT_TRUE(s.dev.in_algebra(1e-12));
}

TEST(Train, ZeroGradientLeavesParametersUnchanged) {
    // constant series: the development is the identity for every sample; with
    // zeroed head weights and both classes in each batch the gradients cancel
    Dataset ds;
    for (int i = 0; i < 4; ++i)
        ds.samples.push_back(Sample{"c" + std::to_string(i), TimeSeries(1, {1.0, 1.0, 1.0}), i % 2,
                                    i < 2 ? Split::train : Split::validation});
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 2;
    cfg.hidden_width = 2;
    ModelState init = init_model(AlgebraKind::special_orthogonal, 2, 1, cfg);
    const TrainResult r = train(ds, AlgebraKind::special_orthogonal, 2, cfg);
    // theta never receives gradient from a constant path
    for (std::size_t j = 0; j < init.dev.channels(); ++j) EXPECT_EQ(r.model.dev.theta[j], init.dev.theta[j]);
    EXPECT_EQ(r.trace.size(), 3u);
}

TEST(Train, ErrorsOnEmptySplits) {
    Dataset ds = tiny_dataset(6, 4, 1);
    for (auto& s : ds.samples) s.split = Split::train;
    EXPECT_THROW(train(ds, AlgebraKind::special_orthogonal, 2, TrainConfig{}), std::invalid_argument);
    for (auto& s : ds.samples) s.split = Split::validation;
    EXPECT_THROW(train(ds, AlgebraKind::special_orthogonal, 2, TrainConfig{}), std::invalid_argument);
}

TEST(Train, DivergenceIsReported) {
    Dataset ds = tiny_dataset(10, 5, 2);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.lr = 1e300;
    cfg.init_scale = 1.0;
    EXPECT_THROW(train(ds, AlgebraKind::general_linear, 2, cfg), std::exception);
}

TEST(Train, DeterministicTrace) {
    const Dataset ds = tiny_dataset(20, 6, 3);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 4;
    cfg.seed = 17;
    const TrainResult a = train(ds, AlgebraKind::special_orthogonal, 3, cfg);
    const TrainResult b = train(ds, AlgebraKind::special_orthogonal, 3, cfg);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        EXPECT_EQ(a.trace[i].train_loss, b.trace[i].train_loss);
        EXPECT_EQ(a.trace[i].val_loss, b.trace[i].val_loss);
    }
    EXPECT_EQ(flatten(a.model), flatten(b.model));
}
