#pragma once

// Wavelet denoising, SMOTE oversampling and stratified splitting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathdev/dataset.hpp"

namespace pathdev {

// ---------------------------------------------------------------------------
// Discrete wavelet transform
// ---------------------------------------------------------------------------

/// Daubechies-6 analysis low-pass filter (12 taps).
inline constexpr std::array<double, 12> kDb6Lowpass = {
    -0.0010773010853084796, 0.0047772575109455108, 0.00055384220116149613, -0.03158203931748603,
    0.027522865530305727,   0.097501605587323043,  -0.12976686756726194,   -0.22626469396543983,
    0.31525035170919763,    0.75113390802109536,   0.49462389039845306,    0.11154074335010947,
};

/// Quadrature-mirror high-pass filter: hi[k] = (-1)^(k+1) lo[F-1-k].
inline std::vector<double> quadrature_mirror(std::span<const double> lo) {
    const std::size_t f = lo.size();
    std::vector<double> hi(f);
    for (std::size_t k = 0; k < f; ++k) hi[k] = (k % 2 == 0 ? -1.0 : 1.0) * lo[f - 1 - k];
    return hi;
}

enum class ThresholdRule { universal_soft };

struct WaveletSpec {
    std::string family = "db6";
    int levels = 4;
    ThresholdRule threshold_rule = ThresholdRule::universal_soft;

    std::span<const double> lowpass() const {
        if (family != "db6") throw std::invalid_argument("unsupported wavelet family '" + family + "'");
        return kDb6Lowpass;
    }
};

namespace wavelet_detail {

/// Half-sample symmetric reflection of an index into [0, n).
inline std::size_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
    const std::ptrdiff_t period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return static_cast<std::size_t>(i < n ? i : period - 1 - i);
}

}  // namespace wavelet_detail

struct DwtLevel {
    std::vector<double> approx;
    std::vector<double> detail;
};

/// One analysis step with symmetric extension; both outputs have length
/// floor((n + F - 1) / 2).
inline DwtLevel dwt(std::span<const double> x, std::span<const double> lo) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const auto f = static_cast<std::ptrdiff_t>(lo.size());
    if (n == 0) throw dimension_error("dwt: empty signal");
    const std::vector<double> hi = quadrature_mirror(lo);
    const std::size_t out_len = static_cast<std::size_t>((n + f - 1) / 2);
    DwtLevel out{std::vector<double>(out_len), std::vector<double>(out_len)};
    for (std::size_t k = 0; k < out_len; ++k) {
        double a = 0.0, d = 0.0;
        for (std::ptrdiff_t j = 0; j < f; ++j) {
            const double v = x[wavelet_detail::reflect(2 * static_cast<std::ptrdiff_t>(k) + 1 - j, n)];
            a += lo[j] * v;
            d += hi[j] * v;
        }
        out.approx[k] = a;
        out.detail[k] = d;
    }
    return out;
}

/// Inverse of dwt for a signal of length `out_len`.
inline std::vector<double> idwt(std::span<const double> approx, std::span<const double> detail,
                                std::span<const double> lo, std::size_t out_len) {
    if (approx.size() != detail.size()) throw dimension_error("idwt: coefficient length mismatch");
    const std::vector<double> hi = quadrature_mirror(lo);
    const auto f = static_cast<std::ptrdiff_t>(lo.size());
    std::vector<double> y(out_len, 0.0);
    for (std::size_t k = 0; k < approx.size(); ++k) {
        // coefficient k touches samples n = 2k + 1 - j, j in [0, F)
        for (std::ptrdiff_t j = 0; j < f; ++j) {
            const std::ptrdiff_t n = 2 * static_cast<std::ptrdiff_t>(k) + 1 - j;
            if (n < 0 || n >= static_cast<std::ptrdiff_t>(out_len)) continue;
            y[n] += lo[j] * approx[k] + hi[j] * detail[k];
        }
    }
    return y;
}

struct WaveletDecomposition {
    std::vector<double> approx;                ///< coarsest approximation
    std::vector<std::vector<double>> details;  ///< details[0] is level 1 (finest)
    std::vector<std::size_t> lengths;          ///< input length at each level, lengths[0] = signal length
};

inline WaveletDecomposition wavedec(std::span<const double> x, std::span<const double> lo, int levels) {
    if (levels < 1) throw std::invalid_argument("wavedec: levels must be >= 1");
    WaveletDecomposition out;
    std::vector<double> cur(x.begin(), x.end());
    for (int l = 0; l < levels; ++l) {
        out.lengths.push_back(cur.size());
        DwtLevel step = dwt(cur, lo);
        out.details.push_back(std::move(step.detail));
        cur = std::move(step.approx);
    }
    out.approx = std::move(cur);
    return out;
}

inline std::vector<double> waverec(const WaveletDecomposition& dec, std::span<const double> lo) {
    std::vector<double> cur = dec.approx;
    for (std::size_t l = dec.details.size(); l-- > 0;) cur = idwt(cur, dec.details[l], lo, dec.lengths[l]);
    return cur;
}

inline double soft_threshold(double c, double tau) {
    const double mag = std::abs(c) - tau;
    return mag > 0.0 ? std::copysign(mag, c) : 0.0;
}

inline double median_abs(std::span<const double> v) {
    if (v.empty()) return 0.0;
    std::vector<double> a(v.size());
    std::transform(v.begin(), v.end(), a.begin(), [](double x) { return std::abs(x); });
    const std::size_t mid = a.size() / 2;
    std::nth_element(a.begin(), a.begin() + mid, a.end());
    const double hi = a[mid];
    if (a.size() % 2) return hi;
    const double lo = *std::max_element(a.begin(), a.begin() + mid);
    return 0.5 * (lo + hi);
}

/// Universal soft-threshold denoising of one channel.
inline std::vector<double> denoise_signal(std::span<const double> x, const WaveletSpec& spec = {}) {
    const auto lo = spec.lowpass();
    if (x.size() < lo.size())
        throw dimension_error("denoise: signal length " + std::to_string(x.size()) + " is shorter than the " +
                              std::to_string(lo.size()) + "-tap filter");
    WaveletDecomposition dec = wavedec(x, lo, spec.levels);
    const double sigma = median_abs(dec.details.front()) / 0.6745;
    const double tau = sigma * std::sqrt(2.0 * std::log(static_cast<double>(x.size())));
    for (auto& level : dec.details)
        for (double& c : level) c = soft_threshold(c, tau);
    return waverec(dec, lo);
}

inline TimeSeries dwt_denoise(const TimeSeries& x, const WaveletSpec& spec = {}) {
    TimeSeries out = x;
    for (std::size_t c = 0; c < x.channels(); ++c) {
        const std::vector<double> clean = denoise_signal(x.channel(c), spec);
        for (std::size_t n = 0; n < clean.size(); ++n) out(n, c) = clean[n];
    }
    return out;
}

inline Dataset denoise_dataset(const Dataset& ds, const WaveletSpec& spec = {}) {
    Dataset out = ds;
    for (auto& s : out.samples) s.series = dwt_denoise(s.series, spec);
    return out;
}

// ---------------------------------------------------------------------------
// SMOTE
// ---------------------------------------------------------------------------

struct SyntheticSample {
    std::vector<double> values;
    std::size_t parent_a = 0;  ///< index of the base minority sample
    std::size_t parent_b = 0;  ///< index of the chosen neighbour
    double lambda = 0.0;
};

/// Indices of the k nearest other points (Euclidean), ties broken by index.
inline std::vector<std::size_t> nearest_neighbours(std::span<const std::vector<double>> points, std::size_t of,
                                                   std::size_t k) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i == of) continue;
        double s = 0.0;
        for (std::size_t c = 0; c < points[of].size(); ++c) {
            const double d = points[i][c] - points[of][c];
            s += d * d;
        }
        dist.emplace_back(s, i);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
    return out;
}

/// Generates `target_count` points a + lambda (b - a), a uniform over the
/// minority set, b uniform over a's k nearest minority neighbours,
/// lambda ~ U(0, 1).
inline std::vector<SyntheticSample> smote(std::span<const std::vector<double>> minority, std::size_t k,
                                          std::size_t target_count, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("smote: k must be >= 1");
    if (minority.size() <= k)
        throw std::invalid_argument("smote: minority size " + std::to_string(minority.size()) +
                                    " must exceed k = " + std::to_string(k));
    const std::size_t dim = minority.front().size();
    for (const auto& p : minority)
        if (p.size() != dim) throw dimension_error("smote: minority vectors differ in length");

    std::vector<std::vector<std::size_t>> neighbours(minority.size());
    for (std::size_t i = 0; i < minority.size(); ++i) neighbours[i] = nearest_neighbours(minority, i, k);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_base(0, minority.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_nn(0, k - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<SyntheticSample> out;
    out.reserve(target_count);
    for (std::size_t s = 0; s < target_count; ++s) {
        const std::size_t a = pick_base(rng);
        const std::size_t b = neighbours[a][pick_nn(rng)];
        const double lambda = unit(rng);
        SyntheticSample syn{std::vector<double>(dim), a, b, lambda};
        for (std::size_t c = 0; c < dim; ++c) syn.values[c] = minority[a][c] + lambda * (minority[b][c] - minority[a][c]);
        out.push_back(std::move(syn));
    }
    return out;
}

/// Oversamples the minority class of the training split up to the majority count.
/// Minority training series must share one length; they are flattened for SMOTE.
inline Dataset augment_training(const Dataset& ds, std::size_t k, std::uint64_t seed) {
    std::array<std::vector<const Sample*>, 2> by_label;
    for (const Sample* s : ds.in_split(Split::train)) by_label[s->label].push_back(s);
    if (by_label[0].empty() || by_label[1].empty()) throw std::invalid_argument("augment: training split lacks a class");
    const int minority = by_label[1].size() < by_label[0].size() ? 1 : 0;
    const auto& pool = by_label[minority];
    const std::size_t deficit = by_label[1 - minority].size() - pool.size();
    Dataset out = ds;
    if (deficit == 0) return out;

    const std::size_t points = pool.front()->series.points();
    const std::size_t channels = pool.front()->series.channels();
    std::vector<std::vector<double>> flat;
    for (const Sample* s : pool) {
        if (s->series.points() != points)
            throw dimension_error("augment: minority series differ in length (" + s->id + ")");
        flat.emplace_back(s->series.values().begin(), s->series.values().end());
    }
    const auto synthetic = smote(flat, k, deficit, seed);
    for (std::size_t i = 0; i < synthetic.size(); ++i) {
        Sample s{pool[synthetic[i].parent_a]->id + "_smote" + std::to_string(i),
                 TimeSeries(channels, synthetic[i].values), minority, Split::train};
        out.samples.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

namespace split_detail {

/// Distributes `total` across classes proportionally to `sizes` (largest remainder,
/// ties to the lower class index).
inline std::array<std::size_t, 2> apportion(std::array<std::size_t, 2> sizes, std::size_t total) {
    const std::size_t n = sizes[0] + sizes[1];
    std::array<std::size_t, 2> out{};
    std::array<double, 2> rem{};
    std::size_t used = 0;
    for (int c = 0; c < 2; ++c) {
        const double exact = static_cast<double>(sizes[c]) * static_cast<double>(total) / static_cast<double>(n);
        out[c] = static_cast<std::size_t>(std::floor(exact));
        rem[c] = exact - static_cast<double>(out[c]);
        used += out[c];
    }
    while (used < total) {
        const int c = rem[1] > rem[0] ? 1 : 0;
        ++out[c];
        rem[c] = -1.0;
        ++used;
    }
    return out;
}

}  // namespace split_detail

/// Stratified 80/10/10 assignment; validation and test each receive
/// floor(n / 10) samples, the remainder goes to train.
inline Dataset split_dataset(const Dataset& ds, std::uint64_t seed) {
    const std::size_t n = ds.samples.size();
    if (n < 10) throw std::invalid_argument("split: need at least 10 samples, got " + std::to_string(n));
    std::array<std::vector<std::size_t>, 2> idx;
    for (std::size_t i = 0; i < n; ++i) idx[ds.samples[i].label].push_back(i);

    std::mt19937_64 rng(seed);
    for (auto& v : idx) std::shuffle(v.begin(), v.end(), rng);

    const std::array<std::size_t, 2> sizes{idx[0].size(), idx[1].size()};
    const auto val = split_detail::apportion(sizes, n / 10);
    const auto test = split_detail::apportion(sizes, n / 10);

    Dataset out = ds;
    for (int c = 0; c < 2; ++c) {
        if (sizes[c] >= 10 && (val[c] == 0 || test[c] == 0 || sizes[c] - val[c] - test[c] == 0))
            throw std::logic_error("split: class " + std::to_string(c) + " missing from a split");
        for (std::size_t r = 0; r < idx[c].size(); ++r) {
            Split s = Split::train;
            if (r < val[c]) s = Split::validation;
            else if (r < val[c] + test[c]) s = Split::test;
            out.samples[idx[c][r]].split = s;
        }
    }
    return out;
}

}  // namespace pathdev
