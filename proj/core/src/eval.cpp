#include "qipf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "qipf/error.hpp"
#include "qipf/random.hpp"

namespace qipf::eval {

double mean(std::span<const double> v) {
    if (v.empty()) throw InvalidArgument("mean of an empty series");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

Normalizer Normalizer::fit(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw InvalidArgument("cannot fit a normalizer on no rows");
    const std::size_t d = rows.front().size();
    Normalizer n;
    n.mean.assign(d, 0.0);
    n.scale.assign(d, 1.0);
    std::vector<double> col(rows.size());
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != d) throw DimensionMismatch("ragged rows");
            col[i] = rows[i][j];
        }
        n.mean[j] = eval::mean(col);
        const double sd = eval::stddev(col);
        n.scale[j] = sd > 0.0 ? sd : 1.0;
    }
    return n;
}

std::vector<double> Normalizer::apply(std::span<const double> row) const {
    if (row.size() != mean.size()) throw DimensionMismatch("row width does not match the normalizer");
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) / scale[j];
    return out;
}

std::vector<double> Normalizer::invert(std::span<const double> row) const {
    if (row.size() != mean.size()) throw DimensionMismatch("row width does not match the normalizer");
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = row[j] * scale[j] + mean[j];
    return out;
}

double calibration_rmse(std::span<const double> uncertainty, std::span<const double> abs_errors) {
    if (uncertainty.size() != abs_errors.size()) throw DimensionMismatch("series differ in length");
    if (uncertainty.empty()) throw InvalidArgument("calibration needs at least one point");
    auto scale_of = [](std::span<const double> v, const char* name) {
        double top = 0.0;
        for (double x : v) {
            detail::require_finite(x, name);
            if (x < 0.0) throw InvalidArgument(std::string(name) + " must be non-negative");
            top = std::max(top, x);
        }
        return top > 0.0 ? 1.0 / top : 1.0;
    };
    const double su = scale_of(uncertainty, "uncertainty");
    const double se = scale_of(abs_errors, "absolute error");
    double ss = 0.0;
    for (std::size_t i = 0; i < uncertainty.size(); ++i) {
        const double d = uncertainty[i] * su - abs_errors[i] * se;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(uncertainty.size()));
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DimensionMismatch("scores and labels differ in length");
    std::size_t pos = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw InvalidArgument("labels must be 0 or 1");
        pos += static_cast<std::size_t>(l);
    }
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) throw DegenerateInput("ROC needs both classes present");
    for (double s : scores) detail::require_finite(s, "score");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            if (labels[order[i]] == 1) ++tp; else ++fp;
            ++i;
        }
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                                static_cast<double>(tp) / static_cast<double>(pos)});
    }
    double auc = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        auc += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
    }
    curve.auc = auc;
    return curve;
}

std::vector<Split> split_k(std::size_t n, std::size_t n_splits, double test_fraction, std::uint64_t seed) {
    if (n_splits < 1) throw InvalidArgument("need at least one split");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidArgument("test fraction must lie in (0, 1)");
    const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
    if (n_test == 0 || n_test >= n) {
        throw DegenerateInput(fmt::format("splitting {} rows at fraction {} leaves an empty side", n, test_fraction));
    }
    Rng rng(seed);
    std::vector<Split> out;
    std::vector<std::size_t> idx(n);
    for (std::size_t s = 0; s < n_splits; ++s) {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
        Split sp;
        sp.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
        sp.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
        std::sort(sp.test.begin(), sp.test.end());
        std::sort(sp.train.begin(), sp.train.end());
        out.push_back(std::move(sp));
    }
    return out;
}

double dominance_entropy(std::span<const std::size_t> counts) {
    double total = 0.0;
    for (std::size_t c : counts) total += static_cast<double>(c);
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log(p);
    }
    return h;
}

std::size_t modes_covering(std::span<const std::size_t> counts, double mass) {
    std::vector<std::size_t> sorted(counts.begin(), counts.end());
    std::sort(sorted.rbegin(), sorted.rend());
    double total = 0.0;
    for (std::size_t c : sorted) total += static_cast<double>(c);
    if (total <= 0.0) return 0;
    double acc = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        acc += static_cast<double>(sorted[i]);
        if (acc >= mass * total) return i + 1;
    }
    return sorted.size();
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw InvalidArgument("correlation needs two equal series of length >= 2");
    const double ma = mean(a);
    const double mb = mean(b);
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) throw DegenerateInput("correlation of a constant series");
    return sab / std::sqrt(saa * sbb);
}

namespace {
std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j - 1) + 1.0;
        for (std::size_t t = i; t < j; ++t) ranks[order[t]] = r;
        i = j;
    }
    return ranks;
}
}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    return pearson(ra, rb);
}

}  // namespace qipf::eval
