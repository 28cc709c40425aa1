#pragma once

// AUROC, MAE, one-vs-rest AUROC and percentile-bootstrap intervals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "confaudit/error.hpp"
#include "confaudit/parallel.hpp"
#include "confaudit/rng.hpp"

namespace confaudit {

enum class MetricKind { Auroc, Mae, PerClassAuroc };

inline constexpr std::string_view to_token(MetricKind k) noexcept {
    switch (k) {
        case MetricKind::Auroc: return "auroc";
        case MetricKind::Mae: return "mae";
        case MetricKind::PerClassAuroc: return "per_class_auroc";
    }
    return "auroc";
}

inline MetricKind parse_metric_kind(std::string_view s) {
    if (s == "auroc") return MetricKind::Auroc;
    if (s == "mae") return MetricKind::Mae;
    if (s == "per_class_auroc") return MetricKind::PerClassAuroc;
    throw DataError("unknown metric kind '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// AUROC
// ---------------------------------------------------------------------------

namespace detail {

inline void check_binary(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw DataError("auroc: " + std::to_string(scores.size()) + " scores but " + std::to_string(labels.size()) +
                        " labels");
    for (int y : labels)
        if (y != 0 && y != 1) throw DataError("auroc: labels must be 0 or 1");
}

/// Ascending order of scores; NaN scores are rejected.
inline std::vector<std::size_t> score_order(std::span<const double> scores) {
    for (double s : scores)
        if (std::isnan(s)) throw DataError("auroc: NaN score");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    return order;
}

}  // namespace detail

/// Mann-Whitney AUROC: (concordant + 0.5 * tied) / (n_pos * n_neg), via
/// sort-and-rank in O(n log n). Throws when either class is absent.
inline double auroc(std::span<const double> scores, std::span<const int> labels) {
    detail::check_binary(scores, labels);
    const auto order = detail::score_order(scores);
    // Twice the Mann-Whitney U, accumulated in integers so ties stay exact.
    std::int64_t u2 = 0;
    std::int64_t neg_below = 0;
    std::int64_t n_pos = 0;
    std::int64_t n_neg = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        std::int64_t pos = 0;
        std::int64_t neg = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] ? pos : neg)++;
            ++j;
        }
        u2 += 2 * pos * neg_below + pos * neg;
        neg_below += neg;
        n_pos += pos;
        n_neg += neg;
        i = j;
    }
    if (n_pos == 0 || n_neg == 0) throw DataError("auroc: labels contain a single class");
    return static_cast<double>(u2) / static_cast<double>(2 * n_pos * n_neg);
}

inline double mae(std::span<const double> predictions, std::span<const double> truths) {
    if (predictions.empty() || truths.empty()) throw DataError("mae: empty input");
    if (predictions.size() != truths.size())
        throw DataError("mae: " + std::to_string(predictions.size()) + " predictions but " +
                        std::to_string(truths.size()) + " truths");
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) sum += std::abs(predictions[i] - truths[i]);
    return sum / static_cast<double>(predictions.size());
}

/// One-vs-rest AUROC per class. `probabilities` is row-major n x k.
inline std::vector<double> per_class_auc(std::span<const double> probabilities, std::size_t k,
                                         std::span<const int> labels) {
    if (k < 2) throw DataError("per_class_auc: need at least 2 classes");
    if (probabilities.size() != labels.size() * k)
        throw DataError("per_class_auc: probability matrix shape does not match labels");
    std::vector<double> column(labels.size());
    std::vector<int> indicator(labels.size());
    std::vector<double> out(k);
    for (std::size_t cls = 0; cls < k; ++cls) {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            column[i] = probabilities[i * k + cls];
            indicator[i] = labels[i] == static_cast<int>(cls) ? 1 : 0;
        }
        const auto pos = std::count(indicator.begin(), indicator.end(), 1);
        if (pos == 0 || pos == static_cast<long>(labels.size()))
            throw DataError("per_class_auc: class " + std::to_string(cls) + " is absent from the labels" +
                            (pos ? " complement" : ""));
        out[cls] = auroc(column, indicator);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

struct MetricEstimate {
    MetricKind kind = MetricKind::Auroc;
    double point = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_bootstrap = 10000;
    std::uint64_t seed = 0;
    double level = 0.95;
    std::size_t redraws = 0;  ///< resamples discarded because the metric was undefined

    double half_width() const noexcept { return 0.5 * (ci_high - ci_low); }
    bool contains(double v) const noexcept { return ci_low <= v && v <= ci_high; }

    friend bool operator==(const MetricEstimate&, const MetricEstimate&) = default;
};

inline void to_json(nlohmann::json& j, const MetricEstimate& e) {
    j = nlohmann::json{{"metric", std::string(to_token(e.kind))},
                       {"point", e.point},
                       {"ci_low", e.ci_low},
                       {"ci_high", e.ci_high},
                       {"n_bootstrap", e.n_bootstrap},
                       {"seed", e.seed},
                       {"level", e.level},
                       {"redraws", e.redraws}};
}

inline void from_json(const nlohmann::json& j, MetricEstimate& e) {
    e.kind = parse_metric_kind(j.at("metric").get<std::string>());
    e.point = j.at("point").get<double>();
    e.ci_low = j.at("ci_low").get<double>();
    e.ci_high = j.at("ci_high").get<double>();
    e.n_bootstrap = j.at("n_bootstrap").get<std::size_t>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.level = j.at("level").get<double>();
    e.redraws = j.value("redraws", std::size_t{0});
}

/// Scores with binary labels (AUROC) or real truths (MAE), optionally grouped
/// by patient for resampling.
struct ScoredSet {
    std::vector<double> scores;
    std::vector<double> labels;
    std::vector<std::string> group_ids;  ///< empty = resample individual records

    void validate() const {
        if (scores.empty()) throw DataError("scored set is empty");
        if (scores.size() != labels.size()) throw DataError("scored set: scores and labels differ in length");
        if (!group_ids.empty() && group_ids.size() != scores.size())
            throw DataError("scored set: group_ids and scores differ in length");
    }
};

struct BootstrapOptions {
    std::size_t n_bootstrap = 10000;
    std::uint64_t seed = 0;
    double level = 0.95;
    bool grouped = true;      ///< honor group_ids when present
    std::size_t workers = 0;  ///< 0 = worker_count()
};

/// Metric replicates over bootstrap resamples (in resample-index order).
struct BootstrapReplicates {
    std::vector<double> values;
    std::size_t redraws = 0;
};

namespace detail {

// Metric evaluator over integer resample multiplicities.
class WeightedMetric {
public:
    WeightedMetric(const ScoredSet& s, MetricKind kind) : set_(&s), kind_(kind) {
        if (kind_ == MetricKind::Auroc) {
            std::vector<int> y(s.labels.size());
            for (std::size_t i = 0; i < y.size(); ++i) {
                if (s.labels[i] != 0.0 && s.labels[i] != 1.0) throw DataError("auroc: labels must be 0 or 1");
                y[i] = static_cast<int>(s.labels[i]);
            }
            order_ = score_order(s.scores);
            for (std::size_t i = 0; i < order_.size(); ++i)
                if (i == 0 || s.scores[order_[i]] != s.scores[order_[i - 1]]) group_start_.push_back(i);
            group_start_.push_back(order_.size());
        } else if (kind_ != MetricKind::Mae) {
            throw DataError("bootstrap supports auroc and mae metrics");
        }
    }

    /// nullopt when the metric is undefined on this resample.
    std::optional<double> operator()(std::span<const std::uint32_t> w) const {
        const auto& s = *set_;
        if (kind_ == MetricKind::Mae) {
            double sum = 0.0;
            std::uint64_t n = 0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                if (!w[i]) continue;
                sum += w[i] * std::abs(s.scores[i] - s.labels[i]);
                n += w[i];
            }
            if (n == 0) return std::nullopt;
            return sum / static_cast<double>(n);
        }
        std::int64_t u2 = 0, neg_below = 0, n_pos = 0, n_neg = 0;
        for (std::size_t g = 0; g + 1 < group_start_.size(); ++g) {
            std::int64_t pos = 0, neg = 0;
            for (std::size_t k = group_start_[g]; k < group_start_[g + 1]; ++k) {
                const std::size_t i = order_[k];
                (s.labels[i] != 0.0 ? pos : neg) += w[i];
            }
            u2 += 2 * pos * neg_below + pos * neg;
            neg_below += neg;
            n_pos += pos;
            n_neg += neg;
        }
        if (n_pos == 0 || n_neg == 0) return std::nullopt;
        return static_cast<double>(u2) / static_cast<double>(2 * n_pos * n_neg);
    }

private:
    const ScoredSet* set_;
    MetricKind kind_;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> group_start_;
};

// Resampling units: one per record, or one per patient group.
struct ResampleUnits {
    std::vector<std::vector<std::size_t>> members;  // empty = identity units

    static ResampleUnits build(const ScoredSet& s, bool grouped) {
        ResampleUnits u;
        if (!grouped || s.group_ids.empty()) return u;
        std::map<std::string, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < s.group_ids.size(); ++i) groups[s.group_ids[i]].push_back(i);
        for (auto& kv : groups) u.members.push_back(std::move(kv.second));
        return u;
    }

    void draw(Rng& rng, std::size_t n, std::vector<std::uint32_t>& w) const {
        std::fill(w.begin(), w.end(), 0u);
        if (members.empty()) {
            for (std::size_t k = 0; k < n; ++k) ++w[rng.below(n)];
            return;
        }
        for (std::size_t k = 0; k < members.size(); ++k)
            for (std::size_t i : members[rng.below(members.size())]) ++w[i];
    }
};

/// Type-7 (linear interpolation) quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return std::nan("");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline constexpr std::size_t kMaxRedrawsPerResample = 1000;

}  // namespace detail

inline double full_sample_metric(const ScoredSet& s, MetricKind kind) {
    s.validate();
    if (kind == MetricKind::Mae) return mae(s.scores, s.labels);
    if (kind != MetricKind::Auroc) throw DataError("bootstrap supports auroc and mae metrics");
    std::vector<int> y(s.labels.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (s.labels[i] != 0.0 && s.labels[i] != 1.0) throw DataError("auroc: labels must be 0 or 1");
        y[i] = static_cast<int>(s.labels[i]);
    }
    return auroc(s.scores, y);
}

/// Resample b uses the substream derive_seed(seed, {b, attempt}); resamples
/// where the metric is undefined are redrawn and counted.
inline BootstrapReplicates bootstrap_replicates(const ScoredSet& s, MetricKind kind, const BootstrapOptions& opt) {
    s.validate();
    full_sample_metric(s, kind);  // throws if undefined on the full set
    const detail::WeightedMetric metric(s, kind);
    const auto units = detail::ResampleUnits::build(s, opt.grouped);
    const std::size_t n = s.scores.size();

    BootstrapReplicates out;
    out.values.assign(opt.n_bootstrap, 0.0);
    std::vector<std::size_t> redraws(opt.n_bootstrap, 0);
    const std::size_t workers = opt.workers ? opt.workers : worker_count();
    const std::size_t chunks = std::min<std::size_t>(opt.n_bootstrap, workers * 4);
    parallel_for(chunks, [&](std::size_t chunk) {
        std::vector<std::uint32_t> w(n);
        for (std::size_t b = chunk; b < opt.n_bootstrap; b += chunks) {
            for (std::size_t attempt = 0;; ++attempt) {
                if (attempt > detail::kMaxRedrawsPerResample)
                    throw DataError("bootstrap: metric undefined on " + std::to_string(attempt) +
                                    " consecutive resamples");
                Rng rng(derive_seed(opt.seed, {b, attempt}));
                units.draw(rng, n, w);
                if (auto v = metric(w)) {
                    out.values[b] = *v;
                    redraws[b] = attempt;
                    break;
                }
            }
        }
    }, workers);
    out.redraws = std::accumulate(redraws.begin(), redraws.end(), std::size_t{0});
    return out;
}

/// Percentile interval from replicates; widened if needed so it contains the point.
inline MetricEstimate estimate_from_replicates(MetricKind kind, double point, const BootstrapReplicates& reps,
                                               const BootstrapOptions& opt) {
    std::vector<double> sorted = reps.values;
    std::sort(sorted.begin(), sorted.end());
    const double alpha = (1.0 - opt.level) / 2.0;
    MetricEstimate e;
    e.kind = kind;
    e.point = point;
    e.ci_low = std::min(detail::quantile_sorted(sorted, alpha), point);
    e.ci_high = std::max(detail::quantile_sorted(sorted, 1.0 - alpha), point);
    e.n_bootstrap = opt.n_bootstrap;
    e.seed = opt.seed;
    e.level = opt.level;
    e.redraws = reps.redraws;
    return e;
}

inline MetricEstimate bootstrap_ci(const ScoredSet& s, MetricKind kind, const BootstrapOptions& opt = {}) {
    if (opt.n_bootstrap == 0) throw DataError("bootstrap: n_bootstrap must be positive");
    if (!(opt.level > 0.0 && opt.level < 1.0)) throw DataError("bootstrap: level must be in (0, 1)");
    const double point = full_sample_metric(s, kind);
    return estimate_from_replicates(kind, point, bootstrap_replicates(s, kind, opt), opt);
}

/// Pools several independent evaluation sets: replicate b is the mean of each
/// set's replicate b, and the point is the mean of the full-sample metrics.
inline MetricEstimate pooled_bootstrap_ci(std::span<const ScoredSet> sets, MetricKind kind, const BootstrapOptions& opt,
                                          std::span<const std::uint64_t> set_seeds) {
    if (sets.empty()) throw DataError("pooled bootstrap: no evaluation sets");
    if (set_seeds.size() != sets.size()) throw DataError("pooled bootstrap: one seed per set required");
    BootstrapReplicates pooled;
    pooled.values.assign(opt.n_bootstrap, 0.0);
    double point = 0.0;
    for (std::size_t k = 0; k < sets.size(); ++k) {
        BootstrapOptions o = opt;
        o.seed = set_seeds[k];
        point += full_sample_metric(sets[k], kind);
        const auto reps = bootstrap_replicates(sets[k], kind, o);
        for (std::size_t b = 0; b < opt.n_bootstrap; ++b) pooled.values[b] += reps.values[b];
        pooled.redraws += reps.redraws;
    }
    const double inv = 1.0 / static_cast<double>(sets.size());
    for (double& v : pooled.values) v *= inv;
    return estimate_from_replicates(kind, point * inv, pooled, opt);
}

}  // namespace confaudit
