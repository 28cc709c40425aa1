#pragma once

// Experiment orchestration: bias sweeps, the comorbidity confounder
// baseline and the two-profile transfer evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "confaudit/cohort.hpp"
#include "confaudit/learners.hpp"
#include "confaudit/metrics.hpp"
#include "confaudit/oracle.hpp"
#include "confaudit/parallel.hpp"
#include "confaudit/sampler.hpp"
#include "confaudit/synthgen.hpp"

namespace confaudit {

// Published sweep curves (bias -> AUC), used only to annotate reports.
inline const std::vector<std::pair<double, double>> kReferenceRaceSweep{
    {0.5, 0.57}, {0.6, 0.67}, {0.7, 0.73}, {0.8, 0.79}, {0.9, 0.82}, {1.0, 0.84}};
inline const std::vector<std::pair<double, double>> kReferenceSexSweep{
    {0.5, 0.82}, {0.6, 0.81}, {0.7, 0.81}, {0.8, 0.81}, {0.9, 0.83}, {1.0, 0.81}};
inline constexpr double kReferenceComorbidityAuc = 0.62;
inline constexpr double kReferenceSexInternalAuc = 0.93;
inline constexpr double kReferenceSexExternalAuc = 0.85;

enum class EvalMode { MatchedBias, NaturalTest };

inline constexpr std::string_view to_token(EvalMode m) noexcept {
    return m == EvalMode::MatchedBias ? "matched" : "natural";
}

inline EvalMode parse_eval_mode(std::string_view s) {
    if (s == "matched") return EvalMode::MatchedBias;
    if (s == "natural") return EvalMode::NaturalTest;
    throw ConfigError("eval_mode", "eval_mode must be 'matched' or 'natural', got '" + std::string(s) + "'");
}

struct SweepConfig {
    std::vector<double> bias_grid{0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    BinaryTask target = BinaryTask::race(Race::White);
    BinaryTask confounder = BinaryTask::sex(Sex::Male);
    std::size_t subset_size = 20000;
    std::size_t eval_subset_size = 4000;
    std::size_t repeats = 3;
    EvalMode eval_mode = EvalMode::MatchedBias;
    TrainConfig learner;
    SplitSpec split;  ///< its seed is replaced by one derived from `seed`
    BootstrapOptions bootstrap;
    std::uint64_t seed = 0;

    void validate() const {
        if (bias_grid.empty()) throw ConfigError("bias_grid", "bias_grid must not be empty");
        for (std::size_t i = 0; i < bias_grid.size(); ++i) {
            if (!(bias_grid[i] >= 0.5 && bias_grid[i] <= 1.0))
                throw ConfigError("bias_grid", "bias_grid value " + detail::format_double(bias_grid[i]) +
                                                   " outside [0.5, 1.0]");
            if (i && !(bias_grid[i] > bias_grid[i - 1]))
                throw ConfigError("bias_grid", "bias_grid must be strictly ascending");
        }
        if (repeats < 1) throw ConfigError("repeats", "repeats must be >= 1");
        if (target.attribute == confounder.attribute)
            throw ConfigError("confounder", "target and confounder must be different attributes");
        target.validate();
        confounder.validate();
        learner.validate();
        split.validate();
        if (bootstrap.n_bootstrap == 0) throw ConfigError("n_bootstrap", "n_bootstrap must be >= 1");
        if (!(bootstrap.level > 0.0 && bootstrap.level < 1.0)) throw ConfigError("level", "level must be in (0, 1)");
    }

    SplitSpec derived_split() const {
        SplitSpec s = split;
        s.seed = derive_seed(seed, {0x5917});
        return s;
    }
};

struct SweepPoint {
    double bias = 0.5;
    MetricEstimate auc;                   ///< pooled over repeats
    std::vector<MetricEstimate> repeats;  ///< one estimate per repeat
    double repeat_mean = 0.0;
    double repeat_min = 0.0;
    double repeat_max = 0.0;
    std::size_t train_size = 0;
    std::size_t eval_size = 0;
    CellCounts train_cells{};
    CellCounts eval_cells{};

    friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

struct SweepResult {
    SweepConfig config;
    std::vector<SweepPoint> points;
    double shortcut_score = 0.0;
    bool monotone = true;
    std::vector<std::optional<double>> reference_curve;  ///< published AUC per grid value, when known
    std::size_t excluded_records = 0;                   ///< cohort records without target/confounder labels
};

// ---------------------------------------------------------------------------
// Shortcut score
// ---------------------------------------------------------------------------

struct ShortcutScore {
    double value = 0.0;
    bool monotone = true;  ///< nondecreasing within CI overlap
};

/// AUC(b_max) - AUC(b_min). Consecutive points count as nondecreasing when
/// the later point is not lower or the two intervals overlap.
inline ShortcutScore shortcut_score(const std::vector<SweepPoint>& points) {
    if (points.size() < 2) throw DataError("shortcut score needs at least 2 sweep points");
    ShortcutScore s;
    s.value = points.back().auc.point - points.front().auc.point;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto& a = points[i - 1].auc;
        const auto& b = points[i].auc;
        if (b.point < a.point && b.ci_high < a.ci_low) s.monotone = false;
    }
    return s;
}

inline ShortcutScore shortcut_score(const SweepResult& r) { return shortcut_score(r.points); }

/// Published curve for the (target, confounder) pair, matched by grid value.
inline std::vector<std::optional<double>> reference_curve_for(const SweepConfig& cfg) {
    const auto& ref = cfg.target.attribute == Attribute::Race ? kReferenceRaceSweep : kReferenceSexSweep;
    std::vector<std::optional<double>> out;
    for (double b : cfg.bias_grid) {
        std::optional<double> v;
        for (const auto& [rb, auc] : ref)
            if (std::abs(rb - b) < 1e-9) v = auc;
        out.push_back(v);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sweep jobs
// ---------------------------------------------------------------------------

inline LabeledData labeled_features(const Cohort& c, const std::vector<std::size_t>& indices,
                                    const std::vector<int>& labels) {
    LabeledData d;
    d.X = Matrix(indices.size(), c.feature_dim());
    d.y.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto& f = c[indices[i]].features;
        std::copy(f.begin(), f.end(), d.X.row(i).begin());
        d.y[i] = labels[i];
    }
    return d;
}

inline LabeledData labeled_features(const Cohort& c, const Subset& s) {
    return labeled_features(c, s.indices, s.target);
}

inline ScoredSet scored_set(const Cohort& c, const Subset& s, std::vector<double> scores) {
    ScoredSet set;
    set.scores = std::move(scores);
    set.labels.assign(s.target.begin(), s.target.end());
    set.group_ids.reserve(s.size());
    for (std::size_t i : s.indices) set.group_ids.push_back(c[i].patient_id);
    return set;
}

/// Everything produced by one (bias, repeat) job.
struct SweepJob {
    double bias = 0.5;
    std::size_t repeat = 0;
    Subset train;
    Subset val;
    Subset test;
    TrainedModel model;
    ScoredSet evaluation;
    double auc = 0.0;
    BootstrapReplicates replicates;
    std::uint64_t bootstrap_seed = 0;
};

inline std::uint64_t sweep_job_seed(const SweepConfig& cfg, double bias, std::size_t repeat) {
    return derive_seed(cfg.seed, {grid_key(bias), repeat});
}

/// One sweep job: build subsets, fit on the target, score the evaluation set.
inline SweepJob run_sweep_job(const Cohort& c, const SplitAssignment& a, const SweepConfig& cfg, double bias,
                              std::size_t repeat, std::size_t bootstrap_workers = 0) {
    const std::uint64_t job_seed = sweep_job_seed(cfg, bias, repeat);
    BiasSpec spec;
    spec.bias = bias;
    spec.target = cfg.target;
    spec.confounder = cfg.confounder;
    spec.subset_size = cfg.subset_size;
    spec.eval_subset_size = cfg.eval_subset_size;
    spec.seed = derive_seed(job_seed, {1});
    spec.apply_to = {Partition::Train, Partition::Val};
    if (cfg.eval_mode == EvalMode::MatchedBias) spec.apply_to.insert(Partition::Test);

    SweepJob job;
    job.bias = bias;
    job.repeat = repeat;
    BiasedSubsets subsets;
    try {
        subsets = build_biased_subset(c, a, spec);
    } catch (const InsufficientCellError& e) {
        throw InsufficientCellError("bias " + detail::format_double(bias) + ": " + e.what(), e.cell(), e.needed(),
                                    e.available());
    }
    job.train = std::move(subsets.at(Partition::Train));
    job.val = std::move(subsets.at(Partition::Val));
    if (cfg.eval_mode == EvalMode::MatchedBias)
        job.test = std::move(subsets.at(Partition::Test));
    else
        job.test = natural_subset(c, a, Partition::Test, cfg.target, &cfg.confounder, cfg.eval_subset_size,
                                  derive_seed(job_seed, {2}));

    TrainConfig learner = cfg.learner;
    learner.seed = derive_seed(job_seed, {3});
    job.model = fit(labeled_features(c, job.train), labeled_features(c, job.val), TaskKind::binary(), learner);
    const auto test_data = labeled_features(c, job.test);
    job.evaluation = scored_set(c, job.test, predict_scores(job.model, test_data.X));
    job.auc = full_sample_metric(job.evaluation, MetricKind::Auroc);
    BootstrapOptions opt = cfg.bootstrap;
    opt.seed = job.bootstrap_seed = derive_seed(job_seed, {4});
    opt.workers = bootstrap_workers;
    job.replicates = bootstrap_replicates(job.evaluation, MetricKind::Auroc, opt);
    return job;
}

/// Runs every (bias, repeat) job. Jobs are independent and seeded from
/// (seed, bias, repeat), so the result does not depend on execution order.
inline SweepResult run_bias_sweep(const Cohort& c, const SweepConfig& cfg) {
    cfg.validate();
    if (c.empty()) throw DataError("cannot sweep an empty cohort");
    const SplitAssignment a = split_by_patient(c, cfg.derived_split());

    const std::size_t n_jobs = cfg.bias_grid.size() * cfg.repeats;
    std::vector<SweepJob> jobs(n_jobs);
    const std::size_t workers = worker_count();
    parallel_for(n_jobs, [&](std::size_t k) {
        const std::size_t p = k / cfg.repeats;
        const std::size_t r = k % cfg.repeats;
        jobs[k] = run_sweep_job(c, a, cfg, cfg.bias_grid[p], r, workers > 1 ? 1 : 0);
        // Only the summaries are kept.
        jobs[k].evaluation = {};
        jobs[k].model = {};
    }, workers);

    SweepResult result;
    result.config = cfg;
    for (const auto& r : c.records())
        if (!cfg.target.label(r) || !cfg.confounder.label(r)) ++result.excluded_records;
    for (std::size_t p = 0; p < cfg.bias_grid.size(); ++p) {
        SweepPoint pt;
        pt.bias = cfg.bias_grid[p];
        BootstrapReplicates pooled;
        pooled.values.assign(cfg.bootstrap.n_bootstrap, 0.0);
        double sum = 0.0;
        pt.repeat_min = 1.0;
        pt.repeat_max = 0.0;
        for (std::size_t r = 0; r < cfg.repeats; ++r) {
            const auto& job = jobs[p * cfg.repeats + r];
            BootstrapOptions opt = cfg.bootstrap;
            opt.seed = job.bootstrap_seed;
            pt.repeats.push_back(estimate_from_replicates(MetricKind::Auroc, job.auc, job.replicates, opt));
            for (std::size_t b = 0; b < pooled.values.size(); ++b) pooled.values[b] += job.replicates.values[b];
            pooled.redraws += job.replicates.redraws;
            sum += job.auc;
            pt.repeat_min = std::min(pt.repeat_min, job.auc);
            pt.repeat_max = std::max(pt.repeat_max, job.auc);
        }
        const double inv = 1.0 / static_cast<double>(cfg.repeats);
        for (double& v : pooled.values) v *= inv;
        pt.repeat_mean = sum * inv;
        BootstrapOptions opt = cfg.bootstrap;
        opt.seed = derive_seed(cfg.seed, {grid_key(pt.bias)});
        pt.auc = estimate_from_replicates(MetricKind::Auroc, pt.repeat_mean, pooled, opt);
        const auto& first = jobs[p * cfg.repeats];
        pt.train_size = first.train.size();
        pt.eval_size = first.test.size();
        pt.train_cells = first.train.cell_counts();
        pt.eval_cells = first.test.cell_counts();
        result.points.push_back(std::move(pt));
    }
    if (result.points.size() >= 2) {
        const auto s = shortcut_score(result.points);
        result.shortcut_score = s.value;
        result.monotone = s.monotone;
    }
    result.reference_curve = reference_curve_for(cfg);
    return result;
}

/// The target task on unmanipulated data: N natural training records, natural
/// validation and test samples from the same patient split as the sweep.
inline MetricEstimate natural_task_auc(const Cohort& c, const BinaryTask& target, const SweepConfig& cfg) {
    cfg.validate();
    const SplitAssignment a = split_by_patient(c, cfg.derived_split());
    const std::uint64_t seed = derive_seed(cfg.seed, {0x7A5C, static_cast<std::uint64_t>(target.attribute)});
    const auto train = natural_subset(c, a, Partition::Train, target, nullptr, cfg.subset_size, derive_seed(seed, {1}));
    const auto val = natural_subset(c, a, Partition::Val, target, nullptr, cfg.eval_subset_size, derive_seed(seed, {2}));
    const auto test = natural_subset(c, a, Partition::Test, target, nullptr, cfg.eval_subset_size, derive_seed(seed, {3}));
    TrainConfig learner = cfg.learner;
    learner.seed = derive_seed(seed, {4});
    const auto model = fit(labeled_features(c, train), labeled_features(c, val), TaskKind::binary(), learner);
    const auto scored = scored_set(c, test, predict_scores(model, labeled_features(c, test).X));
    BootstrapOptions opt = cfg.bootstrap;
    opt.seed = derive_seed(seed, {5});
    return bootstrap_ci(scored, MetricKind::Auroc, opt);
}

// ---------------------------------------------------------------------------
// Comorbidity baseline
// ---------------------------------------------------------------------------

struct BaselineOptions {
    SplitSpec split;
    TrainConfig learner;
    BootstrapOptions bootstrap;
    std::size_t oracle_draws = 200000;
    std::uint64_t seed = 0;
};

struct BaselineResult {
    BinaryTask target;
    BaselineOptions options;
    MetricEstimate auc;
    std::vector<std::string> coefficient_names;
    std::vector<double> coefficients;
    double intercept = 0.0;
    std::optional<double> bayes_oracle_auc;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::size_t excluded_records = 0;
};

inline constexpr std::size_t kBaselineInputDim = kComorbidityCount + 2;

inline std::vector<std::string> baseline_input_names() {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < kComorbidityCount; ++j) names.emplace_back(kComorbidityNames[j]);
    names.emplace_back("Age (standardized)");
    names.emplace_back("Male");
    return names;
}

/// Logistic regression of the target on the 17 comorbidity flags,
/// standardized age and a male indicator. When the generating profile is
/// supplied, the Bayes-oracle AUROC is estimated alongside.
inline BaselineResult confounder_baseline(const Cohort& c, const BinaryTask& target, const BaselineOptions& opt,
                                          const CohortProfile* profile = nullptr) {
    opt.learner.validate();
    if (c.empty()) throw DataError("baseline: empty cohort");
    const BinaryView view = binarize_attribute(c, target);
    if (view.positives() == 0 || view.negatives() == 0)
        throw DataError("baseline: target " + target.to_string() + " has a single class in this cohort");

    double mean = 0.0;
    for (std::size_t i : view.indices) mean += c[i].age;
    mean /= static_cast<double>(view.indices.size());
    double ss = 0.0;
    for (std::size_t i : view.indices) ss += (c[i].age - mean) * (c[i].age - mean);
    const double sd = view.indices.size() > 1 ? std::sqrt(ss / static_cast<double>(view.indices.size() - 1)) : 1.0;

    SplitSpec split = opt.split;
    split.seed = derive_seed(opt.seed, {0x5917});
    const SplitAssignment a = split_by_patient(c, split);
    std::array<LabeledData, 3> parts;
    std::vector<std::string> test_groups;
    std::array<std::vector<std::size_t>, 3> rows;
    for (std::size_t k = 0; k < view.indices.size(); ++k)
        rows[static_cast<std::size_t>(a.records[view.indices[k]])].push_back(k);
    for (std::size_t p = 0; p < 3; ++p) {
        auto& d = parts[p];
        d.X = Matrix(rows[p].size(), kBaselineInputDim);
        for (std::size_t i = 0; i < rows[p].size(); ++i) {
            const std::size_t k = rows[p][i];
            const auto& r = c[view.indices[k]];
            auto x = d.X.row(i);
            for (std::size_t j = 0; j < kComorbidityCount; ++j) x[j] = r.comorbidities[j] ? 1.0 : 0.0;
            x[kComorbidityCount] = sd > 0.0 ? (r.age - mean) / sd : 0.0;
            x[kComorbidityCount + 1] = r.sex == Sex::Male ? 1.0 : 0.0;
            d.y.push_back(view.labels[k]);
            if (p == static_cast<std::size_t>(Partition::Test)) test_groups.push_back(r.patient_id);
        }
    }
    TrainConfig learner = opt.learner;
    learner.architecture = Architecture::Linear;
    learner.seed = derive_seed(opt.seed, {0x1EA4});
    const auto& train = parts[static_cast<std::size_t>(Partition::Train)];
    const auto& val = parts[static_cast<std::size_t>(Partition::Val)];
    const auto& test = parts[static_cast<std::size_t>(Partition::Test)];
    const auto model = fit(train, val, TaskKind::binary(), learner);

    ScoredSet scored{predict_scores(model, test.X), test.y, test_groups};
    BootstrapOptions boot = opt.bootstrap;
    boot.seed = derive_seed(opt.seed, {0xB007});

    BaselineResult out;
    out.target = target;
    out.options = opt;
    out.auc = bootstrap_ci(scored, MetricKind::Auroc, boot);
    out.coefficient_names = baseline_input_names();
    out.coefficients.assign(model.params.weights.begin(), model.params.weights.begin() + kBaselineInputDim);
    out.intercept = model.params.weights[kBaselineInputDim];
    out.train_size = train.size();
    out.test_size = test.size();
    out.excluded_records = view.dropped;
    if (profile) out.bayes_oracle_auc = tabular_oracle_auc(*profile, target, opt.oracle_draws, derive_seed(opt.seed, {0x0AC1}));
    return out;
}

// ---------------------------------------------------------------------------
// Transfer evaluation
// ---------------------------------------------------------------------------

/// A binary demographic task, or age regression (scored by MAE).
struct TransferTask {
    bool age = false;
    BinaryTask binary = BinaryTask::sex(Sex::Male);

    static TransferTask parse(std::string_view s) {
        if (s == "age") return {true, BinaryTask::sex(Sex::Male)};
        return {false, BinaryTask::parse(s, "task")};
    }
    std::string to_string() const { return age ? "age" : binary.to_string(); }
};

struct TransferOptions {
    std::size_t train_patients = 0;  ///< 0 = the profile's n_patients
    std::size_t test_patients = 0;
    std::size_t train_size = 0;      ///< training records drawn from the train partition; 0 = all
    std::size_t eval_size = 4000;    ///< records per evaluation set; 0 = all
    SplitSpec split;
    TrainConfig learner;
    BootstrapOptions bootstrap;
    std::uint64_t train_seed = 0;
    std::uint64_t test_seed = 1;
};

struct TransferResult {
    std::string train_profile;
    std::string test_profile;
    TransferTask task;
    TransferOptions options;
    MetricEstimate internal;
    MetricEstimate external;
    double gap = 0.0;  ///< internal.point - external.point
};

namespace detail {

inline Subset labeled_sample(const Cohort& c, const std::vector<Partition>& parts, Partition p,
                             const TransferTask& task, std::size_t size, std::uint64_t seed) {
    SplitAssignment a;
    a.records = parts;
    if (!task.age) return natural_subset(c, a, p, task.binary, nullptr, size, seed);
    // Age regression: every record is labeled; target holds no class.
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (parts[i] == p) pool.push_back(i);
    if (pool.empty()) throw DataError("transfer: empty partition");
    if (size > 0 && size < pool.size()) {
        Rng rng(derive_seed(seed, {0x7A7, static_cast<std::uint64_t>(p)}));
        pool = rng.sample(std::move(pool), size);
        std::sort(pool.begin(), pool.end());
    }
    Subset s;
    s.partition = p;
    s.indices = std::move(pool);
    s.target.assign(s.indices.size(), 0);
    s.confounder.assign(s.indices.size(), -1);
    return s;
}

inline LabeledData transfer_data(const Cohort& c, const Subset& s, const TransferTask& task) {
    LabeledData d = labeled_features(c, s);
    if (task.age)
        for (std::size_t i = 0; i < s.size(); ++i) d.y[i] = c[s.indices[i]].age;
    return d;
}

}  // namespace detail

/// Fit on a cohort from train_profile; evaluate on its own test partition
/// (internal) and on a fresh cohort from test_profile (external).
inline TransferResult transfer_eval(const CohortProfile& train_profile, const CohortProfile& test_profile,
                                    const TransferTask& task, const TransferOptions& opt) {
    if (train_profile.feature_dim != test_profile.feature_dim)
        throw DataError("transfer: feature dimension mismatch (" + std::to_string(train_profile.feature_dim) + " vs " +
                        std::to_string(test_profile.feature_dim) + ")");
    opt.learner.validate();
    CohortProfile tp = train_profile;
    CohortProfile ep = test_profile;
    if (opt.train_patients) tp.n_patients = opt.train_patients;
    if (opt.test_patients) ep.n_patients = opt.test_patients;
    const Cohort source = generate_cohort(tp, {opt.train_seed});
    const Cohort target = generate_cohort(ep, {opt.test_seed});

    SplitSpec split = opt.split;
    split.seed = derive_seed(opt.train_seed, {0x5917});
    const SplitAssignment a = split_by_patient(source, split);
    const std::uint64_t seed = derive_seed(opt.train_seed, {0x7EA2, opt.test_seed});
    const auto train = detail::labeled_sample(source, a.records, Partition::Train, task, opt.train_size, derive_seed(seed, {1}));
    const auto val = detail::labeled_sample(source, a.records, Partition::Val, task, opt.eval_size, derive_seed(seed, {2}));
    const auto internal = detail::labeled_sample(source, a.records, Partition::Test, task, opt.eval_size, derive_seed(seed, {3}));
    const std::vector<Partition> all_test(target.size(), Partition::Test);
    const auto external = detail::labeled_sample(target, all_test, Partition::Test, task, opt.eval_size, derive_seed(seed, {4}));

    const TaskKind kind = task.age ? TaskKind::regression() : TaskKind::binary();
    const MetricKind metric = task.age ? MetricKind::Mae : MetricKind::Auroc;
    TrainConfig learner = opt.learner;
    learner.seed = derive_seed(seed, {5});
    const auto model = fit(detail::transfer_data(source, train, task), detail::transfer_data(source, val, task), kind, learner);

    auto evaluate = [&](const Cohort& c, const Subset& s, std::uint64_t boot_seed) {
        const auto data = detail::transfer_data(c, s, task);
        ScoredSet set = scored_set(c, s, predict_scores(model, data.X));
        set.labels = data.y;
        BootstrapOptions boot = opt.bootstrap;
        boot.seed = boot_seed;
        return bootstrap_ci(set, metric, boot);
    };
    TransferResult out;
    out.train_profile = train_profile.name;
    out.test_profile = test_profile.name;
    out.task = task;
    out.options = opt;
    out.internal = evaluate(source, internal, derive_seed(seed, {6}));
    out.external = evaluate(target, external, derive_seed(seed, {7}));
    out.gap = out.internal.point - out.external.point;
    return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const SplitSpec& s) {
    j = nlohmann::json{{"train", s.train}, {"val", s.val}, {"test", s.test}, {"seed", s.seed}};
}
inline void from_json(const nlohmann::json& j, SplitSpec& s) {
    s.train = j.at("train").get<double>();
    s.val = j.at("val").get<double>();
    s.test = j.at("test").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
}

inline void to_json(nlohmann::json& j, const BootstrapOptions& b) {
    j = nlohmann::json{{"n_bootstrap", b.n_bootstrap}, {"seed", b.seed}, {"level", b.level}, {"grouped", b.grouped}};
}
inline void from_json(const nlohmann::json& j, BootstrapOptions& b) {
    b.n_bootstrap = j.at("n_bootstrap").get<std::size_t>();
    b.seed = j.at("seed").get<std::uint64_t>();
    b.level = j.at("level").get<double>();
    b.grouped = j.at("grouped").get<bool>();
}

inline nlohmann::json cells_json(const CellCounts& c) {
    return nlohmann::json::array({nlohmann::json::array({c[0][0], c[0][1]}), nlohmann::json::array({c[1][0], c[1][1]})});
}
inline CellCounts cells_from_json(const nlohmann::json& j) {
    CellCounts c{};
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t k = 0; k < 2; ++k) c[t][k] = j.at(t).at(k).get<std::size_t>();
    return c;
}

inline void to_json(nlohmann::json& j, const SweepConfig& c) {
    j = nlohmann::json{{"bias_grid", c.bias_grid},
                       {"target", c.target.to_string()},
                       {"confounder", c.confounder.to_string()},
                       {"subset_size", c.subset_size},
                       {"eval_subset_size", c.eval_subset_size},
                       {"repeats", c.repeats},
                       {"eval_mode", std::string(to_token(c.eval_mode))},
                       {"learner", c.learner},
                       {"split", c.split},
                       {"bootstrap", c.bootstrap},
                       {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, SweepConfig& c) {
    c.bias_grid = j.at("bias_grid").get<std::vector<double>>();
    c.target = BinaryTask::parse(j.at("target").get<std::string>(), "target");
    c.confounder = BinaryTask::parse(j.at("confounder").get<std::string>(), "confounder");
    c.subset_size = j.at("subset_size").get<std::size_t>();
    c.eval_subset_size = j.at("eval_subset_size").get<std::size_t>();
    c.repeats = j.at("repeats").get<std::size_t>();
    c.eval_mode = parse_eval_mode(j.at("eval_mode").get<std::string>());
    c.learner = j.at("learner").get<TrainConfig>();
    c.split = j.at("split").get<SplitSpec>();
    c.bootstrap = j.at("bootstrap").get<BootstrapOptions>();
    c.seed = j.at("seed").get<std::uint64_t>();
}

inline void to_json(nlohmann::json& j, const SweepPoint& p) {
    j = nlohmann::json{{"bias", p.bias},
                       {"auc", p.auc},
                       {"repeats", p.repeats},
                       {"repeat_mean", p.repeat_mean},
                       {"repeat_min", p.repeat_min},
                       {"repeat_max", p.repeat_max},
                       {"train_size", p.train_size},
                       {"eval_size", p.eval_size},
                       {"train_cells", cells_json(p.train_cells)},
                       {"eval_cells", cells_json(p.eval_cells)}};
}
inline void from_json(const nlohmann::json& j, SweepPoint& p) {
    p.bias = j.at("bias").get<double>();
    p.auc = j.at("auc").get<MetricEstimate>();
    p.repeats = j.at("repeats").get<std::vector<MetricEstimate>>();
    p.repeat_mean = j.at("repeat_mean").get<double>();
    p.repeat_min = j.at("repeat_min").get<double>();
    p.repeat_max = j.at("repeat_max").get<double>();
    p.train_size = j.at("train_size").get<std::size_t>();
    p.eval_size = j.at("eval_size").get<std::size_t>();
    p.train_cells = cells_from_json(j.at("train_cells"));
    p.eval_cells = cells_from_json(j.at("eval_cells"));
}

inline void to_json(nlohmann::json& j, const SweepResult& r) {
    nlohmann::json ref = nlohmann::json::array();
    for (const auto& v : r.reference_curve) ref.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    j = nlohmann::json{{"kind", "sweep"},
                       {"config", r.config},
                       {"points", r.points},
                       {"shortcut_score", r.shortcut_score},
                       {"monotone", r.monotone},
                       {"reference_curve", ref},
                       {"excluded_records", r.excluded_records}};
}
inline void from_json(const nlohmann::json& j, SweepResult& r) {
    r.config = j.at("config").get<SweepConfig>();
    r.points = j.at("points").get<std::vector<SweepPoint>>();
    r.shortcut_score = j.at("shortcut_score").get<double>();
    r.monotone = j.at("monotone").get<bool>();
    r.reference_curve.clear();
    for (const auto& v : j.at("reference_curve"))
        r.reference_curve.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
    r.excluded_records = j.at("excluded_records").get<std::size_t>();
}

inline void to_json(nlohmann::json& j, const BaselineResult& r) {
    j = nlohmann::json{{"kind", "baseline"},
                       {"config",
                        {{"target", r.target.to_string()},
                         {"split", r.options.split},
                         {"learner", r.options.learner},
                         {"bootstrap", r.options.bootstrap},
                         {"oracle_draws", r.options.oracle_draws},
                         {"seed", r.options.seed}}},
                       {"auc", r.auc},
                       {"coefficient_names", r.coefficient_names},
                       {"coefficients", r.coefficients},
                       {"intercept", r.intercept},
                       {"bayes_oracle_auc", r.bayes_oracle_auc ? nlohmann::json(*r.bayes_oracle_auc) : nlohmann::json(nullptr)},
                       {"reference_auc", kReferenceComorbidityAuc},
                       {"train_size", r.train_size},
                       {"test_size", r.test_size},
                       {"excluded_records", r.excluded_records}};
}
inline void from_json(const nlohmann::json& j, BaselineResult& r) {
    const auto& cfg = j.at("config");
    r.target = BinaryTask::parse(cfg.at("target").get<std::string>(), "target");
    r.options.split = cfg.at("split").get<SplitSpec>();
    r.options.learner = cfg.at("learner").get<TrainConfig>();
    r.options.bootstrap = cfg.at("bootstrap").get<BootstrapOptions>();
    r.options.oracle_draws = cfg.at("oracle_draws").get<std::size_t>();
    r.options.seed = cfg.at("seed").get<std::uint64_t>();
    r.auc = j.at("auc").get<MetricEstimate>();
    r.coefficient_names = j.at("coefficient_names").get<std::vector<std::string>>();
    r.coefficients = j.at("coefficients").get<std::vector<double>>();
    r.intercept = j.at("intercept").get<double>();
    const auto& oracle = j.at("bayes_oracle_auc");
    r.bayes_oracle_auc = oracle.is_null() ? std::nullopt : std::optional<double>(oracle.get<double>());
    r.train_size = j.at("train_size").get<std::size_t>();
    r.test_size = j.at("test_size").get<std::size_t>();
    r.excluded_records = j.at("excluded_records").get<std::size_t>();
}

inline void to_json(nlohmann::json& j, const TransferResult& r) {
    j = nlohmann::json{{"kind", "transfer"},
                       {"config",
                        {{"train_profile", r.train_profile},
                         {"test_profile", r.test_profile},
                         {"task", r.task.to_string()},
                         {"train_patients", r.options.train_patients},
                         {"test_patients", r.options.test_patients},
                         {"train_size", r.options.train_size},
                         {"eval_size", r.options.eval_size},
                         {"split", r.options.split},
                         {"learner", r.options.learner},
                         {"bootstrap", r.options.bootstrap},
                         {"train_seed", r.options.train_seed},
                         {"test_seed", r.options.test_seed}}},
                       {"internal", r.internal},
                       {"external", r.external},
                       {"gap", r.gap}};
}
inline void from_json(const nlohmann::json& j, TransferResult& r) {
    const auto& cfg = j.at("config");
    r.train_profile = cfg.at("train_profile").get<std::string>();
    r.test_profile = cfg.at("test_profile").get<std::string>();
    r.task = TransferTask::parse(cfg.at("task").get<std::string>());
    r.options.train_patients = cfg.at("train_patients").get<std::size_t>();
    r.options.test_patients = cfg.at("test_patients").get<std::size_t>();
    r.options.train_size = cfg.at("train_size").get<std::size_t>();
    r.options.eval_size = cfg.at("eval_size").get<std::size_t>();
    r.options.split = cfg.at("split").get<SplitSpec>();
    r.options.learner = cfg.at("learner").get<TrainConfig>();
    r.options.bootstrap = cfg.at("bootstrap").get<BootstrapOptions>();
    r.options.train_seed = cfg.at("train_seed").get<std::uint64_t>();
    r.options.test_seed = cfg.at("test_seed").get<std::uint64_t>();
    r.internal = j.at("internal").get<MetricEstimate>();
    r.external = j.at("external").get<MetricEstimate>();
    r.gap = j.at("gap").get<double>();
}

/// Flat plot data: one row per repeat plus a pooled row (repeat = "pooled").
inline void write_sweep_csv(std::ostream& out, const SweepResult& r) {
    using detail::format_double;
    out << "bias,auc,ci_low,ci_high,repeat\n";
    for (const auto& p : r.points) {
        for (std::size_t k = 0; k < p.repeats.size(); ++k)
            out << format_double(p.bias) << ',' << format_double(p.repeats[k].point) << ','
                << format_double(p.repeats[k].ci_low) << ',' << format_double(p.repeats[k].ci_high) << ',' << k << '\n';
        out << format_double(p.bias) << ',' << format_double(p.auc.point) << ',' << format_double(p.auc.ci_low) << ','
            << format_double(p.auc.ci_high) << ",pooled\n";
    }
}

}  // namespace confaudit
