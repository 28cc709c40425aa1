// Acceptance run: one PASS/FAIL line per criterion.
//
// Expected values come from independent computations in this file (pair
// counting, hand-derived cell counts, direct cohort recounts), never from the
// library routine under test.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "confaudit/audit.hpp"
#include "confaudit/cli.hpp"

using namespace confaudit;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string est(const MetricEstimate& e) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.4f [%.4f, %.4f]", e.point, e.ci_low, e.ci_high);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Direct pair counting over every (positive, negative) pair.
double pair_count_auc(const std::vector<double>& s, const std::vector<int>& y) {
    double num = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                pairs += 1.0;
                num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
            }
    return num / pairs;
}

// ---------------------------------------------------------------------------

Outcome criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(0xA11C);
    std::size_t mismatches = 0, with_ties = 0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 2 + rng.below(199);
        const double grid = static_cast<double>(1 + rng.below(25));
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = std::round(rng.normal() * grid) / grid;
            y[i] = static_cast<int>(rng.below(2));
        }
        y[0] = 1;
        y[1] = 0;
        std::set<double> distinct(s.begin(), s.end());
        if (distinct.size() < n) ++with_ties;
        if (auroc(s, y) != pair_count_auc(s, y)) ++mismatches;
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < 10.0,
            std::to_string(mismatches) + " mismatches over 1000 instances (" + std::to_string(with_ties) +
                " with ties), " + fmt("%.2f s", secs)};
}

Outcome criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(0x62AD);
    double worst = 0.0;
    std::size_t checks = 0, failed = 0;
    const std::vector<TaskKind> tasks{TaskKind::binary(), TaskKind::multiclass(3), TaskKind::regression()};
    for (const auto& task : tasks) {
        for (Architecture a : {Architecture::Linear, Architecture::Mlp}) {
            for (int inst = 0; inst < 100; ++inst) {
                const std::size_t in = 2 + rng.below(6), hidden = 2 + rng.below(6), n = 2 + rng.below(12);
                ModelParams p = ModelParams::zeros(a, in, hidden, task.outputs());
                for (double& w : p.weights) w = rng.normal(0.0, 0.8);
                Matrix X(n, in);
                for (double& v : X.data) v = rng.normal();
                std::vector<double> y(n);
                for (double& v : y) {
                    if (task.type == TaskType::Regression) v = rng.normal(0.0, 2.0);
                    else v = static_cast<double>(rng.below(task.outputs() == 1 ? 2 : task.outputs()));
                }
                const auto r = grad_check(p, X, y, task);
                worst = std::max(worst, r.max_relative_error);
                ++checks;
                if (!(r.max_relative_error < 1e-5)) ++failed;
            }
        }
    }
    const double secs = seconds_since(t0);
    return {failed == 0 && secs < 30.0,
            std::to_string(checks) + " instances (BCE/CE/L2 x Linear/MLP), max relative error " +
                fmt("%.2e", worst) + ", " + fmt("%.2f s", secs)};
}

Outcome criterion_3() {
    auto profile = make_default_profile(DefaultProfile::CsmcLike);
    profile.n_patients = 30000;
    const Cohort c = generate_cohort(profile, {0xB1A5});
    SplitSpec split;
    split.seed = 31;
    const SplitAssignment a = split_by_patient(c, split);
    const std::size_t n = 2000, eval = 400;
    std::vector<std::string> problems;
    std::set<std::size_t> train_sizes;
    for (double b : {0.5, 0.6, 0.7, 0.8, 0.9, 1.0}) {
        BiasSpec spec;
        spec.bias = b;
        spec.subset_size = n;
        spec.eval_subset_size = eval;
        spec.seed = 77;
        const auto subsets = build_biased_subset(c, a, spec);
        std::map<Partition, std::set<std::string>> patients;
        for (const auto& [part, sub] : subsets) {
            const std::size_t m = part == Partition::Train ? n : eval;
            // b = 0.5 is an even male/female mix in both race groups; b = 1.0
            // puts every White record in the male cell and every non-White
            // record in the female cell. In between, b * M/2 records are
            // congruent; every grid value makes that product an integer here.
            const auto congruent = static_cast<std::size_t>(std::llround(b * static_cast<double>(m / 2)));
            std::size_t wm = 0, wf = 0, nm = 0, nf = 0;
            for (std::size_t i : sub.indices) {
                const auto& r = c[i];
                if (a.records[i] != part) problems.push_back("record outside its partition");
                patients[part].insert(r.patient_id);
                const bool is_white = r.race == Race::White;
                const bool is_male = r.sex == Sex::Male;
                if (r.race == Race::Other || r.race == Race::Unknown) problems.push_back("excluded race sampled");
                (is_white ? (is_male ? wm : wf) : (is_male ? nm : nf))++;
            }
            if (sub.size() != m) problems.push_back("size " + std::to_string(sub.size()));
            if (wm != congruent || nf != congruent || wf != m / 2 - congruent || nm != m / 2 - congruent)
                problems.push_back(fmt("cells wrong at b=%.1f", b));
            if (part == Partition::Train) train_sizes.insert(sub.size());
        }
        for (Partition p : kAllPartitions)
            for (Partition q : kAllPartitions)
                if (p < q)
                    for (const auto& id : patients[p])
                        if (patients[q].count(id)) problems.push_back("patient overlap " + id);
    }
    // The split itself never puts one patient in two partitions.
    std::map<std::string, Partition> seen;
    for (std::size_t i = 0; i < c.size(); ++i) {
        auto [it, fresh] = seen.emplace(c[i].patient_id, a.records[i]);
        if (!fresh && it->second != a.records[i]) problems.push_back("split overlap " + c[i].patient_id);
    }
    if (train_sizes.size() != 1) problems.push_back("N differs across b");
    return {problems.empty(), problems.empty() ? "cell counts exact for b in 0.5..1.0 at N=2000 (eval 400), N constant, "
                                                  "no patient overlap"
                                                : problems.front() + " (" + std::to_string(problems.size()) +
                                                      " problems)"};
}

// Shared by criteria 4 to 6.
struct SweepFixture {
    Cohort cohort;
    SweepConfig cfg;
    SweepResult race;
    double runtime = 0.0;
};

CohortProfile sweep_profile() {
    auto p = make_default_profile(DefaultProfile::CsmcLike);
    p.n_patients = 160000;
    return p;
}

SweepConfig sweep_config(std::uint64_t seed) {
    SweepConfig cfg;
    cfg.subset_size = 20000;
    cfg.eval_subset_size = 4000;
    cfg.repeats = 3;
    cfg.seed = seed;
    return cfg;
}

SweepFixture& fixture() {
    static SweepFixture f = [] {
        SweepFixture s;
        const auto t0 = std::chrono::steady_clock::now();
        s.cohort = generate_cohort(sweep_profile(), {derive_seed(2024, {0xC040})});
        s.cfg = sweep_config(2024);
        s.race = run_bias_sweep(s.cohort, s.cfg);
        s.runtime = seconds_since(t0);
        return s;
    }();
    return f;
}

Outcome criterion_4() {
    auto& f = fixture();
    const auto& pts = f.race.points;
    const auto sex_task = natural_task_auc(f.cohort, BinaryTask::sex(), f.cfg);
    const double low = pts.front().auc.point;
    const double high = pts.back().auc.point;
    const bool ok_low = low >= 0.45 && low <= 0.57;
    const bool ok_high = std::abs(high - sex_task.point) <= 0.03;
    const bool direct_zero = !sweep_profile().has_direct_race_signal();
    std::string curve;
    for (const auto& p : pts) curve += (curve.empty() ? "" : " ") + fmt("%.3f", p.auc.point);
    return {ok_low && ok_high && f.race.monotone && direct_zero && f.runtime < 600.0,
            "AUC(0.5) " + est(pts.front().auc) + ", AUC(1.0) " + est(pts.back().auc) + ", sex task " +
                est(sex_task) + ", |diff| " + fmt("%.4f", std::abs(high - sex_task.point)) + ", curve " + curve +
                (f.race.monotone ? ", monotone" : ", NOT monotone") + fmt(", sweep %.0f s", f.runtime)};
}

Outcome criterion_5() {
    auto& f = fixture();
    SweepConfig cfg = f.cfg;
    cfg.target = BinaryTask::sex(Sex::Male);
    cfg.confounder = BinaryTask::race(Race::White);
    const auto r = run_bias_sweep(f.cohort, cfg);
    double lo = 1.0, hi = 0.0;
    std::string curve;
    for (const auto& p : r.points) {
        lo = std::min(lo, p.auc.point);
        hi = std::max(hi, p.auc.point);
        curve += (curve.empty() ? "" : " ") + fmt("%.3f", p.auc.point);
    }
    return {hi - lo <= 0.05, "sex-target curve " + curve + ", max - min " + fmt("%.4f", hi - lo)};
}

Outcome criterion_6() {
    auto& f = fixture();
    SweepConfig cfg = f.cfg;
    cfg.bias_grid = {1.0};
    cfg.eval_mode = EvalMode::NaturalTest;
    const auto natural = run_bias_sweep(f.cohort, cfg);
    const auto& matched = f.race.points.back().auc;
    const double gap = matched.point - natural.points[0].auc.point;
    return {gap >= 0.15, "b=1.0 matched " + est(matched) + ", natural " + est(natural.points[0].auc) + ", gap " +
                             fmt("%.4f", gap)};
}

Outcome criterion_7() {
    const auto p = make_default_profile(DefaultProfile::CsmcLike);
    const Cohort c = generate_cohort(p, {derive_seed(7, {0xC040})});
    BaselineOptions opt;
    opt.seed = 7;
    opt.oracle_draws = 200000;
    const auto r = confounder_baseline(c, BinaryTask::race(Race::White), opt, &p);
    const double diff = std::abs(r.auc.point - *r.bayes_oracle_auc);
    return {diff <= 0.05, "logistic AUC " + est(r.auc) + ", Bayes oracle " + fmt("%.4f", *r.bayes_oracle_auc) +
                              " (200,000 draws), |diff| " + fmt("%.4f", diff) + ", published real-data 0.62"};
}

Outcome criterion_8() {
    auto profile = sweep_profile();
    profile.zero_signal_channels();
    std::size_t points = 0, covered = 0;
    std::string misses;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Cohort c = generate_cohort(profile, {derive_seed(seed, {0xC040})});
        const auto r = run_bias_sweep(c, sweep_config(seed));
        for (const auto& p : r.points) {
            ++points;
            if (p.auc.contains(0.5)) {
                ++covered;
            } else {
                misses += fmt(" seed %.0f", static_cast<double>(seed)) + fmt(" b=%.1f ", p.bias) + est(p.auc) + ";";
            }
        }
    }
    return {covered == points, std::to_string(covered) + "/" + std::to_string(points) +
                                   " sweep-point 95% CIs contain 0.5 over seeds 1..5" +
                                   (misses.empty() ? "" : "; misses:" + misses)};
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

Outcome criterion_9() {
    const auto root = std::filesystem::temp_directory_path() / ("confaudit_acceptance_" + std::to_string(::getpid()));
    std::filesystem::remove_all(root);
    std::filesystem::create_directories(root);
    const auto ini = (root / "run.ini").string();
    std::ofstream(ini) << "[run]\nseed = 99\n[cohort]\nn_patients = 30000\n"
                          "[sweep]\nsubset_size = 2000\neval_subset_size = 800\nrepeats = 2\n"
                          "[bootstrap]\nn_bootstrap = 500\n[baseline]\noracle_draws = 20000\n"
                          "[transfer]\ntrain_patients = 8000\ntest_patients = 4000\n";
    std::vector<std::string> problems;
    std::size_t compared = 0;
    for (const std::string cmd : {"gen", "split", "sweep", "baseline", "transfer"}) {
        for (const char* run : {"a", "b"}) {
            std::ostringstream out, err;
            const int code = run_command({"confaudit", cmd, "--config", ini, "--out", (root / run).string()}, out, err);
            if (code != 0) problems.push_back(cmd + " exited " + std::to_string(code) + ": " + err.str());
        }
    }
    std::ostringstream out, err;
    for (const char* run : {"a", "b"}) {
        const auto dir = root / run;
        if (run_command({"confaudit", "report", (dir / "sweep.json").string(), (dir / "baseline.json").string(),
                         (dir / "transfer.json").string(), "--out", (dir / "report").string()},
                        out, err) != 0)
            problems.push_back("report failed: " + err.str());
    }
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root / "a")) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        if (name.find(".provenance.") != std::string::npos) continue;
        const auto rel = std::filesystem::relative(entry.path(), root / "a");
        ++compared;
        if (slurp(entry.path()) != slurp(root / "b" / rel)) problems.push_back(rel.string() + " differs");
    }
    std::filesystem::remove_all(root);
    return {problems.empty() && compared >= 8,
            problems.empty() ? std::to_string(compared) + " artifacts byte-identical across reruns "
                                                          "(gen, split, sweep, baseline, transfer, report)"
                             : problems.front()};
}

Outcome criterion_10() {
    Rng rng(0xB007);
    auto draw = [&](std::size_t n) {
        ScoredSet s;
        for (std::size_t i = 0; i < n; ++i) {
            const int y = static_cast<int>(i % 2);
            s.labels.push_back(y);
            s.scores.push_back(rng.normal(y ? 1.0 : 0.0, 1.0));
        }
        return s;
    };
    BootstrapOptions opt;
    opt.n_bootstrap = 4000;
    opt.seed = 10;
    std::vector<std::string> problems;
    std::vector<double> widths;
    for (std::size_t n : {250, 1000, 4000}) {
        const auto s = draw(n);
        const auto e = bootstrap_ci(s, MetricKind::Auroc, opt);
        std::vector<int> y(s.labels.begin(), s.labels.end());
        if (e.point != pair_count_auc(s.scores, y)) problems.push_back("point != full-sample AUC");
        std::vector<double> truth(n);
        for (std::size_t i = 0; i < n; ++i) truth[i] = s.scores[i] + rng.normal(0.0, 3.0);
        const auto m = bootstrap_ci({s.scores, truth, {}}, MetricKind::Mae, opt);
        double abs_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) abs_sum += std::abs(s.scores[i] - truth[i]);
        if (std::abs(m.point - abs_sum / static_cast<double>(n)) > 1e-12) problems.push_back("point != full-sample MAE");
        widths.push_back(e.ci_high - e.ci_low);
    }
    const double r1 = widths[0] / widths[1], r2 = widths[1] / widths[2];
    for (double r : {r1, r2})
        if (r < 1.4 || r > 2.6) problems.push_back(fmt("width ratio %.3f outside 2 +/- 30%%", r));
    return {problems.empty(), fmt("width ratios per 4x n: %.3f", r1) + fmt(", %.3f", r2) +
                                  "; points equal full-sample AUROC and MAE" +
                                  (problems.empty() ? "" : "; " + problems.front())};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AUROC oracle equivalence", criterion_1},
        {"Gradient correctness", criterion_2},
        {"Bias-construction exactness", criterion_3},
        {"Sweep phenomenon", criterion_4},
        {"Confounder stability", criterion_5},
        {"Deployment gap", criterion_6},
        {"Comorbidity baseline", criterion_7},
        {"Null soundness", criterion_8},
        {"Determinism", criterion_9},
        {"Bootstrap behavior", criterion_10}};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s [PRIMARY] criterion %zu: %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
