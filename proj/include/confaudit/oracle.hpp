#pragma once

// Bayes-optimal scorers under the known synthetic generative model.
//
// The tabular oracle sees what the comorbidity baseline sees (flags, age,
// sex) and scores log P(obs | positive) - log P(obs | negative), where each
// side mixes the races belonging to that class. The feature oracle scores
// feature vectors directly; it needs mutually orthogonal channel directions
// and no direct race signal, so that per-channel projections are
// conditionally independent given the latent demographics.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "confaudit/cohort.hpp"
#include "confaudit/learners.hpp"
#include "confaudit/metrics.hpp"
#include "confaudit/synthgen.hpp"

namespace confaudit {

namespace detail {

inline double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double log_normal_pdf(double x, double mean, double sd) noexcept {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double log_sum_exp(const std::vector<double>& v) noexcept {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

/// Log density of the generator's truncated-normal age for race r.
inline double log_age_density(const CohortProfile& p, std::size_t r, double age) noexcept {
    const double mu = p.age_mean + p.age_shift[r];
    const double mass = normal_cdf((kGeneratedAgeMax - mu) / p.age_sd) - normal_cdf((kGeneratedAgeMin - mu) / p.age_sd);
    return log_normal_pdf(age, mu, p.age_sd) - std::log(mass);
}

// Races with a defined label under the task, split by label.
inline std::array<std::vector<std::size_t>, 2> races_by_label(const BinaryTask& task) {
    std::array<std::vector<std::size_t>, 2> out;
    for (Race r : kAllRaces) {
        if (std::find(task.excluded_races.begin(), task.excluded_races.end(), r) != task.excluded_races.end())
            continue;
        out[r == task.positive_race ? 1 : 0].push_back(index_of(r));
    }
    return out;
}

}  // namespace detail

/// Which observations the tabular oracle conditions on.
struct TabularOracleInputs {
    bool comorbidities = true;
    bool age = true;
    bool sex = true;
};

/// Log-likelihood-ratio score for a race-attribute task.
inline double tabular_oracle_score(const CohortProfile& p, const BinaryTask& task, const PatientDraw& obs,
                                   const TabularOracleInputs& inputs = {}) {
    if (task.attribute != Attribute::Race) throw DataError("tabular oracle supports race-attribute tasks only");
    const auto groups = detail::races_by_label(task);
    std::array<double, 2> side{};
    std::vector<double> terms;
    for (int label = 0; label < 2; ++label) {
        terms.clear();
        double mass = 0.0;
        for (std::size_t r : groups[static_cast<std::size_t>(label)]) {
            if (p.race_marginals[r] <= 0.0) continue;
            mass += p.race_marginals[r];
            double lp = std::log(p.race_marginals[r]);
            if (inputs.sex) lp += std::log(obs.sex == Sex::Male ? p.male_fraction[r] : 1.0 - p.male_fraction[r]);
            if (inputs.age) lp += detail::log_age_density(p, r, obs.age);
            if (inputs.comorbidities)
                for (std::size_t j = 0; j < kComorbidityCount; ++j)
                    lp += std::log(obs.comorbidities[j] ? p.prevalence[j][r] : 1.0 - p.prevalence[j][r]);
            terms.push_back(lp);
        }
        if (terms.empty()) throw DataError("tabular oracle: no race with positive mass for label " + std::to_string(label));
        side[static_cast<std::size_t>(label)] = detail::log_sum_exp(terms) - std::log(mass);
    }
    return side[1] - side[0];
}

/// Monte Carlo AUROC of the tabular oracle over `draws` labeled patients.
inline double tabular_oracle_auc(const CohortProfile& p, const BinaryTask& task, std::size_t draws,
                                 std::uint64_t seed, const TabularOracleInputs& inputs = {}) {
    p.validate();
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(draws);
    labels.reserve(draws);
    StudyRecord probe;
    for (std::uint64_t i = 0; scores.size() < draws; ++i) {
        Rng rng(derive_seed(seed, {0x0AC1E, i}));
        const PatientDraw d = draw_patient(p, rng);
        probe.race = d.race;
        probe.sex = d.sex;
        const auto label = task.label(probe);
        if (!label) continue;
        scores.push_back(tabular_oracle_score(p, task, d, inputs));
        labels.push_back(*label);
    }
    return auroc(scores, labels);
}

// ---------------------------------------------------------------------------
// Feature-level oracle
// ---------------------------------------------------------------------------

/// Mixture weights of the evaluation population over (target, confounder)
/// cells: weight[t][c] = P(confounder = c | target = t).
using CellWeights = std::array<std::array<double, 2>, 2>;

inline CellWeights matched_bias_weights(double bias) {
    CellWeights w{};
    w[1][1] = bias;
    w[1][0] = 1.0 - bias;
    w[0][0] = bias;
    w[0][1] = 1.0 - bias;
    return w;
}

class FeatureOracle {
public:
    FeatureOracle(const CohortProfile& p, const BinaryTask& target, const BinaryTask& confounder,
                  std::size_t age_nodes = 321)
        : profile_(p), target_(target), confounder_(confounder) {
        p.validate();
        if (p.has_direct_race_signal()) throw DataError("feature oracle requires w_race_direct = 0");
        if (target.attribute == confounder.attribute)
            throw DataError("feature oracle: target and confounder must be different attributes");
        add_channel(p.w_sex, Channel::Sex, 0);
        add_channel(p.w_age, Channel::Age, 0);
        for (std::size_t j = 0; j < kComorbidityCount; ++j) add_channel(p.w_comorb[j], Channel::Comorbidity, j);
        for (std::size_t a = 0; a < channels_.size(); ++a)
            for (std::size_t b = a + 1; b < channels_.size(); ++b) {
                double dot = 0.0;
                for (std::size_t k = 0; k < p.feature_dim; ++k) dot += channels_[a].unit[k] * channels_[b].unit[k];
                if (std::abs(dot) > 1e-9) throw DataError("feature oracle requires orthogonal channel directions");
            }

        // Simpson nodes over the truncated age range, with per-race log weights.
        if (age_nodes % 2 == 0) ++age_nodes;
        const double h = (kGeneratedAgeMax - kGeneratedAgeMin) / static_cast<double>(age_nodes - 1);
        for (std::size_t k = 0; k < age_nodes; ++k) {
            const double age = kGeneratedAgeMin + h * static_cast<double>(k);
            age_z_.push_back((age - p.age_mean) / p.age_sd);
            const double simpson = (k == 0 || k + 1 == age_nodes) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            for (std::size_t r = 0; r < kRaceCount; ++r)
                age_log_w_[r].push_back(detail::log_age_density(p, r, age) + std::log(simpson * h / 3.0));
        }

        // (race, sex) components of each (target, confounder) cell.
        StudyRecord probe;
        for (Race r : kAllRaces) {
            for (Sex s : {Sex::Male, Sex::Female}) {
                probe.race = r;
                probe.sex = s;
                const auto t = target.label(probe);
                const auto c = confounder.label(probe);
                const double mass = p.race_marginals[index_of(r)] *
                                    (s == Sex::Male ? p.male_fraction[index_of(r)] : 1.0 - p.male_fraction[index_of(r)]);
                if (!t || !c || mass <= 0.0) continue;
                cells_[static_cast<std::size_t>(*t)][static_cast<std::size_t>(*c)].push_back({index_of(r), s, mass});
            }
        }
    }

    /// Population cell weights P(c | t) over the labeled records.
    CellWeights natural_weights() const {
        CellWeights w{};
        for (std::size_t t = 0; t < 2; ++t) {
            double total = 0.0;
            for (std::size_t c = 0; c < 2; ++c) total += cell_mass(t, c);
            for (std::size_t c = 0; c < 2; ++c) w[t][c] = total > 0.0 ? cell_mass(t, c) / total : 0.0;
        }
        return w;
    }

    /// log P(x | target = 1) - log P(x | target = 0) under the cell weights.
    double score(std::span<const double> x, const CellWeights& weights) const {
        std::vector<double> proj(channels_.size());
        for (std::size_t a = 0; a < channels_.size(); ++a) {
            double v = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) v += channels_[a].unit[k] * x[k];
            proj[a] = v;
        }
        std::array<double, kRaceCount> race_term{};
        std::array<bool, kRaceCount> race_done{};
        std::array<double, 2> side{};
        std::vector<double> terms;
        for (std::size_t t = 0; t < 2; ++t) {
            terms.clear();
            for (std::size_t c = 0; c < 2; ++c) {
                const double mass = cell_mass(t, c);
                if (weights[t][c] <= 0.0 || mass <= 0.0) continue;
                for (const auto& comp : cells_[t][c]) {
                    if (!race_done[comp.race]) {
                        race_term[comp.race] = race_log_density(proj, comp.race);
                        race_done[comp.race] = true;
                    }
                    terms.push_back(std::log(weights[t][c]) + std::log(comp.mass / mass) + race_term[comp.race] +
                                    sex_log_density(proj, comp.sex));
                }
            }
            side[t] = terms.empty() ? -std::numeric_limits<double>::infinity() : detail::log_sum_exp(terms);
        }
        return side[1] - side[0];
    }

    std::vector<double> scores(const Matrix& X, const CellWeights& weights) const {
        std::vector<double> out(X.rows);
        for (std::size_t i = 0; i < X.rows; ++i) out[i] = score(X.row(i), weights);
        return out;
    }

private:
    enum class Channel { Sex, Age, Comorbidity };
    struct ChannelInfo {
        Channel kind;
        std::size_t index;
        double norm;
        std::vector<double> unit;
    };
    struct Component {
        std::size_t race;
        Sex sex;
        double mass;
    };

    void add_channel(const std::vector<double>& w, Channel kind, std::size_t index) {
        double n2 = 0.0;
        for (double v : w) n2 += v * v;
        if (n2 == 0.0) return;
        const double n = std::sqrt(n2);
        std::vector<double> unit(w.size());
        for (std::size_t k = 0; k < w.size(); ++k) unit[k] = w[k] / n;
        channels_.push_back({kind, index, n, std::move(unit)});
    }

    double cell_mass(std::size_t t, std::size_t c) const noexcept {
        double m = 0.0;
        for (const auto& comp : cells_[t][c]) m += comp.mass;
        return m;
    }

    double sex_log_density(const std::vector<double>& proj, Sex s) const {
        const double sd = profile_.noise_sd;
        for (std::size_t a = 0; a < channels_.size(); ++a)
            if (channels_[a].kind == Channel::Sex)
                return detail::log_normal_pdf(proj[a], s == Sex::Male ? channels_[a].norm : 0.0, sd);
        return 0.0;
    }

    // Age and comorbidity channels given race (sex handled separately).
    double race_log_density(const std::vector<double>& proj, std::size_t r) const {
        const double sd = profile_.noise_sd;
        double lp = 0.0;
        std::vector<double> terms(age_z_.size());
        for (std::size_t a = 0; a < channels_.size(); ++a) {
            const auto& ch = channels_[a];
            if (ch.kind == Channel::Age) {
                for (std::size_t k = 0; k < age_z_.size(); ++k)
                    terms[k] = age_log_w_[r][k] + detail::log_normal_pdf(proj[a], ch.norm * age_z_[k], sd);
                lp += detail::log_sum_exp(terms);
            } else if (ch.kind == Channel::Comorbidity) {
                const double prev = profile_.prevalence[ch.index][r];
                const double on = detail::log_normal_pdf(proj[a], ch.norm, sd);
                const double off = detail::log_normal_pdf(proj[a], 0.0, sd);
                const double m = std::max(on, off);
                lp += m + std::log(prev * std::exp(on - m) + (1.0 - prev) * std::exp(off - m));
            }
        }
        return lp;
    }

    CohortProfile profile_;
    BinaryTask target_;
    BinaryTask confounder_;
    std::vector<ChannelInfo> channels_;
    std::vector<double> age_z_;
    std::array<std::vector<double>, kRaceCount> age_log_w_;
    std::array<std::array<std::vector<Component>, 2>, 2> cells_;
};

}  // namespace confaudit
