#pragma once

// Deterministic synthetic cohort generator.
//
// Per patient: race ~ marginals, sex ~ Bernoulli(male_fraction[race]),
// age ~ Normal(age_mean + age_shift[race], age_sd) truncated to [18, 100],
// comorbidity j ~ Bernoulli(prevalence[j][race]) independently.
// Per study:   x = sex_bit * w_sex + z_age * w_age + sum_j c_j * w_comorb[j]
//                  + w_race_direct[race] + eps,   eps ~ N(0, noise_sd^2 I)
// where z_age = (age - age_mean) / age_sd. With w_race_direct = 0, race
// reaches the features only through sex, age and comorbidities.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "confaudit/cohort.hpp"
#include "confaudit/ini.hpp"
#include "confaudit/rng.hpp"

namespace confaudit {

inline constexpr double kGeneratedAgeMin = 18.0;
inline constexpr double kGeneratedAgeMax = 100.0;

using RaceTable = std::array<double, kRaceCount>;

struct CohortProfile {
    std::string name;
    std::size_t n_patients = 0;
    double studies_per_patient_mean = 1.0;  ///< studies = 1 + Poisson(mean - 1)
    double age_mean = 0.0;
    double age_sd = 1.0;
    RaceTable race_marginals{};
    RaceTable male_fraction{};
    RaceTable age_shift{};  ///< added to age_mean per race
    std::array<RaceTable, kComorbidityCount> prevalence{};
    std::size_t feature_dim = 0;
    std::vector<double> w_sex;
    std::vector<double> w_age;
    std::array<std::vector<double>, kComorbidityCount> w_comorb;
    std::array<std::vector<double>, kRaceCount> w_race_direct;
    double noise_sd = 1.0;

    void validate() const {
        auto prob = [](double p, const std::string& what) {
            if (!(p >= 0.0 && p <= 1.0))
                throw ConfigError(what, "profile: " + what + " = " + detail::format_double(p) +
                                            " is not a probability");
        };
        double total = 0.0;
        for (Race r : kAllRaces) {
            prob(race_marginals[index_of(r)], "race_marginals." + std::string(to_token(r)));
            prob(male_fraction[index_of(r)], "male_fraction." + std::string(to_token(r)));
            if (!std::isfinite(age_shift[index_of(r)]))
                throw ConfigError("age_shift", "profile: non-finite age shift");
            total += race_marginals[index_of(r)];
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw ConfigError("race_marginals",
                              "profile: race marginals sum to " + detail::format_double(total) + ", not 1");
        for (std::size_t j = 0; j < kComorbidityCount; ++j)
            for (Race r : kAllRaces)
                prob(prevalence[j][index_of(r)],
                     "prevalence." + comorbidity_column(j) + "." + std::string(to_token(r)));
        if (!(noise_sd > 0.0) || !std::isfinite(noise_sd))
            throw ConfigError("noise_sd", "profile: noise_sd must be > 0");
        if (!(age_sd > 0.0) || !std::isfinite(age_sd))
            throw ConfigError("age_sd", "profile: age_sd must be > 0");
        if (!std::isfinite(age_mean)) throw ConfigError("age_mean", "profile: age_mean must be finite");
        if (!(studies_per_patient_mean >= 1.0))
            throw ConfigError("studies_per_patient_mean", "profile: studies_per_patient_mean must be >= 1");
        auto dim = [&](const std::vector<double>& v, const std::string& what) {
            if (v.size() != feature_dim)
                throw ConfigError(what, "profile: coefficient vector " + what + " has length " +
                                            std::to_string(v.size()) + ", expected feature_dim " +
                                            std::to_string(feature_dim));
            for (double x : v)
                if (!std::isfinite(x)) throw ConfigError(what, "profile: non-finite coefficient in " + what);
        };
        dim(w_sex, "w_sex");
        dim(w_age, "w_age");
        for (std::size_t j = 0; j < kComorbidityCount; ++j) dim(w_comorb[j], "w_" + comorbidity_column(j));
        for (Race r : kAllRaces) dim(w_race_direct[index_of(r)], "w_race_" + std::string(to_token(r)));
    }

    bool has_direct_race_signal() const noexcept {
        for (const auto& v : w_race_direct)
            for (double x : v)
                if (x != 0.0) return true;
        return false;
    }

    /// Zero the sex, age and comorbidity channels (pure-noise features).
    void zero_signal_channels() {
        std::fill(w_sex.begin(), w_sex.end(), 0.0);
        std::fill(w_age.begin(), w_age.end(), 0.0);
        for (auto& w : w_comorb) std::fill(w.begin(), w.end(), 0.0);
    }

    friend bool operator==(const CohortProfile&, const CohortProfile&) = default;
};

enum class DefaultProfile { CsmcLike, ShcLike };

namespace detail {

inline RaceTable normalized_counts(const RaceTable& counts) {
    double total = 0.0;
    for (double c : counts) total += c;
    RaceTable out{};
    for (std::size_t i = 0; i < kRaceCount; ++i) out[i] = counts[i] / total;
    return out;
}

// Comorbidity prevalence by (White, Black, Asian, all-race total), in percent.
inline constexpr std::array<std::array<double, 4>, kComorbidityCount> kPrevalencePct{{
    {29.83, 24.83, 27.46, 28.81},
    {43.50, 52.99, 45.98, 45.26},
    {59.96, 71.12, 61.51, 61.92},
    {23.34, 33.58, 33.71, 25.90},
    {10.58, 16.97, 10.78, 11.64},
    {6.54, 5.90, 3.15, 6.14},
    {0.95, 1.40, 0.87, 1.01},
    {4.38, 8.69, 2.61, 4.93},
    {12.83, 16.80, 14.81, 13.65},
    {28.51, 37.99, 27.09, 29.94},
    {16.13, 14.06, 14.28, 15.63},
    {25.56, 27.22, 26.26, 25.89},
    {35.96, 28.26, 35.80, 34.69},
    {24.95, 41.10, 31.04, 28.11},
    {6.66, 4.77, 7.76, 6.45},
    {6.45, 10.02, 2.97, 6.73},
    {6.23, 8.46, 5.20, 6.51},
}};

// Calibrated feature model: one orthogonal axis per channel, unit noise.
// sex -> axis 0, age -> axis 1, comorbidity j -> axis 2 + j, axes 19.. noise only.
inline constexpr std::size_t kDefaultFeatureDim = 24;
inline constexpr double kDefaultSexWeight = 1.66;
inline constexpr double kDefaultAgeWeight = 1.0;
inline constexpr double kDefaultComorbidityWeight = 0.3;

}  // namespace detail

inline CohortProfile make_default_profile(DefaultProfile which) {
    CohortProfile p;
    using detail::normalized_counts;
    // Race order: WHITE, BLACK, ASIAN, AMERICAN_INDIAN, PACIFIC_ISLANDER, OTHER, UNKNOWN.
    if (which == DefaultProfile::CsmcLike) {
        p.name = "csmc_like";
        p.n_patients = 28450;
        p.age_mean = 66.5;
        p.age_sd = 16.4;
        p.race_marginals = normalized_counts({19519, 4058, 2162, 65, 87, 1980, 579});
        const double overall_male = 96721.0 / 168252.0;
        p.male_fraction = {73925.0 / 126393.0, 14791.0 / 27318.0, 8005.0 / 14541.0,
                           overall_male,       overall_male,       overall_male,
                           overall_male};
        const double overall_age = 66.69;
        p.age_shift = {67.68 - overall_age, 63.0 - overall_age, 65.1 - overall_age, 0, 0, 0, 0};
    } else {
        p.name = "shc_like";
        p.n_patients = 99909;
        p.age_mean = 59.9;
        p.age_sd = 17.7;
        p.race_marginals = normalized_counts({56498, 4826, 14197, 267, 1428, 17452, 5241});
        const double overall_male = 42037.0 / 75359.0;
        p.male_fraction = {32150.0 / 56367.0, 2490.0 / 4814.0, 7397.0 / 14178.0,
                           overall_male,      overall_male,    overall_male,
                           overall_male};
        const double overall_age = 61.15;
        p.age_shift = {61.85 - overall_age, 56.21 - overall_age, 60.07 - overall_age, 0, 0, 0, 0};
    }
    // Only the CSMC-like population has a comorbidity table; both profiles share it.
    for (std::size_t j = 0; j < kComorbidityCount; ++j) {
        const auto& row = detail::kPrevalencePct[j];
        for (Race r : kAllRaces) {
            double pct = row[3];
            if (r == Race::White) pct = row[0];
            if (r == Race::Black) pct = row[1];
            if (r == Race::Asian) pct = row[2];
            p.prevalence[j][index_of(r)] = pct / 100.0;
        }
    }
    const std::size_t d = detail::kDefaultFeatureDim;
    p.feature_dim = d;
    p.noise_sd = 1.0;
    p.w_sex.assign(d, 0.0);
    p.w_sex[0] = detail::kDefaultSexWeight;
    p.w_age.assign(d, 0.0);
    p.w_age[1] = detail::kDefaultAgeWeight;
    for (std::size_t j = 0; j < kComorbidityCount; ++j) {
        p.w_comorb[j].assign(d, 0.0);
        p.w_comorb[j][2 + j] = detail::kDefaultComorbidityWeight;
    }
    for (auto& w : p.w_race_direct) w.assign(d, 0.0);
    return p;
}

inline std::optional<DefaultProfile> parse_default_profile(std::string_view name) {
    if (name == "csmc_like") return DefaultProfile::CsmcLike;
    if (name == "shc_like") return DefaultProfile::ShcLike;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

namespace detail {

inline double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const double x = rng.normal(mean, sd);
        if (x >= lo && x <= hi) return x;
    }
    return std::clamp(mean, lo, hi);
}

inline std::string patient_label(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "P%07zu", i);
    return buf;
}

}  // namespace detail

struct GeneratorSeed {
    std::uint64_t master_seed = 0;
};

/// Latent demographic draw for one patient; also used by oracle Monte Carlo.
struct PatientDraw {
    Race race = Race::White;
    Sex sex = Sex::Male;
    double age = 0.0;
    ComorbidityFlags comorbidities{};
};

inline PatientDraw draw_patient(const CohortProfile& p, Rng& rng) {
    PatientDraw d;
    d.race = kAllRaces[rng.categorical(p.race_marginals)];
    const std::size_t r = index_of(d.race);
    d.sex = rng.bernoulli(p.male_fraction[r]) ? Sex::Male : Sex::Female;
    d.age = detail::truncated_normal(rng, p.age_mean + p.age_shift[r], p.age_sd, kGeneratedAgeMin,
                                     kGeneratedAgeMax);
    for (std::size_t j = 0; j < kComorbidityCount; ++j) d.comorbidities[j] = rng.bernoulli(p.prevalence[j][r]);
    return d;
}

/// Noise-free feature mean for a patient.
inline std::vector<double> feature_mean(const CohortProfile& p, const PatientDraw& d) {
    std::vector<double> x(p.feature_dim, 0.0);
    const double sex_bit = d.sex == Sex::Male ? 1.0 : 0.0;
    const double z_age = (d.age - p.age_mean) / p.age_sd;
    const auto& direct = p.w_race_direct[index_of(d.race)];
    for (std::size_t k = 0; k < p.feature_dim; ++k) x[k] = sex_bit * p.w_sex[k] + z_age * p.w_age[k] + direct[k];
    for (std::size_t j = 0; j < kComorbidityCount; ++j)
        if (d.comorbidities[j])
            for (std::size_t k = 0; k < p.feature_dim; ++k) x[k] += p.w_comorb[j][k];
    return x;
}

/// Patients draw from substreams derive_seed(master_seed, {patient_index}),
/// so output does not depend on generation order.
inline Cohort generate_cohort(const CohortProfile& p, GeneratorSeed seed) {
    p.validate();
    std::vector<StudyRecord> records;
    records.reserve(static_cast<std::size_t>(static_cast<double>(p.n_patients) * p.studies_per_patient_mean));
    for (std::size_t i = 0; i < p.n_patients; ++i) {
        Rng rng(derive_seed(seed.master_seed, {i}));
        const PatientDraw d = draw_patient(p, rng);
        const auto n_studies = 1 + rng.poisson(p.studies_per_patient_mean - 1.0);
        const auto mean = feature_mean(p, d);
        const std::string pid = detail::patient_label(i);
        for (std::uint64_t s = 0; s < n_studies; ++s) {
            StudyRecord r;
            r.patient_id = pid;
            r.study_id = pid + "-" + std::to_string(s + 1);
            r.age = d.age;
            r.sex = d.sex;
            r.race = d.race;
            r.comorbidities = d.comorbidities;
            r.features.resize(p.feature_dim);
            for (std::size_t k = 0; k < p.feature_dim; ++k) r.features[k] = mean[k] + p.noise_sd * rng.normal();
            records.push_back(std::move(r));
        }
    }
    return Cohort(std::move(records), p.feature_dim);
}

// ---------------------------------------------------------------------------
// Profile INI serialization
// ---------------------------------------------------------------------------

namespace detail {

inline std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

}  // namespace detail

/// Race-indexed lists follow the token order WHITE, BLACK, ASIAN,
/// AMERICAN_INDIAN, PACIFIC_ISLANDER, OTHER, UNKNOWN.
inline void write_profile(std::ostream& out, const CohortProfile& p) {
    using detail::format_double;
    out << "[profile]\n"
        << "name = " << p.name << '\n'
        << "n_patients = " << p.n_patients << '\n'
        << "studies_per_patient_mean = " << format_double(p.studies_per_patient_mean) << '\n'
        << "age_mean = " << format_double(p.age_mean) << '\n'
        << "age_sd = " << format_double(p.age_sd) << '\n'
        << "feature_dim = " << p.feature_dim << '\n'
        << "noise_sd = " << format_double(p.noise_sd) << '\n';
    auto race_section = [&](const char* section, const RaceTable& t) {
        out << "\n[" << section << "]\n";
        for (Race r : kAllRaces) out << to_token(r) << " = " << format_double(t[index_of(r)]) << '\n';
    };
    race_section("race_marginals", p.race_marginals);
    race_section("male_fraction", p.male_fraction);
    race_section("age_shift", p.age_shift);
    out << "\n[prevalence]\n";
    for (std::size_t j = 0; j < kComorbidityCount; ++j)
        out << comorbidity_column(j) << " = "
            << detail::join_doubles(std::vector<double>(p.prevalence[j].begin(), p.prevalence[j].end())) << '\n';
    out << "\n[coefficients]\n"
        << "w_sex = " << detail::join_doubles(p.w_sex) << '\n'
        << "w_age = " << detail::join_doubles(p.w_age) << '\n';
    for (std::size_t j = 0; j < kComorbidityCount; ++j)
        out << "w_" << comorbidity_column(j) << " = " << detail::join_doubles(p.w_comorb[j]) << '\n';
    for (Race r : kAllRaces)
        out << "w_race_" << to_token(r) << " = " << detail::join_doubles(p.w_race_direct[index_of(r)]) << '\n';
}

inline std::string profile_to_string(const CohortProfile& p) {
    std::ostringstream out;
    write_profile(out, p);
    return out.str();
}

/// Strict: every key is required and unknown keys are rejected.
inline CohortProfile read_profile(const IniDocument& doc) {
    IniReader in(doc);
    auto require = [&](const std::string& section, const std::string& key) {
        auto v = in.get(section, key);
        if (!v) throw ConfigError(section + "." + key, "profile: missing key '" + section + "." + key + "'");
        return *v;
    };
    auto require_double = [&](const std::string& section, const std::string& key) {
        require(section, key);
        return *in.get_double(section, key);
    };
    auto require_u64 = [&](const std::string& section, const std::string& key) {
        require(section, key);
        return *in.get_u64(section, key);
    };
    auto require_list = [&](const std::string& section, const std::string& key) {
        require(section, key);
        return *in.get_doubles(section, key);
    };

    CohortProfile p;
    p.name = require("profile", "name");
    p.n_patients = require_u64("profile", "n_patients");
    p.studies_per_patient_mean = require_double("profile", "studies_per_patient_mean");
    p.age_mean = require_double("profile", "age_mean");
    p.age_sd = require_double("profile", "age_sd");
    p.feature_dim = require_u64("profile", "feature_dim");
    p.noise_sd = require_double("profile", "noise_sd");
    for (Race r : kAllRaces) {
        const std::string tok(to_token(r));
        p.race_marginals[index_of(r)] = require_double("race_marginals", tok);
        p.male_fraction[index_of(r)] = require_double("male_fraction", tok);
        p.age_shift[index_of(r)] = require_double("age_shift", tok);
    }
    for (std::size_t j = 0; j < kComorbidityCount; ++j) {
        const auto row = require_list("prevalence", comorbidity_column(j));
        if (row.size() != kRaceCount)
            throw ConfigError("prevalence." + comorbidity_column(j),
                              "profile: prevalence." + comorbidity_column(j) + " needs 7 values (one per race)");
        std::copy(row.begin(), row.end(), p.prevalence[j].begin());
    }
    p.w_sex = require_list("coefficients", "w_sex");
    p.w_age = require_list("coefficients", "w_age");
    for (std::size_t j = 0; j < kComorbidityCount; ++j)
        p.w_comorb[j] = require_list("coefficients", "w_" + comorbidity_column(j));
    for (Race r : kAllRaces)
        p.w_race_direct[index_of(r)] = require_list("coefficients", "w_race_" + std::string(to_token(r)));
    in.finish();
    p.validate();
    return p;
}

/// A built-in profile name or a path to a profile INI file.
inline CohortProfile resolve_profile(const std::string& name_or_path) {
    if (auto which = parse_default_profile(name_or_path)) return make_default_profile(*which);
    return read_profile(IniDocument::load(name_or_path));
}

}  // namespace confaudit
