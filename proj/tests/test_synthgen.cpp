#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "confaudit/synthgen.hpp"
#include "test_support.hpp"

using namespace confaudit;

namespace {

constexpr std::size_t kHypertension = 2;

double binomial_sd(double p, double n) { return std::sqrt(p * (1 - p) / n); }

}  // namespace

TEST(DefaultProfile, CsmcParameters) {
    const auto p = make_default_profile(DefaultProfile::CsmcLike);
    EXPECT_EQ(p.name, "csmc_like");
    EXPECT_DOUBLE_EQ(p.age_mean, 66.5);
    EXPECT_DOUBLE_EQ(p.age_sd, 16.4);
    EXPECT_DOUBLE_EQ(p.prevalence[kHypertension][index_of(Race::White)], 0.5996);
    EXPECT_DOUBLE_EQ(p.prevalence[kHypertension][index_of(Race::Black)], 0.7112);
    EXPECT_NEAR(p.race_marginals[index_of(Race::White)], 19519.0 / 28450.0, 1e-12);
    EXPECT_DOUBLE_EQ(p.studies_per_patient_mean, 1.0);
    EXPECT_FALSE(p.has_direct_race_signal());
    EXPECT_NO_THROW(p.validate());
}

TEST(DefaultProfile, ShcParameters) {
    const auto p = make_default_profile(DefaultProfile::ShcLike);
    EXPECT_DOUBLE_EQ(p.age_mean, 59.9);
    EXPECT_DOUBLE_EQ(p.age_sd, 17.7);
    EXPECT_NEAR(p.race_marginals[index_of(Race::White)], 0.565, 0.0005);
    EXPECT_EQ(p.feature_dim, make_default_profile(DefaultProfile::CsmcLike).feature_dim);
    EXPECT_NO_THROW(p.validate());
}

TEST(DefaultProfile, NamesResolve) {
    EXPECT_EQ(parse_default_profile("csmc_like"), DefaultProfile::CsmcLike);
    EXPECT_EQ(parse_default_profile("shc_like"), DefaultProfile::ShcLike);
    EXPECT_FALSE(parse_default_profile("other"));
    EXPECT_EQ(resolve_profile("shc_like").name, "shc_like");
}

TEST(Generate, ZeroPatientsGivesEmptyCohort) {
    auto p = make_default_profile(DefaultProfile::CsmcLike);
    p.n_patients = 0;
    const Cohort c = generate_cohort(p, {1});
    EXPECT_TRUE(c.empty());
    EXPECT_EQ(c.feature_dim(), p.feature_dim);
}

TEST(Generate, DeterministicForSeed) {
    auto p = make_default_profile(DefaultProfile::CsmcLike);
    p.n_patients = 500;
    p.studies_per_patient_mean = 2.5;
    const Cohort a = generate_cohort(p, {99});
    const Cohort b = generate_cohort(p, {99});
    const Cohort c = generate_cohort(p, {100});
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
}

TEST(Generate, PatientStreamsIndependentOfCohortSize) {
    auto p = make_default_profile(DefaultProfile::CsmcLike);
    p.n_patients = 50;
    const Cohort small = generate_cohort(p, {4});
    p.n_patients = 80;
    const Cohort large = generate_cohort(p, {4});
    for (std::size_t i = 0; i < small.size(); ++i) EXPECT_EQ(small[i], large[i]);
}

TEST(Generate, WhiteHypertensionPrevalence) {
    auto p = make_default_profile(DefaultProfile::CsmcLike);
    p.n_patients = 50000;
    const Cohort c = generate_cohort(p, {2024});
    double n = 0, hits = 0;
    for (const auto& r : c.records())
        if (r.race == Race::White) {
            ++n;
            hits += r.comorbidities[kHypertension];
        }
    EXPECT_NEAR(hits / n, 0.5996, 3 * binomial_sd(0.5996, n));
}

TEST(Generate, MarginalsConvergeAndAgesTruncated) {
    auto p = make_default_profile(DefaultProfile::ShcLike);
    p.n_patients = 40000;
    const Cohort c = generate_cohort(p, {7});
    std::map<Race, double> count;
    std::map<Race, double> male;
    for (const auto& r : c.records()) {
        ASSERT_GE(r.age, 18.0);
        ASSERT_LE(r.age, 100.0);
        ++count[r.race];
        male[r.race] += r.sex == Sex::Male;
    }
    const double n = static_cast<double>(c.size());
    for (Race r : kAllRaces) {
        const double q = p.race_marginals[index_of(r)];
        EXPECT_NEAR(count[r] / n, q, 3 * binomial_sd(q, n)) << to_token(r);
    }
    const double mw = p.male_fraction[index_of(Race::White)];
    EXPECT_NEAR(male[Race::White] / count[Race::White], mw, 3 * binomial_sd(mw, count[Race::White]));
}

TEST(Generate, StudiesShareDemographicsWithinPatient) {
    auto p = make_default_profile(DefaultProfile::CsmcLike);
    p.n_patients = 300;
    p.studies_per_patient_mean = 3.0;
    const Cohort c = generate_cohort(p, {11});
    EXPECT_GT(c.size(), 600u);
    EXPECT_NEAR(static_cast<double>(c.size()) / 300.0, 3.0, 0.4);
    for (const auto& [pid, idx] : c.patients()) {
        for (std::size_t i : idx) {
            EXPECT_EQ(c[i].race, c[idx[0]].race);
            EXPECT_EQ(c[i].age, c[idx[0]].age);
            EXPECT_EQ(c[i].comorbidities, c[idx[0]].comorbidities);
        }
        if (idx.size() > 1) {
            EXPECT_NE(c[idx[0]].features, c[idx[1]].features);
        }
    }
}

TEST(Generate, FeatureMeanFollowsChannels) {
    const auto p = make_default_profile(DefaultProfile::CsmcLike);
    PatientDraw d;
    d.sex = Sex::Male;
    d.age = p.age_mean + p.age_sd;
    d.comorbidities[3] = true;
    const auto m = feature_mean(p, d);
    for (std::size_t k = 0; k < p.feature_dim; ++k)
        EXPECT_DOUBLE_EQ(m[k], p.w_sex[k] + p.w_age[k] + p.w_comorb[3][k]);
}

TEST(Profile, IniRoundTripIsExact) {
    auto p = make_default_profile(DefaultProfile::ShcLike);
    p.w_race_direct[index_of(Race::Black)][5] = 0.125;
    p.noise_sd = 0.7;
    const auto text = profile_to_string(p);
    const auto back = read_profile(IniDocument::parse_string(text));
    EXPECT_EQ(back, p);
    EXPECT_TRUE(back.has_direct_race_signal());
}

TEST(Profile, StrictParsing) {
    const auto text = profile_to_string(make_default_profile(DefaultProfile::CsmcLike));
    try {
        read_profile(IniDocument::parse_string(text + "\n[profile]\nnois_sd = 1\n"));
        FAIL() << "unknown key accepted";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("nois_sd"), std::string::npos) << e.what();
    }
    std::string missing = text;
    missing.erase(missing.find("age_sd"), missing.find('\n', missing.find("age_sd")) - missing.find("age_sd") + 1);
    EXPECT_THROW(read_profile(IniDocument::parse_string(missing)), ConfigError);
}

TEST(Profile, ValidationRejectsBadValues) {
    auto p = make_default_profile(DefaultProfile::CsmcLike);
    p.race_marginals[0] += 0.1;
    EXPECT_THROW(p.validate(), ConfigError);
    p = make_default_profile(DefaultProfile::CsmcLike);
    p.prevalence[0][0] = 1.5;
    EXPECT_THROW(p.validate(), ConfigError);
    p = make_default_profile(DefaultProfile::CsmcLike);
    p.w_sex.push_back(0.0);
    EXPECT_THROW(p.validate(), ConfigError);
    p = make_default_profile(DefaultProfile::CsmcLike);
    p.noise_sd = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Profile, ZeroSignalChannels) {
    auto p = make_default_profile(DefaultProfile::CsmcLike);
    p.zero_signal_channels();
    PatientDraw d;
    d.age = 90;
    d.comorbidities.fill(true);
    for (double x : feature_mean(p, d)) EXPECT_EQ(x, 0.0);
}
