#pragma once

// Cohorts of study records: domain types, CSV ingestion/emission,
// demographic summaries and binarization of demographic attributes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "confaudit/error.hpp"

namespace confaudit {

enum class Sex { Male, Female };

enum class Race { White, Black, Asian, AmericanIndian, PacificIslander, Other, Unknown };

inline constexpr std::size_t kRaceCount = 7;
inline constexpr std::array<Race, kRaceCount> kAllRaces{
    Race::White,           Race::Black, Race::Asian,  Race::AmericanIndian,
    Race::PacificIslander, Race::Other, Race::Unknown};

inline constexpr std::size_t index_of(Race r) noexcept { return static_cast<std::size_t>(r); }

inline constexpr std::string_view to_token(Sex s) noexcept { return s == Sex::Male ? "M" : "F"; }

inline constexpr std::string_view to_token(Race r) noexcept {
    switch (r) {
        case Race::White: return "WHITE";
        case Race::Black: return "BLACK";
        case Race::Asian: return "ASIAN";
        case Race::AmericanIndian: return "AMERICAN_INDIAN";
        case Race::PacificIslander: return "PACIFIC_ISLANDER";
        case Race::Other: return "OTHER";
        case Race::Unknown: return "UNKNOWN";
    }
    return "UNKNOWN";
}

inline constexpr std::string_view display_name(Race r) noexcept {
    switch (r) {
        case Race::White: return "White";
        case Race::Black: return "Black";
        case Race::Asian: return "Asian";
        case Race::AmericanIndian: return "American Indian";
        case Race::PacificIslander: return "Pacific Islander";
        case Race::Other: return "Other";
        case Race::Unknown: return "Unknown";
    }
    return "Unknown";
}

inline std::optional<Sex> parse_sex(std::string_view token) noexcept {
    if (token == "M") return Sex::Male;
    if (token == "F") return Sex::Female;
    return std::nullopt;
}

inline std::optional<Race> parse_race(std::string_view token) noexcept {
    for (Race r : kAllRaces)
        if (to_token(r) == token) return r;
    return std::nullopt;
}

// Fixed comorbidity roster, in reporting order.
inline constexpr std::size_t kComorbidityCount = 17;
inline constexpr std::array<std::string_view, kComorbidityCount> kComorbidityNames{
    "Atrial Fibrillation",
    "Heart Failure",
    "Hypertension",
    "Diabetes",
    "Ischemic Stroke",
    "Transient Ischemic Attack",
    "Systemic Embolism",
    "Pulmonary Embolism",
    "Prior Myocardial Infarction",
    "Stroke/Transient Ischemic Attack/Thromboembolism",
    "Peripheral Arterial Disease",
    "Vascular Disease",
    "Coronary Artery Disease",
    "Chronic Kidney Disease",
    "Liver Disease",
    "Chronic Obstructive Pulmonary Disease",
    "Prior Smoker",
};

using ComorbidityFlags = std::array<bool, kComorbidityCount>;

inline constexpr double kMinAge = 0.0;
inline constexpr double kMaxAge = 130.0;

struct StudyRecord {
    std::string patient_id;
    std::string study_id;
    double age = 0.0;
    Sex sex = Sex::Male;
    Race race = Race::Unknown;
    ComorbidityFlags comorbidities{};
    std::vector<double> features;

    friend bool operator==(const StudyRecord&, const StudyRecord&) = default;
};

/// Immutable, validated collection of study records sharing one feature dimension.
class Cohort {
public:
    Cohort() = default;

    Cohort(std::vector<StudyRecord> records, std::size_t feature_dim)
        : records_(std::move(records)), feature_dim_(feature_dim) {
        std::unordered_set<std::string_view> seen;
        seen.reserve(records_.size());
        for (std::size_t i = 0; i < records_.size(); ++i) {
            const auto& r = records_[i];
            if (!seen.insert(r.study_id).second)
                throw DataError("duplicate study_id '" + r.study_id + "'");
            if (!std::isfinite(r.age) || r.age < kMinAge || r.age > kMaxAge)
                throw DataError("study '" + r.study_id + "': age " + detail::format_double(r.age) +
                                " outside [0, 130]");
            if (r.features.size() != feature_dim_)
                throw DataError("study '" + r.study_id + "': feature dimension " +
                                std::to_string(r.features.size()) + " != cohort dimension " +
                                std::to_string(feature_dim_));
        }
    }

    const std::vector<StudyRecord>& records() const noexcept { return records_; }
    const StudyRecord& operator[](std::size_t i) const { return records_[i]; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    std::size_t feature_dim() const noexcept { return feature_dim_; }

    /// patient_id -> record indices, in record order.
    std::map<std::string, std::vector<std::size_t>> patients() const {
        std::map<std::string, std::vector<std::size_t>> out;
        for (std::size_t i = 0; i < records_.size(); ++i) out[records_[i].patient_id].push_back(i);
        return out;
    }

    friend bool operator==(const Cohort&, const Cohort&) = default;

private:
    std::vector<StudyRecord> records_;
    std::size_t feature_dim_ = 0;
};

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CohortSchema {
    /// When set, the file must carry exactly this many feature columns.
    std::optional<std::size_t> feature_dim;
};

inline std::string comorbidity_column(std::size_t j) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "cm_%02zu", j);
    return buf;
}

inline std::string feature_column(std::size_t k) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "f_%03zu", k);
    return buf;
}

inline std::vector<std::string> cohort_header(std::size_t feature_dim) {
    std::vector<std::string> cols{"patient_id", "study_id", "age", "sex", "race"};
    for (std::size_t j = 0; j < kComorbidityCount; ++j) cols.push_back(comorbidity_column(j));
    for (std::size_t k = 0; k < feature_dim; ++k) cols.push_back(feature_column(k));
    return cols;
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

inline Cohort read_cohort(std::istream& in, const CohortSchema& schema = {},
                          const std::string& source = "<stream>") {
    std::string line;
    if (!std::getline(in, line)) throw DataError(source + ": missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split_commas(line);

    // Fixed prefix, then f_000.. contiguous.
    const auto fixed = cohort_header(0);
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        if (i >= header.size()) throw DataError(source + ": missing column '" + fixed[i] + "'");
        if (header[i] != fixed[i]) {
            throw DataError(source + ": expected column '" + fixed[i] + "' at position " +
                            std::to_string(i + 1) + ", found '" + std::string(header[i]) + "'");
        }
    }
    const std::size_t dim = header.size() - fixed.size();
    for (std::size_t k = 0; k < dim; ++k) {
        if (header[fixed.size() + k] != feature_column(k))
            throw DataError(source + ": unexpected column '" + std::string(header[fixed.size() + k]) +
                            "' (expected '" + feature_column(k) + "')");
    }
    if (schema.feature_dim && *schema.feature_dim != dim) {
        const std::string missing = feature_column(std::min(dim, *schema.feature_dim));
        throw DataError(source + ": expected " + std::to_string(*schema.feature_dim) +
                        " feature columns, found " + std::to_string(dim) +
                        (dim < *schema.feature_dim ? " (missing '" + missing + "')"
                                                   : " (extra '" + missing + "')"));
    }

    std::vector<StudyRecord> records;
    std::unordered_set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split_commas(line);
        const std::string where = source + ":" + std::to_string(line_no);
        if (fields.size() != header.size())
            throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                            std::to_string(fields.size()));
        StudyRecord r;
        r.patient_id = std::string(fields[0]);
        r.study_id = std::string(fields[1]);
        if (r.patient_id.empty()) throw DataError(where + ": empty patient_id");
        if (r.study_id.empty()) throw DataError(where + ": empty study_id");
        if (!seen.insert(r.study_id).second)
            throw DataError(where + ": duplicate study_id '" + r.study_id + "'");
        if (!detail::parse_double(fields[2], r.age))
            throw DataError(where + ": field 'age' is not a number: '" + std::string(fields[2]) + "'");
        if (!std::isfinite(r.age) || r.age < kMinAge || r.age > kMaxAge)
            throw DataError(where + ": field 'age' value " + std::string(fields[2]) +
                            " out of range [0, 130]");
        auto sex = parse_sex(fields[3]);
        if (!sex) throw DataError(where + ": field 'sex' has unknown token '" + std::string(fields[3]) + "'");
        r.sex = *sex;
        auto race = parse_race(fields[4]);
        if (!race)
            throw DataError(where + ": field 'race' has unknown token '" + std::string(fields[4]) + "'");
        r.race = *race;
        for (std::size_t j = 0; j < kComorbidityCount; ++j) {
            const auto f = fields[5 + j];
            if (f != "0" && f != "1")
                throw DataError(where + ": field '" + comorbidity_column(j) + "' must be 0 or 1, found '" +
                                std::string(f) + "'");
            r.comorbidities[j] = f == "1";
        }
        r.features.resize(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            const auto f = fields[fixed.size() + k];
            if (!detail::parse_double(f, r.features[k]) || !std::isfinite(r.features[k]))
                throw DataError(where + ": field '" + feature_column(k) + "' is not a finite number: '" +
                                std::string(f) + "'");
        }
        records.push_back(std::move(r));
    }
    return Cohort(std::move(records), dim);
}

inline Cohort load_cohort(const std::string& path, const CohortSchema& schema = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open cohort file '" + path + "'");
    return read_cohort(in, schema, path);
}

inline void write_cohort(std::ostream& out, const Cohort& c) {
    const auto header = cohort_header(c.feature_dim());
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& r : c.records()) {
        out << r.patient_id << ',' << r.study_id << ',' << detail::format_double(r.age) << ','
            << to_token(r.sex) << ',' << to_token(r.race);
        for (bool flag : r.comorbidities) out << ',' << (flag ? '1' : '0');
        for (double v : r.features) out << ',' << detail::format_double(v);
        out << '\n';
    }
}

inline void save_cohort(const std::string& path, const Cohort& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write cohort file '" + path + "'");
    write_cohort(out, c);
}

// ---------------------------------------------------------------------------
// Demographic summaries
// ---------------------------------------------------------------------------

struct RaceGroupSummary {
    std::size_t n = 0;
    std::size_t male = 0;
    double age_mean = 0.0;
    double age_sd = 0.0;
};

struct GroupingSummary {
    std::size_t n = 0;
    std::size_t male = 0;
    std::size_t female = 0;
    double age_mean = 0.0;
    double age_sd = 0.0;
    std::array<RaceGroupSummary, kRaceCount> by_race{};

    double male_pct() const noexcept { return 100.0 * static_cast<double>(male) / static_cast<double>(n); }
    double female_pct() const noexcept {
        return 100.0 * static_cast<double>(female) / static_cast<double>(n);
    }
    double race_pct(Race r) const noexcept {
        return 100.0 * static_cast<double>(by_race[index_of(r)].n) / static_cast<double>(n);
    }
};

/// Counts are reported both per study and per unique patient.
struct DemographicSummary {
    GroupingSummary by_study;
    GroupingSummary by_patient;
};

namespace detail {

// Welford accumulator; sample SD (n - 1), zero for a single value.
struct MeanSd {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;
    void add(double x) noexcept {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double sd() const noexcept { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0; }
};

inline GroupingSummary summarize_indices(const Cohort& c, const std::vector<std::size_t>& idx) {
    GroupingSummary g;
    MeanSd all;
    std::array<MeanSd, kRaceCount> per_race{};
    for (std::size_t i : idx) {
        const auto& r = c[i];
        ++g.n;
        (r.sex == Sex::Male ? g.male : g.female)++;
        auto& rg = g.by_race[index_of(r.race)];
        ++rg.n;
        if (r.sex == Sex::Male) ++rg.male;
        all.add(r.age);
        per_race[index_of(r.race)].add(r.age);
    }
    g.age_mean = all.mean;
    g.age_sd = all.sd();
    for (std::size_t k = 0; k < kRaceCount; ++k) {
        g.by_race[k].age_mean = per_race[k].mean;
        g.by_race[k].age_sd = per_race[k].sd();
    }
    return g;
}

}  // namespace detail

/// By-patient figures use each patient's first study (in record order).
inline DemographicSummary summarize_demographics(const Cohort& c) {
    if (c.empty()) throw DataError("cannot summarize an empty cohort");
    std::vector<std::size_t> all(c.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    std::vector<std::size_t> first;
    std::unordered_set<std::string_view> seen;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (seen.insert(c[i].patient_id).second) first.push_back(i);
    return {detail::summarize_indices(c, all), detail::summarize_indices(c, first)};
}

// ---------------------------------------------------------------------------
// Binary tasks
// ---------------------------------------------------------------------------

enum class Attribute { Race, Sex };

enum class ExcludedPolicy { Exclude, Error };

/// A demographic attribute reduced to positive-vs-rest.
///
/// Race tasks exclude Other and Unknown by default; such records are either
/// dropped from the labeled view or rejected, depending on the policy.
struct BinaryTask {
    Attribute attribute = Attribute::Race;
    Race positive_race = Race::White;
    Sex positive_sex = Sex::Male;
    ExcludedPolicy policy = ExcludedPolicy::Exclude;
    std::vector<Race> excluded_races{Race::Other, Race::Unknown};

    static BinaryTask race(Race positive, ExcludedPolicy policy = ExcludedPolicy::Exclude) {
        BinaryTask t;
        t.attribute = Attribute::Race;
        t.positive_race = positive;
        t.policy = policy;
        return t;
    }

    static BinaryTask sex(Sex positive = Sex::Male) {
        BinaryTask t;
        t.attribute = Attribute::Sex;
        t.positive_sex = positive;
        t.excluded_races.clear();
        return t;
    }

    bool is_excluded(const StudyRecord& r) const noexcept {
        return std::find(excluded_races.begin(), excluded_races.end(), r.race) != excluded_races.end();
    }

    /// 1/0 label, or nullopt when the record's value is excluded.
    std::optional<int> label(const StudyRecord& r) const noexcept {
        if (is_excluded(r)) return std::nullopt;
        if (attribute == Attribute::Race) return r.race == positive_race ? 1 : 0;
        return r.sex == positive_sex ? 1 : 0;
    }

    void validate() const {
        if (attribute == Attribute::Race &&
            std::find(excluded_races.begin(), excluded_races.end(), positive_race) != excluded_races.end())
            throw ConfigError("target", "positive class " + std::string(to_token(positive_race)) +
                                            " is also an excluded value");
    }

    /// "race:WHITE" or "sex:M".
    std::string to_string() const {
        if (attribute == Attribute::Race) return "race:" + std::string(to_token(positive_race));
        return "sex:" + std::string(to_token(positive_sex));
    }

    std::string positive_name() const {
        if (attribute == Attribute::Race) return std::string(display_name(positive_race));
        return positive_sex == Sex::Male ? "Male" : "Female";
    }

    std::string negative_name() const {
        if (attribute == Attribute::Race) return "Non " + std::string(display_name(positive_race));
        return positive_sex == Sex::Male ? "Female" : "Male";
    }

    static BinaryTask parse(std::string_view text, const std::string& key = "task") {
        const auto colon = text.find(':');
        if (colon == std::string_view::npos)
            throw ConfigError(key, key + ": expected 'race:<RACE>' or 'sex:<M|F>', got '" + std::string(text) + "'");
        const auto attr = text.substr(0, colon);
        const auto value = text.substr(colon + 1);
        if (attr == "race") {
            auto r = parse_race(value);
            if (!r) throw ConfigError(key, key + ": unknown race token '" + std::string(value) + "'");
            auto t = race(*r);
            t.validate();
            return t;
        }
        if (attr == "sex") {
            auto s = parse_sex(value);
            if (!s) throw ConfigError(key, key + ": unknown sex token '" + std::string(value) + "'");
            return sex(*s);
        }
        throw ConfigError(key, key + ": unknown attribute '" + std::string(attr) + "'");
    }

    friend bool operator==(const BinaryTask&, const BinaryTask&) = default;
};

struct BinaryView {
    std::vector<std::size_t> indices;  ///< record positions in the source cohort
    std::vector<int> labels;           ///< 1 = positive class, 0 = rest
    std::size_t dropped = 0;           ///< records removed by the Exclude policy

    std::size_t positives() const noexcept {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    }
    std::size_t negatives() const noexcept { return labels.size() - positives(); }
};

inline BinaryView binarize_attribute(const Cohort& c, const BinaryTask& task) {
    task.validate();
    BinaryView view;
    view.indices.reserve(c.size());
    view.labels.reserve(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        auto label = task.label(c[i]);
        if (!label) {
            if (task.policy == ExcludedPolicy::Error)
                throw DataError("study '" + c[i].study_id + "' has excluded race value " +
                                std::string(to_token(c[i].race)) + " for task " + task.to_string());
            ++view.dropped;
            continue;
        }
        view.indices.push_back(i);
        view.labels.push_back(*label);
    }
    return view;
}

}  // namespace confaudit
