#pragma once

// Patient-level splitting and bias-controlled subset construction.
//
// A biased subset of size M at bias b holds M/2 target-positive records, of
// which round(b*M/2) carry the positive confounder value, and M/2
// target-negative records, of which round(b*M/2) carry the negative
// confounder value. b = 0.5 balances the confounder across target classes;
// b = 1.0 makes it a perfect proxy for the target.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "confaudit/cohort.hpp"
#include "confaudit/rng.hpp"

namespace confaudit {

enum class Partition { Train = 0, Val = 1, Test = 2 };

inline constexpr std::array<Partition, 3> kAllPartitions{Partition::Train, Partition::Val, Partition::Test};

inline constexpr std::string_view to_token(Partition p) noexcept {
    switch (p) {
        case Partition::Train: return "train";
        case Partition::Val: return "val";
        case Partition::Test: return "test";
    }
    return "train";
}

struct SplitSpec {
    double train = 0.7;
    double val = 0.15;
    double test = 0.15;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(train >= 0.0 && val >= 0.0 && test >= 0.0))
            throw ConfigError("split", "split fractions must be nonnegative");
        if (std::abs(train + val + test - 1.0) > 1e-9)
            throw ConfigError("split", "split fractions must sum to 1, got " +
                                           detail::format_double(train + val + test));
    }
};

/// Every patient maps to exactly one partition; studies inherit it.
struct SplitAssignment {
    std::map<std::string, Partition> patients;
    std::vector<Partition> records;  ///< partition of each cohort record, in record order

    std::size_t patient_count(Partition p) const {
        return static_cast<std::size_t>(std::count_if(patients.begin(), patients.end(),
                                                      [p](const auto& kv) { return kv.second == p; }));
    }

    std::vector<std::size_t> record_indices(Partition p) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < records.size(); ++i)
            if (records[i] == p) out.push_back(i);
        return out;
    }

    friend bool operator==(const SplitAssignment&, const SplitAssignment&) = default;
};

inline SplitAssignment split_by_patient(const Cohort& c, const SplitSpec& s) {
    s.validate();
    if (c.empty()) throw DataError("cannot split an empty cohort");

    // Sorted patient ids make the result independent of record order.
    std::vector<std::string> ids;
    for (const auto& kv : c.patients()) ids.push_back(kv.first);
    Rng rng(derive_seed(s.seed, {0x5B1170}));
    rng.shuffle(ids);

    const std::size_t n = ids.size();
    const auto count = [n](double f) { return static_cast<std::size_t>(std::nearbyint(f * static_cast<double>(n))); };
    std::size_t n_train = std::min(count(s.train), n);
    std::size_t n_val = std::min(count(s.val), n - n_train);
    std::size_t n_test = n - n_train - n_val;
    if (s.test == 0.0 && n_test > 0) {
        n_val += n_test;
        n_test = 0;
    }
    const std::array<std::pair<Partition, std::size_t>, 3> sizes{
        {{Partition::Train, n_train}, {Partition::Val, n_val}, {Partition::Test, n_test}}};
    const std::array<double, 3> fractions{s.train, s.val, s.test};
    for (std::size_t k = 0; k < 3; ++k) {
        if (fractions[k] > 0.0 && sizes[k].second == 0)
            throw DataError("split fraction " + detail::format_double(fractions[k]) + " leaves partition '" +
                            std::string(to_token(sizes[k].first)) + "' empty for " + std::to_string(n) +
                            " patients");
    }

    SplitAssignment a;
    for (std::size_t i = 0; i < n; ++i) {
        const Partition p = i < n_train ? Partition::Train : (i < n_train + n_val ? Partition::Val : Partition::Test);
        a.patients.emplace(ids[i], p);
    }
    a.records.reserve(c.size());
    for (const auto& r : c.records()) a.records.push_back(a.patients.at(r.patient_id));
    return a;
}

// ---------------------------------------------------------------------------
// Biased subsets
// ---------------------------------------------------------------------------

struct BiasSpec {
    double bias = 0.5;
    BinaryTask target = BinaryTask::race(Race::White);
    BinaryTask confounder = BinaryTask::sex(Sex::Male);
    std::size_t subset_size = 20000;      ///< records in the training subset (N)
    std::size_t eval_subset_size = 4000;  ///< records in each of the val/test subsets
    std::set<Partition> apply_to{Partition::Train, Partition::Val, Partition::Test};
    std::uint64_t seed = 0;

    std::size_t size_for(Partition p) const noexcept { return p == Partition::Train ? subset_size : eval_subset_size; }

    void validate() const {
        if (!(bias >= 0.5 && bias <= 1.0))
            throw ConfigError("bias", "bias " + detail::format_double(bias) + " outside [0.5, 1.0]");
        if (target.attribute == confounder.attribute)
            throw ConfigError("confounder", "target and confounder must be different attributes");
        target.validate();
        confounder.validate();
        for (Partition p : apply_to) {
            const std::size_t m = size_for(p);
            if (m == 0 || m % 4 != 0)
                throw ConfigError(p == Partition::Train ? "subset_size" : "eval_subset_size",
                                  "subset size for partition '" + std::string(to_token(p)) + "' is " +
                                      std::to_string(m) + "; it must be a positive multiple of 4");
        }
    }
};

/// Number of records in each (target, confounder) cell, indexed [t][c].
using CellCounts = std::array<std::array<std::size_t, 2>, 2>;

/// round_half_even(b * M / 2) for the congruent cells; the rest fill M / 2.
inline CellCounts biased_cell_counts(double bias, std::size_t m) {
    const std::size_t half = m / 2;
    const auto congruent = static_cast<std::size_t>(std::nearbyint(bias * static_cast<double>(half)));
    CellCounts counts{};
    counts[1][1] = congruent;
    counts[1][0] = half - congruent;
    counts[0][0] = congruent;
    counts[0][1] = half - congruent;
    return counts;
}

struct Subset {
    Partition partition = Partition::Train;
    std::vector<std::size_t> indices;  ///< cohort record positions, ascending
    std::vector<int> target;           ///< target label per record
    std::vector<int> confounder;       ///< confounder label per record (-1 when not tracked)

    std::size_t size() const noexcept { return indices.size(); }

    CellCounts cell_counts() const {
        CellCounts out{};
        for (std::size_t i = 0; i < indices.size(); ++i)
            if (confounder[i] >= 0) ++out[static_cast<std::size_t>(target[i])][static_cast<std::size_t>(confounder[i])];
        return out;
    }
};

using BiasedSubsets = std::map<Partition, Subset>;

namespace detail {

inline std::string cell_name(const BinaryTask& target, const BinaryTask& conf, int t, int c) {
    return "(target=" + (t ? target.positive_name() : target.negative_name()) +
           ", confounder=" + (c ? conf.positive_name() : conf.negative_name()) + ")";
}

inline Subset finalize_subset(Partition p, std::vector<std::array<std::size_t, 3>> rows) {
    std::sort(rows.begin(), rows.end());
    Subset s;
    s.partition = p;
    for (const auto& row : rows) {
        s.indices.push_back(row[0]);
        s.target.push_back(static_cast<int>(row[1]));
        s.confounder.push_back(static_cast<int>(row[2]) - 1);
    }
    return s;
}

}  // namespace detail

/// Draws the biased subsets for every partition in spec.apply_to, sampling
/// uniformly without replacement within each cell.
inline BiasedSubsets build_biased_subset(const Cohort& c, const SplitAssignment& a, const BiasSpec& spec) {
    spec.validate();
    if (a.records.size() != c.size()) throw DataError("split assignment does not match cohort size");

    BiasedSubsets out;
    for (Partition p : spec.apply_to) {
        std::array<std::array<std::vector<std::size_t>, 2>, 2> pools;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (a.records[i] != p) continue;
            const auto t = spec.target.label(c[i]);
            const auto k = spec.confounder.label(c[i]);
            if (!t || !k) continue;
            pools[static_cast<std::size_t>(*t)][static_cast<std::size_t>(*k)].push_back(i);
        }
        const CellCounts need = biased_cell_counts(spec.bias, spec.size_for(p));
        std::vector<std::array<std::size_t, 3>> rows;
        for (int t = 1; t >= 0; --t) {
            for (int k = 1; k >= 0; --k) {
                const auto& pool = pools[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
                const std::size_t n = need[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
                if (pool.size() < n) {
                    const std::string cell = detail::cell_name(spec.target, spec.confounder, t, k);
                    throw InsufficientCellError(
                        "partition '" + std::string(to_token(p)) + "': cell " + cell + " needs " + std::to_string(n) +
                            " records but only " + std::to_string(pool.size()) + " are available (short by " +
                            std::to_string(n - pool.size()) + ")",
                        cell, n, pool.size());
                }
                Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(t),
                                                static_cast<std::uint64_t>(k)}));
                for (std::size_t idx : rng.sample(pool, n))
                    rows.push_back({idx, static_cast<std::size_t>(t), static_cast<std::size_t>(k) + 1});
            }
        }
        out.emplace(p, detail::finalize_subset(p, std::move(rows)));
    }
    return out;
}

/// Unmanipulated sample of one partition: up to `size` records with a
/// defined target label (size 0 keeps all of them). The confounder label is
/// recorded when defined.
inline Subset natural_subset(const Cohort& c, const SplitAssignment& a, Partition p, const BinaryTask& target,
                             const BinaryTask* confounder, std::size_t size, std::uint64_t seed) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (a.records[i] == p && target.label(c[i])) pool.push_back(i);
    if (pool.empty()) throw DataError("partition '" + std::string(to_token(p)) + "' has no labeled records");
    if (size > 0 && size < pool.size()) {
        Rng rng(derive_seed(seed, {0x7A7, static_cast<std::uint64_t>(p)}));
        pool = rng.sample(std::move(pool), size);
    }
    std::vector<std::array<std::size_t, 3>> rows;
    rows.reserve(pool.size());
    for (std::size_t i : pool) {
        std::size_t k = 0;
        if (confounder)
            if (auto lab = confounder->label(c[i])) k = static_cast<std::size_t>(*lab) + 1;
        rows.push_back({i, static_cast<std::size_t>(*target.label(c[i])), k});
    }
    return detail::finalize_subset(p, std::move(rows));
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

inline void write_split_manifest(std::ostream& out, const Cohort& c, const SplitAssignment& a) {
    out << "study_id,patient_id,partition\n";
    for (std::size_t i = 0; i < c.size(); ++i)
        out << c[i].study_id << ',' << c[i].patient_id << ',' << to_token(a.records[i]) << '\n';
}

/// One row per selected record; cell is "t<target>_c<confounder>" (c? when untracked).
inline void write_subset_manifest(std::ostream& out, const Cohort& c, const BiasedSubsets& subsets) {
    out << "study_id,patient_id,partition,cell\n";
    for (const auto& [p, s] : subsets) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            const auto& r = c[s.indices[i]];
            out << r.study_id << ',' << r.patient_id << ',' << to_token(p) << ",t" << s.target[i] << "_c";
            if (s.confounder[i] >= 0)
                out << s.confounder[i];
            else
                out << '?';
            out << '\n';
        }
    }
}

}  // namespace confaudit
