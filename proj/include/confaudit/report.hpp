#pragma once

// Plain-text reports and plot-data CSVs for sweep, baseline and transfer
// results, plus demographic summary tables.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "confaudit/audit.hpp"
#include "confaudit/cohort.hpp"

namespace confaudit {

struct ReportInputs {
    std::vector<SweepResult> sweeps;
    std::vector<BaselineResult> baselines;
    std::vector<TransferResult> transfers;
    std::vector<std::pair<std::string, DemographicSummary>> demographics;  ///< column label, summary

    bool empty() const noexcept {
        return sweeps.empty() && baselines.empty() && transfers.empty() && demographics.empty();
    }
};

struct PlotFile {
    std::string name;
    std::string content;
};

namespace detail {

inline std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string thousands(std::size_t n) {
    std::string s = std::to_string(n);
    for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
    return s;
}

inline std::string count_pct(std::size_t n, double pct) { return thousands(n) + " (" + fixed(pct, 1) + "%)"; }

inline std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

// The target's negative class reads "Not Male" rather than "Female" when sex
// is the prediction target.
inline std::string target_negative_name(const BinaryTask& t) {
    return t.attribute == Attribute::Sex ? "Not " + t.positive_name() : t.negative_name();
}

inline std::string estimate_cell(const MetricEstimate& e) {
    return fixed(e.point, 3) + " [" + fixed(e.ci_low, 3) + ", " + fixed(e.ci_high, 3) + "]";
}

inline std::vector<std::string> render_lines(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size()) widths.resize(row.size(), 0);
        for (std::size_t k = 0; k < row.size(); ++k) widths[k] = std::max(widths[k], row[k].size());
    }
    std::vector<std::string> out;
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t k = 0; k < row.size(); ++k) line += (k ? "  " : "") + pad(row[k], widths[k]);
        line.erase(line.find_last_not_of(' ') + 1);
        out.push_back(line);
    }
    return out;
}

inline std::string sweep_slug(const SweepResult& r, std::size_t i) {
    std::string s = "sweep_" + std::to_string(i) + "_" + r.config.target.to_string() + "_by_" +
                    r.config.confounder.to_string();
    std::replace(s.begin(), s.end(), ':', '-');
    return s;
}

}  // namespace detail

/// "50% Male in White Cohort / Female in Non White"
inline std::string bias_row_label(const SweepConfig& c, double bias) {
    return detail::fixed(bias * 100.0, 0) + "% " + c.confounder.positive_name() + " in " +
           c.target.positive_name() + " Cohort / " + c.confounder.negative_name() + " in " +
           detail::target_negative_name(c.target);
}

inline std::string sweep_title(const SweepConfig& c) {
    const std::string attribute = c.target.attribute == Attribute::Race ? "Race" : "Sex";
    return "Training Task To Predict " + attribute + " (" + c.target.positive_name() + "/" +
           detail::target_negative_name(c.target) + ")";
}

/// Rows of one sweep table: label, AUC [CI], published reference.
inline std::vector<std::vector<std::string>> sweep_table(const SweepResult& r) {
    std::vector<std::vector<std::string>> rows{{"Proportion Biased", "AUC [95% CI]", "Published"}};
    rows[0][1] = "AUC [" + detail::fixed(r.config.bootstrap.level * 100.0, 0) + "% CI]";
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        const auto& p = r.points[i];
        const auto ref = i < r.reference_curve.size() ? r.reference_curve[i] : std::nullopt;
        rows.push_back({bias_row_label(r.config, p.bias), detail::estimate_cell(p.auc),
                        ref ? detail::fixed(*ref, 2) : "-"});
    }
    return rows;
}

inline void render_sweeps(std::ostream& out, const std::vector<SweepResult>& sweeps) {
    // Sweeps are laid out two to a row, like the published summary table.
    for (std::size_t s = 0; s < sweeps.size(); s += 2) {
        const std::size_t group = std::min<std::size_t>(2, sweeps.size() - s);
        std::vector<std::vector<std::string>> rows;
        for (std::size_t g = 0; g < group; ++g) {
            const auto table = sweep_table(sweeps[s + g]);
            if (rows.size() < table.size() + 1) rows.resize(table.size() + 1);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (g) {
                    rows[i].resize(3, "");
                    rows[i].push_back("|");
                }
                if (i == 0) {
                    rows[i].push_back(sweep_title(sweeps[s + g].config));
                    rows[i].push_back("");
                    rows[i].push_back("");
                } else if (i - 1 < table.size()) {
                    for (const auto& cell : table[i - 1]) rows[i].push_back(cell);
                } else {
                    rows[i].insert(rows[i].end(), 3, "");
                }
            }
        }
        for (const auto& line : detail::render_lines(rows)) out << line << '\n';
        out << '\n';
        for (std::size_t g = 0; g < group; ++g) {
            const auto& r = sweeps[s + g];
            out << sweep_title(r.config) << ": eval_mode=" << to_token(r.config.eval_mode) << ", N=" << r.config.subset_size
                << ", eval size=" << r.config.eval_subset_size << ", repeats=" << r.config.repeats
                << ", seed=" << r.config.seed << ", excluded records=" << r.excluded_records << '\n';
            if (r.points.size() >= 2)
                out << "  shortcut score " << detail::fixed(r.shortcut_score, 3)
                    << (r.monotone ? " (nondecreasing within CI overlap)" : " (not monotone)") << '\n';
        }
        out << '\n';
    }
}

inline void render_baselines(std::ostream& out, const std::vector<BaselineResult>& baselines) {
    for (const auto& b : baselines) {
        out << "Comorbidity baseline (" << b.target.positive_name() << " vs " << b.target.negative_name()
            << ", logistic regression on comorbidities + age + sex)\n";
        out << "  AUC " << detail::estimate_cell(b.auc) << ", train " << b.train_size << ", test " << b.test_size
            << ", excluded " << b.excluded_records << '\n';
        if (b.bayes_oracle_auc) out << "  Bayes oracle AUC " << detail::fixed(*b.bayes_oracle_auc, 3) << '\n';
        out << "  Published real-data AUC " << detail::fixed(kReferenceComorbidityAuc, 2) << '\n';
        std::vector<std::vector<std::string>> rows{{"  Input", "Coefficient"}};
        for (std::size_t k = 0; k < b.coefficients.size(); ++k)
            rows.push_back({"  " + b.coefficient_names[k], detail::fixed(b.coefficients[k], 4)});
        rows.push_back({"  (intercept)", detail::fixed(b.intercept, 4)});
        for (const auto& line : detail::render_lines(rows)) out << line << '\n';
        out << '\n';
    }
}

inline void render_transfers(std::ostream& out, const std::vector<TransferResult>& transfers) {
    for (const auto& t : transfers) {
        const std::string metric = t.task.age ? "MAE" : "AUC";
        out << "Transfer (" << t.task.to_string() << "): trained on " << t.train_profile << '\n';
        out << "  internal " << t.train_profile << " " << metric << ' ' << detail::estimate_cell(t.internal) << '\n';
        out << "  external " << t.test_profile << " " << metric << ' ' << detail::estimate_cell(t.external) << '\n';
        out << "  gap " << detail::fixed(t.gap, 3) << '\n';
        if (!t.task.age && t.task.binary.attribute == Attribute::Sex)
            out << "  Published sex AUC internal " << detail::fixed(kReferenceSexInternalAuc, 2) << ", external "
                << detail::fixed(kReferenceSexExternalAuc, 2) << '\n';
        out << '\n';
    }
}

/// Demographic table; each summary contributes a by-patient and a by-study column.
inline void render_demographics(std::ostream& out, const std::vector<std::pair<std::string, DemographicSummary>>& d) {
    static constexpr std::array<Race, kRaceCount> order{Race::AmericanIndian, Race::Asian, Race::Black,
                                                        Race::PacificIslander, Race::White, Race::Other,
                                                        Race::Unknown};
    std::vector<std::vector<std::string>> rows(5 + kRaceCount);
    rows[0].push_back("");
    rows[1].push_back("n, patients");
    rows[2].push_back("n, studies");
    rows[3].push_back("Age (mean (SD))");
    rows[4].push_back("Male (%)");
    for (std::size_t k = 0; k < kRaceCount; ++k) rows[5 + k].push_back(std::string(display_name(order[k])));
    for (const auto& [label, s] : d) {
        for (int by_patient = 1; by_patient >= 0; --by_patient) {
            const GroupingSummary& g = by_patient ? s.by_patient : s.by_study;
            rows[0].push_back(label + (by_patient ? " (by patient)" : " (by study)"));
            rows[1].push_back(detail::thousands(s.by_patient.n));
            rows[2].push_back(detail::thousands(s.by_study.n));
            rows[3].push_back(detail::fixed(g.age_mean, 1) + " (+/- " + detail::fixed(g.age_sd, 1) + ")");
            rows[4].push_back(detail::count_pct(g.male, g.male_pct()));
            for (std::size_t k = 0; k < kRaceCount; ++k)
                rows[5 + k].push_back(detail::count_pct(g.by_race[index_of(order[k])].n, g.race_pct(order[k])));
        }
    }
    out << "Demographic characteristics\n";
    const auto lines = detail::render_lines(rows);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i == 5) out << "Race/Ethnicity, n (%)\n";
        out << lines[i] << '\n';
    }
    out << '\n';
}

inline std::string render_report(const ReportInputs& in) {
    if (in.empty()) throw DataError("report: no results to report");
    std::ostringstream out;
    if (!in.demographics.empty()) render_demographics(out, in.demographics);
    if (!in.sweeps.empty()) render_sweeps(out, in.sweeps);
    if (!in.baselines.empty()) render_baselines(out, in.baselines);
    if (!in.transfers.empty()) render_transfers(out, in.transfers);
    return out.str();
}

/// One CSV per sweep curve.
inline std::vector<PlotFile> plot_files(const ReportInputs& in) {
    std::vector<PlotFile> files;
    for (std::size_t i = 0; i < in.sweeps.size(); ++i) {
        std::ostringstream csv;
        write_sweep_csv(csv, in.sweeps[i]);
        files.push_back({detail::sweep_slug(in.sweeps[i], i) + ".csv", csv.str()});
    }
    return files;
}

/// Writes report.txt and the plot CSVs into dir; returns the report text.
inline std::string emit_report(const ReportInputs& in, const std::filesystem::path& dir) {
    const std::string text = render_report(in);
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw Error("cannot write " + (dir / name).string());
        f << content;
    };
    write("report.txt", text);
    for (const auto& p : plot_files(in)) write(p.name, p.content);
    return text;
}

}  // namespace confaudit
