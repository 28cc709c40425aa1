#pragma once

// Command-line driver: `confaudit <gen|split|sweep|baseline|transfer|report>`.
//
// Settings come from an INI config (--config); flags override config values,
// which override built-in defaults. The master seed has no default. Exit
// codes: 0 success, 1 config or domain error, 2 usage error.
//
// Config sections and keys:
//   [run]       seed, eval_mode
//   [cohort]    profile (built-in name or profile INI path), n_patients,
//               csv (load a cohort instead of generating one), null_features
//   [split]     train, val, test
//   [sweep]     bias_grid, target, confounder, subset_size, eval_subset_size, repeats
//   [learner]   architecture, hidden, learning_rate, beta1, beta2, epsilon,
//               lr_decay_gamma, lr_decay_every, epochs, batch_size, patience
//   [bootstrap] n_bootstrap, level, grouped
//   [baseline]  target, oracle_draws
//   [transfer]  train_profile, test_profile, task, train_patients,
//               test_patients, train_size, eval_size
//   [report]    inputs (comma-separated result JSON or cohort CSV paths)

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "confaudit/audit.hpp"
#include "confaudit/cohort.hpp"
#include "confaudit/ini.hpp"
#include "confaudit/report.hpp"
#include "confaudit/sampler.hpp"
#include "confaudit/synthgen.hpp"

namespace confaudit {

struct CohortSource {
    std::string profile = "csmc_like";
    std::optional<std::size_t> n_patients;
    std::optional<std::string> csv;
    bool null_features = false;
};

struct RunConfig {
    std::string command;
    std::filesystem::path out_dir = ".";
    std::uint64_t seed = 0;
    CohortSource cohort;
    SweepConfig sweep;  ///< also carries the split, learner and bootstrap settings
    BinaryTask baseline_target = BinaryTask::race(Race::White);
    std::size_t oracle_draws = 200000;
    std::string transfer_train_profile = "csmc_like";
    std::string transfer_test_profile = "shc_like";
    TransferTask transfer_task = TransferTask::parse("sex:M");
    TransferOptions transfer;
    std::vector<std::string> report_inputs;
};

struct CommandLine {
    std::string command;
    std::optional<std::string> config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> eval_mode;
    std::vector<std::string> inputs;
};

namespace detail {

inline void check_path(const std::string& key, const std::string& path) {
    if (!std::filesystem::exists(path)) throw ConfigError(key, "config key '" + key + "': no such file '" + path + "'");
}

inline BinaryTask task_key(IniReader& in, const std::string& section, const std::string& key, BinaryTask fallback) {
    auto v = in.get(section, key);
    return v ? BinaryTask::parse(*v, IniReader::qualify(section, key)) : fallback;
}

template <typename T>
void assign(std::optional<T> v, T& target) {
    if (v) target = *v;
}

inline void assign_size(std::optional<std::uint64_t> v, std::size_t& target) {
    if (v) target = static_cast<std::size_t>(*v);
}

}  // namespace detail

/// Resolves defaults, config file and flags into a RunConfig.
inline RunConfig resolve_run_config(const CommandLine& cl) {
    RunConfig rc;
    rc.command = cl.command;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> eval_mode;
    if (cl.config_path) {
        detail::check_path("config", *cl.config_path);
        const IniDocument doc = IniDocument::load(*cl.config_path);
        IniReader in(doc);
        seed = in.get_u64("run", "seed");
        eval_mode = in.get("run", "eval_mode");

        detail::assign(in.get("cohort", "profile"), rc.cohort.profile);
        if (auto n = in.get_u64("cohort", "n_patients")) rc.cohort.n_patients = static_cast<std::size_t>(*n);
        rc.cohort.csv = in.get("cohort", "csv");
        detail::assign(in.get_bool("cohort", "null_features"), rc.cohort.null_features);

        auto& s = rc.sweep;
        detail::assign(in.get_double("split", "train"), s.split.train);
        detail::assign(in.get_double("split", "val"), s.split.val);
        detail::assign(in.get_double("split", "test"), s.split.test);

        detail::assign(in.get_doubles("sweep", "bias_grid"), s.bias_grid);
        s.target = detail::task_key(in, "sweep", "target", s.target);
        s.confounder = detail::task_key(in, "sweep", "confounder", s.confounder);
        detail::assign_size(in.get_u64("sweep", "subset_size"), s.subset_size);
        detail::assign_size(in.get_u64("sweep", "eval_subset_size"), s.eval_subset_size);
        detail::assign_size(in.get_u64("sweep", "repeats"), s.repeats);

        auto& l = s.learner;
        if (auto a = in.get("learner", "architecture")) l.architecture = parse_architecture(*a);
        detail::assign_size(in.get_u64("learner", "hidden"), l.hidden);
        detail::assign(in.get_double("learner", "learning_rate"), l.learning_rate);
        detail::assign(in.get_double("learner", "beta1"), l.beta1);
        detail::assign(in.get_double("learner", "beta2"), l.beta2);
        detail::assign(in.get_double("learner", "epsilon"), l.epsilon);
        detail::assign(in.get_double("learner", "lr_decay_gamma"), l.lr_decay_gamma);
        detail::assign_size(in.get_u64("learner", "lr_decay_every"), l.lr_decay_every);
        detail::assign_size(in.get_u64("learner", "epochs"), l.epochs);
        detail::assign_size(in.get_u64("learner", "batch_size"), l.batch_size);
        detail::assign_size(in.get_u64("learner", "patience"), l.patience);

        detail::assign_size(in.get_u64("bootstrap", "n_bootstrap"), s.bootstrap.n_bootstrap);
        detail::assign(in.get_double("bootstrap", "level"), s.bootstrap.level);
        detail::assign(in.get_bool("bootstrap", "grouped"), s.bootstrap.grouped);

        rc.baseline_target = detail::task_key(in, "baseline", "target", rc.baseline_target);
        detail::assign_size(in.get_u64("baseline", "oracle_draws"), rc.oracle_draws);

        detail::assign(in.get("transfer", "train_profile"), rc.transfer_train_profile);
        detail::assign(in.get("transfer", "test_profile"), rc.transfer_test_profile);
        if (auto t = in.get("transfer", "task")) rc.transfer_task = TransferTask::parse(*t);
        detail::assign_size(in.get_u64("transfer", "train_patients"), rc.transfer.train_patients);
        detail::assign_size(in.get_u64("transfer", "test_patients"), rc.transfer.test_patients);
        detail::assign_size(in.get_u64("transfer", "train_size"), rc.transfer.train_size);
        detail::assign_size(in.get_u64("transfer", "eval_size"), rc.transfer.eval_size);

        if (auto inputs = in.get("report", "inputs")) {
            std::string_view rest = *inputs;
            while (!rest.empty()) {
                const auto comma = rest.find(',');
                const auto tok = detail::trim(rest.substr(0, comma));
                if (!tok.empty()) rc.report_inputs.emplace_back(tok);
                if (comma == std::string_view::npos) break;
                rest.remove_prefix(comma + 1);
            }
        }
        in.finish();
    }

    if (cl.seed) seed = cl.seed;
    if (cl.eval_mode) eval_mode = cl.eval_mode;
    if (cl.out_dir) rc.out_dir = *cl.out_dir;
    for (const auto& p : cl.inputs) rc.report_inputs.push_back(p);

    if (cl.command != "report") {
        if (!seed) throw ConfigError("seed", "a master seed is required (--seed or [run] seed)");
        rc.seed = *seed;
    } else {
        rc.seed = seed.value_or(0);
    }
    if (eval_mode) rc.sweep.eval_mode = parse_eval_mode(*eval_mode);
    rc.sweep.seed = rc.seed;

    // Paths must resolve now rather than halfway through a run.
    if (rc.cohort.csv) detail::check_path("cohort.csv", *rc.cohort.csv);
    for (const auto& [key, name] : {std::pair<std::string, std::string>{"cohort.profile", rc.cohort.profile},
                                    {"transfer.train_profile", rc.transfer_train_profile},
                                    {"transfer.test_profile", rc.transfer_test_profile}})
        if (!parse_default_profile(name)) detail::check_path(key, name);
    for (const auto& p : rc.report_inputs) detail::check_path("report.inputs", p);

    rc.sweep.validate();
    return rc;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json cohort_echo(const RunConfig& rc) {
    nlohmann::json j;
    if (rc.cohort.csv) {
        j["csv"] = *rc.cohort.csv;
    } else {
        j["profile"] = rc.cohort.profile;
        j["n_patients"] = rc.cohort.n_patients ? nlohmann::json(*rc.cohort.n_patients) : nlohmann::json(nullptr);
        j["null_features"] = rc.cohort.null_features;
        j["seed"] = derive_seed(rc.seed, {0xC040});
    }
    return j;
}

inline CohortProfile source_profile(const RunConfig& rc) {
    CohortProfile p = resolve_profile(rc.cohort.profile);
    if (rc.cohort.n_patients) p.n_patients = *rc.cohort.n_patients;
    if (rc.cohort.null_features) p.zero_signal_channels();
    p.validate();
    return p;
}

inline Cohort obtain_cohort(const RunConfig& rc) {
    if (rc.cohort.csv) return load_cohort(*rc.cohort.csv);
    return generate_cohort(source_profile(rc), {derive_seed(rc.seed, {0xC040})});
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
    if (!f) throw Error("error writing " + path.string());
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

// Wall-clock and invocation details stay out of the result payloads.
inline void write_provenance(const RunConfig& rc, const std::vector<std::string>& argv) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
    nlohmann::json j{{"command", rc.command}, {"argv", argv}, {"finished_utc", stamp}, {"workers", worker_count()}};
    write_json(rc.out_dir / (rc.command + ".provenance.json"), j);
}

inline nlohmann::json split_echo(const SplitSpec& s) {
    return {{"train", s.train}, {"val", s.val}, {"test", s.test}, {"seed", s.seed}};
}

inline int cmd_gen(const RunConfig& rc, std::ostream& out) {
    if (rc.cohort.csv) throw ConfigError("cohort.csv", "gen generates a cohort; cohort.csv does not apply");
    const CohortProfile p = source_profile(rc);
    const Cohort c = generate_cohort(p, {derive_seed(rc.seed, {0xC040})});
    std::ostringstream csv;
    write_cohort(csv, c);
    write_text(rc.out_dir / "cohort.csv", csv.str());
    const auto d = summarize_demographics(c);
    nlohmann::json j{{"kind", "gen"},
                     {"config", {{"cohort", cohort_echo(rc)}, {"seed", rc.seed}, {"profile", profile_to_string(p)}}},
                     {"patients", d.by_patient.n},
                     {"studies", d.by_study.n},
                     {"feature_dim", c.feature_dim()}};
    write_json(rc.out_dir / "gen.json", j);
    out << "wrote " << (rc.out_dir / "cohort.csv").string() << " (" << d.by_patient.n << " patients, " << d.by_study.n
        << " studies)\n";
    return 0;
}

inline int cmd_split(const RunConfig& rc, std::ostream& out) {
    const Cohort c = obtain_cohort(rc);
    const SplitSpec spec = rc.sweep.derived_split();
    const SplitAssignment a = split_by_patient(c, spec);
    std::ostringstream csv;
    write_split_manifest(csv, c, a);
    write_text(rc.out_dir / "split.csv", csv.str());
    nlohmann::json counts;
    for (Partition p : kAllPartitions)
        counts[std::string(to_token(p))] = {{"patients", a.patient_count(p)}, {"records", a.record_indices(p).size()}};
    nlohmann::json j{{"kind", "split"},
                     {"config", {{"cohort", cohort_echo(rc)}, {"split", split_echo(spec)}, {"seed", rc.seed}}},
                     {"partitions", counts}};
    write_json(rc.out_dir / "split.json", j);
    out << "wrote " << (rc.out_dir / "split.csv").string() << '\n';
    for (Partition p : kAllPartitions)
        out << "  " << to_token(p) << ": " << a.patient_count(p) << " patients, " << a.record_indices(p).size()
            << " records\n";
    return 0;
}

inline int cmd_sweep(const RunConfig& rc, std::ostream& out) {
    const Cohort c = obtain_cohort(rc);
    const SweepResult r = run_bias_sweep(c, rc.sweep);
    nlohmann::json j = r;
    j["cohort"] = cohort_echo(rc);
    write_json(rc.out_dir / "sweep.json", j);
    std::ostringstream csv;
    write_sweep_csv(csv, r);
    write_text(rc.out_dir / "sweep.csv", csv.str());
    ReportInputs in;
    in.sweeps.push_back(r);
    out << render_report(in);
    return 0;
}

inline int cmd_baseline(const RunConfig& rc, std::ostream& out) {
    const Cohort c = obtain_cohort(rc);
    BaselineOptions opt;
    opt.split = rc.sweep.split;
    opt.learner = rc.sweep.learner;
    opt.bootstrap = rc.sweep.bootstrap;
    opt.oracle_draws = rc.oracle_draws;
    opt.seed = rc.seed;
    std::optional<CohortProfile> profile;
    if (!rc.cohort.csv) profile = source_profile(rc);
    const bool race_target = rc.baseline_target.attribute == Attribute::Race;
    const BaselineResult r =
        confounder_baseline(c, rc.baseline_target, opt, profile && race_target ? &*profile : nullptr);
    nlohmann::json j = r;
    j["cohort"] = cohort_echo(rc);
    write_json(rc.out_dir / "baseline.json", j);
    ReportInputs in;
    in.baselines.push_back(r);
    out << render_report(in);
    return 0;
}

inline int cmd_transfer(const RunConfig& rc, std::ostream& out) {
    CohortProfile train = resolve_profile(rc.transfer_train_profile);
    CohortProfile test = resolve_profile(rc.transfer_test_profile);
    if (rc.cohort.null_features) {
        train.zero_signal_channels();
        test.zero_signal_channels();
    }
    TransferOptions opt = rc.transfer;
    opt.split = rc.sweep.split;
    opt.learner = rc.sweep.learner;
    opt.bootstrap = rc.sweep.bootstrap;
    opt.train_seed = derive_seed(rc.seed, {0x7EA1, 0});
    opt.test_seed = derive_seed(rc.seed, {0x7EA1, 1});
    const TransferResult r = transfer_eval(train, test, rc.transfer_task, opt);
    nlohmann::json j = r;
    j["seed"] = rc.seed;
    write_json(rc.out_dir / "transfer.json", j);
    ReportInputs in;
    in.transfers.push_back(r);
    out << render_report(in);
    return 0;
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline int cmd_report(const RunConfig& rc, std::ostream& out) {
    ReportInputs in;
    for (const auto& path : rc.report_inputs) {
        if (std::filesystem::path(path).extension() == ".csv") {
            in.demographics.emplace_back(std::filesystem::path(path).stem().string(),
                                         summarize_demographics(load_cohort(path)));
            continue;
        }
        const auto j = read_json_file(path);
        const std::string kind = j.value("kind", "");
        try {
            if (kind == "sweep")
                in.sweeps.push_back(j.get<SweepResult>());
            else if (kind == "baseline")
                in.baselines.push_back(j.get<BaselineResult>());
            else if (kind == "transfer")
                in.transfers.push_back(j.get<TransferResult>());
            else
                throw DataError("'" + path + "' is not a sweep, baseline or transfer result");
        } catch (const nlohmann::json::exception& e) {
            throw DataError("'" + path + "': malformed " + kind + " result: " + e.what());
        }
    }
    if (in.empty()) throw DataError("report: no inputs (pass result files or set [report] inputs)");
    out << emit_report(in, rc.out_dir);
    return 0;
}

}  // namespace detail

inline int execute(const RunConfig& rc, std::ostream& out) {
    if (rc.command == "gen") return detail::cmd_gen(rc, out);
    if (rc.command == "split") return detail::cmd_split(rc, out);
    if (rc.command == "sweep") return detail::cmd_sweep(rc, out);
    if (rc.command == "baseline") return detail::cmd_baseline(rc, out);
    if (rc.command == "transfer") return detail::cmd_transfer(rc, out);
    if (rc.command == "report") return detail::cmd_report(rc, out);
    throw ConfigError("command", "unknown command '" + rc.command + "'");
}

/// Parses argv, runs the command and maps failures onto exit codes.
inline int run_command(const std::vector<std::string>& argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
    CLI::App app{"Confounder-bias audit harness on synthetic cohorts", "confaudit"};
    app.require_subcommand(1, 1);
    CommandLine cl;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"gen", "generate a synthetic cohort CSV"},
        {"split", "write a patient-level split manifest"},
        {"sweep", "run a bias-proportion sweep"},
        {"baseline", "fit the comorbidity logistic-regression baseline"},
        {"transfer", "evaluate internal vs external transfer"},
        {"report", "render a text report from result files"}};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", cl.config_path, "INI config file");
        sub->add_option("--out", cl.out_dir, "output directory");
        sub->add_option("--seed", cl.seed, "master seed");
        auto* mode = sub->add_option("--eval-mode", cl.eval_mode, "sweep evaluation set")
                         ->check(CLI::IsMember({"matched", "natural"}));
        sub->add_flag_callback("--eval-natural", [&cl] { cl.eval_mode = "natural"; },
                               "shorthand for --eval-mode natural")
            ->excludes(mode);
        if (name == "report") sub->add_option("inputs", cl.inputs, "result JSON or cohort CSV files");
        sub->callback([&cl, n = name] { cl.command = n; });
    }

    std::vector<std::string> args(argv.rbegin(), argv.rend() - (argv.empty() ? 0 : 1));
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        const RunConfig rc = resolve_run_config(cl);
        std::ostringstream buffer;
        const int code = execute(rc, buffer);
        detail::write_provenance(rc, argv);
        out << buffer.str();
        return code;
    } catch (const ConfigError& e) {
        err << "config error [" << e.key() << "]: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

inline int run_command(int argc, char** argv) {
    return run_command(std::vector<std::string>(argv, argv + argc));
}

}  // namespace confaudit
