// Command-line surface for the exad library: generate synthetic datasets,
// fit/score/persist isolation models, compute feature attributions, and run
// the evaluation pipeline (contamination sweeps, feature-selection curves,
// ranking quality, attribution faithfulness, wall-time scaling).
//
// Conventions shared by every subcommand:
//   * --out names a run directory; all outputs land inside it, next to a
//     resolved_config.json capturing every parameter after config-file merge.
//   * --config points at a JSON object; command-line flags override its
//     values (a key is only consulted when the flag was not given).
//   * Existing output files abort the run unless --force is set.
//   * All numeric outputs are byte-deterministic for a fixed resolved config,
//     independent of --threads. Wall-time measurements (timings.json, the
//     timing evaluation mode) are the documented exception.
//   * On failure: a single line "error: ..." on stderr, exit code 1.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <exad/exad.hpp>

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config-file merge: flags override config values, so a config key is applied
// only when its option was absent from the command line.

class ConfigMerge {
  public:
    template <typename T>
    void bind(CLI::Option* opt, std::string key, T* target) {
        entries_.push_back({opt, std::move(key), [target](const json& v) { *target = v.get<T>(); }});
    }

    void apply(const json& config) const {
        if (!config.is_object()) throw std::invalid_argument("config file must hold a JSON object");
        for (const auto& e : entries_)
            if (e.opt->count() == 0 && config.contains(e.key)) e.set(config.at(e.key));
    }

  private:
    struct Entry {
        CLI::Option* opt;
        std::string key;
        std::function<void(const json&)> set;
    };
    std::vector<Entry> entries_;
};

// ---------------------------------------------------------------------------
// Run directory: collect target filenames, refuse to clobber without --force,
// then write everything.

class RunDir {
  public:
    RunDir(std::string path, bool force) : path_(std::move(path)), force_(force) {
        if (path_.empty()) throw std::invalid_argument("--out must name a run directory");
    }

    void check_fresh(const std::vector<std::string>& filenames) const {
        if (force_) return;
        for (const auto& name : filenames) {
            const auto target = std::filesystem::path(path_) / name;
            if (std::filesystem::exists(target))
                throw std::runtime_error("output " + target.string() +
                                         " already exists (use --force to overwrite)");
        }
    }

    void write(const std::string& filename, const std::string& content) const {
        std::filesystem::create_directories(path_);
        exad::write_text_file((std::filesystem::path(path_) / filename).string(), content);
    }

    void write_json(const std::string& filename, const json& j) const {
        write(filename, j.dump(2) + "\n");
    }

  private:
    std::string path_;
    bool force_;
};

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Shared option bundles.

struct CommonOpts {
    std::uint64_t seed = 42;
    std::string out;
    std::string config_path;
    std::size_t threads = 0; // 0 = hardware concurrency
    bool force = false;
};

struct DataOpts {
    std::string data_path;
    std::string preset;
    std::string label_column = "label";
    bool unlabeled = false;
};

struct ModelOpts {
    std::string model = "eif+";
    std::size_t n_trees = 100;
    std::size_t subsample = 256;
    std::int64_t max_depth = -1; // -1: default cap ceil(log2(psi))
    double eta = 1.5;
    std::size_t dof = 0;
};

struct ScenarioOpts {
    std::string scenario = "I";
    double level = 0.0;
};

void add_common(CLI::App* cmd, CommonOpts& o, ConfigMerge& merge) {
    merge.bind(cmd->add_option("--seed", o.seed, "Master seed; all randomness derives from it"),
               "seed", &o.seed);
    cmd->add_option("--out", o.out, "Run directory for all outputs")->required();
    cmd->add_option("--config", o.config_path, "JSON config file; flags override its values");
    merge.bind(cmd->add_option("--threads", o.threads, "Worker threads (0 = hardware)"),
               "threads", &o.threads);
    cmd->add_flag("--force", o.force, "Overwrite existing outputs");
}

void add_data(CLI::App* cmd, DataOpts& o, ConfigMerge& merge) {
    merge.bind(cmd->add_option("--data", o.data_path, "CSV dataset with a header row"),
               "data", &o.data_path);
    merge.bind(cmd->add_option("--preset", o.preset, "Synthetic preset name"),
               "preset", &o.preset);
    merge.bind(cmd->add_option("--label-column", o.label_column, "Label column in --data CSV"),
               "label_column", &o.label_column);
    cmd->add_flag("--no-labels", o.unlabeled, "Treat --data as unlabeled (no label column)");
}

void add_model(CLI::App* cmd, ModelOpts& o, ConfigMerge& merge) {
    merge.bind(cmd->add_option("--model", o.model, "if | eif | eif+"), "model", &o.model);
    merge.bind(cmd->add_option("--n-trees", o.n_trees, "Trees in the ensemble"),
               "n_trees", &o.n_trees);
    merge.bind(cmd->add_option("--subsample", o.subsample, "Rows sampled per tree (psi)"),
               "subsample", &o.subsample);
    merge.bind(cmd->add_option("--max-depth", o.max_depth, "Depth cap (-1: ceil(log2(psi)))"),
               "max_depth", &o.max_depth);
    merge.bind(cmd->add_option("--eta", o.eta, "Intercept spread factor (eif+ only)"),
               "eta", &o.eta);
    merge.bind(cmd->add_option("--dof", o.dof, "Nonzero normal components per split (0 = all)"),
               "dof", &o.dof);
}

void add_scenario(CLI::App* cmd, ScenarioOpts& o, ConfigMerge& merge, const char* fallback) {
    o.scenario = fallback;
    merge.bind(cmd->add_option("--scenario", o.scenario,
                               "Training rows: I (everything) | II (inliers only) | contaminated"),
               "scenario", &o.scenario);
    merge.bind(cmd->add_option("--level", o.level, "Contamination level for --scenario contaminated"),
               "level", &o.level);
}

exad::ForestConfig forest_config(const ModelOpts& m, std::uint64_t seed) {
    exad::ForestConfig cfg;
    cfg.model = exad::parse_model(m.model);
    cfg.n_trees = m.n_trees;
    cfg.subsample = m.subsample;
    if (m.max_depth >= 0) cfg.max_depth = static_cast<std::size_t>(m.max_depth);
    cfg.eta = m.eta;
    cfg.dof = m.dof;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

json forest_config_json(const exad::ForestConfig& cfg) {
    json j{{"model", exad::to_string(cfg.model)}, {"n_trees", cfg.n_trees},
           {"subsample", cfg.subsample},          {"eta", cfg.eta},
           {"dof", cfg.dof}};
    j["max_depth"] = cfg.max_depth ? json(*cfg.max_depth) : json(-1);
    return j;
}

/// Loads --data or generates --preset (exactly one must be given). Preset
/// data is generated from the given seed.
exad::Dataset load_data(const DataOpts& o, std::uint64_t seed) {
    if (o.data_path.empty() == o.preset.empty())
        throw std::invalid_argument("give exactly one of --data and --preset");
    if (!o.preset.empty()) return exad::make_preset(o.preset, seed);
    std::optional<std::string> label;
    if (!o.unlabeled) label = o.label_column;
    return exad::load_csv(o.data_path, label);
}

json data_json(const DataOpts& o) {
    return json{{"data", o.data_path},
                {"preset", o.preset},
                {"label_column", o.unlabeled ? "" : o.label_column}};
}

/// Contamination used to cut predicted outliers from scores: the flag when
/// given, else the labeled rate of the dataset.
double resolve_contamination(double flag_value, bool flag_given, const exad::Dataset& ds) {
    if (flag_given) return flag_value;
    if (!ds.labeled())
        throw std::invalid_argument("--contamination is required for unlabeled data");
    return ds.contamination();
}

std::vector<double> load_relevance(const std::string& path, std::size_t p) {
    const auto text = exad::read_text_file(path);
    const auto first_line = text.substr(0, text.find('\n'));
    const auto cells = exad::split_csv_line(first_line);
    if (cells.size() != p)
        throw std::invalid_argument("relevance file has " + std::to_string(cells.size()) +
                                    " values for " + std::to_string(p) + " features");
    std::vector<double> rel(p);
    for (std::size_t j = 0; j < p; ++j)
        if (!exad::parse_double(cells[j], rel[j]))
            throw std::invalid_argument("relevance file: cannot parse '" + cells[j] + "'");
    return rel;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double pop_std_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

// ---------------------------------------------------------------------------
// Subcommand bodies. Each returns after writing all outputs.

struct GenerateOpts {
    CommonOpts common;
    std::string preset;
    std::size_t n_inliers = 1000;
    std::size_t n_outliers = 100;
    std::size_t p = 6;
    double radius = 5.0;
    double distance = 5.0;
    double range_min = 0.0;
    double range_max = 5.0;
    std::vector<double> u;
};

void run_generate(const GenerateOpts& o) {
    exad::SyntheticSpec spec;
    if (!o.preset.empty()) {
        spec = exad::preset_spec(o.preset);
    } else {
        spec.name = "custom";
        spec.n_inliers = o.n_inliers;
        spec.n_outliers = o.n_outliers;
        spec.p = o.p;
        spec.radius = o.radius;
        spec.distance = o.distance;
        spec.range_min = o.range_min;
        spec.range_max = o.range_max;
        spec.u_raw = o.u;
    }
    spec.validate();

    RunDir dir(o.common.out, o.common.force);
    dir.check_fresh({"dataset.csv", "resolved_config.json"});

    const exad::Dataset ds = exad::make_dataset(spec, o.common.seed);

    json resolved{{"command", "generate"},
                  {"seed", o.common.seed},
                  {"threads", o.common.threads},
                  {"preset", o.preset},
                  {"n_inliers", spec.n_inliers},
                  {"n_outliers", spec.n_outliers},
                  {"p", spec.p},
                  {"radius", spec.radius},
                  {"distance", spec.distance},
                  {"range_min", spec.range_min},
                  {"range_max", spec.range_max},
                  {"u", spec.u_raw}};

    std::filesystem::create_directories(o.common.out);
    exad::save_csv(ds, (std::filesystem::path(o.common.out) / "dataset.csv").string());
    dir.write("resolved_config.json", dump_json(resolved));
    std::printf("n=%zu p=%zu contamination=%s\n", ds.n(), ds.p(),
                exad::format_double(ds.contamination()).c_str());
}

struct FitOpts {
    CommonOpts common;
    DataOpts data;
    ModelOpts model;
    ScenarioOpts scenario;
};

void run_fit(const FitOpts& o) {
    RunDir dir(o.common.out, o.common.force);
    dir.check_fresh({"model.json", "metrics.json", "timings.json", "resolved_config.json"});

    const exad::Dataset ds = load_data(o.data, o.common.seed);
    const auto scenario = exad::parse_scenario(o.scenario.scenario);
    const auto cfg = forest_config(o.model, o.common.seed);
    const auto split = exad::split_scenario(ds, scenario, o.scenario.level,
                                            exad::derive_seed(o.common.seed, 0));

    const auto t0 = std::chrono::steady_clock::now();
    const exad::Forest forest = exad::fit(split.train, cfg, o.common.threads);
    const auto t1 = std::chrono::steady_clock::now();
    const auto scores = exad::anomaly_scores(forest, ds, o.common.threads);
    const auto t2 = std::chrono::steady_clock::now();

    json resolved = forest_config_json(cfg);
    resolved["command"] = "fit";
    resolved["seed"] = o.common.seed;
    resolved["threads"] = o.common.threads;
    resolved["scenario"] = o.scenario.scenario;
    resolved["level"] = o.scenario.level;
    resolved.update(data_json(o.data));

    dir.write("model.json", exad::serialize_model(forest).dump(2) + "\n");
    if (ds.labeled()) {
        exad::EvaluationReport report;
        report.dataset = ds.name;
        report.scenario = exad::to_string(scenario);
        report.per_model.emplace_back(exad::to_string(cfg.model),
                                      exad::evaluate_scores(scores, ds.labels, ds.contamination()));
        dir.write_json("metrics.json", exad::metrics_to_json(report));
    }
    const json timings{
        {"fit_seconds", std::chrono::duration<double>(t1 - t0).count()},
        {"score_seconds", std::chrono::duration<double>(t2 - t1).count()},
    };
    dir.write_json("timings.json", timings);
    dir.write("resolved_config.json", dump_json(resolved));
    std::printf("fitted %s: trees=%zu training_rows=%zu\n", exad::to_string(cfg.model).c_str(),
                forest.trees.size(), split.train.n());
}

struct ScoreOpts {
    CommonOpts common;
    DataOpts data;
    std::string model_file;
};

void run_score(const ScoreOpts& o) {
    RunDir dir(o.common.out, o.common.force);
    dir.check_fresh({"scores.csv", "resolved_config.json"});

    const exad::Forest forest = exad::load_model(o.model_file);
    const exad::Dataset ds = load_data(o.data, o.common.seed);
    const auto scores = exad::anomaly_scores(forest, ds, o.common.threads);

    std::string csv = "row,score\n";
    for (std::size_t i = 0; i < scores.size(); ++i)
        csv += std::to_string(i) + ',' + exad::format_double(scores[i]) + '\n';

    json resolved{{"command", "score"},
                  {"seed", o.common.seed},
                  {"threads", o.common.threads},
                  {"model_file", o.model_file}};
    resolved.update(data_json(o.data));

    dir.write("scores.csv", csv);
    dir.write("resolved_config.json", dump_json(resolved));
    std::printf("scored %zu rows\n", scores.size());
}

struct ExplainOpts {
    CommonOpts common;
    DataOpts data;
    ModelOpts model;
    ScenarioOpts scenario;
    std::string model_file;
    std::string mode = "gfi";
    std::string explainer = "exiffi";
    std::string vmode = "absolute";
    std::size_t runs = 40;
    double contamination = 0.0;
    bool contamination_given = false;
    std::int64_t row = -1;
    bool all_rows = false;
    std::vector<std::size_t> features;
    std::size_t resolution = 100;
    double padding = 0.1;
};

exad::VMode parse_vmode(const std::string& text) {
    if (text == "absolute") return exad::VMode::absolute;
    if (text == "signed") return exad::VMode::signed_sum;
    throw std::invalid_argument("unknown vmode '" + text + "' (absolute | signed)");
}

void run_explain(const ExplainOpts& o) {
    const exad::Dataset ds = load_data(o.data, o.common.seed);
    const auto scenario = exad::parse_scenario(o.scenario.scenario);
    const auto explainer = exad::parse_explainer(o.explainer);
    const auto vmode = parse_vmode(o.vmode);

    // Model: either loaded from a file (its embedded config wins) or defined
    // by the model flags and fitted here on the scenario training split.
    exad::ForestConfig cfg;
    std::optional<exad::Forest> loaded;
    if (!o.model_file.empty()) {
        loaded = exad::load_model(o.model_file);
        cfg = loaded->config;
    } else {
        cfg = forest_config(o.model, o.common.seed);
    }
    if (explainer == exad::ExplainerKind::diffi && cfg.model != exad::ModelKind::iforest)
        throw std::invalid_argument("diffi explains axis-aligned (if) models only, got " +
                                    exad::to_string(cfg.model));

    auto fitted = [&]() -> exad::Forest {
        if (loaded) return *loaded;
        const auto split = exad::split_scenario(ds, scenario, o.scenario.level,
                                                exad::derive_seed(o.common.seed, 0));
        return exad::fit(split.train, cfg, o.common.threads);
    };

    json resolved = forest_config_json(cfg);
    resolved["command"] = "explain";
    resolved["mode"] = o.mode;
    resolved["explainer"] = o.explainer;
    resolved["vmode"] = o.vmode;
    resolved["seed"] = o.common.seed;
    resolved["threads"] = o.common.threads;
    resolved["scenario"] = o.scenario.scenario;
    resolved["level"] = o.scenario.level;
    resolved["model_file"] = o.model_file;
    resolved.update(data_json(o.data));

    RunDir dir(o.common.out, o.common.force);

    if (o.mode == "gfi") {
        dir.check_fresh({"gfi.json", "gfi.csv", "resolved_config.json"});
        // GFI refits per run on the data being explained: apply the scenario
        // split first, then hand the training rows to the runner.
        const auto split = exad::split_scenario(ds, scenario, o.scenario.level,
                                                exad::derive_seed(o.common.seed, 0));
        const double c = resolve_contamination(o.contamination, o.contamination_given, split.train);
        const auto report =
            exad::gfi_over_runs(split.train, cfg, explainer, o.runs, c, vmode, o.common.threads);
        resolved["runs"] = o.runs;
        resolved["contamination"] = c;
        dir.write_json("gfi.json", exad::gfi_report_to_json(report));
        dir.write("gfi.csv", exad::gfi_report_to_csv(report));
        std::printf("gfi over %zu runs: top feature %s\n", o.runs,
                    report.feature_names[report.ranking[0]].c_str());
    } else if (o.mode == "lfi") {
        dir.check_fresh({"lfi.csv", "resolved_config.json"});
        if (o.all_rows == (o.row >= 0))
            throw std::invalid_argument("lfi needs exactly one of --row and --all");
        const exad::Forest forest = fitted();
        const exad::Matrix lfi = exad::exiffi_lfi(forest, ds, vmode, o.common.threads);
        std::string csv = "row";
        for (const auto& name : ds.feature_names) csv += ',' + name;
        csv += '\n';
        auto emit = [&](std::size_t i) {
            csv += std::to_string(i);
            for (double v : lfi.row(i)) csv += ',' + exad::format_double(v);
            csv += '\n';
        };
        if (o.all_rows) {
            for (std::size_t i = 0; i < ds.n(); ++i) emit(i);
        } else {
            if (static_cast<std::size_t>(o.row) >= ds.n())
                throw std::invalid_argument("--row out of range");
            emit(static_cast<std::size_t>(o.row));
        }
        resolved["row"] = o.row;
        resolved["all"] = o.all_rows;
        dir.write("lfi.csv", csv);
        std::printf("lfi rows written: %zu\n", o.all_rows ? ds.n() : std::size_t{1});
    } else if (o.mode == "scoremap") {
        dir.check_fresh({"scoremap.csv", "scoremap.json", "resolved_config.json"});
        if (o.features.size() != 2)
            throw std::invalid_argument("scoremap needs --features i,j (two indices)");
        const exad::Forest forest = fitted();
        const auto grid = exad::scoremap_grid(forest, ds, o.features[0], o.features[1],
                                              o.resolution, o.padding, vmode, o.common.threads);
        resolved["features"] = o.features;
        resolved["resolution"] = o.resolution;
        resolved["padding"] = o.padding;
        dir.write("scoremap.csv", exad::scoremap_to_csv(grid));
        dir.write_json("scoremap.json", exad::scoremap_to_json(grid));
        std::printf("scoremap %zux%zu on features %zu,%zu\n", o.resolution, o.resolution,
                    o.features[0], o.features[1]);
    } else if (o.mode == "depth-profile") {
        dir.check_fresh({"depth_profile.csv", "depth_profile.json", "resolved_config.json"});
        const exad::Forest forest = fitted();
        const auto profile = exad::depth_profile(forest, ds, o.common.threads);
        dir.write("depth_profile.csv", exad::depth_profile_to_csv(profile));
        dir.write_json("depth_profile.json", exad::depth_profile_to_json(profile));
        std::printf("depth profile over %zu levels\n", profile.mean_l1.size());
    } else {
        throw std::invalid_argument("unknown explain mode '" + o.mode +
                                    "' (gfi | lfi | scoremap | depth-profile)");
    }
    dir.write("resolved_config.json", dump_json(resolved));
}

struct EvalOpts {
    CommonOpts common;
    DataOpts data;
    ModelOpts model;
    ScenarioOpts scenario;
    std::string mode;
    std::string explainer = "exiffi";
    std::string evaluator = "eif+";
    std::string relevance_file;
    std::string vmode = "absolute";
    std::vector<std::string> models{"if", "eif", "eif+"};
    std::vector<double> levels{0.0, 0.02, 0.04, 0.06, 0.08, 0.1};
    std::size_t n_seeds = 10;
    double contamination = 0.0;
    bool contamination_given = false;
    std::vector<std::size_t> sizes{1000, 4000};
    std::vector<std::size_t> dims{6};
};

/// One global ranking: fit the ranking model on the scenario split, explain
/// the full dataset, order features by importance.
std::vector<std::size_t> ranking_from_gfi(const exad::Dataset& ds, const exad::ForestConfig& cfg,
                                          exad::ExplainerKind explainer, exad::Scenario scenario,
                                          double level, double contamination, exad::VMode vmode,
                                          std::uint64_t split_seed, std::size_t threads) {
    const auto split = exad::split_scenario(ds, scenario, level, split_seed);
    const exad::Forest forest = exad::fit(split.train, cfg, threads);
    const auto gfi = explainer == exad::ExplainerKind::exiffi
                         ? exad::exiffi_gfi(forest, ds, contamination, vmode, threads)
                         : exad::diffi_gfi(forest, ds, contamination, threads);
    return exad::ranked_indices(gfi);
}

void run_eval(const EvalOpts& o) {
    RunDir dir(o.common.out, o.common.force);
    const auto scenario = exad::parse_scenario(o.scenario.scenario);
    const auto vmode = parse_vmode(o.vmode);

    json resolved = forest_config_json(forest_config(o.model, o.common.seed));
    resolved["command"] = "eval";
    resolved["mode"] = o.mode;
    resolved["seed"] = o.common.seed;
    resolved["threads"] = o.common.threads;
    resolved["scenario"] = o.scenario.scenario;
    resolved["level"] = o.scenario.level;
    resolved.update(data_json(o.data));

    if (o.mode == "sweep") {
        dir.check_fresh({"sweep.csv", "sweep.json", "resolved_config.json"});
        const exad::Dataset ds = load_data(o.data, o.common.seed);
        std::vector<exad::ForestConfig> configs;
        for (const auto& name : o.models) {
            ModelOpts m = o.model;
            m.model = name;
            configs.push_back(forest_config(m, o.common.seed));
        }
        const auto table =
            exad::contamination_sweep(ds, configs, o.levels, o.n_seeds, o.common.threads);
        resolved["models"] = o.models;
        resolved["levels"] = o.levels;
        resolved["n_seeds"] = o.n_seeds;
        dir.write("sweep.csv", exad::sweep_to_csv(table));
        dir.write_json("sweep.json", exad::sweep_to_json(table));
        std::printf("sweep: %zu cells x %zu seeds\n", table.size(), o.n_seeds);
    } else if (o.mode == "feature-selection") {
        dir.check_fresh({"curves.csv", "curves.json", "resolved_config.json"});
        const exad::Dataset ds = load_data(o.data, o.common.seed);
        const auto explainer = exad::parse_explainer(o.explainer);
        const auto ranking_cfg = forest_config(o.model, o.common.seed);
        if (explainer == exad::ExplainerKind::diffi && ranking_cfg.model != exad::ModelKind::iforest)
            throw std::invalid_argument("diffi explains axis-aligned (if) models only");
        const double c = resolve_contamination(o.contamination, o.contamination_given, ds);
        const auto ranking =
            ranking_from_gfi(ds, ranking_cfg, explainer, scenario, o.scenario.level, c, vmode,
                             exad::derive_seed(o.common.seed, 0), o.common.threads);
        ModelOpts ev = o.model;
        ev.model = o.evaluator;
        const auto evaluator_cfg = forest_config(ev, o.common.seed);
        const auto curves = exad::feature_selection_curves(
            ds, ranking, evaluator_cfg, scenario, o.scenario.level,
            exad::derive_seed(o.common.seed, 1), o.common.threads);
        resolved["explainer"] = o.explainer;
        resolved["evaluator"] = o.evaluator;
        resolved["vmode"] = o.vmode;
        resolved["contamination"] = c;
        dir.write("curves.csv", exad::curves_to_csv(curves));
        dir.write_json("curves.json", exad::curves_to_json(curves));
        std::printf("auc_fs=%s\n", exad::format_double(exad::auc_fs(curves)).c_str());
    } else if (o.mode == "ndcg") {
        dir.check_fresh({"ndcg.csv", "ndcg.json", "resolved_config.json"});
        const bool from_preset = !o.data.preset.empty();
        const auto explainer = exad::parse_explainer(o.explainer);
        const auto base_cfg = forest_config(o.model, o.common.seed);
        if (explainer == exad::ExplainerKind::diffi && base_cfg.model != exad::ModelKind::iforest)
            throw std::invalid_argument("diffi explains axis-aligned (if) models only");

        std::vector<double> per_run(o.n_seeds, 0.0);
        std::vector<double> relevance;
        for (std::size_t k = 0; k < o.n_seeds; ++k) {
            exad::Dataset ds = from_preset
                                   ? exad::make_preset(o.data.preset,
                                                       exad::derive_seed(o.common.seed, 2 * k))
                                   : load_data(o.data, o.common.seed);
            if (relevance.empty()) {
                relevance = !o.relevance_file.empty() ? load_relevance(o.relevance_file, ds.p())
                                                      : ds.feature_relevance;
                if (relevance.empty())
                    throw std::invalid_argument(
                        "no feature relevance available: use a preset or --relevance FILE");
            }
            exad::ForestConfig cfg = base_cfg;
            cfg.seed = exad::derive_seed(o.common.seed, 2 * k + 1);
            const double c = resolve_contamination(o.contamination, o.contamination_given, ds);
            const auto ranking =
                ranking_from_gfi(ds, cfg, explainer, scenario, o.scenario.level, c, vmode,
                                 exad::derive_seed(cfg.seed, 0), o.common.threads);
            per_run[k] = exad::ndcg(ranking, relevance);
        }
        resolved["explainer"] = o.explainer;
        resolved["vmode"] = o.vmode;
        resolved["n_seeds"] = o.n_seeds;
        resolved["relevance_file"] = o.relevance_file;
        std::string csv = "run,ndcg\n";
        for (std::size_t k = 0; k < o.n_seeds; ++k)
            csv += std::to_string(k) + ',' + exad::format_double(per_run[k]) + '\n';
        csv += "mean," + exad::format_double(mean_of(per_run)) + '\n';
        csv += "std," + exad::format_double(pop_std_of(per_run)) + '\n';
        dir.write("ndcg.csv", csv);
        dir.write_json("ndcg.json", json{{"per_run", per_run},
                                         {"mean", mean_of(per_run)},
                                         {"std", pop_std_of(per_run)},
                                         {"relevance", relevance}});
        std::printf("ndcg mean=%s\n", exad::format_double(mean_of(per_run)).c_str());
    } else if (o.mode == "correlation") {
        dir.check_fresh({"correlation.csv", "correlation.json", "resolved_config.json"});
        const bool from_preset = !o.data.preset.empty();
        const auto base_cfg = forest_config(o.model, o.common.seed);
        std::vector<double> per_run(o.n_seeds, 0.0);
        for (std::size_t k = 0; k < o.n_seeds; ++k) {
            exad::Dataset ds = from_preset
                                   ? exad::make_preset(o.data.preset,
                                                       exad::derive_seed(o.common.seed, 2 * k))
                                   : load_data(o.data, o.common.seed);
            exad::ForestConfig cfg = base_cfg;
            cfg.seed = exad::derive_seed(o.common.seed, 2 * k + 1);
            const auto split = exad::split_scenario(ds, scenario, o.scenario.level,
                                                    exad::derive_seed(cfg.seed, 0));
            const exad::Forest forest = exad::fit(split.train, cfg, o.common.threads);
            per_run[k] = exad::lfi_score_correlation(forest, ds, vmode, o.common.threads);
        }
        resolved["vmode"] = o.vmode;
        resolved["n_seeds"] = o.n_seeds;
        std::string csv = "run,pearson\n";
        for (std::size_t k = 0; k < o.n_seeds; ++k)
            csv += std::to_string(k) + ',' + exad::format_double(per_run[k]) + '\n';
        csv += "mean," + exad::format_double(mean_of(per_run)) + '\n';
        csv += "std," + exad::format_double(pop_std_of(per_run)) + '\n';
        dir.write("correlation.csv", csv);
        dir.write_json("correlation.json", json{{"per_run", per_run},
                                                {"mean", mean_of(per_run)},
                                                {"std", pop_std_of(per_run)}});
        std::printf("pearson mean=%s\n", exad::format_double(mean_of(per_run)).c_str());
    } else if (o.mode == "timing") {
        dir.check_fresh({"timing.csv", "timing.json", "resolved_config.json"});
        std::vector<std::pair<std::size_t, std::size_t>> shapes;
        for (std::size_t n : o.sizes)
            for (std::size_t p : o.dims) shapes.emplace_back(n, p);
        const auto cfg = forest_config(o.model, o.common.seed);
        const auto table = exad::timing_benchmark(shapes, cfg, o.common.threads);
        resolved["sizes"] = o.sizes;
        resolved["dims"] = o.dims;
        dir.write("timing.csv", exad::timing_to_csv(table));
        json rows = json::array();
        for (const auto& cell : table)
            rows.push_back(json{{"n", cell.n},
                                {"p", cell.p},
                                {"fit_seconds", cell.fit_seconds},
                                {"score_seconds", cell.score_seconds},
                                {"importance_seconds", cell.importance_seconds}});
        dir.write_json("timing.json", rows);
        std::printf("timed %zu shapes\n", table.size());
    } else {
        throw std::invalid_argument(
            "unknown eval mode '" + o.mode +
            "' (sweep | feature-selection | ndcg | correlation | timing)");
    }
    dir.write("resolved_config.json", dump_json(resolved));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Isolation-forest anomaly detection, attribution, and evaluation toolkit"};
    app.require_subcommand(1);

    GenerateOpts gen;
    FitOpts fit_o;
    ScoreOpts score_o;
    ExplainOpts expl;
    EvalOpts eval_o;
    ConfigMerge gen_merge, fit_merge, score_merge, expl_merge, eval_merge;

    // generate ---------------------------------------------------------------
    auto* cg = app.add_subcommand("generate", "Write a synthetic labeled dataset CSV");
    add_common(cg, gen.common, gen_merge);
    gen_merge.bind(cg->add_option("--preset", gen.preset, "Named dataset family"),
                   "preset", &gen.preset);
    gen_merge.bind(cg->add_option("--n-inliers", gen.n_inliers, "Inlier rows (custom spec)"),
                   "n_inliers", &gen.n_inliers);
    gen_merge.bind(cg->add_option("--n-outliers", gen.n_outliers, "Outlier rows (custom spec)"),
                   "n_outliers", &gen.n_outliers);
    gen_merge.bind(cg->add_option("--p", gen.p, "Feature count (custom spec)"), "p", &gen.p);
    gen_merge.bind(cg->add_option("--radius", gen.radius, "Inlier ball radius"), "radius",
                   &gen.radius);
    gen_merge.bind(cg->add_option("--distance", gen.distance, "Outlier offset distance"),
                   "distance", &gen.distance);
    gen_merge.bind(cg->add_option("--range-min", gen.range_min, "Uniform component lower bound"),
                   "range_min", &gen.range_min);
    gen_merge.bind(cg->add_option("--range-max", gen.range_max, "Uniform component upper bound"),
                   "range_max", &gen.range_max);
    gen_merge.bind(cg->add_option("--u", gen.u, "Anomalous direction, comma separated")
                       ->delimiter(','),
                   "u", &gen.u);
    cg->callback([&] {
        if (!gen.common.config_path.empty())
            gen_merge.apply(json::parse(exad::read_text_file(gen.common.config_path)));
        run_generate(gen);
    });

    // fit ---------------------------------------------------------------------
    auto* cf = app.add_subcommand("fit", "Fit an isolation model and report detection metrics");
    add_common(cf, fit_o.common, fit_merge);
    add_data(cf, fit_o.data, fit_merge);
    add_model(cf, fit_o.model, fit_merge);
    add_scenario(cf, fit_o.scenario, fit_merge, "I");
    cf->callback([&] {
        if (!fit_o.common.config_path.empty())
            fit_merge.apply(json::parse(exad::read_text_file(fit_o.common.config_path)));
        run_fit(fit_o);
    });

    // score -------------------------------------------------------------------
    auto* cs = app.add_subcommand("score", "Score a dataset with a saved model");
    add_common(cs, score_o.common, score_merge);
    add_data(cs, score_o.data, score_merge);
    score_merge.bind(cs->add_option("--model-file", score_o.model_file, "Saved model JSON")
                         ->required(),
                     "model_file", &score_o.model_file);
    cs->callback([&] {
        if (!score_o.common.config_path.empty())
            score_merge.apply(json::parse(exad::read_text_file(score_o.common.config_path)));
        run_score(score_o);
    });

    // explain -----------------------------------------------------------------
    auto* ce = app.add_subcommand("explain", "Feature attributions for a model on a dataset");
    add_common(ce, expl.common, expl_merge);
    add_data(ce, expl.data, expl_merge);
    add_model(ce, expl.model, expl_merge);
    add_scenario(ce, expl.scenario, expl_merge, "I");
    expl_merge.bind(ce->add_option("--model-file", expl.model_file,
                                   "Saved model JSON (otherwise fit from the model flags)"),
                    "model_file", &expl.model_file);
    expl_merge.bind(ce->add_option("--mode", expl.mode, "gfi | lfi | scoremap | depth-profile"),
                    "mode", &expl.mode);
    expl_merge.bind(ce->add_option("--explainer", expl.explainer, "exiffi | diffi"), "explainer",
                    &expl.explainer);
    expl_merge.bind(ce->add_option("--vmode", expl.vmode, "absolute | signed"), "vmode",
                    &expl.vmode);
    expl_merge.bind(ce->add_option("--runs", expl.runs, "Refits aggregated by gfi"), "runs",
                    &expl.runs);
    auto* contam_opt = ce->add_option("--contamination", expl.contamination,
                                      "Outlier fraction for the predicted split "
                                      "(default: labeled rate)");
    expl_merge.bind(contam_opt, "contamination", &expl.contamination);
    expl_merge.bind(ce->add_option("--row", expl.row, "Row index for lfi"), "row", &expl.row);
    ce->add_flag("--all", expl.all_rows, "Emit lfi for every row");
    expl_merge.bind(ce->add_option("--features", expl.features, "Two feature indices i,j")
                        ->delimiter(','),
                    "features", &expl.features);
    expl_merge.bind(ce->add_option("--resolution", expl.resolution, "Scoremap grid resolution"),
                    "resolution", &expl.resolution);
    expl_merge.bind(ce->add_option("--padding", expl.padding, "Scoremap range padding fraction"),
                    "padding", &expl.padding);
    ce->callback([&] {
        if (!expl.common.config_path.empty()) {
            const json cfg = json::parse(exad::read_text_file(expl.common.config_path));
            expl_merge.apply(cfg);
            if (contam_opt->count() == 0 && cfg.contains("contamination"))
                expl.contamination_given = true;
        }
        expl.contamination_given = expl.contamination_given || contam_opt->count() > 0;
        run_explain(expl);
    });

    // eval ---------------------------------------------------------------------
    auto* cv = app.add_subcommand("eval", "Evaluation pipeline: sweeps, curves, rankings, timing");
    add_common(cv, eval_o.common, eval_merge);
    add_data(cv, eval_o.data, eval_merge);
    add_model(cv, eval_o.model, eval_merge);
    add_scenario(cv, eval_o.scenario, eval_merge, "II");
    eval_merge.bind(cv->add_option("--mode", eval_o.mode,
                                   "sweep | feature-selection | ndcg | correlation | timing")
                        ->required(),
                    "mode", &eval_o.mode);
    eval_merge.bind(cv->add_option("--explainer", eval_o.explainer, "Ranking source"),
                    "explainer", &eval_o.explainer);
    eval_merge.bind(cv->add_option("--evaluator", eval_o.evaluator,
                                   "Model refit along feature-selection curves"),
                    "evaluator", &eval_o.evaluator);
    eval_merge.bind(cv->add_option("--relevance", eval_o.relevance_file,
                                   "CSV with one relevance value per feature"),
                    "relevance", &eval_o.relevance_file);
    eval_merge.bind(cv->add_option("--vmode", eval_o.vmode, "absolute | signed"), "vmode",
                    &eval_o.vmode);
    eval_merge.bind(cv->add_option("--models", eval_o.models, "Sweep model kinds")
                        ->delimiter(','),
                    "models", &eval_o.models);
    eval_merge.bind(cv->add_option("--levels", eval_o.levels, "Sweep contamination levels")
                        ->delimiter(','),
                    "levels", &eval_o.levels);
    eval_merge.bind(cv->add_option("--n-seeds", eval_o.n_seeds, "Repetitions to aggregate"),
                    "n_seeds", &eval_o.n_seeds);
    auto* eval_contam = cv->add_option("--contamination", eval_o.contamination,
                                       "Outlier fraction for the predicted split "
                                       "(default: labeled rate)");
    eval_merge.bind(eval_contam, "contamination", &eval_o.contamination);
    eval_merge.bind(cv->add_option("--sizes", eval_o.sizes, "Timing row counts")->delimiter(','),
                    "sizes", &eval_o.sizes);
    eval_merge.bind(cv->add_option("--dims", eval_o.dims, "Timing feature counts")
                        ->delimiter(','),
                    "dims", &eval_o.dims);
    cv->callback([&] {
        if (!eval_o.common.config_path.empty()) {
            const json cfg = json::parse(exad::read_text_file(eval_o.common.config_path));
            eval_merge.apply(cfg);
            if (eval_contam->count() == 0 && cfg.contains("contamination"))
                eval_o.contamination_given = true;
        }
        eval_o.contamination_given = eval_o.contamination_given || eval_contam->count() > 0;
        run_eval(eval_o);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
