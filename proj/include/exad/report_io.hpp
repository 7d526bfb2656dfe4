#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "exad/eval.hpp"
#include "exad/explain.hpp"
#include "exad/io_util.hpp"

namespace exad {

// JSON and long-format CSV emission for the report types. All numbers go
// through shortest-round-trip formatting so identical runs write identical
// bytes.

inline nlohmann::json gfi_report_to_json(const GfiReport& r) {
    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t k = 0; k < r.n_runs; ++k) {
        const auto row = r.per_run.row(k);
        runs.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return nlohmann::json{
        {"explainer", r.explainer},   {"feature_names", r.feature_names},
        {"n_runs", r.n_runs},         {"per_run", std::move(runs)},
        {"mean", r.mean},             {"stdev", r.stdev},
        {"rank_histogram", r.rank_histogram}, {"ranking", r.ranking},
    };
}

/// feature,rank,count rows; rank is 1-based, most important first.
inline std::string gfi_report_to_csv(const GfiReport& r) {
    std::string out = "feature,rank,count\n";
    for (std::size_t j = 0; j < r.rank_histogram.size(); ++j)
        for (std::size_t rank = 0; rank < r.rank_histogram[j].size(); ++rank) {
            out += r.feature_names[j];
            out += ',';
            out += std::to_string(rank + 1);
            out += ',';
            out += std::to_string(r.rank_histogram[j][rank]);
            out += '\n';
        }
    return out;
}

inline nlohmann::json scoremap_to_json(const ScoremapGrid& g) {
    return nlohmann::json{
        {"feat_i", g.feat_i},       {"feat_j", g.feat_j}, {"resolution", g.resolution},
        {"xs", g.xs},               {"ys", g.ys},         {"winner", g.winner},
        {"magnitude", g.magnitude}, {"score", g.score},
    };
}

/// x,y,winner,magnitude,anomaly rows, y-major to match the stored layout.
inline std::string scoremap_to_csv(const ScoremapGrid& g) {
    std::string out = "x,y,winner,magnitude,anomaly\n";
    for (std::size_t yi = 0; yi < g.resolution; ++yi)
        for (std::size_t xi = 0; xi < g.resolution; ++xi) {
            const std::size_t cell = yi * g.resolution + xi;
            out += format_double(g.xs[xi]);
            out += ',';
            out += format_double(g.ys[yi]);
            out += ',';
            out += std::to_string(g.winner[cell]);
            out += ',';
            out += format_double(g.magnitude[cell]);
            out += ',';
            out += format_double(g.score[cell]);
            out += '\n';
        }
    return out;
}

inline nlohmann::json depth_profile_to_json(const DepthProfile& d) {
    return nlohmann::json{{"mean_l1", d.mean_l1}, {"samples", d.samples}};
}

inline std::string depth_profile_to_csv(const DepthProfile& d) {
    std::string out = "depth,mean_l1,samples\n";
    for (std::size_t depth = 0; depth < d.mean_l1.size(); ++depth) {
        out += std::to_string(depth);
        out += ',';
        out += format_double(d.mean_l1[depth]);
        out += ',';
        out += std::to_string(d.samples[depth]);
        out += '\n';
    }
    return out;
}

inline nlohmann::json curves_to_json(const FeatureSelectionCurves& c) {
    return nlohmann::json{
        {"ranking", c.ranking}, {"random_order", c.random_order}, {"direct", c.direct},
        {"inverse", c.inverse}, {"random", c.random},             {"auc_fs", auc_fs(c)},
    };
}

/// curve,step,dropped_features,average_precision rows.
inline std::string curves_to_csv(const FeatureSelectionCurves& c) {
    std::string out = "curve,step,average_precision\n";
    auto emit = [&out](const char* name, const std::vector<double>& ys) {
        for (std::size_t i = 0; i < ys.size(); ++i) {
            out += name;
            out += ',';
            out += std::to_string(i);
            out += ',';
            out += format_double(ys[i]);
            out += '\n';
        }
    };
    emit("direct", c.direct);
    emit("inverse", c.inverse);
    emit("random", c.random);
    return out;
}

/// dataset,model,level,seed,metric,value long rows, with mean/std summary
/// rows (seed column empty) after the per-seed entries.
inline std::string sweep_to_csv(const std::vector<SweepCell>& table) {
    std::string out = "dataset,model,level,seed,metric,value\n";
    for (const auto& cell : table) {
        for (std::size_t k = 0; k < cell.ap_per_seed.size(); ++k) {
            out += cell.dataset + ',' + cell.model + ',' + format_double(cell.level) + ',' +
                   std::to_string(k) + ",ap," + format_double(cell.ap_per_seed[k]) + '\n';
        }
        out += cell.dataset + ',' + cell.model + ',' + format_double(cell.level) +
               ",,ap_mean," + format_double(cell.ap_mean) + '\n';
        out += cell.dataset + ',' + cell.model + ',' + format_double(cell.level) +
               ",,ap_std," + format_double(cell.ap_std) + '\n';
    }
    return out;
}

inline nlohmann::json sweep_to_json(const std::vector<SweepCell>& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& cell : table)
        rows.push_back(nlohmann::json{{"dataset", cell.dataset},
                                      {"model", cell.model},
                                      {"level", cell.level},
                                      {"ap_per_seed", cell.ap_per_seed},
                                      {"ap_mean", cell.ap_mean},
                                      {"ap_std", cell.ap_std}});
    return rows;
}

inline std::string timing_to_csv(const std::vector<TimingCell>& table) {
    std::string out = "n,p,fit_seconds,score_seconds,importance_seconds\n";
    for (const auto& cell : table) {
        out += std::to_string(cell.n) + ',' + std::to_string(cell.p) + ',' +
               format_double(cell.fit_seconds) + ',' + format_double(cell.score_seconds) + ',' +
               format_double(cell.importance_seconds) + '\n';
    }
    return out;
}

inline nlohmann::json metrics_to_json(const EvaluationReport& r) {
    nlohmann::json models = nlohmann::json::object();
    for (const auto& [name, m] : r.per_model)
        models[name] = nlohmann::json{{"average_precision", m.average_precision},
                                      {"precision", m.precision},
                                      {"roc_auc", m.roc_auc},
                                      {"fit_seconds", m.fit_seconds},
                                      {"score_seconds", m.score_seconds}};
    return nlohmann::json{
        {"dataset", r.dataset}, {"scenario", r.scenario}, {"models", std::move(models)}};
}

} // namespace exad
