#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "exad/io_util.hpp"
#include "exad/rng.hpp"

namespace exad {

/// Dense row-major matrix of doubles. Rows are handed out as spans; nothing
/// here owns algorithm logic, it is just storage.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

/// A table of points, optionally labeled (0 = inlier, 1 = outlier/anomaly).
/// `feature_relevance` carries per-feature ground-truth importance magnitudes
/// for generated data (zero = feature uninvolved in the anomalies); it is
/// empty for data of unknown provenance.
struct Dataset {
    std::string name;
    std::vector<std::string> feature_names;
    Matrix X;
    std::vector<int> labels;              // empty when unlabeled
    std::vector<double> feature_relevance; // empty when unknown

    std::size_t n() const { return X.rows; }
    std::size_t p() const { return X.cols; }
    bool labeled() const { return !labels.empty(); }

    std::size_t outlier_count() const {
        std::size_t c = 0;
        for (int l : labels) c += static_cast<std::size_t>(l);
        return c;
    }

    /// Fraction of labeled outliers. Requires labels.
    double contamination() const {
        if (!labeled()) throw std::invalid_argument("contamination(): dataset has no labels");
        return static_cast<double>(outlier_count()) / static_cast<double>(n());
    }

    /// Ground-truth anomalous feature indices (nonzero relevance).
    std::vector<std::size_t> anomalous_features() const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < feature_relevance.size(); ++j)
            if (feature_relevance[j] != 0.0) out.push_back(j);
        return out;
    }

    /// Shape/finiteness/label-domain checks; throws on the first violation.
    void validate() const {
        if (X.rows == 0 || X.cols == 0)
            throw std::invalid_argument("dataset must have at least one row and one column");
        if (feature_names.size() != X.cols)
            throw std::invalid_argument("feature name count does not match column count");
        if (!labels.empty() && labels.size() != X.rows)
            throw std::invalid_argument("label count does not match row count");
        for (double v : X.data)
            if (!std::isfinite(v))
                throw std::invalid_argument("dataset contains a non-finite value");
        for (int l : labels)
            if (l != 0 && l != 1)
                throw std::invalid_argument("labels must be 0 or 1");
        if (!feature_relevance.empty() && feature_relevance.size() != X.cols)
            throw std::invalid_argument("feature relevance size does not match column count");
    }

    /// Copy restricted to the given columns (kept in the given order).
    Dataset select_features(const std::vector<std::size_t>& cols) const {
        if (cols.empty()) throw std::invalid_argument("select_features: empty column set");
        Dataset out;
        out.name = name;
        out.labels = labels;
        out.X = Matrix(X.rows, cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (cols[j] >= X.cols) throw std::invalid_argument("select_features: column out of range");
            out.feature_names.push_back(feature_names[cols[j]]);
            if (!feature_relevance.empty())
                out.feature_relevance.push_back(feature_relevance[cols[j]]);
            for (std::size_t i = 0; i < X.rows; ++i) out.X(i, j) = X(i, cols[j]);
        }
        return out;
    }

    /// Copy restricted to the given rows (kept in the given order).
    Dataset select_rows(const std::vector<std::size_t>& rows) const {
        Dataset out;
        out.name = name;
        out.feature_names = feature_names;
        out.feature_relevance = feature_relevance;
        out.X = Matrix(rows.size(), X.cols);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i] >= X.rows) throw std::invalid_argument("select_rows: row out of range");
            std::copy_n(X.row(rows[i]).data(), X.cols, out.X.row(i).data());
            if (labeled()) out.labels.push_back(labels[rows[i]]);
        }
        return out;
    }
};

/// Loads a CSV with a header row. If `label_column` is given, that column
/// becomes the 0/1 labels and the rest the features; naming a column that is
/// not present is an error (use nullopt for unlabeled files).
inline Dataset load_csv(const std::string& path,
                        const std::optional<std::string>& label_column = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV file: " + path);
    const auto header = split_csv_line(line);
    if (header.empty()) throw std::runtime_error("CSV header has no columns: " + path);

    std::size_t label_idx = header.size(); // sentinel: no label column
    if (label_column) {
        const auto it = std::find(header.begin(), header.end(), *label_column);
        if (it == header.end())
            throw std::runtime_error("label column '" + *label_column + "' not found in " + path);
        label_idx = static_cast<std::size_t>(it - header.begin());
    }

    Dataset ds;
    ds.name = path;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (j != label_idx) ds.feature_names.push_back(header[j]);

    std::vector<double> values;
    std::size_t n_rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(header.size()) + " cells, got " +
                                     std::to_string(cells.size()));
        for (std::size_t j = 0; j < cells.size(); ++j) {
            double v = 0.0;
            if (!parse_double(cells[j], v))
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": column '" +
                                         header[j] + "': not a number: '" + cells[j] + "'");
            if (j == label_idx) {
                if (v != 0.0 && v != 1.0)
                    throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                             ": label must be 0 or 1, got '" + cells[j] + "'");
                ds.labels.push_back(static_cast<int>(v));
            } else {
                values.push_back(v);
            }
        }
        ++n_rows;
    }
    if (n_rows == 0) throw std::runtime_error("CSV has a header but no data rows: " + path);

    ds.X.rows = n_rows;
    ds.X.cols = ds.feature_names.size();
    ds.X.data = std::move(values);
    ds.validate();
    return ds;
}

/// Writes features (+ label column when present) with round-trip precision.
inline void save_csv(const Dataset& ds, const std::string& path) {
    std::string out;
    for (std::size_t j = 0; j < ds.feature_names.size(); ++j) {
        if (j) out += ',';
        out += ds.feature_names[j];
    }
    if (ds.labeled()) out += ",label";
    out += '\n';
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const auto row = ds.X.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out += ',';
            out += format_double(row[j]);
        }
        if (ds.labeled()) {
            out += ',';
            out += std::to_string(ds.labels[i]);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// Training scenarios

/// How the training set is carved out of a labeled dataset. Evaluation always
/// runs on the full dataset regardless of scenario.
enum class Scenario {
    full,         // train on everything, anomalies included
    inliers_only, // train on the labeled inliers
    contaminated, // inliers plus a seeded outlier subsample at a target rate
};

inline std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::full: return "I";
        case Scenario::inliers_only: return "II";
        case Scenario::contaminated: return "contaminated";
    }
    return "?";
}

inline Scenario parse_scenario(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (text == "i" || text == "1" || text == "full") return Scenario::full;
    if (text == "ii" || text == "2" || text == "inliers") return Scenario::inliers_only;
    if (text == "contaminated") return Scenario::contaminated;
    throw std::invalid_argument("unknown scenario '" + text + "' (expected I, II or contaminated)");
}

/// Nearest integer with .5 rounded down: ceil(x - 0.5).
inline std::size_t round_half_down(double x) {
    const double r = std::ceil(x - 0.5);
    return r <= 0.0 ? 0 : static_cast<std::size_t>(r);
}

struct ScenarioSplit {
    Scenario scenario = Scenario::full;
    std::vector<std::size_t> train_rows; // indices into the source dataset
    Dataset train;
    double contamination_level = 0.0;    // requested level (contaminated only)
};

/// Builds the training set for a scenario. `level` is only read for
/// Scenario::contaminated: the outlier count is chosen so the training
/// contamination matches it as closely as an integer count allows
/// (n_out = round_half_down(level * n_in / (1 - level))), and the outliers
/// are drawn without replacement with `seed`.
inline ScenarioSplit split_scenario(const Dataset& ds, Scenario scenario, double level = 0.0,
                                    std::uint64_t seed = 0) {
    ScenarioSplit out;
    out.scenario = scenario;
    out.contamination_level = scenario == Scenario::contaminated ? level : 0.0;

    if (scenario == Scenario::full) {
        out.train_rows.resize(ds.n());
        std::iota(out.train_rows.begin(), out.train_rows.end(), std::size_t{0});
        out.train = ds;
        return out;
    }

    if (!ds.labeled())
        throw std::invalid_argument("scenario " + to_string(scenario) + " requires labels");

    std::vector<std::size_t> inliers, outliers;
    for (std::size_t i = 0; i < ds.n(); ++i)
        (ds.labels[i] == 0 ? inliers : outliers).push_back(i);
    if (inliers.empty()) throw std::invalid_argument("dataset has no labeled inliers to train on");

    out.train_rows = inliers;
    if (scenario == Scenario::contaminated) {
        if (level < 0.0 || level >= 1.0)
            throw std::invalid_argument("contamination level must be in [0, 1)");
        const std::size_t want =
            round_half_down(level * static_cast<double>(inliers.size()) / (1.0 - level));
        if (want > outliers.size())
            throw std::invalid_argument(
                "contamination level " + format_double(level) + " needs " + std::to_string(want) +
                " outliers but only " + std::to_string(outliers.size()) + " are available");
        Rng rng(seed);
        auto picks = sample_without_replacement(outliers.size(), want, rng);
        std::sort(picks.begin(), picks.end());
        for (std::size_t k : picks) out.train_rows.push_back(outliers[k]);
    }

    out.train = ds.select_rows(out.train_rows);
    return out;
}

} // namespace exad
