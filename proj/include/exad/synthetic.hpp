#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "exad/dataset.hpp"
#include "exad/rng.hpp"

namespace exad {

/// Recipe for a labeled benchmark set: inliers fill a centered ball of radius
/// `radius`; outliers are displaced by `distance` along the unit direction
/// u = u_raw/|u_raw| plus a per-row shift x ~ U[range_min, range_max] along u,
/// with unit Gaussian noise on every feature. Features with u_raw[i] == 0
/// carry noise only.
struct SyntheticSpec {
    std::string name = "custom";
    std::size_t n_inliers = 1000;
    std::size_t n_outliers = 100;
    std::size_t p = 6;
    double radius = 5.0;
    double distance = 5.0;
    double range_min = 0.0;
    double range_max = 5.0;
    std::vector<double> u_raw; // size p when outliers are requested

    void validate() const {
        if (p == 0) throw std::invalid_argument("spec: p must be >= 1");
        if (n_inliers == 0) throw std::invalid_argument("spec: need at least one inlier");
        if (radius <= 0.0) throw std::invalid_argument("spec: radius must be > 0");
        if (range_min > range_max) throw std::invalid_argument("spec: range_min > range_max");
        if (n_outliers > 0) {
            if (distance <= 0.0) throw std::invalid_argument("spec: distance must be > 0");
            if (u_raw.size() != p)
                throw std::invalid_argument("spec: u_raw must have one entry per feature");
            double norm2 = 0.0;
            for (double v : u_raw) norm2 += v * v;
            if (norm2 == 0.0) throw std::invalid_argument("spec: u_raw must not be all zeros");
        }
    }
};

/// Inliers: uniform in the p-ball of radius r, by rejection from the
/// enclosing cube. Each attempt consumes exactly p uniform draws. Acceptance
/// collapses with dimension, so the loop is capped rather than trusted.
template <RandomSource R>
Matrix generate_inliers(const SyntheticSpec& spec, R& rng) {
    spec.validate();
    Matrix out(spec.n_inliers, spec.p);
    std::vector<double> candidate(spec.p);
    const double r2 = spec.radius * spec.radius;
    std::size_t attempts = 0;
    const std::size_t max_attempts = 1000 * spec.n_inliers + 1000000;
    for (std::size_t i = 0; i < spec.n_inliers;) {
        if (++attempts > max_attempts)
            throw std::runtime_error(
                "ball rejection sampling acceptance too low (dimension too high?)");
        double norm2 = 0.0;
        for (std::size_t j = 0; j < spec.p; ++j) {
            candidate[j] = rng.uniform(-spec.radius, spec.radius);
            norm2 += candidate[j] * candidate[j];
        }
        if (norm2 > r2) continue;
        std::copy(candidate.begin(), candidate.end(), out.row(i).data());
        ++i;
    }
    return out;
}

/// Outliers: row = (distance + x) * u on the anomalous features plus unit
/// Gaussian noise everywhere. Per row the draw order is fixed: one uniform
/// for x, then one normal per feature in index order.
template <RandomSource R>
Matrix generate_outliers(const SyntheticSpec& spec, R& rng) {
    spec.validate();
    Matrix out(spec.n_outliers, spec.p);
    if (spec.n_outliers == 0) return out;

    std::vector<double> u = spec.u_raw;
    double norm2 = 0.0;
    for (double v : u) norm2 += v * v;
    const double norm = std::sqrt(norm2);
    for (double& v : u) v /= norm;

    for (std::size_t i = 0; i < spec.n_outliers; ++i) {
        const double x = rng.uniform(spec.range_min, spec.range_max);
        for (std::size_t j = 0; j < spec.p; ++j) {
            const double noise = rng.normal();
            out(i, j) = spec.u_raw[j] != 0.0
                            ? spec.distance * u[j] + x * u[j] + noise
                            : noise;
        }
    }
    return out;
}

/// Full labeled dataset: inliers first (label 0), outliers after (label 1);
/// one RNG stream, inliers drawn before outliers.
inline Dataset make_dataset(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    const Matrix in = generate_inliers(spec, rng);
    const Matrix out = generate_outliers(spec, rng);

    Dataset ds;
    ds.name = spec.name;
    for (std::size_t j = 0; j < spec.p; ++j)
        ds.feature_names.push_back("feature_" + std::to_string(j));
    ds.X = Matrix(spec.n_inliers + spec.n_outliers, spec.p);
    std::copy(in.data.begin(), in.data.end(), ds.X.data.begin());
    std::copy(out.data.begin(), out.data.end(), ds.X.data.begin() + static_cast<std::ptrdiff_t>(in.data.size()));
    ds.labels.assign(spec.n_inliers, 0);
    ds.labels.insert(ds.labels.end(), spec.n_outliers, 1);
    if (spec.n_outliers > 0) {
        ds.feature_relevance.resize(spec.p);
        for (std::size_t j = 0; j < spec.p; ++j) ds.feature_relevance[j] = std::abs(spec.u_raw[j]);
    }
    ds.validate();
    return ds;
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {
        "xaxis", "bisect", "bisect3d", "bisect3d_skewed", "bisect6d", "bimodal"};
    return names;
}

/// Spec behind a named preset. The 6-D family shares n=1000+100, r=5, d=5,
/// x-range [0,5] and differs only in the anomalous direction. `bimodal` is
/// handwritten in make_preset and has no spec.
inline SyntheticSpec preset_spec(const std::string& name) {
    SyntheticSpec s;
    s.name = name;
    s.u_raw.assign(6, 0.0);
    if (name == "xaxis") {
        s.u_raw[0] = 1.0;
    } else if (name == "bisect") {
        s.u_raw[0] = s.u_raw[1] = 1.0;
    } else if (name == "bisect3d") {
        s.u_raw[0] = s.u_raw[1] = s.u_raw[2] = 1.0;
    } else if (name == "bisect3d_skewed") {
        s.u_raw[0] = 4.0;
        s.u_raw[1] = 3.0;
        s.u_raw[2] = 2.0;
    } else if (name == "bisect6d") {
        s.u_raw.assign(6, 1.0);
    } else {
        throw std::invalid_argument("preset '" + name + "' has no synthetic spec");
    }
    return s;
}

/// Canonical benchmark datasets by name (case-insensitive, '-' == '_').
inline Dataset make_preset(std::string name, std::uint64_t seed) {
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) {
        return c == '-' ? '_' : static_cast<char>(std::tolower(c));
    });

    if (name == "bimodal") {
        // Two Gaussian inlier clusters on the main diagonal, outlier clumps on
        // the anti-diagonal; ~2.5% contamination.
        Dataset ds;
        ds.name = "bimodal";
        ds.feature_names = {"feature_0", "feature_1"};
        ds.feature_relevance = {1.0, 1.0};
        const std::size_t n_in = 1000, n_out = 26;
        ds.X = Matrix(n_in + n_out, 2);
        Rng rng(seed);
        for (std::size_t i = 0; i < n_in; ++i) {
            const double cx = i < n_in / 2 ? 4.0 : -4.0;
            ds.X(i, 0) = cx + rng.normal();
            ds.X(i, 1) = cx + rng.normal();
        }
        for (std::size_t i = 0; i < n_out; ++i) {
            const double cx = i < n_out / 2 ? 5.0 : -5.0;
            ds.X(n_in + i, 0) = cx + rng.normal();
            ds.X(n_in + i, 1) = -cx + rng.normal();
        }
        ds.labels.assign(n_in, 0);
        ds.labels.insert(ds.labels.end(), n_out, 1);
        ds.validate();
        return ds;
    }

    const auto& known = preset_names();
    if (std::find(known.begin(), known.end(), name) == known.end()) {
        std::string msg = "unknown preset '" + name + "' (expected one of:";
        for (const auto& k : known) msg += " " + k;
        throw std::invalid_argument(msg + ")");
    }
    return make_dataset(preset_spec(name), seed);
}

} // namespace exad
