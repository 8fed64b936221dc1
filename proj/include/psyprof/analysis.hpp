#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "psyprof/features.hpp"
#include "psyprof/types.hpp"

namespace psyprof::analysis {

using Matrix = std::vector<std::vector<double>>;

struct TraitStats {
    double mean = 0.0;
    double std_dev = 0.0; // sample std, n-1 denominator
    double min_v = 0.0;
    double max_v = 0.0;
};

struct TraitStatsReport {
    std::array<TraitStats, kTraitCount> per_trait{};
    std::size_t n = 0;
    bool degenerate_n = false; // single profile: std is reported as 0
};

TraitStatsReport trait_stats(const std::vector<TraitProfile>& profiles);
void save_trait_stats_csv(const TraitStatsReport& report, const std::string& path);

struct PearsonResult {
    double rho = 0.0;
    double p = 1.0;
    std::size_t n = 0;
    bool constant_input = false; // rho defined as 0, p as 1
};

// Two-tailed p from t = rho * sqrt((n-2)/(1-rho^2)). Needs n >= 3.
PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y);

struct CorrelationCell {
    double rho = 0.0;
    double p = 1.0;
    bool constant_input = false;
};

// Table-8-shaped grid: one row per feature column (or trait), one column per
// trait, with the usual significance stars in the CSV rendering.
struct CorrelationReport {
    std::vector<std::string> row_names;
    std::vector<std::string> col_names;
    std::vector<std::vector<CorrelationCell>> cells; // [row][col]
    std::size_t n = 0;
};

const char* significance_stars(double p); // "**" below 0.01, "*" below 0.05

CorrelationReport feature_trait_matrix(const features::FeatureMatrix& matrix,
                                       const std::vector<TraitProfile>& labels);
CorrelationReport trait_trait_matrix(const std::vector<TraitProfile>& labels);
void save_correlation_csv(const CorrelationReport& report, const std::string& path);

inline constexpr int kCdfGridPoints = 101; // 0.00, 0.01, ..., 1.00

struct GroupCompareReport {
    std::array<double, kTraitCount> mean_a{};
    std::array<double, kTraitCount> mean_b{};
    std::array<std::array<double, kCdfGridPoints>, kTraitCount> cdf_a{};
    std::array<std::array<double, kCdfGridPoints>, kTraitCount> cdf_b{};
    std::size_t n_a = 0;
    std::size_t n_b = 0;
};

GroupCompareReport group_compare(const std::vector<TraitProfile>& group_a,
                                 const std::vector<TraitProfile>& group_b);
void save_group_compare_csv(const GroupCompareReport& report, const std::string& path);

struct TsneParams {
    double perplexity = 30.0;
    int iterations = 1000;
    std::uint64_t seed = 0;
    int n_threads = 0; // pairwise passes; result is thread-count independent
};

struct Embedding2D {
    std::vector<std::array<double, 2>> points;
    double final_kl = 0.0;
    std::vector<double> kl_trace; // KL after each gradient step
};

// Exact t-SNE: per-point bandwidths by bisection to the target perplexity,
// symmetrized P, Student-t Q, gradient descent with momentum, gains and
// early exaggeration. Deterministic for a fixed seed.
Embedding2D tsne(const Matrix& points, const TsneParams& params);

// Fast fallback with the same output shape: projection onto the top two
// principal components (Jacobi eigensolver).
Embedding2D pca2d(const Matrix& points);

void save_embedding_csv(const Embedding2D& embedding, const std::vector<std::string>& ids,
                        const std::vector<std::string>& groups, const std::string& path);

} // namespace psyprof::analysis
