#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "psyprof/types.hpp"

namespace psyprof::ml {

using Matrix = std::vector<std::vector<double>>; // row-major, rows are users
using TraitTargets = std::array<std::vector<double>, kTraitCount>;

// sqrt of the mean squared residual
double rmse(const std::vector<double>& y, const std::vector<double>& yhat);
// mean absolute residual; never exceeds rmse
double mae(const std::vector<double>& y, const std::vector<double>& yhat);

struct TreeParams {
    int max_depth = -1;       // -1 = unlimited
    int min_samples_leaf = 5; // both children of every split respect this
    double max_features = 1.0 / 3.0; // fraction of features tried per node
};

// Internal nodes carry (feature, threshold); x[feature] <= threshold goes
// left. Leaves carry the mean target of the training rows that reached them.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    std::unique_ptr<TreeNode> left, right;
    double value = 0.0;
    std::size_t count = 0;

    bool is_leaf() const { return feature < 0; }
};

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = 0.0; // summed child squared error, lower is better
};

// Greedy best split by variance reduction over midpoint thresholds of sorted
// distinct values. Candidate features are scanned in the order given; ties in
// score keep the earlier feature, then the lower threshold.
SplitChoice best_split(const Matrix& X, const std::vector<double>& y,
                       const std::vector<std::size_t>& rows,
                       const std::vector<std::size_t>& features, int min_samples_leaf);

std::unique_ptr<TreeNode> fit_tree(const Matrix& X, const std::vector<double>& y,
                                   const TreeParams& params, std::uint64_t seed);
double predict_tree(const TreeNode& node, const std::vector<double>& x);

struct ForestParams {
    int n_trees = 100;
    TreeParams tree;
    bool bootstrap = true; // resample with replacement, size n
    int n_threads = 0;     // 0 = hardware concurrency
};

struct ForestModel {
    ForestParams params;
    std::uint64_t seed = 0;
    std::vector<std::unique_ptr<TreeNode>> trees;

    // mean of the trees' predictions, clamped to [0,1]
    double predict(const std::vector<double>& x) const;

    std::string to_json() const;
    static ForestModel from_json(const std::string& text);
};

// Per-tree seeds derive from the master seed by tree index, so training is
// bit-identical no matter how many threads build the forest.
ForestModel fit_forest(const Matrix& X, const std::vector<double>& y,
                       const ForestParams& params, std::uint64_t seed);

// Always predicts the mean of its training targets.
struct BaselineModel {
    double value = 0.0;
    double predict() const { return value; }
};
BaselineModel fit_baseline(const std::vector<double>& y);

// Column indices of the full feature matrix feeding each trait's model.
using Routes = std::array<std::vector<std::size_t>, kTraitCount>;

// Forest seed used for the chain position; exposed so a chain head can be
// reproduced as a standalone forest.
std::uint64_t chain_forest_seed(std::uint64_t chain_seed, std::size_t position);

// Regressor chain: position i's model sees its trait's routed features plus
// the predictions (true labels while training) of every earlier position.
struct ChainModel {
    std::vector<Trait> ordering; // permutation of the 7 traits
    std::vector<ForestModel> forests;
    Routes routes;

    TraitProfile predict(const std::vector<double>& x) const;

    std::string to_json() const;
    static ChainModel from_json(const std::string& text);
};

ChainModel fit_chain(const Matrix& X, const TraitTargets& Y, const std::vector<Trait>& ordering,
                     const Routes& routes, const ForestParams& params, std::uint64_t seed,
                     bool teacher_forcing = true);

// One forest per trait, no chain inputs; the comparison point for the chains.
struct IndependentModel {
    std::array<ForestModel, kTraitCount> forests;
    Routes routes;

    TraitProfile predict(const std::vector<double>& x) const;

    std::string to_json() const;
    static IndependentModel from_json(const std::string& text);
};

IndependentModel fit_independent(const Matrix& X, const TraitTargets& Y, const Routes& routes,
                                 const ForestParams& params, std::uint64_t seed);

// Mean over randomly ordered chains, orderings drawn without repetition.
struct HolisticModel {
    std::vector<ChainModel> chains;
    std::uint64_t seed = 0;

    TraitProfile predict(const std::vector<double>& x) const;

    std::string to_json() const;
    static HolisticModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static HolisticModel load(const std::string& path);
};

HolisticModel fit_holistic(const Matrix& X, const TraitTargets& Y, const Routes& routes,
                           const ForestParams& params, int n_chains, std::uint64_t seed,
                           bool teacher_forcing = true);

// Seeded shuffle split; test size = round(n * test_fraction).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
train_test_split(std::size_t n, double test_fraction, std::uint64_t seed);

// k disjoint, exhaustive, seeded folds of nearly equal size.
std::vector<std::vector<std::size_t>> k_fold(std::size_t n, int k, std::uint64_t seed);

struct GridCell {
    int n_trees = 0;
    int max_depth = 0;
    double mean_rmse = 0.0; // mean of per-fold RMSEs
};

struct GridResult {
    int best_n_trees = 0;
    int best_max_depth = 0;
    std::vector<GridCell> cells;
};

// Exhaustive k-fold CV over n_trees x max_depth; ties prefer fewer trees,
// then the shallower depth (-1 counts as the deepest).
GridResult grid_search(const Matrix& X, const std::vector<double>& y,
                       const std::vector<int>& n_trees_grid,
                       const std::vector<int>& max_depth_grid, const ForestParams& base,
                       int k, std::uint64_t seed);

struct LearningCurvePoint {
    double fraction = 0.0;
    std::size_t train_count = 0;
    std::array<double, kTraitCount> rmse_per_trait{};
    double mean_rmse = 0.0;
};

// Holistic models on nested subsamples of a fixed training split, evaluated
// on the same held-out 20%.
std::vector<LearningCurvePoint> learning_curve(const Matrix& X, const TraitTargets& Y,
                                               const Routes& routes, const ForestParams& params,
                                               int n_chains, const std::vector<double>& fractions,
                                               std::uint64_t seed);

} // namespace psyprof::ml
