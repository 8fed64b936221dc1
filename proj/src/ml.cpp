#include "psyprof/ml.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "psyprof/errors.hpp"
#include "psyprof/mathutil.hpp"
#include "psyprof/parallel.hpp"
#include "psyprof/rng.hpp"

namespace psyprof::ml {

using json = nlohmann::json;

namespace {

void check_pair(const std::vector<double>& y, const std::vector<double>& yhat) {
    if (y.empty()) throw DataError("metric needs at least one value");
    if (y.size() != yhat.size()) {
        throw DataError("metric inputs differ in length: " + std::to_string(y.size()) + " vs " +
                        std::to_string(yhat.size()));
    }
}

void check_tree_params(const TreeParams& p) {
    if (p.min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
    if (p.max_features <= 0.0 || p.max_features > 1.0) {
        throw ConfigError("max_features must be in (0,1]");
    }
    if (p.max_depth < -1) throw ConfigError("max_depth must be -1 (unlimited) or >= 0");
}

void check_matrix(const Matrix& X, const std::vector<double>& y) {
    if (X.empty()) throw DataError("cannot fit on an empty matrix");
    if (X.size() != y.size()) throw DataError("feature rows and targets differ in length");
    const std::size_t width = X.front().size();
    for (const auto& row : X) {
        if (row.size() != width) throw DataError("feature matrix rows differ in width");
    }
}

Matrix take_rows(const Matrix& X, const std::vector<std::size_t>& rows) {
    Matrix out;
    out.reserve(rows.size());
    for (const std::size_t r : rows) out.push_back(X[r]);
    return out;
}

std::vector<double> take(const std::vector<double>& v, const std::vector<std::size_t>& rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const std::size_t r : rows) out.push_back(v[r]);
    return out;
}

} // namespace

double rmse(const std::vector<double>& y, const std::vector<double>& yhat) {
    check_pair(y, yhat);
    double sq = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - yhat[i];
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(y.size()));
}

double mae(const std::vector<double>& y, const std::vector<double>& yhat) {
    check_pair(y, yhat);
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) abs_sum += std::fabs(y[i] - yhat[i]);
    return abs_sum / static_cast<double>(y.size());
}

SplitChoice best_split(const Matrix& X, const std::vector<double>& y,
                       const std::vector<std::size_t>& rows,
                       const std::vector<std::size_t>& features, int min_samples_leaf) {
    SplitChoice best;
    const std::size_t n = rows.size();
    if (n < 2) return best;
    const auto min_leaf = static_cast<std::size_t>(min_samples_leaf);
    std::vector<std::pair<double, double>> vals(n); // (x, y), stable-sorted by x
    for (const std::size_t f : features) {
        for (std::size_t i = 0; i < n; ++i) {
            vals[i] = {X[rows[i]][f], y[rows[i]]};
        }
        std::stable_sort(vals.begin(), vals.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        if (vals.front().first == vals.back().first) continue; // constant feature
        // all sums taken in ascending x order so scores reproduce bit for bit
        double total = 0.0, total_sq = 0.0;
        for (const auto& [xv, yv] : vals) {
            (void)xv;
            total += yv;
            total_sq += yv * yv;
        }
        double sum_l = 0.0, sumsq_l = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            sum_l += vals[i - 1].second;
            sumsq_l += vals[i - 1].second * vals[i - 1].second;
            if (vals[i - 1].first == vals[i].first) continue; // inside a run, no boundary
            const std::size_t nl = i, nr = n - i;
            if (nl < min_leaf || nr < min_leaf) continue;
            const double sum_r = total - sum_l;
            const double sse_l = sumsq_l - sum_l * sum_l / static_cast<double>(nl);
            const double sse_r = (total_sq - sumsq_l) - sum_r * sum_r / static_cast<double>(nr);
            const double score = sse_l + sse_r;
            double thr = (vals[i - 1].first + vals[i].first) * 0.5;
            if (thr >= vals[i].first) thr = vals[i - 1].first; // midpoint rounded up
            if (!best.found || score < best.score) {
                best.found = true;
                best.feature = f;
                best.threshold = thr;
                best.score = score;
            }
        }
    }
    return best;
}

namespace {

struct TreeBuilder {
    const Matrix& X;
    const std::vector<double>& y;
    const TreeParams& params;
    Rng& rng;
    std::size_t n_features;

    std::unique_ptr<TreeNode> build(const std::vector<std::size_t>& rows, int depth) {
        auto node = std::make_unique<TreeNode>();
        node->count = rows.size();
        double sum = 0.0;
        double lo = y[rows.front()], hi = lo;
        for (const std::size_t r : rows) {
            sum += y[r];
            lo = std::min(lo, y[r]);
            hi = std::max(hi, y[r]);
        }
        node->value = sum / static_cast<double>(rows.size());
        const bool depth_stop = params.max_depth >= 0 && depth >= params.max_depth;
        if (depth_stop || lo == hi ||
            rows.size() < 2 * static_cast<std::size_t>(params.min_samples_leaf)) {
            return node;
        }
        const auto feats = feature_subset();
        const auto split = best_split(X, y, rows, feats, params.min_samples_leaf);
        if (!split.found) return node;
        std::vector<std::size_t> left_rows, right_rows;
        for (const std::size_t r : rows) {
            (X[r][split.feature] <= split.threshold ? left_rows : right_rows).push_back(r);
        }
        node->feature = static_cast<int>(split.feature);
        node->threshold = split.threshold;
        node->left = build(left_rows, depth + 1);
        node->right = build(right_rows, depth + 1);
        return node;
    }

    std::vector<std::size_t> feature_subset() {
        const auto m = static_cast<std::size_t>(
            std::ceil(params.max_features * static_cast<double>(n_features)));
        const std::size_t take_n = std::min(std::max<std::size_t>(m, 1), n_features);
        std::vector<std::size_t> all(n_features);
        for (std::size_t i = 0; i < n_features; ++i) all[i] = i;
        if (take_n == n_features) return all;
        rng.shuffle(all);
        all.resize(take_n);
        std::sort(all.begin(), all.end()); // tie rule wants original feature order
        return all;
    }
};

std::unique_ptr<TreeNode> fit_tree_rows(const Matrix& X, const std::vector<double>& y,
                                        const std::vector<std::size_t>& rows,
                                        const TreeParams& params, Rng& rng) {
    TreeBuilder builder{X, y, params, rng, X.front().size()};
    return builder.build(rows, 0);
}

} // namespace

std::unique_ptr<TreeNode> fit_tree(const Matrix& X, const std::vector<double>& y,
                                   const TreeParams& params, std::uint64_t seed) {
    check_tree_params(params);
    check_matrix(X, y);
    std::vector<std::size_t> rows(X.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    Rng rng(seed);
    return fit_tree_rows(X, y, rows, params, rng);
}

double predict_tree(const TreeNode& node, const std::vector<double>& x) {
    const TreeNode* cur = &node;
    while (!cur->is_leaf()) {
        if (static_cast<std::size_t>(cur->feature) >= x.size()) {
            throw LayoutError("tree expects feature " + std::to_string(cur->feature) +
                              " but the row has " + std::to_string(x.size()) + " columns");
        }
        cur = x[static_cast<std::size_t>(cur->feature)] <= cur->threshold ? cur->left.get()
                                                                          : cur->right.get();
    }
    return cur->value;
}

double ForestModel::predict(const std::vector<double>& x) const {
    double sum = 0.0;
    for (const auto& t : trees) sum += predict_tree(*t, x);
    return clamp01(sum / static_cast<double>(trees.size()));
}

ForestModel fit_forest(const Matrix& X, const std::vector<double>& y,
                       const ForestParams& params, std::uint64_t seed) {
    if (params.n_trees < 1) throw ConfigError("n_trees must be >= 1");
    check_tree_params(params.tree);
    check_matrix(X, y);
    ForestModel model;
    model.params = params;
    model.seed = seed;
    model.trees.resize(static_cast<std::size_t>(params.n_trees));
    const std::size_t n = X.size();
    parallel_for(model.trees.size(), params.n_threads, [&](std::size_t i) {
        Rng rng(derive_seed(seed, i));
        std::vector<std::size_t> rows(n);
        if (params.bootstrap) {
            for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
        } else {
            for (std::size_t r = 0; r < n; ++r) rows[r] = r;
        }
        model.trees[i] = fit_tree_rows(X, y, rows, params.tree, rng);
    });
    return model;
}

BaselineModel fit_baseline(const std::vector<double>& y) {
    if (y.empty()) throw DataError("baseline needs at least one target");
    return {mean(y)};
}

std::uint64_t chain_forest_seed(std::uint64_t chain_seed, std::size_t position) {
    return derive_seed(chain_seed, position);
}

namespace {

void check_ordering(const std::vector<Trait>& ordering) {
    if (ordering.size() != static_cast<std::size_t>(kTraitCount)) {
        throw ConfigError("chain ordering must list all " + std::to_string(kTraitCount) +
                          " traits");
    }
    std::array<bool, kTraitCount> seen{};
    for (const Trait t : ordering) {
        const int i = static_cast<int>(t);
        if (i < 0 || i >= kTraitCount) throw ConfigError("unknown trait in chain ordering");
        if (seen[i]) {
            throw ConfigError(std::string("trait repeated in chain ordering: ") + trait_name(t));
        }
        seen[i] = true;
    }
}

void check_routes(const Routes& routes, std::size_t n_cols) {
    for (int t = 0; t < kTraitCount; ++t) {
        for (const std::size_t c : routes[t]) {
            if (c >= n_cols) {
                throw LayoutError("route for " + std::string(kTraitNames[t]) +
                                  " references column " + std::to_string(c) + " of " +
                                  std::to_string(n_cols));
            }
        }
    }
}

void check_targets(const TraitTargets& Y, std::size_t n) {
    for (int t = 0; t < kTraitCount; ++t) {
        if (Y[t].size() != n) {
            throw DataError(std::string("target ") + kTraitNames[t] +
                            " does not match the row count");
        }
    }
}

std::vector<double> routed_row(const std::vector<double>& x, const std::vector<std::size_t>& route,
                               const std::vector<double>& chained) {
    std::vector<double> out;
    out.reserve(route.size() + chained.size());
    for (const std::size_t c : route) out.push_back(x[c]);
    out.insert(out.end(), chained.begin(), chained.end());
    return out;
}

} // namespace

ChainModel fit_chain(const Matrix& X, const TraitTargets& Y, const std::vector<Trait>& ordering,
                     const Routes& routes, const ForestParams& params, std::uint64_t seed,
                     bool teacher_forcing) {
    check_ordering(ordering);
    if (X.empty()) throw DataError("cannot fit a chain on an empty matrix");
    check_targets(Y, X.size());
    check_routes(routes, X.front().size());

    const std::size_t n = X.size();
    ChainModel chain;
    chain.ordering = ordering;
    chain.routes = routes;
    // values of earlier chain positions, one column per position
    std::vector<std::vector<double>> chained_cols;
    for (std::size_t pos = 0; pos < ordering.size(); ++pos) {
        const Trait t = ordering[pos];
        const auto& route = routes[static_cast<int>(t)];
        Matrix Xi;
        Xi.reserve(n);
        for (std::size_t r = 0; r < n; ++r) {
            std::vector<double> row;
            row.reserve(route.size() + chained_cols.size());
            for (const std::size_t c : route) row.push_back(X[r][c]);
            for (const auto& col : chained_cols) row.push_back(col[r]);
            Xi.push_back(std::move(row));
        }
        auto forest = fit_forest(Xi, Y[static_cast<int>(t)], params, chain_forest_seed(seed, pos));
        if (pos + 1 < ordering.size()) {
            if (teacher_forcing) {
                chained_cols.push_back(Y[static_cast<int>(t)]);
            } else {
                std::vector<double> preds(n);
                for (std::size_t r = 0; r < n; ++r) preds[r] = forest.predict(Xi[r]);
                chained_cols.push_back(std::move(preds));
            }
        }
        chain.forests.push_back(std::move(forest));
    }
    return chain;
}

TraitProfile ChainModel::predict(const std::vector<double>& x) const {
    TraitProfile profile;
    std::vector<double> chained;
    for (std::size_t pos = 0; pos < ordering.size(); ++pos) {
        const Trait t = ordering[pos];
        const auto& route = routes[static_cast<int>(t)];
        for (const std::size_t c : route) {
            if (c >= x.size()) {
                throw LayoutError("chain route references column " + std::to_string(c) +
                                  " but the row has " + std::to_string(x.size()));
            }
        }
        const double v = forests[pos].predict(routed_row(x, route, chained));
        profile.set(t, v);
        chained.push_back(v);
    }
    return profile;
}

IndependentModel fit_independent(const Matrix& X, const TraitTargets& Y, const Routes& routes,
                                 const ForestParams& params, std::uint64_t seed) {
    if (X.empty()) throw DataError("cannot fit on an empty matrix");
    check_targets(Y, X.size());
    check_routes(routes, X.front().size());
    IndependentModel model;
    model.routes = routes;
    for (int t = 0; t < kTraitCount; ++t) {
        Matrix Xt;
        Xt.reserve(X.size());
        for (const auto& row : X) {
            std::vector<double> r;
            r.reserve(routes[t].size());
            for (const std::size_t c : routes[t]) r.push_back(row[c]);
            Xt.push_back(std::move(r));
        }
        model.forests[t] = fit_forest(Xt, Y[t], params, derive_seed(seed, static_cast<std::uint64_t>(t)));
    }
    return model;
}

TraitProfile IndependentModel::predict(const std::vector<double>& x) const {
    TraitProfile profile;
    for (int t = 0; t < kTraitCount; ++t) {
        std::vector<double> row;
        row.reserve(routes[t].size());
        for (const std::size_t c : routes[t]) {
            if (c >= x.size()) {
                throw LayoutError("route references column " + std::to_string(c) +
                                  " but the row has " + std::to_string(x.size()));
            }
            row.push_back(x[c]);
        }
        profile.set(static_cast<Trait>(t), forests[t].predict(row));
    }
    return profile;
}

HolisticModel fit_holistic(const Matrix& X, const TraitTargets& Y, const Routes& routes,
                           const ForestParams& params, int n_chains, std::uint64_t seed,
                           bool teacher_forcing) {
    if (n_chains < 1) throw ConfigError("n_chains must be >= 1");
    if (n_chains > 5040) {
        throw ConfigError("n_chains cannot exceed 5040, the number of distinct orderings");
    }
    // the orderings first, all up front, drawn without repetition
    Rng rng(seed);
    std::vector<std::vector<Trait>> orderings;
    std::set<std::vector<int>> seen;
    while (orderings.size() < static_cast<std::size_t>(n_chains)) {
        std::vector<int> perm(kTraitCount);
        for (int i = 0; i < kTraitCount; ++i) perm[i] = i;
        rng.shuffle(perm);
        if (!seen.insert(perm).second) continue;
        std::vector<Trait> ordering;
        for (const int i : perm) ordering.push_back(static_cast<Trait>(i));
        orderings.push_back(std::move(ordering));
    }
    HolisticModel model;
    model.seed = seed;
    for (std::size_t c = 0; c < orderings.size(); ++c) {
        model.chains.push_back(fit_chain(X, Y, orderings[c], routes, params,
                                         derive_seed(seed, 1000 + c), teacher_forcing));
    }
    return model;
}

TraitProfile HolisticModel::predict(const std::vector<double>& x) const {
    TraitProfile profile;
    for (const auto& chain : chains) {
        const TraitProfile p = chain.predict(x);
        for (int t = 0; t < kTraitCount; ++t) profile.values[t] += p.values[t];
    }
    for (int t = 0; t < kTraitCount; ++t) {
        profile.values[t] = clamp01(profile.values[t] / static_cast<double>(chains.size()));
    }
    return profile;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
train_test_split(std::size_t n, double test_fraction, std::uint64_t seed) {
    if (n == 0) throw DataError("cannot split zero rows");
    if (test_fraction < 0.0 || test_fraction > 1.0) {
        throw ConfigError("test_fraction must be in [0,1]");
    }
    Rng rng(seed);
    const auto idx = shuffled_indices(n, rng);
    const auto test_n = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(n)));
    std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<long>(test_n));
    std::vector<std::size_t> train(idx.begin() + static_cast<long>(test_n), idx.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {train, test};
}

std::vector<std::vector<std::size_t>> k_fold(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("k_fold needs k >= 2");
    if (static_cast<std::size_t>(k) > n) throw ConfigError("k_fold needs k <= n");
    Rng rng(seed);
    const auto idx = shuffled_indices(n, rng);
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) {
        folds[i % static_cast<std::size_t>(k)].push_back(idx[i]);
    }
    for (auto& fold : folds) std::sort(fold.begin(), fold.end());
    return folds;
}

GridResult grid_search(const Matrix& X, const std::vector<double>& y,
                       const std::vector<int>& n_trees_grid,
                       const std::vector<int>& max_depth_grid, const ForestParams& base,
                       int k, std::uint64_t seed) {
    if (n_trees_grid.empty() || max_depth_grid.empty()) {
        throw ConfigError("grid_search needs a non-empty grid");
    }
    check_matrix(X, y);
    const auto folds = k_fold(X.size(), k, seed);

    // per-fold index sets and a per-fold seed shared by every cell, so equal
    // cells produce equal numbers and the tie rule is meaningful
    std::vector<std::vector<std::size_t>> train_sets;
    std::vector<std::uint64_t> fold_seeds;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<std::size_t> train;
        for (std::size_t g = 0; g < folds.size(); ++g) {
            if (g == f) continue;
            train.insert(train.end(), folds[g].begin(), folds[g].end());
        }
        std::sort(train.begin(), train.end());
        train_sets.push_back(std::move(train));
        fold_seeds.push_back(derive_seed(seed, 500 + f));
    }

    const auto depth_key = [](int d) { return d < 0 ? std::numeric_limits<int>::max() : d; };
    GridResult result;
    bool have_best = false;
    double best_rmse = 0.0;
    for (const int nt : n_trees_grid) {
        for (const int md : max_depth_grid) {
            ForestParams cell = base;
            cell.n_trees = nt;
            cell.tree.max_depth = md;
            double fold_sum = 0.0;
            for (std::size_t f = 0; f < folds.size(); ++f) {
                const auto Xtr = take_rows(X, train_sets[f]);
                const auto ytr = take(y, train_sets[f]);
                const auto model = fit_forest(Xtr, ytr, cell, fold_seeds[f]);
                std::vector<double> preds;
                preds.reserve(folds[f].size());
                for (const std::size_t r : folds[f]) preds.push_back(model.predict(X[r]));
                fold_sum += rmse(take(y, folds[f]), preds);
            }
            const double cell_rmse = fold_sum / static_cast<double>(folds.size());
            result.cells.push_back({nt, md, cell_rmse});
            const bool better =
                !have_best || cell_rmse < best_rmse ||
                (cell_rmse == best_rmse &&
                 (nt < result.best_n_trees ||
                  (nt == result.best_n_trees &&
                   depth_key(md) < depth_key(result.best_max_depth))));
            if (better) {
                have_best = true;
                best_rmse = cell_rmse;
                result.best_n_trees = nt;
                result.best_max_depth = md;
            }
        }
    }
    return result;
}

std::vector<LearningCurvePoint> learning_curve(const Matrix& X, const TraitTargets& Y,
                                               const Routes& routes, const ForestParams& params,
                                               int n_chains, const std::vector<double>& fractions,
                                               std::uint64_t seed) {
    if (fractions.empty()) throw ConfigError("learning_curve needs at least one fraction");
    for (const double f : fractions) {
        if (f <= 0.0 || f > 1.0) throw ConfigError("fractions must be in (0,1]");
    }
    if (X.empty()) throw DataError("cannot fit on an empty matrix");
    check_targets(Y, X.size());

    auto [train, heldout] = train_test_split(X.size(), 0.2, derive_seed(seed, 1));
    if (train.empty() || heldout.empty()) {
        throw DataError("too few rows for a learning curve");
    }
    // one shuffle; fraction prefixes are then nested subsamples
    Rng order_rng(derive_seed(seed, 2));
    order_rng.shuffle(train);

    const auto Xh = take_rows(X, heldout);
    std::vector<LearningCurvePoint> points;
    for (const double fraction : fractions) {
        const auto want = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<double>(train.size())));
        std::vector<std::size_t> sub(train.begin(),
                                     train.begin() + static_cast<long>(std::max<std::size_t>(want, 1)));
        TraitTargets Ysub;
        for (int t = 0; t < kTraitCount; ++t) Ysub[t] = take(Y[t], sub);
        const auto model = fit_holistic(take_rows(X, sub), Ysub, routes, params, n_chains,
                                        derive_seed(seed, 3));
        LearningCurvePoint point;
        point.fraction = fraction;
        point.train_count = sub.size();
        double trait_sum = 0.0;
        std::vector<std::vector<double>> preds(kTraitCount);
        for (const auto& row : Xh) {
            const TraitProfile p = model.predict(row);
            for (int t = 0; t < kTraitCount; ++t) preds[t].push_back(p.values[t]);
        }
        for (int t = 0; t < kTraitCount; ++t) {
            point.rmse_per_trait[t] = rmse(take(Y[t], heldout), preds[t]);
            trait_sum += point.rmse_per_trait[t];
        }
        point.mean_rmse = trait_sum / kTraitCount;
        points.push_back(point);
    }
    return points;
}

namespace {

json node_to_json(const TreeNode& node) {
    if (node.is_leaf()) return json{{"v", node.value}, {"n", node.count}};
    return json{{"f", node.feature},
                {"t", node.threshold},
                {"l", node_to_json(*node.left)},
                {"r", node_to_json(*node.right)}};
}

std::unique_ptr<TreeNode> node_from_json(const json& j) {
    auto node = std::make_unique<TreeNode>();
    if (j.contains("v")) {
        node->value = j.at("v").get<double>();
        node->count = j.at("n").get<std::size_t>();
        return node;
    }
    node->feature = j.at("f").get<int>();
    if (node->feature < 0) throw DataError("tree node has a negative split feature");
    node->threshold = j.at("t").get<double>();
    node->left = node_from_json(j.at("l"));
    node->right = node_from_json(j.at("r"));
    return node;
}

json forest_payload(const ForestModel& model) {
    json trees = json::array();
    for (const auto& t : model.trees) trees.push_back(node_to_json(*t));
    return json{{"seed", model.seed},
                {"n_trees", model.params.n_trees},
                {"max_depth", model.params.tree.max_depth},
                {"min_samples_leaf", model.params.tree.min_samples_leaf},
                {"max_features", model.params.tree.max_features},
                {"bootstrap", model.params.bootstrap},
                {"trees", std::move(trees)}};
}

ForestModel forest_from_payload(const json& j) {
    ForestModel model;
    model.seed = j.at("seed").get<std::uint64_t>();
    model.params.n_trees = j.at("n_trees").get<int>();
    model.params.tree.max_depth = j.at("max_depth").get<int>();
    model.params.tree.min_samples_leaf = j.at("min_samples_leaf").get<int>();
    model.params.tree.max_features = j.at("max_features").get<double>();
    model.params.bootstrap = j.at("bootstrap").get<bool>();
    for (const auto& t : j.at("trees")) model.trees.push_back(node_from_json(t));
    if (model.trees.empty()) throw DataError("forest has no trees");
    return model;
}

json chain_payload(const ChainModel& chain) {
    json ordering = json::array();
    for (const Trait t : chain.ordering) ordering.push_back(trait_name(t));
    json routes = json::array();
    for (int t = 0; t < kTraitCount; ++t) routes.push_back(chain.routes[t]);
    json forests = json::array();
    for (const auto& f : chain.forests) forests.push_back(forest_payload(f));
    return json{{"ordering", std::move(ordering)},
                {"routes", std::move(routes)},
                {"forests", std::move(forests)}};
}

ChainModel chain_from_payload(const json& j) {
    ChainModel chain;
    for (const auto& name : j.at("ordering")) {
        const auto t = trait_from_name(name.get<std::string>());
        if (!t) throw DataError("unknown trait in persisted ordering");
        chain.ordering.push_back(*t);
    }
    const auto& routes = j.at("routes");
    if (routes.size() != kTraitCount) throw DataError("persisted routes must have 7 entries");
    for (int t = 0; t < kTraitCount; ++t) {
        chain.routes[t] = routes.at(t).get<std::vector<std::size_t>>();
    }
    for (const auto& f : j.at("forests")) chain.forests.push_back(forest_from_payload(f));
    if (chain.forests.size() != chain.ordering.size()) {
        throw DataError("persisted chain forests do not match the ordering");
    }
    return chain;
}

json parse_model_json(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string(what) + " is not valid JSON: " + e.what());
    }
}

} // namespace

std::string ForestModel::to_json() const {
    json j = forest_payload(*this);
    j["kind"] = "forest";
    j["version"] = 1;
    return j.dump();
}

ForestModel ForestModel::from_json(const std::string& text) {
    const json j = parse_model_json(text, "forest model");
    try {
        if (j.at("kind") != "forest" || j.at("version") != 1) {
            throw DataError("not a forest model document");
        }
        return forest_from_payload(j);
    } catch (const json::exception& e) {
        throw DataError(std::string("forest model JSON malformed: ") + e.what());
    }
}

std::string ChainModel::to_json() const {
    json j = chain_payload(*this);
    j["kind"] = "chain";
    j["version"] = 1;
    return j.dump();
}

ChainModel ChainModel::from_json(const std::string& text) {
    const json j = parse_model_json(text, "chain model");
    try {
        if (j.at("kind") != "chain" || j.at("version") != 1) {
            throw DataError("not a chain model document");
        }
        return chain_from_payload(j);
    } catch (const json::exception& e) {
        throw DataError(std::string("chain model JSON malformed: ") + e.what());
    }
}

std::string IndependentModel::to_json() const {
    json routes_json = json::array();
    for (int t = 0; t < kTraitCount; ++t) routes_json.push_back(routes[t]);
    json forests_json = json::array();
    for (const auto& f : forests) forests_json.push_back(forest_payload(f));
    const json j{{"kind", "independent_model"},
                 {"version", 1},
                 {"routes", std::move(routes_json)},
                 {"forests", std::move(forests_json)}};
    return j.dump();
}

IndependentModel IndependentModel::from_json(const std::string& text) {
    const json j = parse_model_json(text, "independent model");
    try {
        if (j.at("kind") != "independent_model" || j.at("version") != 1) {
            throw DataError("not an independent model document");
        }
        IndependentModel model;
        const auto& routes = j.at("routes");
        const auto& forests = j.at("forests");
        if (routes.size() != kTraitCount || forests.size() != kTraitCount) {
            throw DataError("independent model must persist 7 routes and 7 forests");
        }
        for (int t = 0; t < kTraitCount; ++t) {
            model.routes[t] = routes.at(t).get<std::vector<std::size_t>>();
            model.forests[t] = forest_from_payload(forests.at(t));
        }
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("independent model JSON malformed: ") + e.what());
    }
}

std::string HolisticModel::to_json() const {
    json chains_json = json::array();
    for (const auto& c : chains) chains_json.push_back(chain_payload(c));
    const json j{{"kind", "holistic_model"},
                 {"version", 1},
                 {"seed", seed},
                 {"chains", std::move(chains_json)}};
    return j.dump();
}

HolisticModel HolisticModel::from_json(const std::string& text) {
    const json j = parse_model_json(text, "holistic model");
    try {
        if (j.at("kind") != "holistic_model" || j.at("version") != 1) {
            throw DataError("not a holistic model document");
        }
        HolisticModel model;
        model.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& c : j.at("chains")) model.chains.push_back(chain_from_payload(c));
        if (model.chains.empty()) throw DataError("holistic model has no chains");
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("holistic model JSON malformed: ") + e.what());
    }
}

void HolisticModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << to_json() << '\n';
}

HolisticModel HolisticModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open model: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

} // namespace psyprof::ml
