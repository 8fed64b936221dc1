#include "psyprof/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psyprof/csvio.hpp"
#include "psyprof/errors.hpp"
#include "psyprof/mathutil.hpp"
#include "psyprof/parallel.hpp"
#include "psyprof/rng.hpp"

namespace psyprof::analysis {

TraitStatsReport trait_stats(const std::vector<TraitProfile>& profiles) {
    if (profiles.empty()) throw DataError("trait_stats needs at least one profile");
    TraitStatsReport report;
    report.n = profiles.size();
    report.degenerate_n = profiles.size() < 2;
    for (int t = 0; t < kTraitCount; ++t) {
        std::vector<double> vals;
        vals.reserve(profiles.size());
        for (const auto& p : profiles) vals.push_back(p.values[t]);
        TraitStats s;
        s.mean = mean(vals);
        s.std_dev = sample_std(vals); // 0 for n = 1
        s.min_v = *std::min_element(vals.begin(), vals.end());
        s.max_v = *std::max_element(vals.begin(), vals.end());
        report.per_trait[t] = s;
    }
    return report;
}

void save_trait_stats_csv(const TraitStatsReport& report, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (int t = 0; t < kTraitCount; ++t) {
        const auto& s = report.per_trait[t];
        rows.push_back({kTraitNames[t], format_fixed(s.mean), format_fixed(s.std_dev),
                        format_fixed(s.min_v), format_fixed(s.max_v)});
    }
    write_csv(path, {"trait", "mean", "std", "min", "max"}, rows);
}

PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DataError("pearson inputs differ in length");
    if (x.size() < 3) throw DataError("pearson needs at least 3 pairs");
    PearsonResult result;
    result.n = x.size();
    const double sx = sample_std(x), sy = sample_std(y);
    if (sx == 0.0 || sy == 0.0) {
        result.constant_input = true;
        result.rho = 0.0;
        result.p = 1.0;
        return result;
    }
    result.rho = pearson_r(x, y);
    result.p = pearson_p(result.rho, x.size());
    return result;
}

const char* significance_stars(double p) {
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

namespace {

std::vector<double> trait_column(const std::vector<TraitProfile>& labels, int t) {
    std::vector<double> out;
    out.reserve(labels.size());
    for (const auto& p : labels) out.push_back(p.values[t]);
    return out;
}

CorrelationCell cell_of(const std::vector<double>& x, const std::vector<double>& y) {
    const PearsonResult r = pearson(x, y);
    return {r.rho, r.p, r.constant_input};
}

} // namespace

CorrelationReport feature_trait_matrix(const features::FeatureMatrix& matrix,
                                       const std::vector<TraitProfile>& labels) {
    if (matrix.n_rows() != labels.size()) {
        throw DataError("feature rows and labels differ in length");
    }
    CorrelationReport report;
    report.n = labels.size();
    for (int t = 0; t < kTraitCount; ++t) report.col_names.push_back(kTraitNames[t]);
    std::array<std::vector<double>, kTraitCount> traits;
    for (int t = 0; t < kTraitCount; ++t) traits[t] = trait_column(labels, t);
    for (const auto& col : matrix.columns) {
        report.row_names.push_back(col.key());
        std::vector<CorrelationCell> row;
        for (int t = 0; t < kTraitCount; ++t) row.push_back(cell_of(col.values, traits[t]));
        report.cells.push_back(std::move(row));
    }
    return report;
}

CorrelationReport trait_trait_matrix(const std::vector<TraitProfile>& labels) {
    CorrelationReport report;
    report.n = labels.size();
    for (int t = 0; t < kTraitCount; ++t) {
        report.row_names.push_back(kTraitNames[t]);
        report.col_names.push_back(kTraitNames[t]);
    }
    std::array<std::vector<double>, kTraitCount> traits;
    for (int t = 0; t < kTraitCount; ++t) traits[t] = trait_column(labels, t);
    for (int a = 0; a < kTraitCount; ++a) {
        std::vector<CorrelationCell> row;
        for (int b = 0; b < kTraitCount; ++b) {
            if (a == b) {
                row.push_back({1.0, 0.0, sample_std(traits[a]) == 0.0});
            } else {
                row.push_back(cell_of(traits[a], traits[b]));
            }
        }
        report.cells.push_back(std::move(row));
    }
    return report;
}

void save_correlation_csv(const CorrelationReport& report, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t r = 0; r < report.row_names.size(); ++r) {
        for (std::size_t c = 0; c < report.col_names.size(); ++c) {
            const auto& cell = report.cells[r][c];
            rows.push_back({report.row_names[r], report.col_names[c], format_fixed(cell.rho),
                            format_fixed(cell.p), significance_stars(cell.p),
                            cell.constant_input ? "constant" : ""});
        }
    }
    write_csv(path, {"row", "col", "rho", "p", "stars", "note"}, rows);
}

namespace {

std::array<double, kCdfGridPoints> empirical_cdf(const std::vector<double>& values) {
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    std::array<double, kCdfGridPoints> grid{};
    for (int g = 0; g < kCdfGridPoints; ++g) {
        const double x = static_cast<double>(g) / (kCdfGridPoints - 1);
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
        grid[g] = static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
    }
    return grid;
}

} // namespace

GroupCompareReport group_compare(const std::vector<TraitProfile>& group_a,
                                 const std::vector<TraitProfile>& group_b) {
    if (group_a.empty() || group_b.empty()) {
        throw DataError("group_compare needs non-empty groups");
    }
    GroupCompareReport report;
    report.n_a = group_a.size();
    report.n_b = group_b.size();
    for (int t = 0; t < kTraitCount; ++t) {
        const auto a = trait_column(group_a, t);
        const auto b = trait_column(group_b, t);
        report.mean_a[t] = mean(a);
        report.mean_b[t] = mean(b);
        report.cdf_a[t] = empirical_cdf(a);
        report.cdf_b[t] = empirical_cdf(b);
    }
    return report;
}

void save_group_compare_csv(const GroupCompareReport& report, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (int t = 0; t < kTraitCount; ++t) {
        rows.push_back({kTraitNames[t], "mean", format_fixed(report.mean_a[t]),
                        format_fixed(report.mean_b[t])});
    }
    for (int t = 0; t < kTraitCount; ++t) {
        for (int g = 0; g < kCdfGridPoints; ++g) {
            const double x = static_cast<double>(g) / (kCdfGridPoints - 1);
            rows.push_back({kTraitNames[t], format_fixed(x, 2), format_fixed(report.cdf_a[t][g]),
                            format_fixed(report.cdf_b[t][g])});
        }
    }
    write_csv(path, {"trait", "point", "group_a", "group_b"}, rows);
}

namespace {

// entropy (nats) and conditional row for one bandwidth; returns H and fills p
double gaussian_row(const std::vector<double>& dist_sq, std::size_t self, double beta,
                    std::vector<double>& p) {
    double sum = 0.0;
    for (std::size_t j = 0; j < dist_sq.size(); ++j) {
        p[j] = (j == self) ? 0.0 : std::exp(-dist_sq[j] * beta);
        sum += p[j];
    }
    if (sum <= 0.0) {
        // degenerate row (all duplicates); fall back to uniform over others
        const double u = 1.0 / static_cast<double>(dist_sq.size() - 1);
        for (std::size_t j = 0; j < dist_sq.size(); ++j) p[j] = (j == self) ? 0.0 : u;
        return std::log(static_cast<double>(dist_sq.size() - 1));
    }
    double h = 0.0;
    for (std::size_t j = 0; j < dist_sq.size(); ++j) {
        if (p[j] > 0.0) {
            const double pj = p[j] / sum;
            h -= pj * std::log(pj);
            p[j] = pj;
        }
    }
    return h;
}

} // namespace

Embedding2D tsne(const Matrix& points, const TsneParams& params) {
    const std::size_t n = points.size();
    if (params.iterations < 1) throw ConfigError("tsne needs at least one iteration");
    if (params.perplexity <= 0.0) throw ConfigError("perplexity must be positive");
    if (static_cast<double>(n) < 2.0 * params.perplexity + 1.0) {
        throw ConfigError("perplexity too large: need n >= 2*perplexity + 1");
    }
    const std::size_t dims = points.front().size();
    for (const auto& row : points) {
        if (row.size() != dims) throw DataError("tsne rows differ in width");
    }

    // pairwise squared distances, rows independent
    std::vector<std::vector<double>> dist_sq(n, std::vector<double>(n, 0.0));
    parallel_for(n, params.n_threads, [&](std::size_t i) {
        for (std::size_t j = 0; j < n; ++j) {
            double d = 0.0;
            for (std::size_t k = 0; k < dims; ++k) {
                const double diff = points[i][k] - points[j][k];
                d += diff * diff;
            }
            dist_sq[i][j] = d;
        }
    });

    // conditional P rows: bisection on beta until the entropy matches
    const double target_h = std::log(params.perplexity);
    std::vector<std::vector<double>> p_cond(n, std::vector<double>(n, 0.0));
    parallel_for(n, params.n_threads, [&](std::size_t i) {
        double beta = 1.0, beta_lo = 0.0, beta_hi = std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < 64; ++iter) {
            const double h = gaussian_row(dist_sq[i], i, beta, p_cond[i]);
            const double diff = h - target_h;
            if (std::fabs(diff) < 1e-5) break;
            if (diff > 0.0) { // entropy too high: sharpen
                beta_lo = beta;
                beta = std::isinf(beta_hi) ? beta * 2.0 : (beta_lo + beta_hi) / 2.0;
            } else {
                beta_hi = beta;
                beta = (beta_lo + beta_hi) / 2.0;
            }
        }
    });

    // symmetrize; kept dense, the use case is a few thousand points
    std::vector<std::vector<double>> P(n, std::vector<double>(n, 0.0));
    const double inv_2n = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            P[i][j] = std::max((p_cond[i][j] + p_cond[j][i]) * inv_2n, 1e-12);
        }
        P[i][i] = 1e-12;
    }

    constexpr int kExaggerationIters = 250;
    constexpr double kExaggeration = 12.0;
    // the usual n/(4*exaggeration) rule with a floor of 50
    const double learning_rate = std::max(static_cast<double>(n) / (4.0 * kExaggeration), 50.0);
    for (auto& row : P) {
        for (auto& v : row) v *= kExaggeration;
    }

    Rng rng(params.seed);
    std::vector<std::array<double, 2>> Y(n), inc(n, {0.0, 0.0}), gains(n, {1.0, 1.0});
    for (auto& y : Y) {
        y[0] = rng.normal() * 1e-4;
        y[1] = rng.normal() * 1e-4;
    }

    Embedding2D out;
    std::vector<std::vector<double>> q_unnorm(n, std::vector<double>(n, 0.0));
    std::vector<std::array<double, 2>> grad(n), prev_y(n), prev_grad(n);
    std::vector<double> row_kl(n, 0.0);
    double prev_kl = std::numeric_limits<double>::infinity();
    double step_scale = 1.0;
    for (int iter = 0; iter < params.iterations; ++iter) {
        if (iter == kExaggerationIters) {
            for (auto& row : P) {
                for (auto& v : row) v /= kExaggeration;
            }
        }
        // Student-t kernel; the normalizer sums in fixed row-major order
        parallel_for(n, params.n_threads, [&](std::size_t i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) {
                    q_unnorm[i][j] = 0.0;
                    continue;
                }
                const double dx = Y[i][0] - Y[j][0];
                const double dy = Y[i][1] - Y[j][1];
                q_unnorm[i][j] = 1.0 / (1.0 + dx * dx + dy * dy);
            }
        });
        double q_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) q_sum += q_unnorm[i][j];
        }
        const double inv_q_sum = 1.0 / q_sum;

        parallel_for(n, params.n_threads, [&](std::size_t i) {
            double gx = 0.0, gy = 0.0, kl = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double q = std::max(q_unnorm[i][j] * inv_q_sum, 1e-12);
                const double mult = (P[i][j] - q) * q_unnorm[i][j];
                gx += mult * (Y[i][0] - Y[j][0]);
                gy += mult * (Y[i][1] - Y[j][1]);
                kl += P[i][j] * std::log(P[i][j] / q);
            }
            grad[i] = {4.0 * gx, 4.0 * gy};
            row_kl[i] = kl;
        });
        double kl_total = 0.0;
        for (const double v : row_kl) kl_total += v;

        // once exaggeration is off the trace must not climb: a step that
        // raised the objective gets rejected and retried smaller
        if (iter > kExaggerationIters && kl_total > prev_kl) {
            Y = prev_y;
            grad = prev_grad;
            kl_total = prev_kl;
            for (auto& g : gains) g = {1.0, 1.0};
            for (auto& v : inc) v = {0.0, 0.0};
            step_scale *= 0.5;
        }
        prev_y = Y;
        prev_grad = grad;
        prev_kl = kl_total;

        const double momentum = iter < kExaggerationIters ? 0.5 : 0.8;
        const double eta = learning_rate * step_scale;
        double mean_x = 0.0, mean_y = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (int d = 0; d < 2; ++d) {
                const bool same_sign = (grad[i][d] > 0.0) == (inc[i][d] > 0.0);
                gains[i][d] = same_sign ? std::max(gains[i][d] * 0.8, 0.01) : gains[i][d] + 0.2;
                inc[i][d] = momentum * inc[i][d] - eta * gains[i][d] * grad[i][d];
                Y[i][d] += inc[i][d];
            }
            mean_x += Y[i][0];
            mean_y += Y[i][1];
        }
        mean_x /= static_cast<double>(n);
        mean_y /= static_cast<double>(n);
        for (auto& y : Y) {
            y[0] -= mean_x;
            y[1] -= mean_y;
        }
        out.kl_trace.push_back(kl_total);
    }
    out.points = std::move(Y);
    out.final_kl = out.kl_trace.back();
    return out;
}

namespace {

// Jacobi eigensolver for small symmetric matrices; returns eigenvalues and
// column eigenvectors, unsorted
void jacobi_eigen(std::vector<std::vector<double>>& a, std::vector<double>& eigenvalues,
                  std::vector<std::vector<double>>& vectors) {
    const std::size_t d = a.size();
    vectors.assign(d, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < d; ++i) vectors[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i + 1; j < d; ++j) off += a[i][j] * a[i][j];
        }
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                if (std::fabs(a[p][q]) < 1e-30) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < d; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double vkp = vectors[k][p], vkq = vectors[k][q];
                    vectors[k][p] = c * vkp - s * vkq;
                    vectors[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    eigenvalues.resize(d);
    for (std::size_t i = 0; i < d; ++i) eigenvalues[i] = a[i][i];
}

} // namespace

Embedding2D pca2d(const Matrix& points) {
    if (points.size() < 2) throw DataError("pca2d needs at least two points");
    const std::size_t n = points.size();
    const std::size_t d = points.front().size();
    for (const auto& row : points) {
        if (row.size() != d) throw DataError("pca2d rows differ in width");
    }
    std::vector<double> center(d, 0.0);
    for (const auto& row : points) {
        for (std::size_t k = 0; k < d; ++k) center[k] += row[k];
    }
    for (auto& c : center) c /= static_cast<double>(n);

    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    for (const auto& row : points) {
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i; j < d; ++j) {
                cov[i][j] += (row[i] - center[i]) * (row[j] - center[j]);
            }
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            cov[i][j] /= static_cast<double>(n - 1);
            cov[j][i] = cov[i][j];
        }
    }

    std::vector<double> eigenvalues;
    std::vector<std::vector<double>> vectors;
    jacobi_eigen(cov, eigenvalues, vectors);

    // top two eigenvalues; ties broken by index for determinism
    std::vector<std::size_t> order(d);
    for (std::size_t i = 0; i < d; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (eigenvalues[a] != eigenvalues[b]) return eigenvalues[a] > eigenvalues[b];
        return a < b;
    });

    Embedding2D out;
    out.points.resize(n);
    for (int axis = 0; axis < 2 && axis < static_cast<int>(d); ++axis) {
        std::vector<double> v(d);
        for (std::size_t k = 0; k < d; ++k) v[k] = vectors[k][order[static_cast<std::size_t>(axis)]];
        // fix the sign: the largest-magnitude component points up
        double biggest = 0.0;
        for (const double x : v) {
            if (std::fabs(x) > std::fabs(biggest)) biggest = x;
        }
        if (biggest < 0.0) {
            for (auto& x : v) x = -x;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double proj = 0.0;
            for (std::size_t k = 0; k < d; ++k) proj += (points[i][k] - center[k]) * v[k];
            out.points[i][static_cast<std::size_t>(axis)] = proj;
        }
    }
    out.final_kl = 0.0;
    return out;
}

void save_embedding_csv(const Embedding2D& embedding, const std::vector<std::string>& ids,
                        const std::vector<std::string>& groups, const std::string& path) {
    if (ids.size() != embedding.points.size() || groups.size() != embedding.points.size()) {
        throw DataError("embedding ids and groups must match the point count");
    }
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < embedding.points.size(); ++i) {
        rows.push_back({ids[i], groups[i], format_double(embedding.points[i][0]),
                        format_double(embedding.points[i][1])});
    }
    write_csv(path, {"user", "group", "x", "y"}, rows);
}

} // namespace psyprof::analysis
