#include "ocelad/eval.hpp"

#include "ocelad/comid.hpp"
#include "ocelad/linalg.hpp"
#include "ocelad/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace ocelad {

EmbeddingMap embedding_from_metric(const Matrix &M, Eigen::Index d) {
    if (M.rows() != M.cols())
        throw std::invalid_argument("embedding: metric must be square");
    if (d < 1 || d > M.rows())
        throw std::invalid_argument("embedding: need 1 <= d <= n");
    const auto eig = linalg::eigen_symmetric(M);
    const auto n = M.rows();
    EmbeddingMap map{Matrix(d, n)};
    for (Eigen::Index r = 0; r < d; ++r) {
        const Eigen::Index col = n - 1 - r; // eigenvalues ascend
        map.L.row(r) = std::sqrt(std::max(0.0, eig.values(col))) * eig.vectors.col(col).transpose();
    }
    return map;
}

double knn_error(const Matrix &embedded, const std::vector<int> &labels, int k) {
    const auto n = static_cast<std::size_t>(embedded.rows());
    if (labels.size() != n)
        throw std::invalid_argument("knn_error: label count does not match points");
    if (k < 1 || static_cast<std::size_t>(k) >= n)
        throw std::invalid_argument("knn_error: need 1 <= k < n_pts");
    if (!embedded.allFinite())
        throw std::invalid_argument("knn_error: non-finite coordinates");
    for (int l : labels)
        if (l < 0)
            throw std::invalid_argument("knn_error: labels must be >= 0");
    const int classes = *std::max_element(labels.begin(), labels.end()) + 1;

    // Row-major copy so each point is contiguous.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> P = embedded;
    const auto dim = P.cols();
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            const double *a = P.data() + i * dim;
            const double *b = P.data() + j * dim;
            for (Eigen::Index c = 0; c < dim; ++c) {
                const double diff = a[c] - b[c];
                s += diff * diff;
            }
            dist[i * n + j] = dist[j * n + i] = s;
        }

    std::vector<std::size_t> order(n - 1);
    std::vector<int> votes(static_cast<std::size_t>(classes));
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t pos = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i)
                order[pos++] = j;
        const double *row = dist.data() + i * n;
        std::partial_sort(order.begin(), order.begin() + k, order.end(),
                          [row](std::size_t a, std::size_t b) {
                              return row[a] < row[b] || (row[a] == row[b] && a < b);
                          });
        std::fill(votes.begin(), votes.end(), 0);
        for (int r = 0; r < k; ++r)
            ++votes[static_cast<std::size_t>(labels[order[static_cast<std::size_t>(r)]])];
        const auto winner = std::max_element(votes.begin(), votes.end()) - votes.begin();
        if (winner != labels[i])
            ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(n);
}

double knn_error(const MetricState &metric, const Matrix &points, const std::vector<int> &labels,
                 int k) {
    if (points.cols() != metric.dim())
        throw std::invalid_argument("knn_error: metric and points differ in dimension");
    return knn_error(embedding_from_metric(metric.M, metric.dim()).apply(points), labels, k);
}

namespace {

double sq_dist(const Matrix &points, Eigen::Index i, const Matrix &centroids, Eigen::Index c) {
    return (points.row(i) - centroids.row(c)).squaredNorm();
}

} // namespace

KMeansResult kmeans_single(const Matrix &points, int K, std::uint64_t seed, int max_iterations) {
    const auto n = points.rows();
    if (K < 1)
        throw std::invalid_argument("kmeans: K must be >= 1");
    if (K > n)
        throw std::invalid_argument("kmeans: K exceeds the number of points");
    Rng rng(seed);

    // k-means++ seeding.
    Matrix centroids(K, points.cols());
    centroids.row(0) = points.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
    std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    for (int c = 1; c < K; ++c) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            auto &d = nearest[static_cast<std::size_t>(i)];
            d = std::min(d, sq_dist(points, i, centroids, c - 1));
            total += d;
        }
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            for (pick = 0; pick < n - 1; ++pick) {
                target -= nearest[static_cast<std::size_t>(pick)];
                if (target < 0.0)
                    break;
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
        }
        centroids.row(c) = points.row(pick);
    }

    KMeansResult result;
    result.labels.assign(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sq_dist(points, i, centroids, 0);
            for (int c = 1; c < K; ++c) {
                const double d = sq_dist(points, i, centroids, c);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (result.labels[static_cast<std::size_t>(i)] != best) {
                result.labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        if (!changed)
            break;
        Matrix sums = Matrix::Zero(K, points.cols());
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(K), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int c = result.labels[static_cast<std::size_t>(i)];
            sums.row(c) += points.row(i);
            ++counts[static_cast<std::size_t>(c)];
        }
        for (int c = 0; c < K; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
                continue;
            }
            // Empty cluster: move it to the point worst served by its centroid.
            Eigen::Index far = 0;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double d = sq_dist(points, i, centroids, result.labels[static_cast<std::size_t>(i)]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            centroids.row(c) = points.row(far);
            result.labels[static_cast<std::size_t>(far)] = c;
        }
    }
    result.inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        result.inertia += sq_dist(points, i, centroids, result.labels[static_cast<std::size_t>(i)]);
    result.centroids = std::move(centroids);
    return result;
}

KMeansResult kmeans(const Matrix &points, int K, std::uint64_t seed, KMeansOptions opts) {
    if (opts.restarts < 1)
        throw std::invalid_argument("kmeans: restarts must be >= 1");
    KMeansResult best;
    for (int r = 0; r < opts.restarts; ++r) {
        auto run = kmeans_single(points, K, seed + static_cast<std::uint64_t>(r), opts.max_iterations);
        if (r == 0 || run.inertia < best.inertia)
            best = std::move(run);
    }
    return best;
}

double nmi(const std::vector<int> &a, const std::vector<int> &b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("nmi: empty partition");
    if (a.size() != b.size())
        throw std::invalid_argument("nmi: partitions differ in length");
    std::map<int, double> ca, cb;
    std::map<std::pair<int, int>, double> joint;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ca[a[i]] += 1.0;
        cb[b[i]] += 1.0;
        joint[{a[i], b[i]}] += 1.0;
    }
    const double n = static_cast<double>(a.size());
    auto entropy = [n](const std::map<int, double> &counts) {
        double h = 0.0;
        for (const auto &[label, c] : counts)
            h -= (c / n) * std::log(c / n);
        return h;
    };
    const double ha = entropy(ca);
    const double hb = entropy(cb);
    if (ha <= 0.0 || hb <= 0.0)
        return 0.0;
    double mi = 0.0;
    for (const auto &[key, c] : joint)
        mi += (c / n) * std::log(c * n / (ca[key.first] * cb[key.second]));
    return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

double exceedance_probability(const std::vector<double> &values, double threshold) {
    if (values.empty())
        throw std::invalid_argument("exceedance_probability: no values");
    const auto above = std::count_if(values.begin(), values.end(),
                                     [threshold](double v) { return v > threshold; });
    return static_cast<double>(above) / static_cast<double>(values.size());
}

void RegretLedger::append(double alg, double comp, double increment) {
    algorithm_loss.push_back(alg);
    comparator_loss.push_back(comp);
    path_increment.push_back(increment);
}

void RegretLedger::validate() const {
    if (algorithm_loss.size() != comparator_loss.size() ||
        algorithm_loss.size() != path_increment.size())
        throw std::invalid_argument("regret ledger columns differ in length");
    auto finite = [](const std::vector<double> &v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!finite(algorithm_loss) || !finite(comparator_loss) || !finite(path_increment))
        throw std::invalid_argument("regret ledger has non-finite entries");
}

RegretSummary dynamic_regret(const RegretLedger &ledger, std::int64_t q, std::int64_t s) {
    ledger.validate();
    if (q < 1 || s < q || s > ledger.size())
        throw std::invalid_argument("dynamic_regret: interval [" + std::to_string(q) + "," +
                                    std::to_string(s) + "] outside ledger of length " +
                                    std::to_string(ledger.size()));
    RegretSummary out;
    for (std::int64_t t = q; t <= s; ++t) {
        const auto i = static_cast<std::size_t>(t - 1);
        out.regret += ledger.algorithm_loss[i] - ledger.comparator_loss[i];
        if (t < s)
            out.path_length += ledger.path_increment[i];
    }
    return out;
}

std::vector<IntervalRegret> dyadic_regret_sweep(const RegretLedger &ledger, std::int64_t i0) {
    if (i0 < 1)
        throw std::invalid_argument("dyadic_regret_sweep: i0 must be >= 1");
    std::vector<IntervalRegret> out;
    const std::int64_t T = ledger.size();
    for (int j = 0; j < 62 && (std::int64_t{1} << j) * i0 <= T; ++j) {
        const std::int64_t len = (std::int64_t{1} << j) * i0;
        for (std::int64_t start = len - i0 + 1; start + len - 1 <= T; start += len) {
            DyadicInterval iv{j, start, start + len - 1};
            out.push_back({iv, dynamic_regret(ledger, iv.start, iv.end)});
        }
    }
    return out;
}

double parameter_distance(const MetricState &a, const MetricState &b) {
    const double dmu = a.mu - b.mu;
    return std::sqrt((a.M - b.M).squaredNorm() + dmu * dmu);
}

namespace {

// Rows are vec(u u^T) so that u^T M u = row . vec(M).
struct StreamDesign {
    Matrix outer;
    Vector y;
    double curvature = 0.0; // mean of |u|^4 + 1
};

StreamDesign design_of(const std::vector<Constraint> &stream, Eigen::Index n) {
    StreamDesign d;
    const auto T = static_cast<Eigen::Index>(stream.size());
    d.outer.resize(T, n * n);
    d.y.resize(T);
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto &c = stream[static_cast<std::size_t>(t)];
        if (c.dim() != n)
            throw std::invalid_argument("batch fit: constraint dimension mismatch");
        const Vector u = c.difference();
        const Matrix uu = u * u.transpose();
        d.outer.row(t) = Eigen::Map<const Vector>(uu.data(), n * n).transpose();
        d.y(t) = c.y;
        d.curvature += std::pow(u.squaredNorm(), 2) + 1.0;
    }
    d.curvature /= static_cast<double>(std::max<Eigen::Index>(T, 1));
    return d;
}

Vector margins(const StreamDesign &d, const MetricState &s) {
    const auto n = s.dim();
    const Vector dist = d.outer * Eigen::Map<const Vector>(s.M.data(), n * n);
    return d.y.cwiseProduct(Vector::Constant(dist.size(), s.mu) - dist);
}

double exact_objective(const StreamDesign &d, const MetricState &s, const LossConfig &cfg) {
    const Vector m = margins(d, s);
    const double hinge = (1.0 - m.array()).cwiseMax(0.0).mean();
    return hinge + (cfg.rho > 0.0 ? cfg.rho * regularizer_value(s.M, cfg) : 0.0);
}

MetricState proximal_map(const Matrix &M, double mu, double tau, const LossConfig &cfg) {
    Matrix G = M;
    linalg::symmetrize(G);
    Matrix next = cfg.regularizer == Regularizer::NuclearNorm ? prox_nuclear_psd(G, tau)
                                                              : prox_l1_psd(G, tau);
    return {std::move(next), std::max(1.0, mu)};
}

} // namespace

double batch_objective(const MetricState &state, const std::vector<Constraint> &stream,
                       const LossConfig &cfg) {
    if (stream.empty())
        throw std::invalid_argument("batch_objective: empty stream");
    return exact_objective(design_of(stream, state.dim()), state, cfg);
}

BatchFitResult fit_batch_metric(const std::vector<Constraint> &stream, const LossConfig &cfg,
                                const std::vector<MetricState> &warm_starts, BatchFitOptions opts) {
    if (stream.empty())
        throw std::invalid_argument("fit_batch_metric: empty stream");
    cfg.validate();
    const auto n = stream.front().dim();
    const StreamDesign design = design_of(stream, n);
    const auto T = static_cast<double>(stream.size());

    BatchFitResult best{MetricState::identity(n, 1.0), 0.0};
    best.objective = exact_objective(design, best.state, cfg);
    for (const auto &w : warm_starts) {
        const double f = exact_objective(design, w, cfg);
        if (f < best.objective)
            best = {w, f};
    }

    MetricState x = best.state;
    for (double delta : opts.smoothing) {
        const double step = delta / design.curvature;
        MetricState prev = x;
        MetricState yk = x;
        double theta = 1.0;
        for (int it = 0; it < opts.iterations_per_stage; ++it) {
            // Smoothed hinge: quadratic on (1 - delta, 1), linear below.
            const Vector m = margins(design, yk);
            Vector slope(m.size());
            for (Eigen::Index t = 0; t < m.size(); ++t) {
                const double gap = 1.0 - m(t);
                slope(t) = gap <= 0.0 ? 0.0 : (gap < delta ? -gap / delta : -1.0);
            }
            // d margin / dM = -y vec(uu^T), d margin / dmu = y.
            const Vector coef = -slope.cwiseProduct(design.y) / T;
            const Vector gvec = design.outer.transpose() * coef;
            const Matrix gM = Eigen::Map<const Matrix>(gvec.data(), n, n);
            const double gmu = slope.dot(design.y) / T;

            MetricState next = proximal_map(yk.M - step * gM, yk.mu - step * gmu, step * cfg.rho, cfg);
            const double f = exact_objective(design, next, cfg);
            if (f < best.objective)
                best = {next, f};

            const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
            const double beta = (theta - 1.0) / theta_next;
            yk = {next.M + beta * (next.M - prev.M), next.mu + beta * (next.mu - prev.mu)};
            linalg::symmetrize(yk.M);
            prev = std::move(next);
            theta = theta_next;
        }
        x = best.state;
    }
    return best;
}

} // namespace ocelad
