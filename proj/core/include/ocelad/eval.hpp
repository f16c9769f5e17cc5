#pragma once

#include "ocelad/dyadic.hpp"
#include "ocelad/metric.hpp"

#include <cstdint>
#include <vector>

namespace ocelad {

/// Linear map L (d x n) with L^T L equal to the top-d part of a PSD metric.
struct EmbeddingMap {
    Matrix L;

    /// Embeds each row of points (n_pts x n) into n_pts x d coordinates.
    Matrix apply(const Matrix &points) const { return points * L.transpose(); }
};

/// L = Lambda_d^{1/2} V_d^T from the d largest eigenpairs of M.
EmbeddingMap embedding_from_metric(const Matrix &M, Eigen::Index d);

/// Leave-one-out k-NN error of Euclidean coordinates (rows). Distance ties
/// go to the lower point index, vote ties to the smallest label.
double knn_error(const Matrix &embedded, const std::vector<int> &labels, int k);

/// Leave-one-out k-NN error under the Mahalanobis metric M.
double knn_error(const MetricState &metric, const Matrix &points, const std::vector<int> &labels,
                 int k);

struct KMeansResult {
    std::vector<int> labels;
    Matrix centroids;
    double inertia = 0.0;
};

struct KMeansOptions {
    int restarts = 10;
    int max_iterations = 100;
};

/// One Lloyd run from a k-means++ seeding drawn with the given seed.
KMeansResult kmeans_single(const Matrix &points, int K, std::uint64_t seed,
                           int max_iterations = 100);

/// Best-inertia result over opts.restarts runs seeded from seed, seed + 1, ...
KMeansResult kmeans(const Matrix &points, int K, std::uint64_t seed, KMeansOptions opts = {});

/// Normalized mutual information I(a; b) / sqrt(H(a) H(b)), natural log.
/// Zero when either partition has zero entropy.
double nmi(const std::vector<int> &a, const std::vector<int> &b);

/// Fraction of values strictly above threshold.
double exceedance_probability(const std::vector<double> &values, double threshold);

/// Per-step losses of an algorithm and of a comparator sequence, with the
/// comparator's step-to-step movement ||theta_{t+1} - theta_t||.
struct RegretLedger {
    std::vector<double> algorithm_loss;
    std::vector<double> comparator_loss;
    std::vector<double> path_increment;

    std::int64_t size() const { return static_cast<std::int64_t>(algorithm_loss.size()); }
    void append(double alg, double comp, double increment);
    void validate() const;
};

struct RegretSummary {
    double regret = 0.0;
    double path_length = 0.0;
};

/// Regret and comparator path length on the 1-based closed interval [q, s].
/// The path sums increments t = q .. s - 1.
RegretSummary dynamic_regret(const RegretLedger &ledger, std::int64_t q, std::int64_t s);

struct IntervalRegret {
    DyadicInterval interval;
    RegretSummary summary;
};

/// dynamic_regret on every complete dyadic interval inside the ledger.
std::vector<IntervalRegret> dyadic_regret_sweep(const RegretLedger &ledger, std::int64_t i0 = 1);

/// Euclidean distance on the product space: sqrt(|dM|_F^2 + dmu^2).
double parameter_distance(const MetricState &a, const MetricState &b);

struct BatchFitOptions {
    int iterations_per_stage = 400;
    std::vector<double> smoothing{1.0, 0.1, 0.01, 0.001};
};

struct BatchFitResult {
    MetricState state;
    double objective = 0.0; // mean hinge + rho * r(M)
};

/// Mean hinge loss plus rho * r(M) of a fixed parameter over a stream.
double batch_objective(const MetricState &state, const std::vector<Constraint> &stream,
                       const LossConfig &cfg);

/// Best fixed (M, mu) over a stream: accelerated proximal gradient on a
/// smoothed hinge with decreasing smoothing, returning the iterate with the
/// lowest exact objective. The candidates in warm_starts are also scored.
BatchFitResult fit_batch_metric(const std::vector<Constraint> &stream, const LossConfig &cfg,
                                const std::vector<MetricState> &warm_starts,
                                BatchFitOptions opts = {});

} // namespace ocelad
