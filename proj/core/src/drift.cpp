#include "ocelad/drift.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ocelad {

const char *to_string(Partition p) { return p == Partition::A ? "A" : "B"; }

Partition partition_from_string(const std::string &name) {
    if (name == "A" || name == "a")
        return Partition::A;
    if (name == "B" || name == "b")
        return Partition::B;
    throw std::invalid_argument("unknown partition '" + name + "' (expected A or B)");
}

namespace {

void check_proportions(const std::vector<double> &p, const char *which) {
    if (p.empty())
        throw std::invalid_argument(std::string("proportions_") + which + " must be nonempty");
    double sum = 0.0;
    for (double v : p) {
        if (!(v > 0.0))
            throw std::invalid_argument(std::string("proportions_") + which + " must be positive");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument(std::string("proportions_") + which + " must sum to 1");
}

std::vector<int> assign_labels(const std::vector<double> &proportions, std::int64_t n_pts,
                               Rng &rng) {
    const auto sizes = cluster_sizes(proportions, n_pts);
    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(n_pts));
    for (std::size_t c = 0; c < sizes.size(); ++c)
        labels.insert(labels.end(), static_cast<std::size_t>(sizes[c]), static_cast<int>(c));
    std::shuffle(labels.begin(), labels.end(), rng.engine());
    return labels;
}

// Mean squared distance of same-cluster and different-cluster pairs within a
// coordinate block, via sum_{i<j} |x_i - x_j|^2 = m sum |x_i|^2 - |sum x_i|^2.
std::pair<double, double> pair_distance_means(const Matrix &block, const std::vector<int> &labels) {
    const auto n = static_cast<double>(block.rows());
    const int clusters = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<Vector> sums(clusters, Vector::Zero(block.cols()));
    std::vector<double> sq(clusters, 0.0), count(clusters, 0.0);
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
        const int c = labels[static_cast<std::size_t>(i)];
        sums[c] += block.row(i).transpose();
        sq[c] += block.row(i).squaredNorm();
        count[c] += 1.0;
    }
    double same_sum = 0.0, same_pairs = 0.0;
    for (int c = 0; c < clusters; ++c) {
        same_sum += count[c] * sq[c] - sums[c].squaredNorm();
        same_pairs += count[c] * (count[c] - 1.0) / 2.0;
    }
    const double total_sum = n * block.rowwise().squaredNorm().sum() -
                             block.colwise().sum().squaredNorm();
    const double total_pairs = n * (n - 1.0) / 2.0;
    const double diff_pairs = total_pairs - same_pairs;
    const double same_mean = same_pairs > 0 ? same_sum / same_pairs : 0.0;
    const double diff_mean = diff_pairs > 0 ? (total_sum - same_sum) / diff_pairs : 0.0;
    return {same_mean, diff_mean};
}

} // namespace

void DatasetConfig::validate() const {
    if (n_pts < 2)
        throw std::invalid_argument("dataset needs at least 2 points");
    if (k_sub < 1 || 2 * k_sub > n)
        throw std::invalid_argument("need 1 <= k_sub and 2 * k_sub <= n");
    check_proportions(proportions_a, "a");
    check_proportions(proportions_b, "b");
    if (!(blob_scale >= 0.0) || !(noise_scale >= 0.0))
        throw std::invalid_argument("blob_scale and noise_scale must be >= 0");
}

int SyntheticDataset::cluster_count(Partition p) const {
    const auto &l = labels(p);
    return l.empty() ? 0 : *std::max_element(l.begin(), l.end()) + 1;
}

std::vector<std::int64_t> cluster_sizes(const std::vector<double> &proportions, std::int64_t n_pts) {
    std::vector<std::int64_t> sizes(proportions.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::int64_t assigned = 0;
    for (std::size_t c = 0; c < proportions.size(); ++c) {
        const double exact = proportions[c] * static_cast<double>(n_pts);
        sizes[c] = static_cast<std::int64_t>(std::floor(exact));
        assigned += sizes[c];
        remainders.emplace_back(exact - std::floor(exact), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto &a, const auto &b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < n_pts; ++i, ++assigned)
        ++sizes[remainders[i % remainders.size()].second];
    return sizes;
}

SyntheticDataset generate_dataset(const DatasetConfig &cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    SyntheticDataset data;
    data.k_sub = cfg.k_sub;
    data.labels_a = assign_labels(cfg.proportions_a, cfg.n_pts, rng);
    data.labels_b = assign_labels(cfg.proportions_b, cfg.n_pts, rng);

    // Cluster c is centered at (1 + c / k_sub) e_{c mod k_sub} in its block.
    auto mean_coord = [&](int c, Eigen::Index axis) {
        const Eigen::Index k = cfg.k_sub;
        return axis == c % k ? 1.0 + static_cast<double>(c / k) : 0.0;
    };

    data.points.resize(cfg.n_pts, cfg.n);
    for (Eigen::Index i = 0; i < cfg.n_pts; ++i) {
        const int la = data.labels_a[static_cast<std::size_t>(i)];
        const int lb = data.labels_b[static_cast<std::size_t>(i)];
        for (Eigen::Index a = 0; a < cfg.k_sub; ++a) {
            data.points(i, a) = mean_coord(la, a) + cfg.blob_scale * rng.normal();
            data.points(i, cfg.k_sub + a) = mean_coord(lb, a) + cfg.blob_scale * rng.normal();
        }
        for (Eigen::Index a = 2 * cfg.k_sub; a < cfg.n; ++a)
            data.points(i, a) = cfg.noise_scale * rng.normal();
    }
    return data;
}

Matrix rotation_from_generator(const Matrix &K, double epsilon) {
    const Matrix scaled = epsilon * K;
    return scaled.exp();
}

RotationResult rotation_step(const Matrix &points, double epsilon, Rng &rng) {
    if (!(epsilon >= 0.0))
        throw std::invalid_argument("rotation magnitude must be >= 0");
    const auto n = points.cols();
    if (epsilon == 0.0 || n < 2)
        return {points, Matrix::Identity(n, n)};
    Matrix A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            A(i, j) = rng.normal();
    Matrix K = A - A.transpose();
    K /= K.norm();
    Matrix G = rotation_from_generator(K, epsilon);
    return {points * G.transpose(), std::move(G)};
}

PairSampler::PairSampler(std::vector<int> labels, PairingPolicy policy)
    : labels_(std::move(labels)), policy_(policy) {
    if (labels_.size() < 2)
        throw std::invalid_argument("pair sampling needs at least 2 points");
    const int clusters = *std::max_element(labels_.begin(), labels_.end()) + 1;
    members_.resize(static_cast<std::size_t>(clusters));
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] < 0)
            throw std::invalid_argument("cluster labels must be >= 0");
        members_[static_cast<std::size_t>(labels_[i])].push_back(i);
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const auto size = members_[static_cast<std::size_t>(labels_[i])].size();
        if (size >= 2)
            same_candidates_.push_back(i);
        if (size < labels_.size())
            diff_candidates_.push_back(i);
    }
}

std::size_t PairSampler::draw_partner(std::size_t i, bool same, Rng &rng) const {
    const auto &own = members_[static_cast<std::size_t>(labels_[i])];
    if (same) {
        // Uniform over own cluster minus i.
        std::size_t pick = rng.index(own.size() - 1);
        const auto pos =
            static_cast<std::size_t>(std::lower_bound(own.begin(), own.end(), i) - own.begin());
        if (pick >= pos)
            ++pick;
        return own[pick];
    }
    // Uniform over all points outside i's cluster.
    std::size_t pick = rng.index(labels_.size() - own.size());
    for (std::size_t c = 0; c < members_.size(); ++c) {
        if (static_cast<int>(c) == labels_[i])
            continue;
        if (pick < members_[c].size())
            return members_[c][pick];
        pick -= members_[c].size();
    }
    throw std::logic_error("pair sampler: partner index out of range");
}

Constraint PairSampler::sample(const Matrix &points, std::int64_t t, Rng &rng) const {
    if (static_cast<std::size_t>(points.rows()) != labels_.size())
        throw std::invalid_argument("pair sampler: point count does not match labels");
    std::size_t i = 0, j = 0;
    if (policy_ == PairingPolicy::Uniform) {
        i = rng.index(labels_.size());
        j = rng.index(labels_.size() - 1);
        if (j >= i)
            ++j;
    } else {
        bool same = rng.bernoulli(0.5);
        if (same && same_candidates_.empty())
            same = false;
        if (!same && diff_candidates_.empty())
            same = true;
        const auto &pool = same ? same_candidates_ : diff_candidates_;
        i = pool[rng.index(pool.size())];
        j = draw_partner(i, same, rng);
    }
    Constraint c;
    c.t = t;
    c.x = points.row(static_cast<Eigen::Index>(i)).transpose();
    c.z = points.row(static_cast<Eigen::Index>(j)).transpose();
    c.y = labels_[i] == labels_[j] ? 1 : -1;
    return c;
}

Constraint sample_constraint(const SyntheticDataset &data, Partition partition, Rng &rng,
                             PairingPolicy policy, std::int64_t t) {
    return PairSampler(data.labels(partition), policy).sample(data.points, t, rng);
}

std::int64_t DriftScenario::total_steps() const {
    std::int64_t total = 0;
    for (const auto &s : segments)
        total += s.duration;
    return total;
}

void DriftScenario::validate() const {
    if (segments.empty())
        throw std::invalid_argument("scenario needs at least one segment");
    for (const auto &s : segments) {
        if (s.duration < 1)
            throw std::invalid_argument("segment durations must be >= 1");
        if (!(s.drift_rate >= 0.0) || !std::isfinite(s.drift_rate))
            throw std::invalid_argument("segment drift rates must be finite and >= 0");
    }
}

DriftScenario DriftScenario::paper_profile(std::int64_t static_length, std::int64_t segment_length,
                                           DriftRates rates, std::uint64_t seed) {
    DriftScenario s;
    s.seed = seed;
    s.segments = {
        {static_length, Partition::A, 0.0},
        {segment_length, Partition::B, rates.moderate},
        {segment_length, Partition::B, rates.fast},
        {segment_length, Partition::B, rates.moderate},
        {segment_length, Partition::A, rates.slow},
    };
    return s;
}

ScenarioStream::ScenarioStream(SyntheticDataset data, DriftScenario scenario, PairingPolicy policy)
    : data_(std::move(data)), scenario_(std::move(scenario)),
      sampler_a_(data_.labels_a, policy), sampler_b_(data_.labels_b, policy),
      total_(scenario_.total_steps()), points_(data_.points),
      rotation_(Matrix::Identity(data_.points.cols(), data_.points.cols())),
      rng_(scenario_.seed) {
    scenario_.validate();
    for (Partition p : {Partition::A, Partition::B}) {
        const Matrix block = data_.points.middleCols(data_.subspace_offset(p), data_.k_sub);
        const auto [same, diff] = pair_distance_means(block, data_.labels(p));
        const int idx = p == Partition::A ? 0 : 1;
        if (diff > same) {
            scale_[idx] = 2.0 / (diff - same);
            mu_[idx] = 1.0 + scale_[idx] * same;
        }
    }
}

std::size_t ScenarioStream::segment_at(std::int64_t t) const {
    std::int64_t end = 0;
    for (std::size_t i = 0; i < scenario_.segments.size(); ++i) {
        end += scenario_.segments[i].duration;
        if (t <= end)
            return i;
    }
    return scenario_.segments.size() - 1;
}

Partition ScenarioStream::current_partition() const {
    // Partition of the most recently emitted step (the first segment before any step).
    return scenario_.segments[segment_at(std::max<std::int64_t>(1, t_ - 1))].partition;
}

MetricState ScenarioStream::ground_truth(Partition p) const {
    const int idx = p == Partition::A ? 0 : 1;
    const Matrix basis = rotation_.middleCols(data_.subspace_offset(p), data_.k_sub);
    Matrix M = scale_[idx] * (basis * basis.transpose());
    M = 0.5 * (M + Matrix(M.transpose()));
    return {M, mu_[idx]};
}

ScenarioTick ScenarioStream::next() {
    if (done())
        throw std::out_of_range("scenario stream exhausted");
    const std::size_t seg = segment_at(t_);
    const auto &segment = scenario_.segments[seg];
    const Partition prev_partition = current_partition();
    const Matrix before = ground_truth(prev_partition).M;

    auto rotated = rotation_step(points_, segment.drift_rate, rng_);
    if (segment.drift_rate > 0.0) {
        points_ = std::move(rotated.points);
        rotation_ = rotated.rotation * rotation_;
    }

    ScenarioTick tick;
    tick.segment = seg;
    tick.partition = segment.partition;
    tick.drift_rate = segment.drift_rate;
    tick.constraint = (segment.partition == Partition::A ? sampler_a_ : sampler_b_)
                          .sample(points_, t_, rng_);
    const Matrix after = ground_truth(segment.partition).M;
    tick.metric_change = (after - before).norm() / std::max(before.norm(), 1e-300);
    ++t_;
    return tick;
}

ScenarioStream::State ScenarioStream::save() const { return {t_, points_, rotation_, rng_.state()}; }

void ScenarioStream::restore(const State &state) {
    if (state.points.rows() != points_.rows() || state.points.cols() != points_.cols() ||
        state.rotation.rows() != rotation_.rows() || state.rotation.cols() != rotation_.cols())
        throw std::invalid_argument("scenario state shape mismatch");
    if (state.t < 1 || state.t > total_ + 1)
        throw std::invalid_argument("scenario state step out of range");
    Rng rng;
    rng.set_state(state.rng_state);
    t_ = state.t;
    points_ = state.points;
    rotation_ = state.rotation;
    rng_ = rng;
}

} // namespace ocelad
