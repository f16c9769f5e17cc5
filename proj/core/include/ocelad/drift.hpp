#pragma once

#include "ocelad/metric.hpp"
#include "ocelad/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ocelad {

enum class Partition { A, B };

const char *to_string(Partition p);
Partition partition_from_string(const std::string &name);

struct DatasetConfig {
    std::int64_t n_pts = 2000;
    Eigen::Index n = 25;
    Eigen::Index k_sub = 3;
    std::vector<double> proportions_a{0.5, 0.2, 0.3};
    std::vector<double> proportions_b{0.5, 0.2, 0.3};
    // Blob standard deviation relative to the unit spacing of cluster means.
    double blob_scale = 0.35;
    double noise_scale = 1.5;

    void validate() const;
};

/// Points with two independent clusterings living in disjoint coordinate
/// blocks: A in [0, k_sub), B in [k_sub, 2 k_sub). Remaining coordinates
/// are isotropic noise.
struct SyntheticDataset {
    Matrix points; // n_pts x n
    std::vector<int> labels_a;
    std::vector<int> labels_b;
    Eigen::Index k_sub = 0;

    const std::vector<int> &labels(Partition p) const {
        return p == Partition::A ? labels_a : labels_b;
    }
    int cluster_count(Partition p) const;
    Eigen::Index subspace_offset(Partition p) const { return p == Partition::A ? 0 : k_sub; }
};

/// Cluster sizes via largest remainder rounding of proportions * n_pts.
std::vector<std::int64_t> cluster_sizes(const std::vector<double> &proportions, std::int64_t n_pts);

SyntheticDataset generate_dataset(const DatasetConfig &cfg, std::uint64_t seed);

struct RotationResult {
    Matrix points;
    Matrix rotation;
};

/// Rotates every row x -> G x with G = exp(epsilon K) for a random
/// skew-symmetric K of unit Frobenius norm. epsilon = 0 draws nothing and
/// returns the identity.
RotationResult rotation_step(const Matrix &points, double epsilon, Rng &rng);

/// Orthogonal exp(epsilon K) for a skew-symmetric K.
Matrix rotation_from_generator(const Matrix &K, double epsilon);

enum class PairingPolicy {
    Balanced, // half same-cluster, half different-cluster pairs
    Uniform,  // uniformly random distinct pairs
};

/// Draws labelled pairs from a fixed clustering; the point coordinates are
/// supplied per draw so that drifting data can be sampled.
class PairSampler {
  public:
    PairSampler(std::vector<int> labels, PairingPolicy policy);

    Constraint sample(const Matrix &points, std::int64_t t, Rng &rng) const;

    PairingPolicy policy() const noexcept { return policy_; }

  private:
    std::size_t draw_partner(std::size_t i, bool same, Rng &rng) const;

    std::vector<int> labels_;
    PairingPolicy policy_;
    std::vector<std::vector<std::size_t>> members_; // point indices per label
    std::vector<std::size_t> same_candidates_;      // points with a same-cluster partner
    std::vector<std::size_t> diff_candidates_;      // points with a different-cluster partner
};

Constraint sample_constraint(const SyntheticDataset &data, Partition partition, Rng &rng,
                             PairingPolicy policy = PairingPolicy::Balanced, std::int64_t t = 1);

struct DriftSegment {
    std::int64_t duration = 1;
    Partition partition = Partition::A;
    double drift_rate = 0.0;
};

struct DriftRates {
    double slow = 1e-4;
    double moderate = 1e-3;
    double fast = 6e-2;
};

struct DriftScenario {
    std::vector<DriftSegment> segments;
    std::uint64_t seed = 0;

    std::int64_t total_steps() const;
    void validate() const;

    /// Static A for static_length steps, then B with moderate, fast and
    /// moderate drift, then A with slow drift; those four last segment_length
    /// steps each.
    static DriftScenario paper_profile(std::int64_t static_length, std::int64_t segment_length,
                                       DriftRates rates = {}, std::uint64_t seed = 0);
};

struct ScenarioTick {
    Constraint constraint;
    Partition partition = Partition::A;
    std::size_t segment = 0;
    double drift_rate = 0.0;
    // ||M*_t - M*_{t-1}||_F / ||M*_{t-1}||_F for the ground-truth metric.
    double metric_change = 0.0;
};

/// Sequential generator for a drift scenario. Each step rotates the data by
/// the segment's rate and emits one constraint under the segment's partition.
class ScenarioStream {
  public:
    ScenarioStream(SyntheticDataset data, DriftScenario scenario,
                   PairingPolicy policy = PairingPolicy::Balanced);

    bool done() const noexcept { return t_ > total_; }
    std::int64_t next_step() const noexcept { return t_; }
    std::int64_t total_steps() const noexcept { return total_; }

    ScenarioTick next();

    const SyntheticDataset &dataset() const noexcept { return data_; }
    const Matrix &points() const noexcept { return points_; }
    const Matrix &cumulative_rotation() const noexcept { return rotation_; }
    const DriftScenario &scenario() const noexcept { return scenario_; }
    Partition current_partition() const;
    const Rng &rng() const noexcept { return rng_; }

    /// Rotated subspace projector for the partition, scaled (with threshold)
    /// so that average within- and between-cluster pairs sit exactly on the
    /// margins.
    MetricState ground_truth(Partition p) const;

    struct State {
        std::int64_t t;
        Matrix points;
        Matrix rotation;
        std::string rng_state;
    };
    State save() const;
    void restore(const State &state);

  private:
    std::size_t segment_at(std::int64_t t) const;

    SyntheticDataset data_;
    DriftScenario scenario_;
    PairSampler sampler_a_;
    PairSampler sampler_b_;
    std::int64_t total_;
    std::int64_t t_ = 1;
    Matrix points_;
    Matrix rotation_;
    Rng rng_;
    double scale_[2]{1.0, 1.0};
    double mu_[2]{2.0, 2.0};
};

} // namespace ocelad
