#pragma once

#include "ocelad/drift.hpp"
#include "ocelad/metric.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace ocelad {

struct LearnerParams {
    double eta0 = 0.005;
    std::int64_t i0 = 1;
    int max_level = 14;
    double rho = 0.25;
    Regularizer regularizer = Regularizer::NuclearNorm;
    double mu0 = 2.0;
};

/// Nonadaptive COMID comparison arms.
struct AblationParams {
    bool enabled = true;
    double eta_high = 0.005;
    double eta_low = 4e-4;
};

struct EvalParams {
    int k = 5;
    int clusters = 0;           // 0: number of clusters in the active partition
    Eigen::Index d_embed = 0;   // 0: full dimension
    double nmi_threshold = 0.8;
    std::int64_t eval_every = 10;
    int kmeans_restarts = 10;
};

struct OutputParams {
    std::filesystem::path out_dir = "ocelad_out";
    bool write_constraints = false;
    bool write_checkpoints = true;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    DriftScenario scenario; // scenario.seed is replaced per trial
    PairingPolicy pairing = PairingPolicy::Balanced;
    LearnerParams learner;
    AblationParams ablation;
    EvalParams eval;
    int trials = 1;
    std::uint64_t seed = 0;
    OutputParams output;

    /// Checks every field against the constraints of the modules it feeds.
    void validate() const;
};

/// Paper-profile defaults: 2000 points in R^25, five drift segments.
ExperimentConfig default_config();

/// Parses a JSON config; absent fields keep their defaults, unknown fields
/// are rejected. Throws std::invalid_argument with the offending key.
ExperimentConfig config_from_json(const nlohmann::json &j);
ExperimentConfig load_config(const std::filesystem::path &path);
nlohmann::json config_to_json(const ExperimentConfig &cfg);

} // namespace ocelad
