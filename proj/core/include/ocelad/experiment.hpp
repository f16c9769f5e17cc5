#pragma once

#include "ocelad/combiner.hpp"
#include "ocelad/config.hpp"
#include "ocelad/eval.hpp"
#include "ocelad/rice.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ocelad {

inline constexpr const char *kArmRiceOcelad = "rice_ocelad";
inline constexpr const char *kArmComidHigh = "comid_high";
inline constexpr const char *kArmComidLow = "comid_low";

struct IntervalRecord {
    int level = 0;
    double weight = 0.0;
    double loss = 0.0;

    friend bool operator==(const IntervalRecord &, const IntervalRecord &) = default;
};

/// One evaluated step of one arm.
struct StepRecord {
    int trial = 0;
    std::int64_t t = 0;
    double combined_loss = 0.0;
    double knn_error = 0.0;
    double nmi = 0.0;
    std::vector<IntervalRecord> intervals; // by level ascending
    double comparator_loss = 0.0;          // ground-truth metric on the same constraint
    double comparator_step = 0.0;          // ||theta*_t - theta*_{t-1}||

    friend bool operator==(const StepRecord &, const StepRecord &) = default;
};

struct ArmTrace {
    std::vector<StepRecord> records;     // evaluated steps only
    std::vector<double> combined_losses;   // every step, estimate after the update
    std::vector<double> predictive_losses; // every step, estimate held before the constraint
    MetricState final_estimate;
};

struct TrialResult {
    int trial = 0;
    std::map<std::string, ArmTrace> arms;
    std::vector<double> metric_change; // ground-truth change per step
    std::vector<Constraint> constraints;
};

/// One replicate of an experiment: the scenario stream plus the RICE-OCELAD
/// learner and the optional fixed-rate COMID arms, advanced in lockstep.
///
/// Per step: obtain the constraint, run the ensemble update (retire, spawn,
/// COMID on every active learner), combine the post-update estimates with the
/// current weights, then update the weights from the same losses.
class Trial {
  public:
    Trial(const ExperimentConfig &cfg, int trial_index);

    bool done() const { return stream_.done(); }
    std::int64_t next_step() const { return stream_.next_step(); }
    std::int64_t total_steps() const { return stream_.total_steps(); }

    /// Advances one step. With an override the constraint is taken from it
    /// (replay); the scenario still advances so the data drift is unchanged.
    void step(const Constraint *override_constraint = nullptr);

    void run_to_end(const std::vector<Constraint> *replay = nullptr);

    const TrialResult &result() const noexcept { return result_; }
    TrialResult take_result() { return std::move(result_); }

    const RiceEnsemble &ensemble() const noexcept { return ensemble_; }
    const EnsembleWeights &weights() const noexcept { return weights_; }
    const MetricState &combined_estimate() const noexcept { return combined_; }
    const ScenarioStream &stream() const noexcept { return stream_; }
    const std::map<std::string, ComidLearner> &baselines() const noexcept { return baselines_; }

    /// Versioned checkpoint of all mutable state (learners, weights, stream,
    /// random state). Records already emitted are not included.
    nlohmann::json checkpoint() const;

    /// Rebuilds the trial from config and overwrites its state with the
    /// checkpoint. Throws std::invalid_argument on version, shape or content
    /// mismatch; nothing is modified unless the whole checkpoint is valid.
    static Trial restore(const ExperimentConfig &cfg, int trial_index, const nlohmann::json &j);

    friend bool operator==(const Trial &a, const Trial &b);

  private:
    void evaluate(StepRecord &rec, const MetricState &estimate, Partition partition);

    ExperimentConfig cfg_;
    int trial_index_;
    std::uint64_t trial_seed_;
    ScenarioStream stream_;
    RiceEnsemble ensemble_;
    EnsembleWeights weights_;
    MetricState combined_;
    std::map<std::string, ComidLearner> baselines_;
    std::optional<MetricState> last_truth_;
    TrialResult result_;
};

/// Seed of trial i derived from the master seed.
std::uint64_t trial_seed(std::uint64_t master, int trial_index);

/// Runs all trials (in parallel when hardware allows) and returns results in
/// trial order.
std::vector<TrialResult> run_trials(const ExperimentConfig &cfg, unsigned workers = 0);

struct AggregateRow {
    std::int64_t t = 0;
    double mean_knn_error = 0.0;
    double p_nmi_exceeds = 0.0;
    double mean_combined_loss = 0.0;
};

/// Trial means at every evaluated step of one arm.
std::vector<AggregateRow> aggregate(const std::vector<TrialResult> &results, const std::string &arm,
                                    double nmi_threshold);

struct ExperimentSummary {
    std::vector<std::filesystem::path> files;
    std::map<std::string, std::vector<AggregateRow>> aggregates;
};

/// Full experiment: trials, CSV artifacts and final checkpoints under
/// cfg.output.out_dir.
ExperimentSummary run_experiment(const ExperimentConfig &cfg, unsigned workers = 0);

/// Replays trial trial_index of cfg with a recorded constraint stream and
/// writes the same artifacts as run_experiment for that trial.
ExperimentSummary replay_experiment(const ExperimentConfig &cfg,
                                    const std::vector<Constraint> &constraints, int trial_index);

} // namespace ocelad
