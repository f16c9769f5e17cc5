#pragma once

#include "ocelad/comid.hpp"
#include "ocelad/dyadic.hpp"

#include <map>
#include <vector>

namespace ocelad {

struct RiceConfig {
    Eigen::Index dim = 0;
    std::int64_t i0 = 1;
    double eta0 = 0.005;
    int max_level = 14;
    double mu0 = 2.0;
    LossConfig loss;

    void validate() const;

    friend bool operator==(const RiceConfig &, const RiceConfig &) = default;
};

struct IntervalEstimate {
    DyadicInterval interval;
    MetricState state;
};

/// Retro-initialized ensemble of COMID learners on dyadic intervals.
///
/// Each step first retires learners whose interval ended at t - 1, then
/// spawns learners for intervals beginning at t, then applies the COMID
/// update to every active learner. A new level-j learner (j > 0) starts
/// from the final state of the most recently retired level-(j - 1) learner;
/// a new level-0 learner continues from the previous level-0 learner.
class RiceEnsemble {
  public:
    explicit RiceEnsemble(RiceConfig cfg);

    /// Advances the ensemble to step t using constraint c and returns the
    /// post-update estimate of every active learner, sorted by level.
    /// Throws std::invalid_argument if t is not next_step().
    std::vector<IntervalEstimate> step(std::int64_t t, const Constraint &c);

    const RiceConfig &config() const noexcept { return cfg_; }
    std::int64_t next_step() const noexcept { return next_t_; }

    /// eta0 / sqrt(|I|).
    double learning_rate(const DyadicInterval &interval) const;

    const std::map<DyadicInterval, ComidLearner> &learners() const noexcept { return active_; }
    const std::map<int, MetricState> &last_estimates() const noexcept { return last_estimate_; }

    /// Intervals spawned (with their initial state) and retired during the
    /// most recent step.
    const std::vector<IntervalEstimate> &last_spawned() const noexcept { return spawned_; }
    const std::vector<DyadicInterval> &last_retired() const noexcept { return retired_; }

    /// Rebuilds an ensemble from persisted parts; validates consistency with
    /// the dyadic schedule at next_t - 1.
    static RiceEnsemble restore(RiceConfig cfg, std::int64_t next_t,
                                std::map<DyadicInterval, ComidLearner> active,
                                std::map<int, MetricState> last_estimate);

    friend bool operator==(const RiceEnsemble &a, const RiceEnsemble &b) {
        return a.cfg_ == b.cfg_ && a.next_t_ == b.next_t_ && a.active_ == b.active_ &&
               a.last_estimate_ == b.last_estimate_;
    }

  private:
    MetricState initial_state_for(const DyadicInterval &interval) const;

    RiceConfig cfg_;
    std::int64_t next_t_ = 1;
    std::map<DyadicInterval, ComidLearner> active_;
    std::map<int, MetricState> last_estimate_;
    std::vector<IntervalEstimate> spawned_;
    std::vector<DyadicInterval> retired_;
};

} // namespace ocelad
