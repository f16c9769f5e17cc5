#include "ocelad/rice.hpp"

#include <cmath>
#include <stdexcept>

namespace ocelad {

std::string DyadicInterval::to_string() const {
    return "L" + std::to_string(level) + "[" + std::to_string(start) + "," +
           std::to_string(end) + "]";
}

std::vector<DyadicInterval> active_intervals(std::int64_t t, std::int64_t i0, int max_level) {
    if (t < 1)
        throw std::invalid_argument("active_intervals: t must be >= 1");
    if (i0 < 1)
        throw std::invalid_argument("active_intervals: i0 must be >= 1");
    std::vector<DyadicInterval> out;
    const std::int64_t block = (t - 1) / i0 + 1;
    for (int j = 0; j <= max_level && j < 62; ++j) {
        const std::int64_t span = std::int64_t{1} << j;
        if (span > block)
            break;
        const std::int64_t k = block / span;
        const std::int64_t first_block = k * span;
        const std::int64_t last_block = (k + 1) * span - 1;
        out.push_back({j, (first_block - 1) * i0 + 1, last_block * i0});
    }
    return out;
}

void RiceConfig::validate() const {
    if (dim < 1)
        throw std::invalid_argument("ensemble dimension must be >= 1");
    if (i0 < 1)
        throw std::invalid_argument("base interval length i0 must be >= 1");
    if (!(eta0 > 0.0) || !std::isfinite(eta0))
        throw std::invalid_argument("base learning rate eta0 must be finite and > 0");
    if (max_level < 0)
        throw std::invalid_argument("max_level must be >= 0");
    if (!(mu0 >= 1.0) || !std::isfinite(mu0))
        throw std::invalid_argument("initial threshold mu0 must be >= 1");
    loss.validate();
}

RiceEnsemble::RiceEnsemble(RiceConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

double RiceEnsemble::learning_rate(const DyadicInterval &interval) const {
    return cfg_.eta0 / std::sqrt(static_cast<double>(interval.length()));
}

MetricState RiceEnsemble::initial_state_for(const DyadicInterval &interval) const {
    const int parent = interval.level > 0 ? interval.level - 1 : 0;
    if (auto it = last_estimate_.find(parent); it != last_estimate_.end())
        return it->second;
    if (interval.level > 0) {
        for (const auto &[iv, learner] : active_)
            if (iv.level == parent)
                return learner.state();
    }
    return MetricState::identity(cfg_.dim, cfg_.mu0);
}

std::vector<IntervalEstimate> RiceEnsemble::step(std::int64_t t, const Constraint &c) {
    if (t != next_t_)
        throw std::invalid_argument("ensemble expected step " + std::to_string(next_t_) +
                                    ", got " + std::to_string(t));
    if (c.dim() != cfg_.dim)
        throw std::invalid_argument("constraint dimension " + std::to_string(c.dim()) +
                                    " does not match ensemble dimension " +
                                    std::to_string(cfg_.dim));
    spawned_.clear();
    retired_.clear();

    for (auto it = active_.begin(); it != active_.end();) {
        if (it->first.end < t) {
            last_estimate_.insert_or_assign(it->first.level, it->second.state());
            retired_.push_back(it->first);
            it = active_.erase(it);
        } else {
            ++it;
        }
    }

    // Levels ascend, so a level-j spawn sees any level-(j - 1) spawn of this step.
    for (const auto &interval : active_intervals(t, cfg_.i0, cfg_.max_level)) {
        if (active_.contains(interval))
            continue;
        MetricState init = initial_state_for(interval);
        spawned_.push_back({interval, init});
        active_.emplace(interval, ComidLearner(std::move(init), learning_rate(interval), cfg_.loss));
    }

    // Learners are independent here; the map is updated in level order.
    std::vector<IntervalEstimate> estimates;
    estimates.reserve(active_.size());
    for (auto &[interval, learner] : active_) {
        learner = learner.step(c);
        estimates.push_back({interval, learner.state()});
    }
    ++next_t_;
    return estimates;
}

RiceEnsemble RiceEnsemble::restore(RiceConfig cfg, std::int64_t next_t,
                                   std::map<DyadicInterval, ComidLearner> active,
                                   std::map<int, MetricState> last_estimate) {
    RiceEnsemble ens(std::move(cfg));
    if (next_t < 1)
        throw std::invalid_argument("restored ensemble has invalid next step");
    if (next_t > 1) {
        const auto expected = active_intervals(next_t - 1, ens.cfg_.i0, ens.cfg_.max_level);
        if (expected.size() != active.size())
            throw std::invalid_argument("restored learner set does not match the dyadic schedule");
        for (const auto &iv : expected)
            if (!active.contains(iv))
                throw std::invalid_argument("restored learner set is missing " + iv.to_string());
    } else if (!active.empty()) {
        throw std::invalid_argument("fresh ensemble cannot carry active learners");
    }
    for (const auto &[iv, learner] : active) {
        if (learner.state().dim() != ens.cfg_.dim)
            throw std::invalid_argument("restored learner has wrong dimension");
        if (learner.eta() != ens.learning_rate(iv))
            throw std::invalid_argument("restored learner rate does not match its interval");
    }
    for (const auto &[level, state] : last_estimate) {
        if (state.dim() != ens.cfg_.dim)
            throw std::invalid_argument("restored estimate has wrong dimension");
        state.validate();
    }
    ens.next_t_ = next_t;
    ens.active_ = std::move(active);
    ens.last_estimate_ = std::move(last_estimate);
    return ens;
}

} // namespace ocelad
