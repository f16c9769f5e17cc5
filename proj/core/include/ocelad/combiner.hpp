#pragma once

#include "ocelad/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ocelad {

/// Anything that can be scaled and added: the combiner never looks inside.
template <class P>
concept LinearParameter = std::copyable<P> && requires(const P &a, const P &b, double s) {
    { a + b } -> std::convertible_to<P>;
    { s * a } -> std::convertible_to<P>;
};

template <LinearParameter P>
struct LearnerOutput {
    DyadicInterval interval;
    P estimate;
    double loss = 0.0;
};

/// Positive weights over the currently active intervals.
class EnsembleWeights {
  public:
    using Map = std::map<DyadicInterval, double>;

    // Rescaling bounds; the combination and the update are invariant to a
    // common factor on all weights.
    static constexpr double kLowerSum = 1e-30;
    static constexpr double kUpperSum = 1e30;

    EnsembleWeights() = default;
    explicit EnsembleWeights(Map entries) : entries_(std::move(entries)) {
        for (const auto &[iv, w] : entries_)
            if (!(w > 0.0) || !std::isfinite(w))
                throw std::invalid_argument("ensemble weight for " + iv.to_string() +
                                            " must be finite and > 0");
    }

    /// min(1/2, 1/sqrt(|I|)); also the initial weight of a new interval.
    static double rate(const DyadicInterval &interval) {
        return std::min(0.5, 1.0 / std::sqrt(static_cast<double>(interval.length())));
    }

    const Map &entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    bool contains(const DyadicInterval &iv) const { return entries_.contains(iv); }

    double at(const DyadicInterval &iv) const {
        auto it = entries_.find(iv);
        if (it == entries_.end())
            throw std::invalid_argument("no weight for interval " + iv.to_string());
        return it->second;
    }

    double total() const {
        double s = 0.0;
        for (const auto &[iv, w] : entries_)
            s += w;
        return s;
    }

    friend bool operator==(const EnsembleWeights &, const EnsembleWeights &) = default;

  private:
    Map entries_;
};

namespace detail {

template <class P>
void check_coverage(const EnsembleWeights &weights, const std::vector<LearnerOutput<P>> &outputs) {
    if (outputs.empty())
        throw std::invalid_argument("combiner received no learner outputs");
    if (outputs.size() != weights.size())
        throw std::invalid_argument("combiner: " + std::to_string(outputs.size()) +
                                    " outputs but " + std::to_string(weights.size()) +
                                    " weights");
    for (const auto &out : outputs) {
        if (!weights.contains(out.interval))
            throw std::invalid_argument("combiner: no weight for interval " +
                                        out.interval.to_string());
        if (!std::isfinite(out.loss))
            throw std::invalid_argument("combiner: non-finite loss for interval " +
                                        out.interval.to_string());
    }
}

} // namespace detail

/// Convex coefficients w(I) / sum w, in output order.
template <class P>
std::vector<double> mixing_coefficients(const EnsembleWeights &weights,
                                        const std::vector<LearnerOutput<P>> &outputs) {
    detail::check_coverage(weights, outputs);
    double total = 0.0;
    for (const auto &out : outputs)
        total += weights.at(out.interval);
    std::vector<double> coef;
    coef.reserve(outputs.size());
    for (const auto &out : outputs)
        coef.push_back(weights.at(out.interval) / total);
    return coef;
}

/// Weighted ensemble estimate sum w(I) theta(I) / sum w(I).
template <LinearParameter P>
P combine(const EnsembleWeights &weights, const std::vector<LearnerOutput<P>> &outputs) {
    const auto coef = mixing_coefficients(weights, outputs);
    if (outputs.size() == 1)
        return outputs.front().estimate;
    P acc = coef[0] * outputs[0].estimate;
    for (std::size_t i = 1; i < outputs.size(); ++i)
        acc = acc + coef[i] * outputs[i].estimate;
    return acc;
}

/// r(I) = (sum_J wbar(J) loss(J)) - loss(I).
template <class P>
std::map<DyadicInterval, double> estimated_regret(const EnsembleWeights &weights,
                                                  const std::vector<LearnerOutput<P>> &outputs) {
    const auto coef = mixing_coefficients(weights, outputs);
    double average = 0.0;
    for (std::size_t i = 0; i < outputs.size(); ++i)
        average += coef[i] * outputs[i].loss;
    std::map<DyadicInterval, double> regret;
    for (const auto &out : outputs)
        regret.emplace(out.interval, average - out.loss);
    return regret;
}

/// w(I) <- w(I) (1 + rate(I) r(I) / max_J |r(J)|). With max |r| = 0 the
/// weights are returned unchanged.
inline EnsembleWeights update_weights(const EnsembleWeights &weights,
                                      const std::map<DyadicInterval, double> &regrets) {
    if (regrets.size() != weights.size())
        throw std::invalid_argument("update_weights: regret set does not match weights");
    double max_abs = 0.0;
    for (const auto &[iv, r] : regrets) {
        if (!std::isfinite(r))
            throw std::invalid_argument("update_weights: non-finite regret for " + iv.to_string());
        if (!weights.contains(iv))
            throw std::invalid_argument("update_weights: no weight for " + iv.to_string());
        max_abs = std::max(max_abs, std::abs(r));
    }
    if (max_abs == 0.0)
        return weights;

    EnsembleWeights::Map next;
    double total = 0.0;
    for (const auto &[iv, r] : regrets) {
        // Floor at the smallest normal double so a long losing streak cannot
        // underflow a weight to zero.
        const double w = std::max(weights.at(iv) * (1.0 + EnsembleWeights::rate(iv) * (r / max_abs)),
                                  std::numeric_limits<double>::min());
        next.emplace(iv, w);
        total += w;
    }
    if (total < EnsembleWeights::kLowerSum || total > EnsembleWeights::kUpperSum)
        for (auto &[iv, w] : next)
            w /= total;
    return EnsembleWeights(std::move(next));
}

/// Keeps weights of still-active intervals and seeds new ones at rate(I).
inline EnsembleWeights sync_active(const EnsembleWeights &weights,
                                   const std::vector<DyadicInterval> &active) {
    EnsembleWeights::Map next;
    for (const auto &iv : active) {
        auto it = weights.entries().find(iv);
        next.emplace(iv, it != weights.entries().end() ? it->second : EnsembleWeights::rate(iv));
    }
    return EnsembleWeights(std::move(next));
}

template <LinearParameter P>
struct OceladStepResult {
    P estimate;
    EnsembleWeights next_weights;
};

/// One round of the combiner: estimate from the current weights, then the
/// regret-driven update, then the lifecycle sync for the next active set.
template <LinearParameter P>
OceladStepResult<P> ocelad_step(const EnsembleWeights &weights,
                                const std::vector<LearnerOutput<P>> &outputs,
                                const std::vector<DyadicInterval> &active_next) {
    P estimate = combine(weights, outputs);
    auto updated = update_weights(weights, estimated_regret(weights, outputs));
    return {std::move(estimate), sync_active(updated, active_next)};
}

} // namespace ocelad
