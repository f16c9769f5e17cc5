#include "ocelad/experiment.hpp"

#include "ocelad/error.hpp"
#include "ocelad/io.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <exception>
#include <fstream>
#include <thread>

namespace ocelad {

using nlohmann::json;

namespace {

RiceConfig rice_config_of(const ExperimentConfig &cfg) {
    return {cfg.dataset.n,  cfg.learner.i0,  cfg.learner.eta0,
            cfg.learner.max_level, cfg.learner.mu0, {cfg.learner.rho, cfg.learner.regularizer}};
}

LossConfig loss_config_of(const ExperimentConfig &cfg) {
    return {cfg.learner.rho, cfg.learner.regularizer};
}

DriftScenario scenario_for_trial(const ExperimentConfig &cfg, std::uint64_t seed) {
    DriftScenario s = cfg.scenario;
    s.seed = Rng::derive(seed, 2);
    return s;
}

json matrix_to_json(const Matrix &M) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c)
            row.push_back(M(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json &j, Eigen::Index rows, Eigen::Index cols, const char *what) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw std::invalid_argument(std::string("checkpoint: ") + what + " has wrong row count");
    Matrix M(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json &row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw std::invalid_argument(std::string("checkpoint: ") + what + " has wrong column count");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const json &v = row[static_cast<std::size_t>(c)];
            if (!v.is_number())
                throw std::invalid_argument(std::string("checkpoint: ") + what + " has a non-numeric entry");
            M(r, c) = v.get<double>();
        }
    }
    return M;
}

json state_to_json(const MetricState &s) { return {{"M", matrix_to_json(s.M)}, {"mu", s.mu}}; }

MetricState state_from_json(const json &j, Eigen::Index n, const char *what) {
    MetricState s{matrix_from_json(j.at("M"), n, n, what), j.at("mu").get<double>()};
    s.validate();
    return s;
}

json interval_to_json(const DyadicInterval &iv) {
    return {{"level", iv.level}, {"start", iv.start}, {"end", iv.end}};
}

DyadicInterval interval_from_json(const json &j) {
    return {j.at("level").get<int>(), j.at("start").get<std::int64_t>(), j.at("end").get<std::int64_t>()};
}

constexpr int kCheckpointVersion = 1;
constexpr const char *kCheckpointFormat = "ocelad-checkpoint";

} // namespace

std::uint64_t trial_seed(std::uint64_t master, int trial_index) {
    return Rng::derive(master, static_cast<std::uint64_t>(trial_index));
}

Trial::Trial(const ExperimentConfig &cfg, int trial_index)
    : cfg_(cfg), trial_index_(trial_index), trial_seed_(trial_seed(cfg.seed, trial_index)),
      stream_(generate_dataset(cfg.dataset, Rng::derive(trial_seed_, 1)),
              scenario_for_trial(cfg, trial_seed_), cfg.pairing),
      ensemble_(rice_config_of(cfg)),
      weights_(sync_active({}, active_intervals(1, cfg.learner.i0, cfg.learner.max_level))),
      combined_(MetricState::identity(cfg.dataset.n, cfg.learner.mu0)) {
    cfg_.validate();
    result_.trial = trial_index;
    result_.arms[kArmRiceOcelad].final_estimate = combined_;
    if (cfg_.ablation.enabled) {
        const auto init = MetricState::identity(cfg.dataset.n, cfg.learner.mu0);
        baselines_.emplace(kArmComidHigh, ComidLearner(init, cfg_.ablation.eta_high, loss_config_of(cfg_)));
        baselines_.emplace(kArmComidLow, ComidLearner(init, cfg_.ablation.eta_low, loss_config_of(cfg_)));
        for (const auto &[name, learner] : baselines_)
            result_.arms[name].final_estimate = learner.state();
    }
}

void Trial::evaluate(StepRecord &rec, const MetricState &estimate, Partition partition) {
    const auto &labels = stream_.dataset().labels(partition);
    const Matrix embedded = embedding_from_metric(estimate.M, estimate.dim()).apply(stream_.points());
    rec.knn_error = knn_error(embedded, labels, cfg_.eval.k);
    const Eigen::Index d = cfg_.eval.d_embed > 0 ? cfg_.eval.d_embed : estimate.dim();
    const int K = cfg_.eval.clusters > 0 ? cfg_.eval.clusters
                                         : stream_.dataset().cluster_count(partition);
    const auto clustering = kmeans(embedded.leftCols(d), K,
                                   Rng::derive(trial_seed_, 1000 + static_cast<std::uint64_t>(rec.t)),
                                   {cfg_.eval.kmeans_restarts, 100});
    rec.nmi = nmi(clustering.labels, labels);
}

void Trial::step(const Constraint *override_constraint) {
    const std::int64_t t = stream_.next_step();
    const ScenarioTick tick = stream_.next();
    const Constraint &c = override_constraint ? *override_constraint : tick.constraint;
    if (override_constraint) {
        if (c.t != t)
            throw std::invalid_argument("replayed constraint has t=" + std::to_string(c.t) +
                                        ", expected " + std::to_string(t));
        c.validate();
    }
    if (cfg_.output.write_constraints)
        result_.constraints.push_back(c);
    result_.metric_change.push_back(tick.metric_change);

    const MetricState truth = stream_.ground_truth(tick.partition);
    const double comparator_loss = hinge_loss(truth, c);
    const double comparator_step = last_truth_ ? parameter_distance(truth, *last_truth_) : 0.0;
    last_truth_ = truth;

    const bool evaluate_now = t % cfg_.eval.eval_every == 0 || t == stream_.total_steps();
    result_.arms[kArmRiceOcelad].predictive_losses.push_back(hinge_loss(combined_, c));

    // RICE update, then combination with the weights in force at t.
    const auto estimates = ensemble_.step(t, c);
    std::vector<LearnerOutput<MetricState>> outputs;
    outputs.reserve(estimates.size());
    for (const auto &e : estimates)
        outputs.push_back({e.interval, e.state, hinge_loss(e.state, c)});
    const EnsembleWeights weights_at_t = weights_;
    auto combined = ocelad_step(weights_, outputs,
                                active_intervals(t + 1, cfg_.learner.i0, cfg_.learner.max_level));
    combined_ = std::move(combined.estimate);
    weights_ = std::move(combined.next_weights);
    if (!combined_.M.allFinite() || !std::isfinite(combined_.mu))
        throw NumericalError("ocelad", t, "combined estimate is not finite");

    auto &rice = result_.arms[kArmRiceOcelad];
    const double rice_loss = hinge_loss(combined_, c);
    rice.combined_losses.push_back(rice_loss);
    rice.final_estimate = combined_;
    if (evaluate_now) {
        StepRecord rec;
        rec.trial = trial_index_;
        rec.t = t;
        rec.combined_loss = rice_loss;
        for (const auto &out : outputs)
            rec.intervals.push_back({out.interval.level, weights_at_t.at(out.interval), out.loss});
        rec.comparator_loss = comparator_loss;
        rec.comparator_step = comparator_step;
        evaluate(rec, combined_, tick.partition);
        rice.records.push_back(std::move(rec));
    }

    for (auto &[name, learner] : baselines_) {
        auto &trace = result_.arms[name];
        trace.predictive_losses.push_back(hinge_loss(learner.state(), c));
        learner = learner.step(c);
        const double loss = hinge_loss(learner.state(), c);
        trace.combined_losses.push_back(loss);
        trace.final_estimate = learner.state();
        if (evaluate_now) {
            StepRecord rec;
            rec.trial = trial_index_;
            rec.t = t;
            rec.combined_loss = loss;
            rec.intervals.push_back({0, 1.0, loss});
            rec.comparator_loss = comparator_loss;
            rec.comparator_step = comparator_step;
            evaluate(rec, learner.state(), tick.partition);
            trace.records.push_back(std::move(rec));
        }
    }
}

void Trial::run_to_end(const std::vector<Constraint> *replay) {
    if (replay) {
        if (static_cast<std::int64_t>(replay->size()) > stream_.total_steps() - stream_.next_step() + 1)
            throw std::invalid_argument("replay stream has more constraints than the scenario has steps");
        for (const auto &c : *replay)
            step(&c);
        return;
    }
    while (!done())
        step();
}

json Trial::checkpoint() const {
    json learners = json::array();
    for (const auto &[iv, learner] : ensemble_.learners()) {
        json l = interval_to_json(iv);
        l["eta"] = learner.eta();
        l["state"] = state_to_json(learner.state());
        learners.push_back(std::move(l));
    }
    json last = json::array();
    for (const auto &[level, state] : ensemble_.last_estimates())
        last.push_back({{"level", level}, {"state", state_to_json(state)}});
    json weights = json::array();
    for (const auto &[iv, w] : weights_.entries()) {
        json e = interval_to_json(iv);
        e["w"] = w;
        weights.push_back(std::move(e));
    }
    json baselines = json::object();
    for (const auto &[name, learner] : baselines_)
        baselines[name] = {{"eta", learner.eta()}, {"state", state_to_json(learner.state())}};
    const auto stream = stream_.save();
    return {
        {"format", kCheckpointFormat},
        {"version", kCheckpointVersion},
        {"trial", trial_index_},
        {"dim", cfg_.dataset.n},
        {"n_pts", cfg_.dataset.n_pts},
        {"next_step", stream_.next_step()},
        {"ensemble", {{"next_t", ensemble_.next_step()}, {"learners", learners}, {"last_estimates", last}}},
        {"weights", weights},
        {"combined", state_to_json(combined_)},
        {"baselines", baselines},
        {"last_truth", last_truth_ ? state_to_json(*last_truth_) : json(nullptr)},
        {"stream",
         {{"t", stream.t},
          {"points", matrix_to_json(stream.points)},
          {"rotation", matrix_to_json(stream.rotation)},
          {"rng", stream.rng_state}}},
    };
}

Trial Trial::restore(const ExperimentConfig &cfg, int trial_index, const json &j) {
    Trial trial(cfg, trial_index);
    try {
        if (!j.is_object() || j.value("format", "") != kCheckpointFormat)
            throw std::invalid_argument("checkpoint: not an ocelad checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion)
            throw std::invalid_argument("checkpoint: unsupported version " +
                                        std::to_string(j.at("version").get<int>()));
        const auto n = cfg.dataset.n;
        if (j.at("dim").get<Eigen::Index>() != n || j.at("n_pts").get<std::int64_t>() != cfg.dataset.n_pts)
            throw std::invalid_argument("checkpoint: shape does not match config");
        if (j.at("trial").get<int>() != trial_index)
            throw std::invalid_argument("checkpoint: belongs to a different trial");

        const json &ens = j.at("ensemble");
        std::map<DyadicInterval, ComidLearner> learners;
        for (const auto &l : ens.at("learners"))
            learners.emplace(interval_from_json(l),
                             ComidLearner(state_from_json(l.at("state"), n, "learner"),
                                          l.at("eta").get<double>(), loss_config_of(cfg)));
        std::map<int, MetricState> last;
        for (const auto &e : ens.at("last_estimates"))
            last.emplace(e.at("level").get<int>(), state_from_json(e.at("state"), n, "last estimate"));
        RiceEnsemble ensemble = RiceEnsemble::restore(rice_config_of(cfg), ens.at("next_t").get<std::int64_t>(),
                                                      std::move(learners), std::move(last));

        EnsembleWeights::Map wmap;
        for (const auto &e : j.at("weights"))
            wmap.emplace(interval_from_json(e), e.at("w").get<double>());
        EnsembleWeights weights(std::move(wmap));
        const auto expected = active_intervals(ensemble.next_step(), cfg.learner.i0, cfg.learner.max_level);
        if (weights.size() != expected.size())
            throw std::invalid_argument("checkpoint: weights do not cover the next active set");
        for (const auto &iv : expected)
            if (!weights.contains(iv))
                throw std::invalid_argument("checkpoint: missing weight for " + iv.to_string());

        MetricState combined = state_from_json(j.at("combined"), n, "combined");

        std::map<std::string, ComidLearner> baselines;
        for (const auto &[name, b] : j.at("baselines").items())
            baselines.emplace(name, ComidLearner(state_from_json(b.at("state"), n, "baseline"),
                                                 b.at("eta").get<double>(), loss_config_of(cfg)));
        if (baselines.size() != trial.baselines_.size())
            throw std::invalid_argument("checkpoint: baseline arms do not match config");
        for (const auto &[name, b] : trial.baselines_)
            if (!baselines.contains(name) || baselines.at(name).eta() != b.eta())
                throw std::invalid_argument("checkpoint: baseline '" + name + "' does not match config");

        std::optional<MetricState> last_truth;
        if (!j.at("last_truth").is_null())
            last_truth = state_from_json(j.at("last_truth"), n, "ground truth");

        const json &s = j.at("stream");
        ScenarioStream::State stream{s.at("t").get<std::int64_t>(),
                                     matrix_from_json(s.at("points"), cfg.dataset.n_pts, n, "points"),
                                     matrix_from_json(s.at("rotation"), n, n, "rotation"),
                                     s.at("rng").get<std::string>()};
        if (stream.t != ensemble.next_step() || j.at("next_step").get<std::int64_t>() != stream.t)
            throw std::invalid_argument("checkpoint: stream and ensemble steps disagree");
        ScenarioStream restored_stream = trial.stream_;
        restored_stream.restore(stream);

        trial.stream_ = std::move(restored_stream);
        trial.ensemble_ = std::move(ensemble);
        trial.weights_ = std::move(weights);
        trial.combined_ = std::move(combined);
        trial.baselines_ = std::move(baselines);
        trial.last_truth_ = std::move(last_truth);
    } catch (const json::exception &e) {
        throw std::invalid_argument(std::string("checkpoint: malformed content: ") + e.what());
    }
    return trial;
}

bool operator==(const Trial &a, const Trial &b) {
    const auto sa = a.stream_.save();
    const auto sb = b.stream_.save();
    return a.trial_index_ == b.trial_index_ && a.ensemble_ == b.ensemble_ && a.weights_ == b.weights_ &&
           a.combined_ == b.combined_ && a.baselines_ == b.baselines_ && a.last_truth_ == b.last_truth_ &&
           sa.t == sb.t && sa.points == sb.points && sa.rotation == sb.rotation &&
           sa.rng_state == sb.rng_state;
}

namespace {

TrialResult run_one(const ExperimentConfig &cfg, int index, const std::vector<Constraint> *replay) {
    Trial trial(cfg, index);
    trial.run_to_end(replay);
    if (cfg.output.write_checkpoints)
        save_checkpoint(cfg.output.out_dir / ("checkpoint_trial_" + std::to_string(index) + ".json"),
                        trial.checkpoint());
    return trial.take_result();
}

std::vector<TrialResult> run_trials_impl(const ExperimentConfig &cfg, unsigned workers) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(cfg.trials);
    std::vector<TrialResult> results(n);
    std::vector<std::exception_ptr> errors(n);
    if (workers == 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                results[i] = run_one(cfg, static_cast<int>(i), nullptr);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work);
    }
    for (const auto &e : errors)
        if (e)
            std::rethrow_exception(e);
    return results;
}

std::ofstream open_out(const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    return out;
}

ExperimentSummary write_artifacts(const ExperimentConfig &cfg, const std::vector<TrialResult> &results) {
    ExperimentSummary summary;
    const auto &dir = cfg.output.out_dir;
    std::filesystem::create_directories(dir);

    std::vector<std::string> arms{kArmRiceOcelad};
    if (cfg.ablation.enabled) {
        arms.emplace_back(kArmComidHigh);
        arms.emplace_back(kArmComidLow);
    }
    for (const auto &arm : arms) {
        std::vector<StepRecord> merged;
        for (const auto &r : results) {
            const auto &recs = r.arms.at(arm).records;
            merged.insert(merged.end(), recs.begin(), recs.end());
        }
        const auto steps_path = dir / ("steps_" + arm + ".csv");
        auto steps = open_out(steps_path);
        write_step_csv(steps, merged);
        summary.files.push_back(steps_path);

        auto rows = aggregate(results, arm, cfg.eval.nmi_threshold);
        const auto agg_path = dir / ("aggregate_" + arm + ".csv");
        auto agg = open_out(agg_path);
        write_aggregate_csv(agg, rows);
        summary.files.push_back(agg_path);
        summary.aggregates.emplace(arm, std::move(rows));
    }

    // Ground-truth drift profile, averaged over trials.
    const auto profile_path = dir / "drift_profile.csv";
    auto profile = open_out(profile_path);
    profile << "t,segment_drift_rate,metric_change\n";
    std::int64_t t = 1;
    for (const auto &seg : cfg.scenario.segments)
        for (std::int64_t k = 0; k < seg.duration; ++k, ++t) {
            double change = 0.0;
            std::size_t count = 0;
            for (const auto &r : results)
                if (static_cast<std::size_t>(t - 1) < r.metric_change.size()) {
                    change += r.metric_change[static_cast<std::size_t>(t - 1)];
                    ++count;
                }
            if (count == 0)
                break;
            profile << t << ',' << format_double(seg.drift_rate) << ','
                    << format_double(change / static_cast<double>(count)) << '\n';
        }
    summary.files.push_back(profile_path);

    if (cfg.output.write_constraints)
        for (const auto &r : results) {
            const auto path = dir / ("constraints_trial_" + std::to_string(r.trial) + ".csv");
            write_constraints_csv(path, r.constraints);
            summary.files.push_back(path);
        }
    return summary;
}

} // namespace

std::vector<TrialResult> run_trials(const ExperimentConfig &cfg, unsigned workers) {
    ExperimentConfig no_files = cfg;
    no_files.output.write_checkpoints = false;
    return run_trials_impl(no_files, workers);
}

std::vector<AggregateRow> aggregate(const std::vector<TrialResult> &results, const std::string &arm,
                                    double nmi_threshold) {
    std::map<std::int64_t, std::vector<const StepRecord *>> by_step;
    for (const auto &r : results) {
        auto it = r.arms.find(arm);
        if (it == r.arms.end())
            continue;
        for (const auto &rec : it->second.records)
            by_step[rec.t].push_back(&rec);
    }
    std::vector<AggregateRow> rows;
    for (const auto &[t, recs] : by_step) {
        AggregateRow row{t};
        std::vector<double> nmis;
        for (const auto *rec : recs) {
            row.mean_knn_error += rec->knn_error;
            row.mean_combined_loss += rec->combined_loss;
            nmis.push_back(rec->nmi);
        }
        row.mean_knn_error /= static_cast<double>(recs.size());
        row.mean_combined_loss /= static_cast<double>(recs.size());
        row.p_nmi_exceeds = exceedance_probability(nmis, nmi_threshold);
        rows.push_back(row);
    }
    return rows;
}

ExperimentSummary run_experiment(const ExperimentConfig &cfg, unsigned workers) {
    cfg.validate();
    std::filesystem::create_directories(cfg.output.out_dir);
    return write_artifacts(cfg, run_trials_impl(cfg, workers));
}

ExperimentSummary replay_experiment(const ExperimentConfig &cfg,
                                    const std::vector<Constraint> &constraints, int trial_index) {
    cfg.validate();
    if (trial_index < 0 || trial_index >= cfg.trials)
        throw std::invalid_argument("replay: trial index out of range");
    std::filesystem::create_directories(cfg.output.out_dir);
    std::vector<TrialResult> results;
    results.push_back(run_one(cfg, trial_index, &constraints));
    return write_artifacts(cfg, results);
}

} // namespace ocelad
