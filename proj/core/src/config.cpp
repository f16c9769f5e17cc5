#include "ocelad/config.hpp"

#include "ocelad/rice.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <stdexcept>

namespace ocelad {

using nlohmann::json;

namespace {

constexpr std::int64_t kDefaultStaticLength = 8000;
constexpr std::int64_t kDefaultSegmentLength = 3000;

// Reads optional fields from one JSON object and rejects keys nobody asked for.
class ObjectReader {
  public:
    ObjectReader(const json &j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object())
            throw std::invalid_argument("config: '" + where_ + "' must be an object");
    }

    template <class T>
    void get(const char *key, T &out) {
        seen_.insert(key);
        if (!j_.contains(key))
            return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception &e) {
            throw std::invalid_argument("config: bad value for '" + path(key) + "': " + e.what());
        }
    }

    const json *child(const char *key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string path(const char *key) const { return where_.empty() ? key : where_ + "." + key; }

    void finish() const {
        for (const auto &[key, value] : j_.items())
            if (!seen_.contains(key))
                throw std::invalid_argument("config: unknown key '" +
                                            (where_.empty() ? key : where_ + "." + key) + "'");
    }

  private:
    const json &j_;
    std::string where_;
    std::set<std::string> seen_;
};

PairingPolicy pairing_from_string(const std::string &s) {
    if (s == "balanced")
        return PairingPolicy::Balanced;
    if (s == "uniform")
        return PairingPolicy::Uniform;
    throw std::invalid_argument("config: unknown pairing policy '" + s + "'");
}

const char *to_string(PairingPolicy p) {
    return p == PairingPolicy::Balanced ? "balanced" : "uniform";
}

DriftScenario read_scenario(const json &j, PairingPolicy &pairing) {
    ObjectReader r(j, "scenario");
    std::string pairing_name = to_string(pairing);
    r.get("pairing", pairing_name);
    pairing = pairing_from_string(pairing_name);

    std::string profile;
    r.get("profile", profile);
    DriftScenario scenario;
    if (const json *segs = r.child("segments")) {
        if (!profile.empty())
            throw std::invalid_argument("config: scenario sets both 'profile' and 'segments'");
        if (!segs->is_array())
            throw std::invalid_argument("config: scenario.segments must be an array");
        for (std::size_t i = 0; i < segs->size(); ++i) {
            ObjectReader s((*segs)[i], "scenario.segments[" + std::to_string(i) + "]");
            DriftSegment seg;
            std::string part = "A";
            s.get("duration", seg.duration);
            s.get("partition", part);
            s.get("drift_rate", seg.drift_rate);
            s.finish();
            seg.partition = partition_from_string(part);
            scenario.segments.push_back(seg);
        }
    } else {
        if (!profile.empty() && profile != "paper")
            throw std::invalid_argument("config: unknown scenario profile '" + profile + "'");
        std::int64_t static_length = kDefaultStaticLength;
        std::int64_t segment_length = kDefaultSegmentLength;
        r.get("static_length", static_length);
        r.get("segment_length", segment_length);
        DriftRates rates;
        if (const json *rj = r.child("rates")) {
            ObjectReader rr(*rj, "scenario.rates");
            rr.get("slow", rates.slow);
            rr.get("moderate", rates.moderate);
            rr.get("fast", rates.fast);
            rr.finish();
        }
        scenario = DriftScenario::paper_profile(static_length, segment_length, rates);
    }
    r.finish();
    return scenario;
}

} // namespace

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.scenario = DriftScenario::paper_profile(kDefaultStaticLength, kDefaultSegmentLength);
    cfg.trials = 50;
    return cfg;
}

void ExperimentConfig::validate() const {
    dataset.validate();
    scenario.validate();
    if (trials < 1)
        throw std::invalid_argument("config: trials must be >= 1");
    RiceConfig{dataset.n, learner.i0, learner.eta0, learner.max_level, learner.mu0,
               {learner.rho, learner.regularizer}}
        .validate();
    if (ablation.enabled && (!(ablation.eta_high > 0.0) || !(ablation.eta_low > 0.0)))
        throw std::invalid_argument("config: ablation rates must be > 0");
    if (eval.k < 1 || eval.k >= dataset.n_pts)
        throw std::invalid_argument("config: eval.k must satisfy 1 <= k < n_pts");
    if (eval.clusters < 0 || eval.clusters > dataset.n_pts)
        throw std::invalid_argument("config: eval.clusters must be in [0, n_pts]");
    if (eval.d_embed < 0 || eval.d_embed > dataset.n)
        throw std::invalid_argument("config: eval.d_embed must be in [0, n]");
    if (!(eval.nmi_threshold >= 0.0 && eval.nmi_threshold <= 1.0))
        throw std::invalid_argument("config: eval.nmi_threshold must be in [0, 1]");
    if (eval.eval_every < 1)
        throw std::invalid_argument("config: eval.eval_every must be >= 1");
    if (eval.kmeans_restarts < 1)
        throw std::invalid_argument("config: eval.kmeans_restarts must be >= 1");
}

ExperimentConfig config_from_json(const json &j) {
    ExperimentConfig cfg = default_config();
    ObjectReader root(j, "");
    root.get("seed", cfg.seed);
    root.get("trials", cfg.trials);

    if (const json *d = root.child("dataset")) {
        ObjectReader r(*d, "dataset");
        r.get("n_pts", cfg.dataset.n_pts);
        r.get("n", cfg.dataset.n);
        r.get("k_sub", cfg.dataset.k_sub);
        r.get("proportions_a", cfg.dataset.proportions_a);
        r.get("proportions_b", cfg.dataset.proportions_b);
        r.get("blob_scale", cfg.dataset.blob_scale);
        r.get("noise_scale", cfg.dataset.noise_scale);
        r.finish();
    }
    if (const json *s = root.child("scenario"))
        cfg.scenario = read_scenario(*s, cfg.pairing);
    if (const json *l = root.child("learner")) {
        ObjectReader r(*l, "learner");
        std::string reg = to_string(cfg.learner.regularizer);
        r.get("eta0", cfg.learner.eta0);
        r.get("i0", cfg.learner.i0);
        r.get("max_level", cfg.learner.max_level);
        r.get("rho", cfg.learner.rho);
        r.get("regularizer", reg);
        r.get("mu0", cfg.learner.mu0);
        r.finish();
        cfg.learner.regularizer = regularizer_from_string(reg);
    }
    if (const json *a = root.child("ablation")) {
        ObjectReader r(*a, "ablation");
        r.get("enabled", cfg.ablation.enabled);
        r.get("eta_high", cfg.ablation.eta_high);
        r.get("eta_low", cfg.ablation.eta_low);
        r.finish();
    }
    if (const json *e = root.child("eval")) {
        ObjectReader r(*e, "eval");
        r.get("k", cfg.eval.k);
        r.get("clusters", cfg.eval.clusters);
        r.get("d_embed", cfg.eval.d_embed);
        r.get("nmi_threshold", cfg.eval.nmi_threshold);
        r.get("eval_every", cfg.eval.eval_every);
        r.get("kmeans_restarts", cfg.eval.kmeans_restarts);
        r.finish();
    }
    if (const json *o = root.child("output")) {
        ObjectReader r(*o, "output");
        std::string dir = cfg.output.out_dir.string();
        r.get("out_dir", dir);
        r.get("write_constraints", cfg.output.write_constraints);
        r.get("write_checkpoints", cfg.output.write_checkpoints);
        r.finish();
        cfg.output.out_dir = dir;
    }
    root.finish();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("config: cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error &e) {
        throw std::invalid_argument("config: " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const ExperimentConfig &cfg) {
    json segments = json::array();
    for (const auto &s : cfg.scenario.segments)
        segments.push_back({{"duration", s.duration},
                            {"partition", to_string(s.partition)},
                            {"drift_rate", s.drift_rate}});
    return {
        {"seed", cfg.seed},
        {"trials", cfg.trials},
        {"dataset",
         {{"n_pts", cfg.dataset.n_pts},
          {"n", cfg.dataset.n},
          {"k_sub", cfg.dataset.k_sub},
          {"proportions_a", cfg.dataset.proportions_a},
          {"proportions_b", cfg.dataset.proportions_b},
          {"blob_scale", cfg.dataset.blob_scale},
          {"noise_scale", cfg.dataset.noise_scale}}},
        {"scenario", {{"pairing", to_string(cfg.pairing)}, {"segments", segments}}},
        {"learner",
         {{"eta0", cfg.learner.eta0},
          {"i0", cfg.learner.i0},
          {"max_level", cfg.learner.max_level},
          {"rho", cfg.learner.rho},
          {"regularizer", to_string(cfg.learner.regularizer)},
          {"mu0", cfg.learner.mu0}}},
        {"ablation",
         {{"enabled", cfg.ablation.enabled},
          {"eta_high", cfg.ablation.eta_high},
          {"eta_low", cfg.ablation.eta_low}}},
        {"eval",
         {{"k", cfg.eval.k},
          {"clusters", cfg.eval.clusters},
          {"d_embed", cfg.eval.d_embed},
          {"nmi_threshold", cfg.eval.nmi_threshold},
          {"eval_every", cfg.eval.eval_every},
          {"kmeans_restarts", cfg.eval.kmeans_restarts}}},
        {"output",
         {{"out_dir", cfg.output.out_dir.string()},
          {"write_constraints", cfg.output.write_constraints},
          {"write_checkpoints", cfg.output.write_checkpoints}}},
    };
}

} // namespace ocelad
