#include "ocelad/config.hpp"
#include "ocelad/drift.hpp"
#include "ocelad/experiment.hpp"
#include "ocelad/io.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ocelad;

namespace {

std::vector<Constraint> scenario_stream(int T) {
    DatasetConfig d;
    d.n_pts = 60;
    d.n = 5;
    d.k_sub = 2;
    d.proportions_a = d.proportions_b = {0.5, 0.5};
    DriftScenario sc;
    sc.segments = {{T, Partition::A, 0.05}};
    sc.seed = 4;
    ScenarioStream s(generate_dataset(d, 3), sc);
    std::vector<Constraint> out;
    while (!s.done())
        out.push_back(s.next().constraint);
    return out;
}

std::filesystem::path temp_dir(const std::string &name) {
    auto p = std::filesystem::temp_directory_path() / ("ocelad_io_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace

TEST(FormatDouble, RoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 123456789.123456789, 0.0}) {
        const auto s = format_double(v);
        EXPECT_EQ(std::stod(s), v) << s;
    }
}

TEST(ConstraintCsv, RoundTrip) {
    const auto stream = scenario_stream(50);
    std::stringstream buf;
    write_constraints_csv(buf, stream);
    EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')), "t,y,x_0,x_1,x_2,x_3,x_4,z_0,z_1,z_2,z_3,z_4");
    EXPECT_EQ(read_constraints_csv(buf), stream);

    const auto dir = temp_dir("roundtrip");
    write_constraints_csv(dir / "c.csv", stream);
    EXPECT_EQ(ingest_constraints(dir / "c.csv"), stream);
}

TEST(ConstraintCsv, EmptyFileIsEmptyStream) {
    const auto dir = temp_dir("empty");
    std::ofstream(dir / "e.csv").close();
    EXPECT_TRUE(ingest_constraints(dir / "e.csv").empty());
}

TEST(ConstraintCsv, WrongDimensionRowNamesLine) {
    std::stringstream buf("t,y,x_0,x_1,z_0,z_1\n1,1,0,0,1,1\n2,-1,0,0,1\n");
    try {
        read_constraints_csv(buf, "input.csv");
        FAIL() << "expected FormatError";
    } catch (const FormatError &e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("input.csv:3"), std::string::npos);
    }
}

TEST(ConstraintCsv, RejectsBadFields) {
    for (const char *text : {"t,y,x_0,z_0\n1,0,1,2\n", "t,y,x_0,z_0\n0,1,1,2\n",
                             "t,y,x_0,z_0\n1,1,abc,2\n", "t,y,x_0,z_0\n1,1,nan,2\n",
                             "a,y,x_0,z_0\n", "t,y,x_0,x_1\n"}) {
        std::stringstream buf(text);
        EXPECT_THROW(read_constraints_csv(buf), FormatError) << text;
    }
    EXPECT_THROW(ingest_constraints("/nonexistent/ocelad.csv"), FormatError);
}

TEST(StepCsv, HeaderAndWeights) {
    StepRecord r;
    r.trial = 2;
    r.t = 7;
    r.combined_loss = 0.5;
    r.knn_error = 0.25;
    r.nmi = 0.75;
    r.intervals = {{0, 0.5, 0.1}, {1, 0.25, 0.2}};
    std::stringstream buf;
    write_step_csv(buf, {r});
    std::string header, row;
    std::getline(buf, header);
    std::getline(buf, row);
    EXPECT_EQ(header, "trial,t,combined_loss,knn_error,nmi,active_levels,weights_json");
    EXPECT_EQ(row, "2,7,0.5,0.25,0.75,0;1,\"{\"\"0\"\":0.5,\"\"1\"\":0.25}\"");
}

TEST(AggregateCsv, Header) {
    std::stringstream buf;
    write_aggregate_csv(buf, {{10, 0.1, 0.5, 0.3}});
    EXPECT_EQ(buf.str(), "t,mean_knn_error,p_nmi_exceeds,mean_combined_loss\n10,0.10000000000000001,0.5,0.29999999999999999\n");
}

TEST(Checkpoint, CorruptedFileRaisesFormatError) {
    const auto dir = temp_dir("corrupt");
    std::ofstream(dir / "cp.json") << "{\"format\": \"ocelad-checkpoint\", \"version\": 1, ";
    EXPECT_THROW(load_checkpoint(dir / "cp.json"), FormatError);
    EXPECT_THROW(load_checkpoint(dir / "missing.json"), FormatError);
}

TEST(Checkpoint, AtomicSaveLoad) {
    const auto dir = temp_dir("save");
    nlohmann::json j{{"a", 1}, {"b", {1.5, 2.5}}};
    save_checkpoint(dir / "sub" / "cp.json", j);
    EXPECT_EQ(load_checkpoint(dir / "sub" / "cp.json"), j);
    EXPECT_FALSE(std::filesystem::exists(dir / "sub" / "cp.json.tmp"));
}

TEST(Config, DefaultsValidateAndRoundTrip) {
    const auto cfg = default_config();
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.dataset.n_pts, 2000);
    EXPECT_EQ(cfg.dataset.n, 25);
    EXPECT_EQ(cfg.scenario.segments.size(), 5u);
    const auto j = config_to_json(cfg);
    EXPECT_EQ(config_to_json(config_from_json(j)), j);
}

TEST(Config, PartialOverridesKeepDefaults) {
    const auto cfg = config_from_json(nlohmann::json::parse(R"({"seed": 9, "learner": {"eta0": 0.1}})"));
    EXPECT_EQ(cfg.seed, 9u);
    EXPECT_EQ(cfg.learner.eta0, 0.1);
    EXPECT_EQ(cfg.learner.rho, default_config().learner.rho);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"learner": {"eta": 0.1}})")),
                 std::invalid_argument);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"trials": "many"})")),
                 std::invalid_argument);
    auto cfg = default_config();
    cfg.trials = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = default_config();
    cfg.learner.eta0 = -1;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Config, LoadsShippedSmokeConfig) {
    const auto cfg = load_config(std::filesystem::path(OCELAD_SOURCE_DIR) / "configs" / "smoke.json");
    EXPECT_EQ(cfg.trials, 1);
    EXPECT_EQ(cfg.scenario.total_steps(), 16);
    EXPECT_EQ(cfg.dataset.n, 4);
}

TEST(Config, AllShippedConfigsLoad) {
    int loaded = 0;
    for (const auto &entry : std::filesystem::directory_iterator(std::filesystem::path(OCELAD_SOURCE_DIR) / "configs")) {
        if (entry.path().extension() != ".json")
            continue;
        SCOPED_TRACE(entry.path().filename().string());
        EXPECT_NO_THROW(load_config(entry.path()));
        ++loaded;
    }
    EXPECT_GE(loaded, 3);
    const auto full = load_config(std::filesystem::path(OCELAD_SOURCE_DIR) / "configs" / "full_scale.json");
    EXPECT_EQ(full.dataset.n, 25);
    EXPECT_EQ(full.dataset.n_pts, 2000);
    EXPECT_EQ(full.scenario.total_steps(), 8000 + 4 * 3000);
}
