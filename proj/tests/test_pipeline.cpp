#include "scopefe/pipeline.hpp"
#include "scopefe/csv.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace scopefe;

namespace {

PipelineConfig all_off() {
    PipelineConfig cfg;
    cfg.clustering = ClusteringMode::Off;
    cfg.probing = false;
    cfg.reliability = false;
    return cfg;
}

PipelineConfig quick(ClusteringMode mode, int tau) {
    PipelineConfig cfg;
    cfg.clustering = mode;
    cfg.tau = tau;
    cfg.workers = 2;
    return cfg;
}

}  // namespace

TEST_CASE("predicted_reduction") {
    CHECK(predicted_reduction(64, 20, 16, 5) == 0.0625);
    CHECK(predicted_reduction(64, 20, 64, 20) == 1.0);
    CHECK(predicted_reduction(64, 20, 8, 5) == predicted_reduction(64, 20, 16, 5) / 2);
    CHECK(predicted_reduction(64, 20, 16, 10) == predicted_reduction(64, 20, 16, 5) * 2);
    CHECK_THROWS_AS(predicted_reduction(0, 20, 16, 5), Error);
    CHECK_THROWS_AS(predicted_reduction(8, 20, 16, 5), Error);
}

TEST_CASE("variability_summary") {
    std::vector<ScoreRecord> recs{make_record(0, "a", {0.1, 0.2, 0.3}, 0), make_record(1, "b", {0.4, 0.4}, 0),
                                  make_record(2, "c", {0.5}, 0)};
    const VariabilitySummary v = variability_summary(recs);
    REQUIRE(v.ratios.size() == 1);
    CHECK(v.ratios[0].key == "a");
    CHECK(v.ratios[0].ratio == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(v.ratios[0].sigma == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(v.zero_variance == std::vector<std::string>{"b"});
    CHECK(v.mean_ratio == v.ratios[0].ratio);
    CHECK(v.sigma_max == v.ratios[0].sigma);

    const VariabilitySummary empty = variability_summary({});
    CHECK(std::isnan(empty.mean_ratio));
    CHECK(empty.sigma_max == 0.0);
}

TEST_CASE("clustering mode names") {
    CHECK(parse_clustering_mode("soft") == ClusteringMode::Soft);
    CHECK(to_string(ClusteringMode::Hard) == "hard");
    CHECK_THROWS_AS(parse_clustering_mode("fuzzy"), Error);
}

TEST_CASE("config validation") {
    PipelineConfig c;
    CHECK_NOTHROW(c.validate());
    c.fcm.m = 1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.folds = 1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.keep_ratio = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.operators.clear();
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("all-off search space is the full enumeration") {
    const std::size_t d = 6;
    const Dataset ds = testsupport::planted_product(400, d, 1);
    const SearchSpace s = build_search_space(ds, all_off());
    CHECK_FALSE(s.assignment.has_value());
    CHECK_FALSE(s.probe.has_value());
    CHECK(s.selected_ops.size() == 22);
    // All-numeric data: seven unary operators apply to every feature, four
    // commutative binaries take unordered pairs and two ordered ones take
    // ordered pairs; categorical-only operators contribute nothing.
    const std::size_t expected = 7 * d + 4 * d * (d - 1) / 2 + 2 * d * (d - 1);
    CHECK(s.candidates.size() == expected);
    CHECK(s.generated.total() == expected);
    CHECK(s.unconstrained.total() == expected);
}

TEST_CASE("soft clustering and probing shrink the space and keep the planted product") {
    const Dataset ds = testsupport::planted_product(2000, 10, 3);
    PipelineConfig cfg = quick(ClusteringMode::Soft, 5);
    cfg.seed = 3;
    const PipelineResult r = run(ds, cfg);
    const PipelineReport& rep = r.report;
    REQUIRE(rep.complete);
    CHECK(rep.generated.total() < rep.unconstrained.total());
    CHECK(std::find(rep.selected.begin(), rep.selected.end(), "mul(x1,x2)") != rep.selected.end());
    CHECK(rep.metric_name == "rmse");
    CHECK(rep.metric_engineered < rep.metric_base);
    CHECK(rep.k == 2);
    CHECK(rep.theta == doctest::Approx(0.2));
    CHECK(rep.cluster_labels.size() == 10);

    // Counts never grow along the pipeline.
    REQUIRE_FALSE(rep.round_counts.empty());
    CHECK(rep.round_counts.front() <= rep.generated.total());
    for (std::size_t i = 1; i < rep.round_counts.size(); ++i) CHECK(rep.round_counts[i] <= rep.round_counts[i - 1]);
    CHECK(rep.selected.size() <= rep.round_counts.back());
    CHECK(r.new_columns.size() == rep.selected.size());
    CHECK(r.new_names == rep.selected);
    CHECK(rep.timings.total() == doctest::Approx(rep.timings.run() + rep.timings.eval()));
}

TEST_CASE("runs are deterministic apart from wall times") {
    const Dataset ds = testsupport::latent_groups(800, 8, 4, 2);
    PipelineConfig cfg = quick(ClusteringMode::Hard, 4);
    cfg.workers = 3;
    const PipelineResult a = run(ds, cfg);
    cfg.workers = 1;
    const PipelineResult b = run(ds, cfg);
    REQUIRE(a.report.complete);
    nlohmann::json ja = to_json(a.report), jb = to_json(b.report);
    ja.erase("timings");
    jb.erase("timings");
    CHECK(ja.dump() == jb.dump());
    CHECK(engineered_csv(ds, a) == engineered_csv(ds, b));
    CHECK(a.report.k == 2);
}

TEST_CASE("stage failures are reported, not thrown") {
    std::vector<double> y(50, 0.0);
    y[0] = 1.0;
    std::vector<testsupport::Column> cols{testsupport::numeric(std::vector<double>(50, 1.0)),
                                          testsupport::numeric(std::vector<double>(50, 2.0))};
    const Dataset ds = testsupport::make_dataset(std::move(cols), y, Task::Binary);
    const PipelineResult r = run(ds, all_off());
    CHECK_FALSE(r.report.complete);
    CHECK(r.report.failed_stage == "search-space");
    CHECK_FALSE(r.report.error.empty());
    CHECK(r.new_columns.empty());

    PipelineConfig bad = all_off();
    bad.top_k = 0;
    const PipelineResult c = run(testsupport::planted_product(100, 2, 1), bad);
    CHECK_FALSE(c.report.complete);
    CHECK(c.report.failed_stage == "config");
    const nlohmann::json j = to_json(c.report);
    CHECK(j["complete"] == false);
    CHECK(j["failed_stage"] == "config");
}

TEST_CASE("binary pipeline reports AUC") {
    const Dataset ds = testsupport::binary_dataset(1200, 4, 5);
    PipelineConfig cfg = quick(ClusteringMode::Soft, 2);
    const PipelineResult r = run(ds, cfg);
    REQUIRE(r.report.complete);
    CHECK(r.report.metric_name == "auc");
    CHECK(r.report.metric_base > 0.5);
    CHECK(r.report.metric_base <= 1.0);
}

TEST_CASE("engineered csv layout") {
    LoadOptions opts;
    opts.target = "label";
    opts.task = Task::Binary;
    std::string text = "a,label,c\n";
    for (int i = 0; i < 30; ++i) {
        text += std::to_string(i * 0.5) + "," + (i % 3 == 0 ? "yes" : "no") + "," + (i % 2 ? "p" : "q") + "\n";
    }
    text += ",no,\n";
    const Dataset ds = parse_csv(text, opts);
    PipelineResult r;
    r.new_names = {"neg(a)"};
    std::vector<double> neg(ds.num_rows());
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -ds.numeric(0)[i];
    r.new_columns.push_back(testsupport::numeric(neg));

    const auto recs = csv::parse(engineered_csv(ds, r));
    REQUIRE(recs.size() == ds.num_rows() + 1);
    CHECK(recs[0] == std::vector<std::string>{"a", "label", "c", "neg(a)"});
    CHECK(recs[1] == std::vector<std::string>{"0", "yes", "q", "-0"});
    CHECK(recs[4][1] == "yes");
    CHECK(recs[3][0] == "1");
    CHECK(recs.back() == std::vector<std::string>{"", "no", "", ""});

    // Reading the output back yields the same values.
    const Dataset back = parse_csv(engineered_csv(ds, r), opts);
    CHECK(back.target() == ds.target());
    for (std::size_t i = 0; i + 1 < ds.num_rows(); ++i) CHECK(back.numeric(0)[i] == ds.numeric(0)[i]);
}

TEST_CASE("report json shape") {
    const Dataset ds = testsupport::planted_product(600, 4, 2);
    const PipelineResult r = run(ds, all_off());
    REQUIRE(r.report.complete);
    const nlohmann::json j = to_json(r.report);
    for (const char* key : {"complete", "timings", "candidates", "reduction", "records", "selected", "variability",
                            "metric", "l_init", "clustering"}) {
        CHECK(j.contains(key));
    }
    CHECK(j["timings"].contains("run"));
    CHECK(j["reduction"]["measured"] == 1.0);
    CHECK(j["reduction"]["predicted"] == 1.0);
    CHECK(j["candidates"]["generated"]["total"] == r.report.generated.total());
    const nlohmann::json c = to_json(all_off());
    CHECK(c["clustering"]["mode"] == "off");
}
