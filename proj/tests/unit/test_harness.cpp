#include "denfuse/bundle.hpp"
#include "denfuse/errors.hpp"
#include "denfuse/experiment.hpp"
#include "denfuse/report.hpp"
#include "denfuse/scenario.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace denfuse;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("denfuse_harness_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json small_doc() {
    return json::parse(R"({
      "schema_version": 1,
      "name": "small",
      "num_objects": 3,
      "num_steps": 5,
      "num_sensors": 3,
      "clutter_rate": 5.0,
      "region": {"lower": [-300.0, -300.0], "upper": [300.0, 300.0]},
      "network": {"radius": 500.0},
      "initialisation": {"spawn": {"lower": [-150.0, -150.0], "upper": [150.0, 150.0]}},
      "methods": [
        {"name": "C-VT", "kind": "C-VT", "vi_iterations": 5},
        {"name": "I-VT", "kind": "I-VT", "vi_iterations": 5},
        {"name": "DeC-VT", "kind": "DeC-VT", "vi_iterations": 5, "consensus_rounds": 4},
        {"name": "DeAA-VT", "kind": "DeAA-VT", "vi_iterations": 5, "consensus_rounds": 4},
        {"name": "DeNG-VT", "kind": "DeNG-VT", "max_iterations": 8}
      ],
      "monte_carlo_runs": 3,
      "seed": 17,
      "convergence_step": 3
    })");
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("scenario parsing") {
    const Scenario s = Scenario::from_json(small_doc());
    CHECK(s.num_objects == 3);
    CHECK(s.methods.size() == 5);
    CHECK(s.methods[2].kind == MethodKind::dec_vt);
    CHECK(s.methods[2].config.consensus_rounds == 4);
    CHECK(s.process_noise_intensity == 25.0);
    CHECK(s.region.volume() == 360000.0);
    CHECK_NOTHROW(s.validate());

    SUBCASE("round trip through JSON is lossless") {
        const Scenario back = Scenario::from_json(s.to_json());
        CHECK(back.to_json() == s.to_json());
        CHECK(config_hash(back) == config_hash(s));
    }
    SUBCASE("unknown fields are rejected at every level") {
        for (const char* pointer : {"/bogus", "/network/bogus", "/initialisation/spawn/bogus", "/methods/0/bogus",
                                    "/gospa/bogus", "/region/bogus"}) {
            json doc = small_doc();
            if (std::string(pointer) == "/gospa/bogus") doc["gospa"] = json::object();
            doc[json::json_pointer(pointer)] = 1;
            CHECK_THROWS_AS((void)Scenario::from_json(doc), ConfigError);
        }
    }
    SUBCASE("schema version and enum values are checked") {
        json doc = small_doc();
        doc["schema_version"] = 2;
        CHECK_THROWS_AS((void)Scenario::from_json(doc), ConfigError);
        doc = small_doc();
        doc.erase("schema_version");
        CHECK_THROWS_AS((void)Scenario::from_json(doc), ConfigError);
        doc = small_doc();
        doc["methods"][0]["kind"] = "K-VT";
        CHECK_THROWS_AS((void)Scenario::from_json(doc), ConfigError);
        doc = small_doc();
        doc["methods"][4]["variant"] = "sideways";
        CHECK_THROWS_AS((void)Scenario::from_json(doc), ConfigError);
        doc = small_doc();
        doc["num_objects"] = "three";
        CHECK_THROWS_AS((void)Scenario::from_json(doc), ConfigError);
    }
    SUBCASE("validation names the field") {
        Scenario bad = s;
        bad.num_sensors = 0;
        CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("num_sensors"), ConfigError);
        bad = s;
        bad.network.policy.dropout = 1.0;
        CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("dropout"), ConfigError);
        bad = s;
        bad.methods.push_back(bad.methods.front());
        CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("duplicate"), ConfigError);
        bad = s;
        bad.convergence_step = 6;
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    }
    SUBCASE("hash and method selection") {
        Scenario other = s;
        other.seed = 18;
        CHECK(config_hash(other) != config_hash(s));
        CHECK(config_hash(s).size() == 16);
        const Scenario two = select_methods(s, {"DeNG-VT", "C-VT"});
        REQUIRE(two.methods.size() == 2);
        CHECK_THROWS_AS((void)select_methods(s, {"nope"}), ConfigError);
    }
}

TEST_CASE("shipped scenario files load") {
    const fs::path dir = fs::path(DENFUSE_SOURCE_DIR) / "scenarios";
    for (const char* name : {"desk.json", "full.json", "smoke.json"}) {
        CAPTURE(name);
        const Scenario s = load_scenario(dir / name);
        CHECK_NOTHROW(s.validate());
    }
    const Scenario desk = load_scenario(dir / "desk.json");
    CHECK(desk.num_sensors == 5);
    CHECK(desk.num_objects == 10);
    CHECK(desk.num_steps == 20);
    CHECK(desk.clutter_rate == 100.0);
    CHECK(desk.monte_carlo_runs == 10);
    const Scenario full = load_scenario(dir / "full.json");
    CHECK(full.num_sensors == 20);
    CHECK(full.num_objects == 50);
    CHECK(full.num_steps == 50);
    CHECK(full.clutter_rate == 500.0);
    CHECK(full.measurement_noise_variance == 100.0);
    CHECK_THROWS_AS((void)load_scenario(dir / "missing.json"), IoError);
}

TEST_CASE("resolution fills generated fields deterministically") {
    const Scenario s = Scenario::from_json(small_doc());
    const Scenario a = resolve(s);
    const Scenario b = resolve(s);
    CHECK(a.init.initial_states.size() == 3);
    CHECK(a.network.sensor_positions.size() == 3);
    CHECK(a.to_json() == b.to_json());
    CHECK(resolve(a).to_json() == a.to_json());
}

TEST_CASE("noise-free single object is tracked almost exactly") {
    json doc = small_doc();
    doc["num_objects"] = 1;
    doc["num_steps"] = 1;
    doc["num_sensors"] = 1;
    doc["clutter_rate"] = 0.0;
    doc["object_rate"] = 20.0;
    doc["measurement_noise_variance"] = 1e-4;
    doc["initialisation"]["position_noise_std"] = 0.0;
    doc["initialisation"]["velocity_noise_std"] = 0.0;
    doc["methods"] = json::array({json{{"name", "C-VT"}, {"kind", "C-VT"}}});
    doc["convergence_step"] = 1;
    const auto report = run_experiment(Scenario::from_json(doc));
    REQUIRE(report.methods.size() == 1);
    REQUIRE(report.methods[0].summary);
    CHECK(report.methods[0].summary->mgospa.mean < 0.1);
}

TEST_CASE("experiment reports") {
    const Scenario s = Scenario::from_json(small_doc());
    ExperimentOptions one;
    one.threads = 1;
    ExperimentOptions many;
    many.threads = 3;
    const RunReport a = run_experiment(s, one);
    const RunReport b = run_experiment(s, many);

    const fs::path da = scratch("a");
    const fs::path db = scratch("b");
    const fs::path dc = scratch("c");
    emit_reports(a, da);
    emit_reports(b, db);
    emit_reports(a, dc);
    for (const char* f : {"summary.json", "gospa_curves.csv", "convergence.csv", "scenario.lock.json"}) {
        CAPTURE(f);
        REQUIRE(fs::exists(da / f));
        CHECK(slurp(da / f) == slurp(db / f));
        CHECK(slurp(da / f) == slurp(dc / f));
    }

    SUBCASE("summary schema") {
        const json j = json::parse(slurp(da / "summary.json"));
        CHECK(j.at("schema") == "denfuse.summary");
        CHECK(j.at("schema_version") == kSummarySchemaVersion);
        CHECK(j.at("provenance").at("seed") == 17);
        CHECK(j.at("provenance").at("config_hash") == config_hash(resolve(s)));
        REQUIRE(j.at("methods").size() == 5);
        for (const auto& row : j.at("methods")) {
            for (const char* key : {"method", "kind", "runs", "failures", "mgospa", "localisation", "missed", "false", "ci"})
                CHECK(row.contains(key));
            CHECK(row.at("runs") == 3);
        }
        CHECK(j.at("methods")[4].at("ci") == 8.0);
        CHECK(j.at("methods")[2].at("ci") == 20.0);
        CHECK(j.at("methods")[3].at("ci") == 4.0);
        CHECK(j.at("methods")[0].at("ci") == 0.0);
        CHECK(j.at("convergence").at("method") == "DeNG-VT");
        CHECK(j.at("convergence").at("step") == 3);
    }
    SUBCASE("curve and convergence shapes") {
        const std::string curves = slurp(da / "gospa_curves.csv");
        CHECK(curves.rfind("step,method,mean,std\n", 0) == 0);
        CHECK(count_lines(curves) == 1 + 5 * 5);
        const std::string conv = slurp(da / "convergence.csv");
        CHECK(conv.rfind("iteration,sensor,gospa\n", 0) == 0);
        CHECK(count_lines(conv) == 1 + 9 * 3);
    }
    SUBCASE("lock file reproduces the report") {
        const Scenario locked = load_scenario(da / "scenario.lock.json");
        CHECK(config_hash(locked) == a.config_hash);
        const RunReport again = run_experiment(locked, one);
        const fs::path dd = scratch("d");
        emit_reports(again, dd);
        CHECK(slurp(dd / "summary.json") == slurp(da / "summary.json"));
    }
    SUBCASE("CI matches the tracker counters") {
        for (const auto& m : a.methods) {
            REQUIRE(m.summary);
            for (auto c : m.record.communication) {
                std::int64_t expect = 0;
                switch (m.spec.kind) {
                    case MethodKind::deng_vt: expect = 8 * 5; break;
                    case MethodKind::dec_vt: expect = 5 * 4 * 5; break;
                    case MethodKind::deaa_vt: expect = 4 * 5; break;
                    default: break;
                }
                CHECK(c == expect);
            }
        }
    }
}

TEST_CASE("empty method list still writes valid files") {
    json doc = small_doc();
    doc["methods"] = json::array();
    const auto report = run_experiment(Scenario::from_json(doc));
    const fs::path dir = scratch("empty");
    emit_reports(report, dir);
    const json j = json::parse(slurp(dir / "summary.json"));
    CHECK(j.at("methods").empty());
    CHECK(slurp(dir / "gospa_curves.csv") == "step,method,mean,std\n");
    CHECK(slurp(dir / "convergence.csv") == "iteration,sensor,gospa\n");
}

TEST_CASE("divergence is recorded per run") {
    json doc = small_doc();
    doc["methods"] = json::array({json{{"name", "C-VT"}, {"kind", "C-VT"}},
                                  json{{"name", "wild"}, {"kind", "DeNG-VT"}, {"alpha", 500.0}, {"max_halvings", 0}}});
    const auto report = run_experiment(Scenario::from_json(doc));
    REQUIRE(report.methods.size() == 2);
    CHECK(report.methods[0].failures.empty());
    CHECK(report.methods[0].summary);
    CHECK(report.methods[1].failures.size() == 3);
    CHECK_FALSE(report.methods[1].summary);
    const fs::path dir = scratch("diverged");
    emit_reports(report, dir);
    const json j = json::parse(slurp(dir / "summary.json"));
    CHECK(j.at("methods")[1].at("failures").size() == 3);
}

TEST_CASE("bundles replay byte-identically") {
    const Scenario s = resolve(Scenario::from_json(small_doc()));
    const RunData data = simulate_run(s, 1);
    CHECK(data.scans.size() == 5);
    CHECK(data.scans[0].size() == 3);
    CHECK(data.snapshots.size() == 5);
    const fs::path dir = scratch("bundle");
    write_bundle(s, data, dir);
    for (const char* f : {"truth.jsonl", "scans.jsonl", "network.jsonl", "prior.json", "scenario.lock.json"})
        CHECK(fs::exists(dir / f));
    CHECK(read_jsonl(dir / "truth.jsonl").size() == 5);

    const Bundle back = read_bundle(dir);
    CHECK(back.data.run == 1);
    CHECK(back.data.truth.states == data.truth.states);
    for (int n = 0; n < 5; ++n) {
        for (int sensor = 0; sensor < 3; ++sensor) {
            CHECK(back.data.scans[n][sensor].scan.measurements == data.scans[n][sensor].scan.measurements);
            CHECK(back.data.scans[n][sensor].truth_origins == data.scans[n][sensor].truth_origins);
        }
        CHECK(back.data.snapshots[n][0].adjacency == data.snapshots[n][0].adjacency);
    }

    const fs::path again = scratch("bundle_again");
    write_bundle(back.scenario, back.data, again);
    for (const char* f : {"truth.jsonl", "scans.jsonl", "network.jsonl", "prior.json", "scenario.lock.json"})
        CHECK(slurp(dir / f) == slurp(again / f));

    std::vector<MethodRun> original;
    std::vector<MethodRun> replayed;
    (void)run_on_data(s, data, &original);
    (void)run_on_data(back.scenario, back.data, &replayed);
    REQUIRE(original.size() == replayed.size());
    for (std::size_t m = 0; m < original.size(); ++m) CHECK(original[m].estimates == replayed[m].estimates);

    CHECK_THROWS_AS((void)read_bundle(scratch("nothing")), IoError);
}

TEST_CASE("all methods see identical simulated data") {
    const Scenario s = resolve(Scenario::from_json(small_doc()));
    const RunData a = simulate_run(s, 2);
    const RunData b = simulate_run(s, 2);
    const RunData c = simulate_run(s, 0);
    CHECK(a.truth.states == c.truth.states);
    for (int n = 0; n < 5; ++n) {
        CHECK(a.tracker_scans(n)[1].measurements == b.tracker_scans(n)[1].measurements);
        CHECK(a.tracker_scans(n)[1].measurements != c.tracker_scans(n)[1].measurements);
    }
}
