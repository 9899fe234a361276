#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>

#include "atmp/errors.hpp"
#include "atmp/harness.hpp"

using namespace atmp;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case, removed on destruction.
struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& tag) {
        dir = fs::temp_directory_path() / ("atmp_harness_" + tag);
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string str() const { return dir.string(); }
};

KvConfig tiny_train_kv(const std::string& out_dir, const std::string& name) {
    KvConfig kv;
    kv.set("run.command", "train");
    kv.set("run.name", name);
    if (!out_dir.empty()) kv.set("run.output_dir", out_dir);
    kv.set_int("run.seed", 3);
    kv.set("data.kind", "blobs");
    kv.set_int("data.n", 24);
    kv.set_int("data.eval_n", 12);
    kv.set("attack.norms", "l2,linf");
    kv.set_double("attack.l2.epsilon", 0.2);
    kv.set_int("attack.l2.steps", 4);
    kv.set_double("attack.linf.epsilon", 0.1);
    kv.set_int("attack.linf.steps", 4);
    kv.set_int("eval.steps", 4);
    kv.set("train.strategy", "avg");
    kv.set_int("train.epochs", 2);
    kv.set_int("train.batch_size", 12);
    return kv;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("parse_config rejects unknown keys") {
    KvConfig kv = KvConfig::parse("run.seed = 1\nbogus.key = 2\n");
    CHECK_THROWS_AS(parse_config(kv), ConfigError);
    KvConfig ok = KvConfig::parse("run.seed = 1\n");
    CHECK_NOTHROW(parse_config(ok));
}

TEST_CASE("resolve_run_dir combines the output root and run name") {
    ExperimentConfig cfg;
    cfg.name = "abc";
    cfg.output_dir = "/tmp/xyz";
    CHECK(resolve_run_dir(cfg) == "/tmp/xyz/abc");
}

TEST_CASE("exit codes map the error taxonomy") {
    CHECK(exit_code_for(ConfigError("x")) == 2);
    CHECK(exit_code_for(NumericError("x")) == 3);
    CHECK(exit_code_for(IoError("x")) == 4);
    CHECK(exit_code_for(std::invalid_argument("x")) == 2);
    CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("train run writes its artifacts and reports finite metrics") {
    Scratch scratch("train");
    ExperimentConfig cfg = parse_config(tiny_train_kv(scratch.str(), "t1"));
    RunResult res = run_experiment(cfg);
    CHECK(res.ok);
    CHECK(res.exit_code == 0);
    CHECK(res.command == Command::Train);
    CHECK(res.run_dir == scratch.str() + "/t1");

    CHECK(fs::exists(fs::path(res.run_dir) / "config.cfg"));
    CHECK(fs::exists(fs::path(res.run_dir) / "trajectory.csv"));
    CHECK(fs::exists(fs::path(res.run_dir) / "params_final.txt"));
    CHECK(fs::exists(fs::path(res.run_dir) / "params_best.txt"));
    CHECK(fs::exists(fs::path(res.run_dir) / "summary.txt"));

    CHECK(res.trajectory.epochs.size() == 2);
    CHECK(res.metrics.count("final.clean") == 1);
    CHECK(res.metrics.count("final.mix") == 1);
    CHECK(res.metrics.count("risk.gap") == 1);
    CHECK(res.wall_seconds >= 0.0);
    CHECK(res.summary_text.find("wall") == std::string::npos);

    // The echoed config parses back to the same effective configuration.
    KvConfig echo = KvConfig::load((fs::path(res.run_dir) / "config.cfg").string());
    ExperimentConfig cfg2 = parse_config(echo);
    CHECK(cfg2.to_kv().serialize() == cfg.to_kv().serialize());
}

TEST_CASE("reruns are byte identical") {
    Scratch scratch("rerun");
    ExperimentConfig cfg = parse_config(tiny_train_kv(scratch.str(), "a"));
    RunResult r1 = run_experiment(cfg);
    std::string traj1 = slurp(fs::path(r1.run_dir) / "trajectory.csv");
    std::string sum1 = slurp(fs::path(r1.run_dir) / "summary.txt");
    std::string par1 = slurp(fs::path(r1.run_dir) / "params_final.txt");
    std::string conf1 = slurp(fs::path(r1.run_dir) / "config.cfg");

    ExperimentConfig cfg2 = parse_config(tiny_train_kv(scratch.str(), "b"));
    RunResult r2 = run_experiment(cfg2);
    CHECK(slurp(fs::path(r2.run_dir) / "trajectory.csv") == traj1);
    CHECK(slurp(fs::path(r2.run_dir) / "params_final.txt") == par1);
    // Summary and config echo differ only in the run name.
    CHECK(r1.metrics == r2.metrics);

    RunResult r3 = run_experiment(cfg);  // same dir, overwrites
    CHECK(slurp(fs::path(r3.run_dir) / "trajectory.csv") == traj1);
    CHECK(slurp(fs::path(r3.run_dir) / "summary.txt") == sum1);
    CHECK(slurp(fs::path(r3.run_dir) / "config.cfg") == conf1);
}

TEST_CASE("evaluate consumes trained parameters") {
    Scratch scratch("eval");
    ExperimentConfig cfg = parse_config(tiny_train_kv(scratch.str(), "base"));
    RunResult tr = run_experiment(cfg);

    KvConfig kv = tiny_train_kv(scratch.str(), "ev");
    kv.set("run.command", "evaluate");
    kv.set("model.params_file", (fs::path(tr.run_dir) / "params_final.txt").string());
    ExperimentConfig ecfg = parse_config(kv);
    RunResult ev = run_experiment(ecfg);
    CHECK(ev.ok);
    CHECK(ev.metrics.count("final.clean") == 1);
    // Same data/model/eval seeds and parameters: matching robust accuracy.
    CHECK(ev.metrics.at("final.clean") == tr.metrics.at("final.clean"));
    CHECK(ev.metrics.at("final.mix") == tr.metrics.at("final.mix"));

    KvConfig missing = tiny_train_kv(scratch.str(), "ev2");
    missing.set("run.command", "evaluate");
    CHECK_THROWS_AS(run_experiment(parse_config(missing)), ConfigError);
}

TEST_CASE("attack command reports per norm statistics") {
    Scratch scratch("attack");
    KvConfig kv = tiny_train_kv(scratch.str(), "atk");
    kv.set("run.command", "attack");
    ExperimentConfig cfg = parse_config(kv);
    RunResult res = run_experiment(cfg);
    CHECK(res.ok);
    CHECK(fs::exists(fs::path(res.run_dir) / "attacks.csv"));
    CHECK(res.metrics.count("clean_acc") == 1);
    CHECK(res.metrics.count("attack.l2.mean_loss") == 1);
    CHECK(res.metrics.count("attack.linf.success_rate") == 1);
    CHECK(res.metrics.at("attack.l2.max_loss") >= res.metrics.at("attack.l2.mean_loss") - 1e-12);
}

TEST_CASE("landscape command requires a two dimensional regression") {
    Scratch scratch("scape");
    KvConfig kv;
    kv.set("run.command", "landscape");
    kv.set("run.name", "l");
    kv.set("run.output_dir", scratch.str());
    kv.set("data.kind", "linreg");
    kv.set_int("data.n", 10);
    kv.set_int("data.d", 2);
    kv.set("landscape.surrogate", "p2");
    kv.set_int("landscape.resolution", 201);
    ExperimentConfig cfg = parse_config(kv);
    RunResult res = run_experiment(cfg);
    CHECK(res.ok);
    CHECK(fs::exists(fs::path(res.run_dir) / "landscape.csv"));
    CHECK(res.metrics.at("kink.origin") == 1.0);
    CHECK(res.summary_text.find("kinks = origin") != std::string::npos);

    kv.set_int("data.d", 3);
    CHECK_THROWS_AS(run_experiment(parse_config(kv)), ConfigError);
}

TEST_CASE("suite runs members in isolation") {
    Scratch scratch("suite");
    // Two members, identical apart from the seed.
    KvConfig m1 = tiny_train_kv("", "m1");
    m1.set_int("run.seed", 3);
    KvConfig m2 = tiny_train_kv("", "m2");
    m2.set_int("run.seed", 4);
    fs::path p1 = scratch.dir / "m1.cfg";
    fs::path p2 = scratch.dir / "m2.cfg";
    m1.save(p1.string());
    m2.save(p2.string());

    KvConfig suite;
    suite.set("run.command", "suite");
    suite.set("run.name", "s");
    suite.set("run.output_dir", scratch.str());
    suite.set("suite.members", p1.string() + ", " + p2.string());
    suite.set_int("suite.jobs", 2);
    ExperimentConfig cfg = parse_config(suite);
    RunResult res = run_experiment(cfg);
    CHECK(res.ok);
    CHECK(res.metrics.at("suite.members") == 2.0);
    CHECK(res.metrics.at("suite.failures") == 0.0);
    fs::path d1 = fs::path(res.run_dir) / "m1";
    fs::path d2 = fs::path(res.run_dir) / "m2";
    CHECK(fs::exists(d1 / "trajectory.csv"));
    CHECK(fs::exists(d2 / "trajectory.csv"));
    // Different seeds produce different trajectories.
    CHECK(slurp(d1 / "trajectory.csv") != slurp(d2 / "trajectory.csv"));

    // Serial execution produces byte-identical member outputs.
    std::string t1 = slurp(d1 / "trajectory.csv");
    std::string t2 = slurp(d2 / "trajectory.csv");
    KvConfig serial = suite;
    serial.set("run.name", "s_serial");
    serial.set_int("suite.jobs", 1);
    RunResult res2 = run_experiment(parse_config(serial));
    CHECK(slurp(fs::path(res2.run_dir) / "m1" / "trajectory.csv") == t1);
    CHECK(slurp(fs::path(res2.run_dir) / "m2" / "trajectory.csv") == t2);
}

TEST_CASE("suite isolates member failures") {
    Scratch scratch("suitefail");
    KvConfig good = tiny_train_kv("", "good");
    KvConfig bad = tiny_train_kv("", "bad");
    bad.set("data.kind", "nosuchkind");
    fs::path pg = scratch.dir / "good.cfg";
    fs::path pb = scratch.dir / "bad.cfg";
    good.save(pg.string());
    bad.save(pb.string());

    KvConfig suite;
    suite.set("run.command", "suite");
    suite.set("run.name", "sf");
    suite.set("run.output_dir", scratch.str());
    suite.set("suite.members", pb.string() + ", " + pg.string());
    RunResult res = run_experiment(parse_config(suite));
    CHECK_FALSE(res.ok);
    CHECK(res.exit_code == 2);
    CHECK(res.metrics.at("suite.failures") == 1.0);
    // The healthy member still ran to completion.
    CHECK(fs::exists(fs::path(res.run_dir) / "good" / "trajectory.csv"));
}

TEST_CASE("suite rejects nested suites and duplicate run directories") {
    Scratch scratch("suitenest");
    KvConfig nested;
    nested.set("run.command", "suite");
    nested.set("suite.members", "whatever.cfg");
    fs::path pn = scratch.dir / "nested.cfg";
    nested.save(pn.string());

    KvConfig suite;
    suite.set("run.command", "suite");
    suite.set("run.name", "outer");
    suite.set("run.output_dir", scratch.str());
    suite.set("suite.members", pn.string());
    RunResult res = run_experiment(parse_config(suite));
    CHECK_FALSE(res.ok);
    CHECK(res.metrics.at("suite.failures") == 1.0);

    // Two members resolving to the same run dir: the second fails up front.
    KvConfig m = tiny_train_kv("", "same");
    fs::path pa = scratch.dir / "a.cfg";
    fs::path pb = scratch.dir / "b.cfg";
    m.save(pa.string());
    m.set_int("run.seed", 9);
    m.save(pb.string());
    KvConfig dup;
    dup.set("run.command", "suite");
    dup.set("run.name", "dup");
    dup.set("run.output_dir", scratch.str());
    dup.set("suite.members", pa.string() + ", " + pb.string());
    RunResult rdup = run_experiment(parse_config(dup));
    CHECK_FALSE(rdup.ok);
    CHECK(rdup.metrics.at("suite.failures") == 1.0);
    CHECK(fs::exists(fs::path(rdup.run_dir) / "same" / "trajectory.csv"));
}

TEST_CASE("empty suite completes with zero members") {
    Scratch scratch("suiteempty");
    KvConfig suite;
    suite.set("run.command", "suite");
    suite.set("run.name", "none");
    suite.set("run.output_dir", scratch.str());
    RunResult res = run_experiment(parse_config(suite));
    CHECK(res.ok);
    CHECK(res.metrics.at("suite.members") == 0.0);
    CHECK(res.metrics.at("suite.failures") == 0.0);
}

TEST_CASE("smoothness command reports per norm constants and stepsize caps") {
    Scratch scratch("smooth");
    KvConfig kv;
    kv.set("run.command", "smoothness");
    kv.set("run.name", "sm");
    kv.set("run.output_dir", scratch.str());
    kv.set("data.kind", "linreg");
    kv.set_int("data.n", 16);
    kv.set_int("data.d", 2);
    kv.set_int("smoothness.samples", 60);
    ExperimentConfig cfg = parse_config(kv);
    RunResult res = run_experiment(cfg);
    CHECK(res.ok);
    CHECK(res.metrics.count("smoothness.l1.lipschitz") == 1);
    CHECK(res.metrics.count("smoothness.l2.eta") == 1);
    CHECK(res.metrics.count("smoothness.linf.beta") == 1);
    CHECK(res.metrics.count("smoothness.wst.eta") == 1);
    CHECK(res.metrics.count("smoothness.avg.eta") == 1);
    CHECK(res.metrics.count("alpha.avg_cap") == 1);
    CHECK(res.metrics.count("alpha.sw_cap") == 1);
    CHECK(res.metrics.count("alpha.star") == 1);
    CHECK(res.metrics.at("alpha.sw_cap") >= res.metrics.at("alpha.avg_cap") - 1e-15);
}

TEST_CASE("stability command writes traces and bound statistics") {
    Scratch scratch("stab");
    KvConfig kv;
    kv.set("run.command", "stability");
    kv.set("run.name", "st");
    kv.set("run.output_dir", scratch.str());
    kv.set("data.kind", "blobs");
    kv.set_int("data.n", 16);
    kv.set("attack.norms", "l2");
    kv.set_double("attack.l2.epsilon", 0.1);
    kv.set_int("attack.l2.steps", 3);
    kv.set_int("stability.trials", 2);
    kv.set_int("stability.T", 30);
    kv.set_int("stability.probe", 8);
    kv.set_int("smoothness.samples", 20);
    ExperimentConfig cfg = parse_config(kv);
    RunResult res = run_experiment(cfg);
    CHECK(res.ok);
    CHECK(fs::exists(fs::path(res.run_dir) / "stability.csv"));
    CHECK(fs::exists(fs::path(res.run_dir) / "delta_trace.csv"));
    CHECK(res.metrics.at("stability.trials") == 2.0);
    CHECK(res.metrics.count("stability.mean_delta") == 1);
    CHECK(res.metrics.count("stability.mean_bound") == 1);
    CHECK(res.metrics.count("stability.violations") == 1);
}

TEST_CASE("incompatible model and data raise a config error") {
    Scratch scratch("cfgerr");
    KvConfig kv = tiny_train_kv(scratch.str(), "never");
    kv.set("model.kind", "linreg");  // classification data with regression model
    ExperimentConfig cfg = parse_config(kv);
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}
