#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(TN_CLI_PATH) + " " + args + " 2>&1";
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (std::size_t got = std::fread(buf, 1, sizeof(buf), pipe))
        r.output.append(buf, got);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TmpDir {
    fs::path path;
    TmpDir() : path(fs::current_path() / "cli_test_tmp") {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("data writes the dataset and a provenance sidecar, deterministically") {
    TmpDir tmp;
    const fs::path out = tmp.path / "ds.txt";
    RunResult r = run_cli("data --n 4 --train-fraction 1.0 --mu 1.0 --seed 0 --out " +
                          out.string());
    CHECK(r.exit_code == 0);
    const std::string first = slurp(out);
    // 9 valid chains at n=4, one per line
    std::size_t lines = 0;
    for (char c : first)
        if (c == '\n') ++lines;
    CHECK(lines == 9);
    CHECK(fs::exists(out.string() + ".provenance.json"));
    const std::string side = slurp(out.string() + ".provenance.json");
    CHECK(side.find("\"lines\": 9") != std::string::npos);
    CHECK(side.find("\"valid_count\": 9") != std::string::npos);

    RunResult r2 = run_cli("data --n 4 --train-fraction 1.0 --mu 1.0 --seed 0 --out " +
                           out.string());
    CHECK(r2.exit_code == 0);
    CHECK(slurp(out) == first);
}

TEST_CASE("mi emits the exact value at n=2") {
    RunResult r = run_cli("mi --n 2 --out -");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("i,j,mi_nats") != std::string::npos);
    // ln 2 = 0.693147...
    CHECK(r.output.find("0,1,0.6931471805599") != std::string::npos);
}

TEST_CASE("usage errors exit with code 1") {
    RunResult missing = run_cli("train --config does_not_exist.cfg --out-dir " +
                                (fs::current_path() / "cli_test_unused").string());
    CHECK(missing.exit_code == 1);
    CHECK(!missing.output.empty());

    CHECK(run_cli("no-such-subcommand").exit_code == 1);
    CHECK(run_cli("data --n 4").exit_code == 1);  // --out is required
    CHECK(run_cli("train --out-dir x --set epochs").exit_code == 1);  // not key=value
    CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("train, eval, and factorize round trip through a checkpoint") {
    TmpDir tmp;
    const fs::path run_dir = tmp.path / "run";
    RunResult tr = run_cli(
        "train --out-dir " + run_dir.string() +
        " --set model=dense --set n=6 --set chi=4 --set epochs=3"
        " --set eval_every=1 --set train_fraction=0.5 --set seed=1");
    CHECK(tr.exit_code == 0);
    CHECK(fs::exists(run_dir / "metrics.csv"));
    CHECK(fs::exists(run_dir / "config.resolved"));
    CHECK(fs::exists(run_dir / "model.tnmps"));
    const std::string metrics = slurp(run_dir / "metrics.csv");
    CHECK(metrics.rfind("epoch,train_loss,sigma_t,sigma_v,auc,wall_ms,seed", 0) == 0);
    const std::string resolved = slurp(run_dir / "config.resolved");
    CHECK(resolved.find("model=dense") != std::string::npos);
    CHECK(resolved.find("n=6") != std::string::npos);

    RunResult ev = run_cli("eval --checkpoint " + (run_dir / "model.tnmps").string() +
                           " --perplexity");
    CHECK(ev.exit_code == 0);
    CHECK(ev.output.find("\"sigma_v\"") != std::string::npos);
    CHECK(ev.output.find("\"auc\"") != std::string::npos);
    CHECK(ev.output.find("\"perplexity\"") != std::string::npos);

    // full-rank factorization of the trained model is near exact
    const fs::path report = tmp.path / "fz.json";
    RunResult fz = run_cli("factorize --checkpoint " +
                           (run_dir / "model.tnmps").string() +
                           " --chi-h 2 --height 2 --chi-v 0 --report " +
                           report.string() + " --out " +
                           (tmp.path / "fz.tnmps").string());
    CHECK(fz.exit_code == 0);
    const std::string rep = slurp(report);
    CHECK(rep.find("max_round_trip_frobenius_error") != std::string::npos);
    std::istringstream parse(rep.substr(rep.find("max_round_trip_frobenius_error")));
    std::string key;
    double err = 1.0;
    parse >> key >> err;  // "max_round_trip_frobenius_error": <value>
    CHECK(err < 1e-8);

    RunResult ev2 = run_cli("eval --checkpoint " + (tmp.path / "fz.tnmps").string());
    CHECK(ev2.exit_code == 0);
    CHECK(ev2.output.find("\"sigma_v\"") != std::string::npos);
}

TEST_CASE("runtime failures exit with code 2") {
    TmpDir tmp;
    const fs::path bad = tmp.path / "bad.tnmps";
    std::ofstream(bad) << "TNMPS1\nmanifest_bytes=garbage\n";
    RunResult r = run_cli("eval --checkpoint " + bad.string());
    CHECK(r.exit_code == 2);
    CHECK(!r.output.empty());

    RunResult missing = run_cli("eval --checkpoint " +
                                (tmp.path / "nope.tnmps").string());
    CHECK(missing.exit_code == 2);
}
