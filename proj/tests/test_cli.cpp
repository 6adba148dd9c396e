#include "doctest.h"

#include "procwarm/checkpoint_io.hpp"
#include "procwarm/metrics.hpp"

#include "test_util.hpp"

#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>

using procwarm::model::Stage;
using procwarm::model::read_checkpoint_meta;
using procwarm::train::read_metrics;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

CliResult run_cli(const TempDir& tmp, const std::string& args) {
    static int invocation = 0;
    const char* bin = std::getenv("PROCWARM_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "PROCWARM_BIN must point at the procwarm binary");

    const auto out_path = tmp.path() / ("cli_out_" + std::to_string(invocation) + ".txt");
    const auto err_path = tmp.path() / ("cli_err_" + std::to_string(invocation) + ".txt");
    ++invocation;

    const std::string cmd = std::string("\"") + bin + "\" " + args + " > " + out_path.string() +
                            " 2> " + err_path.string();
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

const std::string kTinyModel = " --preset desk --depth 1 --width 16 --heads 2 --mlp-ratio 2";

}  // namespace

TEST_CASE("generate writes a corpus and is idempotent") {
    TempDir tmp;
    const std::string args = "generate --language dyck --k 1 --seq-len 2 --count 30 --name c "
                             "--seed 5 --out-dir ";
    const auto first = run_cli(tmp, args + tmp.sub("d1"));
    CHECK(first.code == 0);
    CHECK(first.out.find("wrote 30 examples") != std::string::npos);
    CHECK(std::filesystem::exists(tmp.path() / "d1" / "c" / "manifest.txt"));
    CHECK(std::filesystem::exists(tmp.path() / "d1" / "c" / "tokens.bin"));
    CHECK(std::filesystem::exists(tmp.path() / "d1" / "c" / "masks.bin"));

    // identical parameters into a second directory: identical bytes
    const auto second = run_cli(tmp, args + tmp.sub("d2"));
    CHECK(second.code == 0);
    for (const char* name : {"manifest.txt", "tokens.bin", "masks.bin"}) {
        CHECK(slurp(tmp.path() / "d1" / "c" / name) == slurp(tmp.path() / "d2" / "c" / name));
    }

    // rerunning in place skips the work
    const auto third = run_cli(tmp, args + tmp.sub("d1"));
    CHECK(third.code == 0);
    CHECK(third.out.find("up to date") != std::string::npos);
}

TEST_CASE("generate rejects an odd sequence length with exit code 1") {
    TempDir tmp;
    const auto r = run_cli(tmp, "generate --language ww --seq-len 7 --count 5 --out-dir " +
                                    tmp.sub("d"));
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: validation:", 0) == 0);
    CHECK(r.err.find("odd") != std::string::npos);
}

TEST_CASE("stats reports the forced split of the smallest corpus") {
    TempDir tmp;
    REQUIRE(run_cli(tmp, "generate --language dyck --k 1 --seq-len 2 --count 40 --name c "
                         "--seed 2 --out-dir " + tmp.sub("d")).code == 0);
    const auto corpus_dir = tmp.sub("d") + "/c";
    const auto r = run_cli(tmp, "stats --corpus " + corpus_dir);
    CHECK(r.code == 0);
    CHECK(r.out.find("validity") != std::string::npos);

    const auto kv_text = slurp(std::filesystem::path(corpus_dir) / "stats.kv");
    CHECK(kv_text.find("hist_0=40") != std::string::npos);
    CHECK(kv_text.find("hist_1=40") != std::string::npos);
    CHECK(kv_text.find("validity_rate=1") != std::string::npos);
}

TEST_CASE("warmup trains, persists a run and skips when up to date") {
    TempDir tmp;
    const std::string args =
        "warmup --language dyck --k 2 --seq-len 8" + kTinyModel +
        " --batch-size 4 --steps 6 --warmup-steps 2 --eval-every 3 --eval-examples 4"
        " --name w --seed 1 --out-dir " + tmp.sub("runs");
    const auto first = run_cli(tmp, args);
    CHECK(first.code == 0);

    const auto run_dir = tmp.path() / "runs" / "w";
    REQUIRE(std::filesystem::exists(run_dir / "checkpoint.ckpt"));
    REQUIRE(std::filesystem::exists(run_dir / "metrics.txt"));
    REQUIRE(std::filesystem::exists(run_dir / "provenance.txt"));

    const auto meta = read_checkpoint_meta(run_dir / "checkpoint.ckpt");
    CHECK(meta.stage == Stage::Warmup);
    CHECK(meta.step == 6);
    const auto metrics = read_metrics(run_dir / "metrics.txt");
    metrics.validate();
    CHECK(metrics.run_id == "w");  // named after the run directory

    const auto bytes = slurp(run_dir / "checkpoint.ckpt");
    const auto again = run_cli(tmp, args);
    CHECK(again.code == 0);
    CHECK(again.out.find("up to date") != std::string::npos);
    CHECK(slurp(run_dir / "checkpoint.ckpt") == bytes);
}

TEST_CASE("surgery retags a warm checkpoint for vision fine-tuning") {
    TempDir tmp;
    REQUIRE(run_cli(tmp, "warmup --language dyck --k 2 --seq-len 8" + kTinyModel +
                         " --batch-size 4 --steps 4 --warmup-steps 1 --eval-every 0"
                         " --name w --seed 1 --out-dir " + tmp.sub("runs")).code == 0);

    std::ofstream plan(tmp.sub("plan.txt"));
    plan << "reset-embeddings-and-head 7\nretag-stage vision\n";
    plan.close();

    const auto r = run_cli(tmp, "surgery --input " + tmp.sub("runs") + "/w/checkpoint.ckpt" +
                                " --plan " + tmp.sub("plan.txt") + " --name s --out-dir " +
                                tmp.sub("runs"));
    CHECK(r.code == 0);
    const auto out_dir = tmp.path() / "runs" / "s";
    REQUIRE(std::filesystem::exists(out_dir / "checkpoint.ckpt"));
    CHECK(std::filesystem::exists(out_dir / "plan.txt"));
    CHECK(std::filesystem::exists(out_dir / "provenance.txt"));

    const auto meta = read_checkpoint_meta(out_dir / "checkpoint.ckpt");
    CHECK(meta.stage == Stage::Vision);
    CHECK(meta.shapes.count("patch_embedding.w") == 1);
    CHECK(meta.shapes.count("token_embedding") == 0);
}

TEST_CASE("finetune refuses a warm-up checkpoint and explains the fix") {
    TempDir tmp;
    REQUIRE(run_cli(tmp, "warmup --language dyck --k 2 --seq-len 8" + kTinyModel +
                         " --batch-size 4 --steps 4 --warmup-steps 1 --eval-every 0"
                         " --name w --seed 1 --out-dir " + tmp.sub("runs")).code == 0);

    const auto r = run_cli(tmp, "finetune --checkpoint " + tmp.sub("runs") + "/w/checkpoint.ckpt" +
                                kTinyModel + " --batch-size 4 --epochs 1 --warmup-epochs 0"
                                " --train-count 8 --test-count 4 --name f --out-dir " +
                                tmp.sub("runs"));
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: validation:", 0) == 0);
    CHECK(r.err.find("surgery") != std::string::npos);
}

TEST_CASE("finetune trains on the built-in dataset and reports compare runs") {
    TempDir tmp;
    const std::string common =
        kTinyModel + " --batch-size 8 --epochs 2 --warmup-epochs 1 --train-count 32"
        " --test-count 16 --no-augment --out-dir " + tmp.sub("runs");

    const auto a = run_cli(tmp, "finetune --random-init --name a --seed 1" + common);
    CHECK(a.code == 0);
    const auto b = run_cli(tmp, "finetune --random-init --name b --seed 2" + common);
    CHECK(b.code == 0);

    const auto metrics_a = tmp.sub("runs") + "/a/metrics.txt";
    const auto metrics_b = tmp.sub("runs") + "/b/metrics.txt";
    read_metrics(metrics_a).validate();

    const auto r = run_cli(tmp, "report --run base=" + metrics_a + " --run other=" + metrics_b +
                                " --baseline base --name rep --out-dir " + tmp.sub("runs"));
    CHECK(r.code == 0);
    CHECK(r.out.find("baseline") != std::string::npos);
    const auto table = slurp(tmp.path() / "runs" / "rep" / "table.txt");
    CHECK(table.find("base") != std::string::npos);
    CHECK(table.find("other") != std::string::npos);
    const bool has_delta =
        table.find("+") != std::string::npos || table.find("-") != std::string::npos;
    CHECK(has_delta);
    const auto svg = slurp(tmp.path() / "runs" / "rep" / "curves.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("polyline") != std::string::npos);
}

TEST_CASE("reference mode zeroes wall-clock fields") {
    TempDir tmp;
    const auto r = run_cli(tmp, "warmup --reference-mode --language dyck --k 2 --seq-len 8" +
                                kTinyModel +
                                " --batch-size 4 --steps 4 --warmup-steps 1 --eval-every 2"
                                " --eval-examples 4 --name w --seed 1 --out-dir " +
                                tmp.sub("runs"));
    CHECK(r.code == 0);
    const auto metrics = read_metrics(tmp.path() / "runs" / "w" / "metrics.txt");
    REQUIRE(!metrics.records.empty());
    for (const auto& rec : metrics.records) CHECK(rec.wall_ms == 0.0);
}

TEST_CASE("usage errors exit with code 2") {
    TempDir tmp;
    const auto unknown = run_cli(tmp, "generate --frobnicate 3");
    CHECK(unknown.code == 2);
    CHECK(unknown.err.find("usage") != std::string::npos);

    const auto missing = run_cli(tmp, "stats");
    CHECK(missing.code == 2);

    const auto bogus = run_cli(tmp, "explode");
    CHECK(bogus.code == 2);
}

TEST_CASE("missing inputs exit with code 1 and an io diagnosis") {
    TempDir tmp;
    const auto r = run_cli(tmp, "stats --corpus " + tmp.sub("absent"));
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: io:", 0) == 0);
}
