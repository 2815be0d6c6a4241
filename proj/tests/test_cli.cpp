// Copyright 2026 The srupp authors. Apache 2.0 License.

#include "doctest.h"
#include "srupp/csv.hpp"
#include "srupp/tensor.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

using namespace srupp;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot read ", path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

const std::string& cli_path() {
  static const std::string path = [] {
    const char* p = std::getenv("SRUPP_CLI");
    REQUIRE_MESSAGE(p != nullptr, "SRUPP_CLI must point at the srupp binary");
    return std::string(p);
  }();
  return path;
}

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "srupp_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run_cli(const std::string& args) {
  const fs::path out = work_dir() / "stdout.txt";
  const fs::path err = work_dir() / "stderr.txt";
  const std::string cmd = cli_path() + " " + args + " >" + out.string() +
                          " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.out = slurp(out);
  res.err = slurp(err);
  return res;
}

// A configuration small enough that train finishes in well under a second.
const fs::path& smoke_config() {
  static const fs::path path = [] {
    const fs::path p = work_dir() / "smoke.cfg";
    std::ofstream(p) << "feat_dim = 8\n"
                        "embed_dim = 8\n"
                        "attn_dim = 4\n"
                        "num_layers = 1\n"
                        "subsample_channels = 2\n"
                        "vocab_size = 8\n"
                        "train_len = 12\n"
                        "eval_len = 36\n"
                        "samples = 8\n"
                        "steps = 4\n"
                        "batch_size = 4\n"
                        "lr = 0.001\n";
    return p;
  }();
  return path;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gradcheck passes on the default tiny instances") {
  RunResult res =
      run_cli("gradcheck --config " + smoke_config().string() + " --seed 0");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("sru:") != std::string::npos);
  CHECK(res.out.find("srupp:") != std::string::npos);
  CHECK(res.out.find("encoder:") != std::string::npos);
}

TEST_CASE("gradcheck with a missing config exits 2") {
  RunResult res = run_cli("gradcheck --config /does/not/exist.cfg");
  CHECK(res.exit_code == 2);
  CHECK(res.err.find("error:") != std::string::npos);
}

TEST_CASE("gradcheck prints the worst parameter for one target") {
  RunResult res = run_cli("gradcheck --config " + smoke_config().string() +
                          " --seed 3 --target srupp");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("srupp:") != std::string::npos);
  CHECK(res.out.find("worst =") != std::string::npos);
  CHECK(res.out.find("encoder:") == std::string::npos);
}

TEST_CASE("gradcheck rejects unknown targets") {
  RunResult res = run_cli("gradcheck --config " + smoke_config().string() +
                          " --target everything");
  CHECK(res.exit_code == 2);
}

TEST_CASE("unknown subcommands and missing options are usage errors") {
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("train --config " + smoke_config().string()).exit_code == 2);
  CHECK(run_cli("").exit_code == 2);
}

TEST_CASE("train writes history, checkpoint, and config") {
  const fs::path out = work_dir() / "train_out";
  RunResult res = run_cli("train --config " + smoke_config().string() +
                          " --out " + out.string());
  CHECK(res.exit_code == 0);
  CHECK(fs::exists(out / "history.csv"));
  CHECK(fs::exists(out / "checkpoint.srpp"));
  CHECK(fs::exists(out / "config.cfg"));
  CHECK(res.out.find("final_loss") != std::string::npos);

  const std::string history = slurp(out / "history.csv");
  CHECK(history.rfind("step,loss,accuracy\n", 0) == 0);

  // Identical bytes on a rerun with the same seed.
  const fs::path out2 = work_dir() / "train_out2";
  RunResult res2 = run_cli("train --config " + smoke_config().string() +
                           " --out " + out2.string());
  CHECK(res2.exit_code == 0);
  CHECK(slurp(out2 / "history.csv") == history);
  CHECK(slurp(out2 / "checkpoint.srpp") == slurp(out / "checkpoint.srpp"));
}

TEST_CASE("train with zero learning rate yields a flat loss curve") {
  const fs::path cfg = work_dir() / "lr0.cfg";
  std::ofstream(cfg) << "feat_dim = 8\nembed_dim = 8\nattn_dim = 4\n"
                        "num_layers = 1\nsubsample_channels = 2\n"
                        "vocab_size = 8\ntrain_len = 12\neval_len = 36\n"
                        "samples = 4\nsteps = 5\nbatch_size = 4\nlr = 0\n";
  const fs::path out = work_dir() / "lr0_out";
  REQUIRE(run_cli("train --config " + cfg.string() + " --out " + out.string())
              .exit_code == 0);
  std::ifstream history(out / "history.csv");
  std::string line;
  std::getline(history, line);  // header
  std::string first_loss;
  while (std::getline(history, line)) {
    const std::size_t a = line.find(','), b = line.rfind(',');
    const std::string loss = line.substr(a + 1, b - a - 1);
    if (first_loss.empty()) {
      first_loss = loss;
    } else {
      CHECK(loss == first_loss);
    }
  }
  CHECK_FALSE(first_loss.empty());
}

TEST_CASE("eval prints one row per requested length") {
  const fs::path out = work_dir() / "train_out";
  REQUIRE(fs::exists(out / "checkpoint.srpp"));
  RunResult res = run_cli("eval --config " + smoke_config().string() +
                          " --checkpoint " + (out / "checkpoint.srpp").string() +
                          " --lengths 12,36");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("length") != std::string::npos);
  CHECK(res.out.find("12") != std::string::npos);
  CHECK(res.out.find("36") != std::string::npos);
}

TEST_CASE("eval rejects an empty or malformed lengths list") {
  const fs::path ckpt = work_dir() / "train_out" / "checkpoint.srpp";
  CHECK(run_cli("eval --config " + smoke_config().string() + " --checkpoint " +
                ckpt.string() + " --lengths \"\"")
            .exit_code == 2);
  CHECK(run_cli("eval --config " + smoke_config().string() + " --checkpoint " +
                ckpt.string() + " --lengths 12,,36")
            .exit_code == 2);
  CHECK(run_cli("eval --config " + smoke_config().string() + " --checkpoint " +
                ckpt.string() + " --lengths -4")
            .exit_code == 2);
}

TEST_CASE("eval reports corrupt checkpoints with the offset") {
  const fs::path good = work_dir() / "train_out" / "checkpoint.srpp";
  const fs::path bad = work_dir() / "truncated.srpp";
  const std::string bytes = slurp(good);
  std::ofstream(bad, std::ios::binary)
      .write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  RunResult res = run_cli("eval --config " + smoke_config().string() +
                          " --checkpoint " + bad.string() + " --lengths 12");
  CHECK(res.exit_code == 2);
  CHECK(res.err.find("offset") != std::string::npos);
}

TEST_CASE("profile reports the full-size configuration") {
  const char* dir = std::getenv("SRUPP_CONFIG_DIR");
  REQUIRE(dir != nullptr);
  RunResult res = run_cli("profile --config " + std::string(dir) +
                          "/librispeech.cfg --seq-len 1000");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("total_gflops") != std::string::npos);
  CHECK(res.out.find("assumption: num_layers = 7") != std::string::npos);
  CHECK(res.out.find("convention: MAC = 2 FLOPs") != std::string::npos);
}

TEST_CASE("profile rejects sequences below the minimum") {
  RunResult res =
      run_cli("profile --config " + smoke_config().string() + " --seq-len 3");
  CHECK(res.exit_code == 2);
}

TEST_CASE("attention dumps are row-stochastic and reproducible") {
  const fs::path out = work_dir() / "train_out";
  REQUIRE(fs::exists(out / "checkpoint.srpp"));

  // 12 input frames; feature values are arbitrary reals.
  const fs::path input = work_dir() / "attn_input.csv";
  {
    SeededRng rng(5);
    write_matrix_csv(input.string(), Tensor::uniform({12, 8}, rng, -1, 1));
  }
  const fs::path dump = work_dir() / "attn.csv";
  RunResult res = run_cli("attn-dump --config " + smoke_config().string() +
                          " --checkpoint " + (out / "checkpoint.srpp").string() +
                          " --input " + input.string() + " --out " +
                          dump.string());
  CHECK(res.exit_code == 0);
  Tensor weights = read_matrix_csv(dump.string());
  CHECK(weights.dim(0) == 2);  // 12 frames subsample to 2
  for (std::int64_t i = 0; i < weights.dim(0); ++i) {
    double total = 0.0;
    for (std::int64_t j = 0; j < weights.dim(1); ++j) total += weights.at({i, j});
    CHECK(std::abs(total - 1.0) <= 1e-9);
  }

  const std::string bytes = slurp(dump);
  REQUIRE(run_cli("attn-dump --config " + smoke_config().string() +
                  " --checkpoint " + (out / "checkpoint.srpp").string() +
                  " --input " + input.string() + " --out " + dump.string())
              .exit_code == 0);
  CHECK(slurp(dump) == bytes);
}

TEST_CASE("attention dump of a single-frame output is the 1x1 identity") {
  const fs::path out = work_dir() / "train_out";
  const fs::path input = work_dir() / "attn_input_short.csv";
  {
    SeededRng rng(6);
    write_matrix_csv(input.string(), Tensor::uniform({7, 8}, rng, -1, 1));
  }
  const fs::path dump = work_dir() / "attn_short.csv";
  RunResult res = run_cli("attn-dump --config " + smoke_config().string() +
                          " --checkpoint " + (out / "checkpoint.srpp").string() +
                          " --input " + input.string() + " --out " +
                          dump.string());
  CHECK(res.exit_code == 0);
  Tensor weights = read_matrix_csv(dump.string());
  CHECK(weights.shape() == std::vector<std::int64_t>{1, 1});
  CHECK(weights.get(0) == 1.0);
}

TEST_CASE("the performance flag is honored") {
  const fs::path out = work_dir() / "perf_out";
  RunResult res = run_cli("--performance train --config " +
                          smoke_config().string() + " --out " + out.string());
  CHECK(res.exit_code == 0);
  CHECK(fs::exists(out / "checkpoint.srpp"));
}

TEST_CASE("attention dump layer indexing") {
  const fs::path out = work_dir() / "train_out";
  const fs::path input = work_dir() / "attn_input.csv";

  // Index 0 and -1 address the same single layer of the smoke model.
  const fs::path by_zero = work_dir() / "attn_layer0.csv";
  const fs::path by_neg = work_dir() / "attn_layerneg.csv";
  REQUIRE(run_cli("attn-dump --config " + smoke_config().string() +
                  " --checkpoint " + (out / "checkpoint.srpp").string() +
                  " --input " + input.string() + " --layer 0 --out " +
                  by_zero.string())
              .exit_code == 0);
  REQUIRE(run_cli("attn-dump --config " + smoke_config().string() +
                  " --checkpoint " + (out / "checkpoint.srpp").string() +
                  " --input " + input.string() + " --layer -1 --out " +
                  by_neg.string())
              .exit_code == 0);
  CHECK(slurp(by_zero) == slurp(by_neg));

  RunResult res = run_cli("attn-dump --config " + smoke_config().string() +
                          " --checkpoint " + (out / "checkpoint.srpp").string() +
                          " --input " + input.string() + " --layer 5 --out " +
                          (work_dir() / "attn_bad.csv").string());
  CHECK(res.exit_code == 2);
  CHECK(res.err.find("layer") != std::string::npos);

  RunResult neg = run_cli("attn-dump --config " + smoke_config().string() +
                          " --checkpoint " + (out / "checkpoint.srpp").string() +
                          " --input " + input.string() + " --layer -2 --out " +
                          (work_dir() / "attn_bad.csv").string());
  CHECK(neg.exit_code == 2);
}

}  // TEST_SUITE
