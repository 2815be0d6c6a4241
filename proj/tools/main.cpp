// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// srupp: gradient checking, desk-scale training/evaluation, analytic
// profiling, and attention-weight dumps for the SRU++ encoder library.

#include <cstdint>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "srupp/cli.hpp"
#include "srupp/tensor.hpp"

int main(int argc, char** argv) {
  CLI::App app{"SRU++ encoder toolkit"};
  app.require_subcommand(1);

  bool deterministic = true;
  app.add_flag("--deterministic,!--performance", deterministic,
               "fixed summation order and single-threaded reductions "
               "(default on; --performance enables threaded kernels)");

  std::string config_path;
  std::uint64_t seed = 0;
  std::string target;
  auto* gc = app.add_subcommand("gradcheck",
                                "check analytic gradients against finite "
                                "differences");
  gc->add_option("--config", config_path, "run configuration file")
      ->required();
  gc->add_option("--seed", seed, "instance seed (default 0)");
  gc->add_option("--target", target, "sru, srupp, or encoder (default: all)");

  std::string out_dir;
  auto* tr = app.add_subcommand("train", "train on the configured task");
  tr->add_option("--config", config_path, "run configuration file")
      ->required();
  tr->add_option("--out", out_dir,
                 "output directory for history.csv, checkpoint.srpp, "
                 "config.cfg")
      ->required();

  std::string checkpoint;
  std::string lengths_text;
  auto* ev = app.add_subcommand("eval",
                                "evaluate a checkpoint at one or more "
                                "sequence lengths");
  ev->add_option("--config", config_path, "run configuration file")
      ->required();
  ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  ev->add_option("--lengths", lengths_text,
                 "comma-separated evaluation lengths, e.g. 40,80,120")
      ->required();

  std::int64_t seq_len = 1000;
  auto* pf = app.add_subcommand("profile",
                                "analytic parameter and FLOP report");
  pf->add_option("--config", config_path, "run configuration file")
      ->required();
  pf->add_option("--seq-len", seq_len, "input sequence length (default 1000)");

  std::string input_csv, out_path;
  std::int64_t layer = -1;
  auto* ad = app.add_subcommand("attn-dump",
                                "write one layer's attention weights as CSV");
  ad->add_option("--config", config_path, "run configuration file")
      ->required();
  ad->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  ad->add_option("--input", input_csv, "input feature CSV (T rows x feat_dim)")
      ->required();
  ad->add_option("--layer", layer,
                 "layer index; negative counts from the end (default -1)");
  ad->add_option("--out", out_path, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors exit 2, --help exits 0
  }

  srupp::set_exec_mode(deterministic ? srupp::ExecMode::Deterministic
                                     : srupp::ExecMode::Performance);

  if (gc->parsed()) return srupp::cmd_gradcheck(config_path, seed, target);
  if (tr->parsed()) return srupp::cmd_train(config_path, out_dir);
  if (ev->parsed()) {
    std::vector<std::int64_t> lengths;
    try {
      lengths = srupp::parse_lengths(lengths_text);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 2;
    }
    return srupp::cmd_eval(config_path, checkpoint, lengths);
  }
  if (pf->parsed()) return srupp::cmd_profile(config_path, seq_len);
  if (ad->parsed()) {
    return srupp::cmd_attn_dump(config_path, checkpoint, input_csv, layer,
                                out_path);
  }
  return 2;
}
