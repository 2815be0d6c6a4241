// Copyright 2026 The srupp authors. Apache 2.0 License.

#include "srupp/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>

#include "srupp/csv.hpp"
#include "srupp/gradcheck.hpp"
#include "srupp/profile.hpp"
#include "srupp/train.hpp"

namespace srupp {

namespace {

constexpr double kGradTolerance = 1e-4;

int guard(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const TrainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

void write_history_csv(const std::string& path, const TrainHistory& h) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << "step,loss,accuracy\n";
    for (std::size_t i = 0; i < h.loss.size(); ++i) {
      out << i << ',' << format_g17(h.loss[i]) << ','
          << format_g17(h.accuracy[i]) << '\n';
    }
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp + "': " + ec.message());
}

}  // namespace

std::vector<std::int64_t> parse_lengths(const std::string& text) {
  std::vector<std::int64_t> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(pos, comma - pos);
    char* end = nullptr;
    const long long v = std::strtoll(item.c_str(), &end, 10);
    if (item.empty() || end == item.c_str() || *end != '\0' || v < 1) {
      throw ConfigError("--lengths: bad entry '" + item + "'");
    }
    out.push_back(v);
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("--lengths: empty list");
  return out;
}

int cmd_gradcheck(const std::string& config_path, std::uint64_t seed,
                  const std::string& target) {
  return guard([&] {
    RunConfig cfg = RunConfig::parse_file(config_path);
    (void)cfg;  // validated; gradcheck instances are fixed tiny models
    std::vector<std::pair<std::string, GradTarget>> targets;
    if (target.empty()) {
      targets = {{"sru", GradTarget::Sru},
                 {"srupp", GradTarget::Srupp},
                 {"encoder", GradTarget::Encoder}};
    } else if (target == "sru") {
      targets = {{"sru", GradTarget::Sru}};
    } else if (target == "srupp") {
      targets = {{"srupp", GradTarget::Srupp}};
    } else if (target == "encoder") {
      targets = {{"encoder", GradTarget::Encoder}};
    } else {
      throw ConfigError("--target must be sru, srupp, or encoder");
    }
    bool ok = true;
    for (const auto& [name, t] : targets) {
      GradcheckReport rep = gradcheck(t, seed);
      std::printf("%s: max_rel_err = %.3e worst = %s\n", name.c_str(),
                  rep.max_rel_err, rep.worst_param.c_str());
      ok = ok && rep.max_rel_err <= kGradTolerance;
    }
    return ok ? 0 : 1;
  });
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  return guard([&] {
    RunConfig cfg = RunConfig::parse_file(config_path);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());
    TrainResult res = train(cfg);
    write_history_csv(out_dir + "/history.csv", res.history);
    res.model.save(out_dir + "/checkpoint.srpp");
    {
      const std::string cfg_path = out_dir + "/config.cfg";
      std::ofstream out(cfg_path + ".tmp", std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot write '" + cfg_path + "'");
      out << cfg.render();
      out.close();
      std::filesystem::rename(cfg_path + ".tmp", cfg_path, ec);
      if (ec) throw IoError("cannot rename config: " + ec.message());
    }
    std::printf("steps: %zu\nfinal_loss: %s\nfinal_accuracy: %s\n",
                res.history.loss.size(),
                format_g17(res.history.loss.back()).c_str(),
                format_g17(res.history.accuracy.back()).c_str());
    return 0;
  });
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint,
             const std::vector<std::int64_t>& lengths) {
  return guard([&] {
    if (lengths.empty()) throw ConfigError("--lengths: empty list");
    RunConfig cfg = RunConfig::parse_file(config_path);
    Model model = Model::load(cfg, checkpoint);
    std::printf("%8s %8s %10s\n", "length", "frames", "accuracy");
    for (const LengthAccuracy& row :
         eval_length_generalization(model, cfg.task, lengths)) {
      std::printf("%8lld %8lld %10.4f\n",
                  static_cast<long long>(row.length),
                  static_cast<long long>(row.frames), row.accuracy);
    }
    return 0;
  });
}

int cmd_profile(const std::string& config_path, std::int64_t seq_len) {
  return guard([&] {
    RunConfig cfg = RunConfig::parse_file(config_path);
    ProfileReport rep = flops_estimate(cfg.encoder, seq_len);
    std::fputs(rep.to_text().c_str(), stdout);
    return 0;
  });
}

int cmd_attn_dump(const std::string& config_path, const std::string& checkpoint,
                  const std::string& input_csv, std::int64_t layer,
                  const std::string& out_path) {
  return guard([&] {
    RunConfig cfg = RunConfig::parse_file(config_path);
    Model model = Model::load(cfg, checkpoint);
    const std::int64_t n = cfg.encoder.num_layers;
    const std::int64_t idx = layer < 0 ? n + layer : layer;
    if (idx < 0 || idx >= n) {
      throw ConfigError("--layer " + std::to_string(layer) +
                        " out of range for " + std::to_string(n) + " layers");
    }
    Tensor feats = read_matrix_csv(input_csv, cfg.encoder.dtype);
    auto [out, tape] = encoder_forward(model.enc, feats);
    const Tensor& weights =
        attention_weights(tape.layers[static_cast<std::size_t>(idx)]);
    write_matrix_csv(out_path, weights);
    std::printf("wrote %lld x %lld attention weights to %s\n",
                static_cast<long long>(weights.dim(0)),
                static_cast<long long>(weights.dim(1)), out_path.c_str());
    return 0;
  });
}

}  // namespace srupp
