// Copyright 2026 The srupp authors. Apache 2.0 License.

#include "srupp/train.hpp"

#include <cmath>
#include <map>
#include <string>

namespace srupp {

namespace {

Tensor init_head(std::int64_t rows, std::int64_t cols, SeededRng& rng,
                 Dtype dt) {
  const double bound = std::sqrt(3.0 / static_cast<double>(cols));
  return Tensor::uniform({rows, cols}, rng, -bound, bound, dt);
}

struct CeResult {
  double loss_sum = 0.0;       // summed over frames
  std::int64_t correct = 0;
  std::int64_t frames = 0;
  Tensor grad_logits;          // same shape as logits, unscaled
};

// Stable frame-wise cross-entropy against the aligned labels.
CeResult cross_entropy(const Tensor& logits,
                       const std::vector<std::int64_t>& labels,
                       std::int64_t out_len) {
  const std::int64_t classes = logits.dim(1);
  CeResult res;
  res.grad_logits = Tensor::zeros(logits.shape(), logits.dtype());
  for (std::int64_t t = 0; t < out_len; ++t) {
    const std::int64_t label =
        labels[static_cast<std::size_t>(4 * t + kLabelOffset)];
    double mx = logits.get(t * classes);
    std::int64_t argmax = 0;
    for (std::int64_t k = 1; k < classes; ++k) {
      const double v = logits.get(t * classes + k);
      if (v > mx) {
        mx = v;
        argmax = k;
      }
    }
    double total = 0.0;
    for (std::int64_t k = 0; k < classes; ++k) {
      total += std::exp(logits.get(t * classes + k) - mx);
    }
    const double lse = mx + std::log(total);
    res.loss_sum += lse - logits.get(t * classes + label);
    for (std::int64_t k = 0; k < classes; ++k) {
      const double p = std::exp(logits.get(t * classes + k) - lse);
      res.grad_logits.set(t * classes + k, p - (k == label ? 1.0 : 0.0));
    }
    if (argmax == label) ++res.correct;
    ++res.frames;
  }
  return res;
}

Tensor colsum(const Tensor& a) {
  const std::int64_t m = a.dim(0), n = a.dim(1);
  Tensor out = Tensor::zeros({n}, a.dtype());
  for (std::int64_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < m; ++i) acc += a.get(i * n + j);
    out.set(j, acc);
  }
  return out;
}

using GradMap = std::map<std::string, Tensor>;

void accumulate(GradMap* acc, const std::string& name, const Tensor& g) {
  auto it = acc->find(name);
  if (it == acc->end()) {
    acc->emplace(name, g);
  } else {
    it->second = add(it->second, g);
  }
}

double global_norm(const GradMap& grads) {
  double total = 0.0;
  for (const auto& [name, g] : grads) {
    for (std::int64_t i = 0; i < g.size(); ++i) {
      const double v = g.get(i);
      total += v * v;
    }
  }
  return std::sqrt(total);
}

struct AdamState {
  std::map<std::string, Tensor> m, v;
  std::int64_t t = 0;
};

void adam_step(Model* model, const GradMap& grads, const TrainConfig& tc,
               AdamState* state) {
  ++state->t;
  const double bc1 = 1.0 - std::pow(tc.beta1, static_cast<double>(state->t));
  const double bc2 = 1.0 - std::pow(tc.beta2, static_cast<double>(state->t));
  for (auto& [name, param] : model->named_params()) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    Tensor& m = state->m.try_emplace(name, Tensor::zeros(param->shape(),
                                                         param->dtype()))
                    .first->second;
    Tensor& v = state->v.try_emplace(name, Tensor::zeros(param->shape(),
                                                         param->dtype()))
                    .first->second;
    for (std::int64_t i = 0; i < param->size(); ++i) {
      const double gi = g.get(i);
      const double mi = tc.beta1 * m.get(i) + (1.0 - tc.beta1) * gi;
      const double vi = tc.beta2 * v.get(i) + (1.0 - tc.beta2) * gi * gi;
      m.set(i, mi);
      v.set(i, vi);
      const double update =
          tc.lr * (mi / bc1) / (std::sqrt(vi / bc2) + tc.eps);
      param->set(i, param->get(i) - update);
    }
  }
}

}  // namespace

Model Model::init(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.encoder.feat_dim != cfg.task.vocab_size) {
    throw ConfigError("feat_dim (" + std::to_string(cfg.encoder.feat_dim) +
                      ") must equal vocab_size (" +
                      std::to_string(cfg.task.vocab_size) +
                      ") for one-hot tasks");
  }
  Model model;
  SeededRng rng(cfg.train.seed);
  model.enc = Encoder::init(cfg.encoder, rng);
  model.num_classes = cfg.task.kind == TaskKind::DelayedEcho
                          ? cfg.task.vocab_size + 1
                          : cfg.task.vocab_size;
  model.head_w = init_head(model.num_classes, cfg.encoder.encoder_width(), rng,
                           cfg.encoder.dtype);
  model.head_b = Tensor::zeros({model.num_classes}, cfg.encoder.dtype);
  return model;
}

std::vector<std::pair<std::string, Tensor*>> Model::named_params() {
  auto out = enc.named_params();
  out.emplace_back("head.weight", &head_w);
  out.emplace_back("head.bias", &head_b);
  return out;
}

void Model::save(const std::string& path) const {
  auto named = const_cast<Model*>(this)->named_params();
  std::vector<std::pair<std::string, const Tensor*>> view;
  view.reserve(named.size());
  for (auto& [name, t] : named) view.emplace_back(name, t);
  save_checkpoint(path, view);
}

Model Model::load(const RunConfig& cfg, const std::string& path) {
  Model model = Model::init(cfg);
  NamedTensors stored = load_checkpoint(path);
  std::map<std::string, Tensor*> dest;
  for (auto& [name, t] : model.named_params()) dest.emplace(name, t);
  std::size_t filled = 0;
  for (auto& [name, t] : stored) {
    auto it = dest.find(name);
    if (it == dest.end()) {
      throw IoError("checkpoint '" + path + "': unexpected tensor '" + name +
                    "' for this configuration");
    }
    if (it->second->shape() != t.shape() ||
        it->second->dtype() != t.dtype()) {
      throw IoError("checkpoint '" + path + "': tensor '" + name +
                    "' has shape " + t.shape_str() + ", expected " +
                    it->second->shape_str());
    }
    *it->second = std::move(t);
    ++filled;
  }
  if (filled != dest.size()) {
    throw IoError("checkpoint '" + path + "': missing tensors (" +
                  std::to_string(filled) + " of " +
                  std::to_string(dest.size()) + " present)");
  }
  return model;
}

ModelForward model_forward(const Model& m, const Tensor& feats) {
  auto [out, tape] = encoder_forward(m.enc, feats);
  ModelForward res;
  res.logits = add(matmul(out, transpose(m.head_w)), m.head_b);
  res.enc_out = std::move(out);
  res.tape = std::move(tape);
  return res;
}

TrainResult train(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.task.train_len < EncoderConfig::kMinInputLen) {
    throw ConfigError("train_len must be >= " +
                      std::to_string(EncoderConfig::kMinInputLen));
  }
  TrainResult res;
  res.model = Model::init(cfg);
  Model& model = res.model;
  const Dataset ds = make_task(cfg.task, cfg.encoder.dtype);
  const TrainConfig& tc = cfg.train;
  AdamState adam;

  for (std::int64_t step = 0; step < tc.steps; ++step) {
    GradMap grads;
    double loss_sum = 0.0;
    std::int64_t correct = 0, frames = 0;
    try {
      // Batches cycle deterministically through the dataset.
      for (std::int64_t b = 0; b < tc.batch_size; ++b) {
        const auto& sample = ds.samples[static_cast<std::size_t>(
            (step * tc.batch_size + b) %
            static_cast<std::int64_t>(ds.samples.size()))];
        ModelForward fwd = model_forward(model, sample.feats);
        CeResult ce =
            cross_entropy(fwd.logits, sample.labels, fwd.logits.dim(0));
        loss_sum += ce.loss_sum;
        correct += ce.correct;
        frames += ce.frames;
        // Head backward, then the encoder chain.
        const double inv = 1.0 / static_cast<double>(tc.batch_size *
                                                     fwd.logits.dim(0));
        Tensor gl = scale(ce.grad_logits, inv);
        accumulate(&grads, "head.weight", matmul(transpose(gl), fwd.enc_out));
        accumulate(&grads, "head.bias", colsum(gl));
        EncoderGrads eg =
            encoder_backward(model.enc, fwd.tape, matmul(gl, model.head_w));
        for (auto& [name, g] : eg) {
          if (name == "feats") continue;
          accumulate(&grads, name, g);
        }
      }
    } catch (const NumericError& e) {
      throw TrainError("training diverged at step " + std::to_string(step) +
                       ": " + e.what());
    }
    const double loss = loss_sum / static_cast<double>(frames);
    if (!std::isfinite(loss)) {
      throw TrainError("training diverged at step " + std::to_string(step) +
                       ": loss is not finite");
    }
    const double norm = global_norm(grads);
    if (norm > tc.clip_norm) {
      const double factor = tc.clip_norm / norm;
      for (auto& [name, g] : grads) g = scale(g, factor);
    }
    adam_step(&model, grads, tc, &adam);
    res.history.loss.push_back(loss);
    res.history.accuracy.push_back(static_cast<double>(correct) /
                                   static_cast<double>(frames));
  }
  return res;
}

std::pair<std::int64_t, std::int64_t> count_correct(const Model& m,
                                                    const Dataset& ds) {
  std::int64_t correct = 0, total = 0;
  for (const auto& sample : ds.samples) {
    const Tensor logits = model_forward(m, sample.feats).logits;
    const std::int64_t out_len = logits.dim(0);
    const std::int64_t classes = logits.dim(1);
    for (std::int64_t t = 0; t < out_len; ++t) {
      const std::int64_t label =
          sample.labels[static_cast<std::size_t>(4 * t + kLabelOffset)];
      std::int64_t argmax = 0;
      double mx = logits.get(t * classes);
      for (std::int64_t k = 1; k < classes; ++k) {
        const double v = logits.get(t * classes + k);
        if (v > mx) {
          mx = v;
          argmax = k;
        }
      }
      if (argmax == label) ++correct;
      ++total;
    }
  }
  return {correct, total};
}

double evaluate_accuracy(const Model& m, const Dataset& ds) {
  auto [correct, total] = count_correct(m, ds);
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::vector<LengthAccuracy> eval_length_generalization(
    const Model& m, const TaskSpec& task,
    const std::vector<std::int64_t>& lengths) {
  std::vector<LengthAccuracy> out;
  out.reserve(lengths.size());
  for (std::int64_t len : lengths) {
    if (len < EncoderConfig::kMinInputLen) {
      throw ConfigError("evaluation length " + std::to_string(len) +
                        " below minimum " +
                        std::to_string(EncoderConfig::kMinInputLen));
    }
    const std::int64_t out_len = EncoderConfig::output_len(len);
    const std::int64_t samples =
        std::max<std::int64_t>(32, (2500 + out_len - 1) / out_len);
    Dataset ds = make_task_at_length(task, len, samples, m.head_w.dtype());
    auto [correct, total] = count_correct(m, ds);
    out.push_back({len, total,
                   static_cast<double>(correct) / static_cast<double>(total)});
  }
  return out;
}

}  // namespace srupp
