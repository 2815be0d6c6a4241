// Copyright 2026 The srupp authors. Apache 2.0 License.

#include "srupp/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "srupp/encoder.hpp"
#include "srupp/srupp.hpp"
#include "srupp/train.hpp"

namespace srupp {

namespace {

constexpr double kStep = 1e-5;

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b));
}

struct CheckInstance {
  // Named views over every checked tensor (parameters plus the input "x").
  std::vector<std::pair<std::string, Tensor*>> tensors;
  std::function<double()> loss;
  std::function<std::map<std::string, Tensor>()> analytic;
};

Tensor rand_t(std::vector<std::int64_t> shape, SeededRng& rng, double bound) {
  return Tensor::uniform(std::move(shape), rng, -bound, bound);
}

void add_rec_views(const std::string& prefix, RecurrenceParams& rec,
                   std::vector<std::pair<std::string, Tensor*>>& out) {
  out.emplace_back(prefix + ".v", &rec.v);
  out.emplace_back(prefix + ".v_r", &rec.v_r);
  out.emplace_back(prefix + ".b", &rec.b);
  out.emplace_back(prefix + ".b_r", &rec.b_r);
  if (rec.w_high.has_value()) out.emplace_back(prefix + ".w_high", &*rec.w_high);
}

void fill_rec(RecurrenceParams& rec, SeededRng& rng) {
  auto refill = [&rng](Tensor& t, double bound) {
    t = Tensor::uniform(t.shape(), rng, -bound, bound);
  };
  refill(rec.v, 0.5);
  refill(rec.v_r, 0.5);
  refill(rec.b, 0.5);
  refill(rec.b_r, 0.5);
  if (rec.w_high.has_value()) refill(*rec.w_high, 0.8);
}

void put_rec_grads(const std::string& prefix, RecurrenceParamGrads&& g,
                   std::map<std::string, Tensor>* out) {
  (*out)[prefix + ".v"] = std::move(g.v);
  (*out)[prefix + ".v_r"] = std::move(g.v_r);
  (*out)[prefix + ".b"] = std::move(g.b);
  (*out)[prefix + ".b_r"] = std::move(g.b_r);
  if (g.w_high.has_value()) (*out)[prefix + ".w_high"] = std::move(*g.w_high);
}

CheckInstance make_sru_instance(std::uint64_t seed) {
  auto rng = std::make_shared<SeededRng>(seed * 2 + 1);
  const bool bi = seed % 2 == 1;
  const std::int64_t input = 3;
  const std::int64_t hidden_total = bi ? 4 : 3;
  const std::int64_t steps = 4;

  auto layer = std::make_shared<SruLayer>(SruLayer::init(
      input, hidden_total, bi ? RnnMode::Bidirectional : RnnMode::Unidirectional,
      *rng));
  auto fill_dir = [&](SruParams& p) {
    p.w_stack = rand_t(p.w_stack.shape(), *rng, 0.8);
    fill_rec(p.rec, *rng);
  };
  fill_dir(layer->fwd);
  if (layer->bwd.has_value()) fill_dir(*layer->bwd);
  auto x = std::make_shared<Tensor>(rand_t({steps, input}, *rng, 1.0));

  CheckInstance inst;
  inst.tensors.emplace_back("fwd.w_stack", &layer->fwd.w_stack);
  add_rec_views("fwd", layer->fwd.rec, inst.tensors);
  if (layer->bwd.has_value()) {
    inst.tensors.emplace_back("bwd.w_stack", &layer->bwd->w_stack);
    add_rec_views("bwd", layer->bwd->rec, inst.tensors);
  }
  inst.tensors.emplace_back("x", x.get());

  inst.loss = [layer, x] { return sum(sru_forward(*layer, *x).first); };
  inst.analytic = [layer, x] {
    auto [h, tape] = sru_forward(*layer, *x);
    SruLayerGrads g = sru_backward(tape, Tensor::full(h.shape(), 1.0));
    std::map<std::string, Tensor> out;
    out["fwd.w_stack"] = std::move(g.fwd.w_stack);
    put_rec_grads("fwd", std::move(g.fwd.rec), &out);
    if (g.bwd.has_value()) {
      out["bwd.w_stack"] = std::move(g.bwd->w_stack);
      put_rec_grads("bwd", std::move(g.bwd->rec), &out);
    }
    out["x"] = std::move(g.x);
    return out;
  };
  return inst;
}

CheckInstance make_srupp_instance(std::uint64_t seed, bool flip_alpha) {
  auto rng = std::make_shared<SeededRng>(seed * 2 + 1);
  const bool bi = seed % 2 == 1;
  const bool norm = (seed >> 1) % 2 == 1;
  const std::int64_t input = bi ? 4 : 3;
  const std::int64_t hidden_total = bi ? 4 : 3;
  const std::int64_t attn = 2;
  const std::int64_t steps = 4;

  auto p = std::make_shared<SruppParams>(SruppParams::init(
      input, hidden_total, attn,
      bi ? RnnMode::Bidirectional : RnnMode::Unidirectional, norm, *rng));
  p->wq = rand_t(p->wq.shape(), *rng, 0.8);
  p->wk = rand_t(p->wk.shape(), *rng, 0.8);
  p->wv = rand_t(p->wv.shape(), *rng, 0.8);
  p->wo = rand_t(p->wo.shape(), *rng, 0.8);
  p->alpha = Tensor::uniform({1}, *rng, 0.3, 0.9);
  if (norm) {
    p->norm_gain = Tensor::uniform({input}, *rng, 0.7, 1.3);
    p->norm_bias = rand_t({input}, *rng, 0.3);
  }
  fill_rec(p->fwd, *rng);
  if (p->bwd.has_value()) fill_rec(*p->bwd, *rng);
  auto x = std::make_shared<Tensor>(rand_t({steps, input}, *rng, 1.0));

  CheckInstance inst;
  inst.tensors.emplace_back("wq", &p->wq);
  inst.tensors.emplace_back("wk", &p->wk);
  inst.tensors.emplace_back("wv", &p->wv);
  inst.tensors.emplace_back("wo", &p->wo);
  inst.tensors.emplace_back("alpha", &p->alpha);
  if (norm) {
    inst.tensors.emplace_back("norm.gain", &p->norm_gain);
    inst.tensors.emplace_back("norm.bias", &p->norm_bias);
  }
  add_rec_views("fwd", p->fwd, inst.tensors);
  if (p->bwd.has_value()) add_rec_views("bwd", *p->bwd, inst.tensors);
  inst.tensors.emplace_back("x", x.get());

  inst.loss = [p, x] { return sum(srupp_forward(*p, *x).first); };
  inst.analytic = [p, x, flip_alpha] {
    auto [h, tape] = srupp_forward(*p, *x);
    SruppGrads g = srupp_backward(tape, Tensor::full(h.shape(), 1.0));
    std::map<std::string, Tensor> out;
    out["wq"] = std::move(g.wq);
    out["wk"] = std::move(g.wk);
    out["wv"] = std::move(g.wv);
    out["wo"] = std::move(g.wo);
    out["alpha"] = flip_alpha ? scale(g.alpha, -1.0) : std::move(g.alpha);
    if (g.norm_gain.has_value()) {
      out["norm.gain"] = std::move(*g.norm_gain);
      out["norm.bias"] = std::move(*g.norm_bias);
    }
    put_rec_grads("fwd", std::move(g.fwd), &out);
    if (g.bwd.has_value()) put_rec_grads("bwd", std::move(*g.bwd), &out);
    out["x"] = std::move(g.x);
    return out;
  };
  return inst;
}

CheckInstance make_encoder_instance(std::uint64_t seed, bool flip_alpha) {
  EncoderConfig cfg;
  cfg.feat_dim = 8;
  cfg.embed_dim = 8;
  cfg.attn_dim = 4;
  cfg.num_layers = 2;
  // Enough channels that the rectifier rarely zeroes a whole frame; starved
  // frames collapse the attention input and with it the key gradients.
  cfg.subsample_channels = 4;
  cfg.bidirectional = seed % 2 == 1;
  cfg.normalization = (seed >> 1) % 2 == 1;
  cfg.output_dim = (seed >> 2) % 2 == 1 ? 5 : 0;

  auto rng = std::make_shared<SeededRng>(seed * 2 + 1);
  auto enc = std::make_shared<Encoder>(Encoder::init(cfg, *rng));
  // Keep the fan-in-scaled matrices from init (activations stay unit scale:
  // smaller starves the attention logits and the key-projection gradients
  // fall below finite-difference resolution, larger saturates the gates and
  // does the same to the recurrence vectors).  Randomize everything that
  // init zeroes.
  for (auto& [name, t] : enc->named_params()) {
    const bool vector = t->rank() == 1;
    if (vector) *t = Tensor::uniform(t->shape(), *rng, -0.4, 0.4);
    if (name.size() >= 5 && name.compare(name.size() - 5, 5, "alpha") == 0) {
      *t = Tensor::uniform({1}, *rng, 0.5, 1.0);
    } else if (name.size() >= 4 &&
               name.compare(name.size() - 4, 4, "gain") == 0) {
      *t = Tensor::uniform(t->shape(), *rng, 0.7, 1.3);
    }
  }
  // 20 input frames leave 4 attention positions after subsampling; shorter
  // inputs make the attention nearly degenerate for the same reason.
  auto x = std::make_shared<Tensor>(rand_t({20, cfg.feat_dim}, *rng, 1.5));
  // Mean-zero weights keep the loss magnitude small, which keeps the
  // finite-difference roundoff floor well below the tolerance.
  auto w = std::make_shared<Tensor>(
      Tensor::uniform({EncoderConfig::output_len(20), cfg.encoder_width()},
                      *rng, -1.5, 1.5));

  CheckInstance inst;
  for (auto& [name, t] : enc->named_params()) inst.tensors.emplace_back(name, t);
  inst.tensors.emplace_back("feats", x.get());

  inst.loss = [enc, x, w] {
    return sum(mul(*w, encoder_forward(*enc, *x).first));
  };
  inst.analytic = [enc, x, w, flip_alpha] {
    auto [out, tape] = encoder_forward(*enc, *x);
    EncoderGrads g = encoder_backward(*enc, tape, *w);
    if (flip_alpha) {
      for (auto& [name, grad] : g) {
        if (name.size() >= 5 &&
            name.compare(name.size() - 5, 5, "alpha") == 0) {
          grad = scale(grad, -1.0);
        }
      }
    }
    return std::map<std::string, Tensor>(g.begin(), g.end());
  };
  return inst;
}

}  // namespace

GradcheckReport gradcheck(GradTarget target, std::uint64_t instance_seed,
                          const GradcheckOptions& opts) {
  CheckInstance inst;
  switch (target) {
    case GradTarget::Sru:
      inst = make_sru_instance(instance_seed);
      break;
    case GradTarget::Srupp:
      inst = make_srupp_instance(instance_seed, opts.flip_alpha_grad);
      break;
    case GradTarget::Encoder:
      inst = make_encoder_instance(instance_seed, opts.flip_alpha_grad);
      break;
  }
  if (opts.zero_params) {
    for (auto& [name, t] : inst.tensors) {
      if (name != "x" && name != "feats") {
        *t = Tensor::zeros(t->shape(), t->dtype());
      }
    }
  }

  const std::map<std::string, Tensor> grads = inst.analytic();
  GradcheckReport report;
  for (auto& [name, tensor] : inst.tensors) {
    auto it = grads.find(name);
    if (it == grads.end()) {
      throw Error("gradcheck: analytic gradients missing entry '" + name + "'");
    }
    const Tensor& analytic = it->second;
    for (std::int64_t i = 0; i < tensor->size(); ++i) {
      const double original = tensor->get(i);
      tensor->set(i, original + kStep);
      const double up = inst.loss();
      tensor->set(i, original - kStep);
      const double down = inst.loss();
      tensor->set(i, original);
      const double numeric = (up - down) / (2.0 * kStep);
      const double err = rel_err(analytic.get(i), numeric);
      if (err > report.max_rel_err) {
        report.max_rel_err = err;
        report.worst_param = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

}  // namespace srupp
