// Copyright 2026 The srupp authors. Apache 2.0 License.

#include "srupp/sru.hpp"

#include <cmath>
#include <string>

#include "srupp/flops.hpp"

namespace srupp {

namespace {

template <typename T>
struct tag {
  using type = T;
};

template <typename F>
decltype(auto) dispatch(Dtype dt, F&& f) {
  if (dt == Dtype::F32) return f(tag<float>{});
  return f(tag<double>{});
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  T e = std::exp(x);
  return e / (T(1) + e);
}

Tensor init_matrix(std::int64_t rows, std::int64_t cols, SeededRng& rng,
                   Dtype dt) {
  const double bound = std::sqrt(3.0 / static_cast<double>(cols));
  return Tensor::uniform({rows, cols}, rng, -bound, bound, dt);
}

// Resolve the highway input: x itself when widths agree, else the projected
// x * w_high^T.
Tensor highway_input(const RecurrenceParams& p, const Tensor& x) {
  if (x.dim(1) == p.hidden()) {
    if (p.w_high.has_value()) {
      throw ShapeError("sru_recurrence: w_high present but widths match");
    }
    return x;
  }
  if (!p.w_high.has_value()) {
    throw ShapeError("sru_recurrence: input width " +
                     std::to_string(x.dim(1)) + " != hidden " +
                     std::to_string(p.hidden()) +
                     " and no highway projection configured");
  }
  return matmul(x, transpose(*p.w_high));
}

Tensor resolve_c0(const Tensor* c0, std::int64_t hidden, Dtype dt) {
  if (c0 == nullptr) return Tensor::zeros({hidden}, dt);
  if (c0->rank() != 1 || c0->dim(0) != hidden) {
    throw ShapeError("sru: c0 must have length " + std::to_string(hidden) +
                     ", got " + c0->shape_str());
  }
  return *c0;
}

}  // namespace

RecurrenceParams RecurrenceParams::init(std::int64_t input, std::int64_t hidden,
                                        SeededRng& rng, Dtype dt) {
  RecurrenceParams p;
  p.v = Tensor::zeros({hidden}, dt);
  p.v_r = Tensor::zeros({hidden}, dt);
  p.b = Tensor::zeros({hidden}, dt);
  p.b_r = Tensor::zeros({hidden}, dt);
  if (input != hidden) p.w_high = init_matrix(hidden, input, rng, dt);
  return p;
}

SruParams SruParams::init(std::int64_t input, std::int64_t hidden,
                          SeededRng& rng, Dtype dt) {
  SruParams p;
  p.w_stack = init_matrix(3 * hidden, input, rng, dt);
  p.rec = RecurrenceParams::init(input, hidden, rng, dt);
  return p;
}

Tensor sru_project_u(const SruParams& p, const Tensor& x) {
  if (x.rank() != 2 || x.dim(1) != p.input()) {
    throw ShapeError("sru_project_u: input " + x.shape_str() +
                     " does not match weight " + p.w_stack.shape_str());
  }
  const std::int64_t steps = x.dim(0);
  Tensor u_t = matmul(p.w_stack, transpose(x));  // (3h) x L
  return transpose(u_t).reshaped({steps, 3, p.hidden()});
}

std::pair<Tensor, SruTape> sru_recurrence(const RecurrenceParams& p,
                                          const Tensor& u, const Tensor& x,
                                          const Tensor& c0) {
  const std::int64_t hidden = p.hidden();
  if (u.rank() != 3 || u.dim(1) != 3 || u.dim(2) != hidden ||
      u.dim(0) != x.dim(0)) {
    throw ShapeError("sru_recurrence: u " + u.shape_str() +
                     " incompatible with x " + x.shape_str() + " and hidden " +
                     std::to_string(hidden));
  }
  if (x.dtype() != u.dtype() || c0.dtype() != u.dtype()) {
    throw ShapeError("sru_recurrence: operand dtypes disagree");
  }
  const std::int64_t steps = u.dim(0);
  SruTape tape;
  tape.rec = p;
  tape.x = x;
  tape.x_high = highway_input(p, x);
  tape.u = u;
  tape.c0 = c0;
  tape.f = Tensor::zeros({steps, hidden}, u.dtype());
  tape.r = Tensor::zeros({steps, hidden}, u.dtype());
  tape.c = Tensor::zeros({steps, hidden}, u.dtype());
  Tensor h = Tensor::zeros({steps, hidden}, u.dtype());

  dispatch(u.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto pu = u.data<T>();
    auto pxh = tape.x_high.data<T>();
    auto pv = p.v.data<T>();
    auto pvr = p.v_r.data<T>();
    auto pb = p.b.data<T>();
    auto pbr = p.b_r.data<T>();
    auto pc0 = c0.data<T>();
    auto pf = tape.f.data<T>();
    auto pr = tape.r.data<T>();
    auto pc = tape.c.data<T>();
    auto ph = h.data<T>();
    for (std::int64_t t = 0; t < steps; ++t) {
      const T* ut = pu.data() + t * 3 * hidden;
      for (std::int64_t i = 0; i < hidden; ++i) {
        const T cprev = t > 0 ? pc[(t - 1) * hidden + i] : pc0[i];
        const T ft = stable_sigmoid(ut[i] + pv[i] * cprev + pb[i]);
        const T rt = stable_sigmoid(ut[hidden + i] + pvr[i] * cprev + pbr[i]);
        const T ct = ft * cprev + (T(1) - ft) * ut[2 * hidden + i];
        const T ht = rt * ct + (T(1) - rt) * pxh[t * hidden + i];
        if (!std::isfinite(ct) || !std::isfinite(ht)) {
          throw NumericError("sru_recurrence: non-finite value at step " +
                             std::to_string(t) + ", dimension " +
                             std::to_string(i));
        }
        pf[t * hidden + i] = ft;
        pr[t * hidden + i] = rt;
        pc[t * hidden + i] = ct;
        ph[t * hidden + i] = ht;
      }
    }
  });
  flops::add(flops::sru_recurrence(steps, hidden));
  return {std::move(h), std::move(tape)};
}

Tensor sru_recurrence_oracle(const RecurrenceParams& p, const Tensor& u,
                             const Tensor& x, const Tensor& c0) {
  const std::int64_t hidden = p.hidden();
  const std::int64_t steps = u.dim(0);
  const std::int64_t in_w = x.dim(1);
  Tensor h = Tensor::zeros({steps, hidden}, u.dtype());
  for (std::int64_t i = 0; i < hidden; ++i) {
    double c = c0.get(i);
    for (std::int64_t t = 0; t < steps; ++t) {
      const double u0 = u.at({t, 0, i});
      const double u1 = u.at({t, 1, i});
      const double u2 = u.at({t, 2, i});
      double xh;
      if (in_w == hidden) {
        xh = x.at({t, i});
      } else {
        xh = 0.0;
        for (std::int64_t j = 0; j < in_w; ++j) {
          xh += p.w_high->at({i, j}) * x.at({t, j});
        }
      }
      const double f = 1.0 / (1.0 + std::exp(-(u0 + p.v.get(i) * c + p.b.get(i))));
      const double r =
          1.0 / (1.0 + std::exp(-(u1 + p.v_r.get(i) * c + p.b_r.get(i))));
      c = f * c + (1.0 - f) * u2;
      const double out = r * c + (1.0 - r) * xh;
      if (!std::isfinite(out)) {
        throw NumericError("sru_recurrence_oracle: non-finite value at step " +
                           std::to_string(t) + ", dimension " +
                           std::to_string(i));
      }
      h.set(t * hidden + i, out);
    }
  }
  return h;
}

RecurrenceGrads sru_recurrence_backward(const SruTape& tape,
                                        const Tensor& grad_h) {
  const std::int64_t steps = tape.steps();
  const std::int64_t hidden = tape.rec.hidden();
  if (grad_h.rank() != 2 || grad_h.dim(0) != steps ||
      grad_h.dim(1) != hidden) {
    throw ShapeError("sru_recurrence_backward: grad_h " + grad_h.shape_str() +
                     " does not match tape of " + std::to_string(steps) +
                     " steps x " + std::to_string(hidden));
  }
  const Dtype dt = grad_h.dtype();
  RecurrenceGrads g;
  g.u = Tensor::zeros({steps, 3, hidden}, dt);
  g.v = Tensor::zeros({hidden}, dt);
  g.v_r = Tensor::zeros({hidden}, dt);
  g.b = Tensor::zeros({hidden}, dt);
  g.b_r = Tensor::zeros({hidden}, dt);
  g.c0 = Tensor::zeros({hidden}, dt);
  Tensor grad_xh = Tensor::zeros({steps, hidden}, dt);

  dispatch(dt, [&](auto tg) {
    using T = typename decltype(tg)::type;
    auto pgh = grad_h.data<T>();
    auto pu = tape.u.data<T>();
    auto pxh = tape.x_high.data<T>();
    auto pf = tape.f.data<T>();
    auto pr = tape.r.data<T>();
    auto pc = tape.c.data<T>();
    auto pc0 = tape.c0.data<T>();
    auto pv = tape.rec.v.data<T>();
    auto pvr = tape.rec.v_r.data<T>();
    auto pgu = g.u.data<T>();
    auto pgxh = grad_xh.data<T>();
    auto pgv = g.v.data<T>();
    auto pgvr = g.v_r.data<T>();
    auto pgb = g.b.data<T>();
    auto pgbr = g.b_r.data<T>();
    auto pgc0 = g.c0.data<T>();
    for (std::int64_t i = 0; i < hidden; ++i) {
      T gc_next = T(0);  // dL/dc[t] contribution flowing from step t+1
      for (std::int64_t t = steps - 1; t >= 0; --t) {
        const T cprev = t > 0 ? pc[(t - 1) * hidden + i] : pc0[i];
        const T f = pf[t * hidden + i];
        const T r = pr[t * hidden + i];
        const T gh = pgh[t * hidden + i];
        // h[t] = r*c[t] + (1-r)*xh[t]
        const T gr_raw =
            gh * (pc[t * hidden + i] - pxh[t * hidden + i]) * r * (T(1) - r);
        pgxh[t * hidden + i] = gh * (T(1) - r);
        const T gc = gc_next + gh * r;
        // c[t] = f*c[t-1] + (1-f)*u2[t]
        const T gf_raw =
            gc * (cprev - pu[(t * 3 + 2) * hidden + i]) * f * (T(1) - f);
        pgu[(t * 3 + 0) * hidden + i] = gf_raw;
        pgu[(t * 3 + 1) * hidden + i] = gr_raw;
        pgu[(t * 3 + 2) * hidden + i] = gc * (T(1) - f);
        pgb[i] += gf_raw;
        pgbr[i] += gr_raw;
        pgv[i] += gf_raw * cprev;
        pgvr[i] += gr_raw * cprev;
        gc_next = gc * f + gf_raw * pv[i] + gr_raw * pvr[i];
      }
      pgc0[i] = gc_next;
    }
  });

  if (tape.rec.w_high.has_value()) {
    g.x = matmul(grad_xh, *tape.rec.w_high);
    g.w_high = matmul(transpose(grad_xh), tape.x);
  } else {
    g.x = std::move(grad_xh);
  }
  return g;
}

std::int64_t SruLayer::hidden_total() const {
  return mode == RnnMode::Bidirectional ? 2 * fwd.hidden() : fwd.hidden();
}

SruLayer SruLayer::init(std::int64_t input, std::int64_t hidden_total,
                        RnnMode mode, SeededRng& rng, Dtype dt) {
  SruLayer layer;
  layer.mode = mode;
  if (mode == RnnMode::Bidirectional) {
    if (hidden_total % 2 != 0) {
      throw ConfigError("bidirectional SRU needs an even hidden size, got " +
                        std::to_string(hidden_total));
    }
    layer.fwd = SruParams::init(input, hidden_total / 2, rng, dt);
    layer.bwd = SruParams::init(input, hidden_total / 2, rng, dt);
  } else {
    layer.fwd = SruParams::init(input, hidden_total, rng, dt);
  }
  return layer;
}

void SruLayer::named_tensors(const std::string& prefix,
                             std::vector<std::pair<std::string, Tensor*>>& out) {
  auto dir = [&out](const std::string& base, SruParams& p) {
    out.emplace_back(base + ".w_stack", &p.w_stack);
    out.emplace_back(base + ".v", &p.rec.v);
    out.emplace_back(base + ".v_r", &p.rec.v_r);
    out.emplace_back(base + ".b", &p.rec.b);
    out.emplace_back(base + ".b_r", &p.rec.b_r);
    if (p.rec.w_high.has_value()) {
      out.emplace_back(base + ".w_high", &*p.rec.w_high);
    }
  };
  dir(prefix + ".fwd", fwd);
  if (bwd.has_value()) dir(prefix + ".bwd", *bwd);
}

std::pair<Tensor, SruLayerTape> sru_forward(const SruLayer& layer,
                                            const Tensor& x,
                                            const Tensor* c0_fwd,
                                            const Tensor* c0_bwd) {
  SruLayerTape tape;
  tape.mode = layer.mode;
  tape.w_stack_fwd = layer.fwd.w_stack;
  const Dtype dt = x.dtype();

  Tensor u_f = sru_project_u(layer.fwd, x);
  auto [h_f, tape_f] =
      sru_recurrence(layer.fwd.rec, u_f, x,
                     resolve_c0(c0_fwd, layer.fwd.hidden(), dt));
  tape.fwd = std::move(tape_f);
  if (layer.mode == RnnMode::Unidirectional) {
    return {std::move(h_f), std::move(tape)};
  }

  const SruParams& back = *layer.bwd;
  tape.w_stack_bwd = back.w_stack;
  Tensor x_rev = reverse_rows(x);
  Tensor u_b = sru_project_u(back, x_rev);
  auto [h_b_rev, tape_b] = sru_recurrence(
      back.rec, u_b, x_rev, resolve_c0(c0_bwd, back.hidden(), dt));
  tape.bwd = std::move(tape_b);
  Tensor h = concat_cols(h_f, reverse_rows(h_b_rev));
  return {std::move(h), std::move(tape)};
}

namespace {

// Shared by plain SRU and SRU++ layers: push gu through the fused projection
// U = X W^T, accumulating the input gradient.
SruParamGrads projection_backward(const Tensor& w_stack, const SruTape& tape,
                                  RecurrenceGrads&& rec_grads, Tensor* gx_out) {
  const std::int64_t steps = tape.steps();
  Tensor gu_flat = rec_grads.u.reshaped({steps, w_stack.dim(0)});
  SruParamGrads g;
  g.w_stack = matmul(transpose(gu_flat), tape.x);
  *gx_out = add(rec_grads.x, matmul(gu_flat, w_stack));
  g.rec.v = std::move(rec_grads.v);
  g.rec.v_r = std::move(rec_grads.v_r);
  g.rec.b = std::move(rec_grads.b);
  g.rec.b_r = std::move(rec_grads.b_r);
  g.rec.w_high = std::move(rec_grads.w_high);
  return g;
}

}  // namespace

SruLayerGrads sru_backward(const SruLayerTape& tape, const Tensor& grad_h) {
  SruLayerGrads out;
  if (tape.mode == RnnMode::Unidirectional) {
    RecurrenceGrads rec = sru_recurrence_backward(tape.fwd, grad_h);
    out.fwd = projection_backward(tape.w_stack_fwd, tape.fwd, std::move(rec),
                                  &out.x);
    return out;
  }
  const std::int64_t half = tape.fwd.rec.hidden();
  Tensor gh_f = slice_cols(grad_h, 0, half);
  Tensor gh_b = reverse_rows(slice_cols(grad_h, half, 2 * half));

  RecurrenceGrads rec_f = sru_recurrence_backward(tape.fwd, gh_f);
  Tensor gx_f;
  out.fwd = projection_backward(tape.w_stack_fwd, tape.fwd, std::move(rec_f),
                                &gx_f);

  RecurrenceGrads rec_b = sru_recurrence_backward(*tape.bwd, gh_b);
  Tensor gx_b_rev;
  out.bwd = projection_backward(*tape.w_stack_bwd, *tape.bwd,
                                std::move(rec_b), &gx_b_rev);
  out.x = add(gx_f, reverse_rows(gx_b_rev));
  return out;
}

}  // namespace srupp
